"""Dense-tensor engine with reverse-mode automatic differentiation."""

from . import kernels, ops
from .autodiff import Tensor, backward, grad_enabled, no_grad

__all__ = ["Tensor", "backward", "no_grad", "grad_enabled", "ops", "kernels"]
