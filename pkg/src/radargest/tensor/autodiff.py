"""Reverse-mode automatic differentiation over numpy float64 buffers.

Each differentiable operation records a graph node holding its input
tensors and a closure that maps the output gradient to input gradients.
``backward`` replays the recorded nodes in strict reverse recording
order, accumulates gradients, and deposits them on the ``grad`` field of
every leaf tensor (one created directly rather than by an op) that has
``requires_grad`` set.  A node may only be traversed once; a second
``backward`` through it raises ``RuntimeError``.
"""

from __future__ import annotations

import itertools
import os
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

__all__ = ["Tensor", "backward", "no_grad", "grad_enabled", "record"]

_grad_enabled = True
_seq_counter = itertools.count()
_DEBUG_FINITE = os.environ.get("RADARGEST_DEBUG_FINITE", "") == "1"


def grad_enabled() -> bool:
    """True when operations should record graph nodes."""
    return _grad_enabled


class no_grad:
    """Context manager that disables graph recording inside its block."""

    def __enter__(self) -> "no_grad":
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc) -> None:
        global _grad_enabled
        _grad_enabled = self._prev


class _Node:
    __slots__ = ("inputs", "backward_fn", "output", "seq", "consumed")

    def __init__(
        self,
        inputs: Sequence["Tensor"],
        backward_fn: Callable[[np.ndarray], Iterable[Optional[np.ndarray]]],
        output: "Tensor",
    ) -> None:
        self.inputs = tuple(inputs)
        self.backward_fn = backward_fn
        self.output = output
        self.seq = next(_seq_counter)
        self.consumed = False


class Tensor:
    """Dense real-valued tensor participating in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_node")

    def __init__(self, data, requires_grad: bool = False) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._node: Optional[_Node] = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Arithmetic sugar delegates to the ops module (imported lazily to
    # avoid a circular import at package load).
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(other, self)

    def __neg__(self):
        from . import ops

        return ops.neg(self)


def record(
    output: Tensor,
    inputs: Sequence[Tensor],
    backward_fn: Callable[[np.ndarray], Iterable[Optional[np.ndarray]]],
) -> Tensor:
    """Attach a graph node to ``output`` if recording is on and needed.

    ``backward_fn`` receives the gradient w.r.t. ``output`` and must
    return one gradient array (or None) per input, in input order.
    """
    if _DEBUG_FINITE and not np.all(np.isfinite(output.data)):
        raise FloatingPointError("non-finite values produced by a forward op")
    if _grad_enabled and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        output._node = _Node(inputs, backward_fn, output)
    return output


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every requires-grad leaf reachable from ``loss``.

    Raises ``ValueError`` for a non-scalar loss and ``RuntimeError`` when
    any node in the graph has already been consumed by a prior backward.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.shape}")
    if loss._node is None:
        if loss.requires_grad:
            seed = np.ones_like(loss.data)
            loss.grad = seed if loss.grad is None else loss.grad + seed
            return
        raise ValueError("loss does not depend on any requires_grad tensor")

    # Collect the reachable subgraph.
    nodes: list[_Node] = []
    stack = [loss._node]
    seen = {id(loss._node)}
    while stack:
        node = stack.pop()
        if node.consumed:
            raise RuntimeError(
                "graph already consumed by a previous backward; "
                "rebuild the forward computation before differentiating again"
            )
        nodes.append(node)
        for t in node.inputs:
            if t._node is not None and id(t._node) not in seen:
                seen.add(id(t._node))
                stack.append(t._node)

    # Strict reverse recording order.
    nodes.sort(key=lambda n: n.seq, reverse=True)

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    for node in nodes:
        node.consumed = True
        gout = grads.pop(id(node.output), None)
        if gout is None:
            continue
        input_grads = node.backward_fn(gout)
        for t, g in zip(node.inputs, input_grads):
            if g is None or not t.requires_grad:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + g
            else:
                grads[key] = g
            if t._node is None:
                leaves[key] = t

    for key, t in leaves.items():
        g = grads.get(key)
        if g is None:
            continue
        t.grad = g if t.grad is None else t.grad + g
