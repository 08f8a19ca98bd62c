"""Named parameter registry shared by the model builders and optimizer."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class ParamStore:
    """Ordered mapping from dotted names to trainable tensors."""

    def __init__(self) -> None:
        self._params: dict[str, Tensor] = {}

    def create(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already registered")
        t = Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def uniform(self, name: str, shape: tuple[int, ...], fan_in: int, rng: np.random.Generator) -> Tensor:
        """Standard fan-in uniform init: U(-sqrt(1/fan_in), +sqrt(1/fan_in))."""
        bound = float(np.sqrt(1.0 / fan_in))
        return self.create(name, rng.uniform(-bound, bound, size=shape))

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self) -> list[tuple[str, Tensor]]:
        return list(self._params.items())

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def total_parameters(self) -> int:
        return sum(t.size for t in self._params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = sorted(set(self._params) - set(state))
        extra = sorted(set(state) - set(self._params))
        if missing or extra:
            raise ValueError(
                f"parameter name mismatch: missing {missing or 'none'}, unexpected {extra or 'none'}"
            )
        for name, t in self._params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.shape:
                raise ValueError(
                    f"parameter {name!r} shape mismatch: stored {arr.shape}, expected {t.shape}"
                )
            t.data = arr

    def round_to_float32(self) -> None:
        """Quantize every parameter through float32 and back.

        Checkpoints store float32; calling this before the final
        evaluation makes that evaluation bit-reproducible after a
        save/load round trip.
        """
        for t in self._params.values():
            t.data = t.data.astype(np.float32).astype(np.float64)
