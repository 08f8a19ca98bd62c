"""Synthetic pulse-radar gesture recordings.

A hand gesture is modeled as a handful of point scatterers whose range
and reflectivity follow simple motion primitives.  For pulse index m of
frame k (slow time T = (k*M + m)/prf) and fast-time bin n (range
r_n = r_min + n*dr), the baseband sample is the superposition

    sum_i a_tx * rho_i(T) / r_i(T)^4
          * p_env(r_n - r_i(T))
          * exp(-2j*pi * f_c * 2*r_i(T) / c)

where p_env is a rectangular pulse envelope mapped to range via
r = t*c/2.  The returned recording is a (K, M, N) complex cube.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

__all__ = [
    "SPEED_OF_LIGHT",
    "RadarParams",
    "Constant",
    "Linear",
    "Sinusoid",
    "PiecewiseLinear",
    "Scatterer",
    "GestureScene",
    "ComplexCube",
    "GestureTemplate",
    "synthesize_cube",
    "generate_dataset",
    "default_gesture_templates",
]


@dataclass(frozen=True)
class RadarParams:
    """Acquisition geometry and timing of the simulated sensor."""

    f_c: float = 70e9
    prf: float = 256.0
    m_pulses: int = 32
    n_fast: int = 492
    k_frames: int = 5
    r_min: float = 0.10
    r_max: float = 0.30
    pulse_duration: float | None = None  # seconds; None -> envelope spans 3 range bins
    a_tx: float = 1.0

    def __post_init__(self) -> None:
        if self.r_min >= self.r_max:
            raise ValueError(f"r_min must be below r_max, got [{self.r_min}, {self.r_max}]")
        if min(self.m_pulses, self.n_fast, self.k_frames) < 1:
            raise ValueError("m_pulses, n_fast and k_frames must all be >= 1")
        if self.prf <= 0 or self.f_c <= 0:
            raise ValueError("prf and f_c must be positive")

    @property
    def range_bin(self) -> float:
        """Range extent of one fast-time sample."""
        return (self.r_max - self.r_min) / self.n_fast

    @property
    def envelope_half_width(self) -> float:
        """Half-extent in range of the rectangular pulse envelope."""
        if self.pulse_duration is None:
            return 1.5 * self.range_bin
        return self.pulse_duration * SPEED_OF_LIGHT / 4.0

    def slow_times(self) -> np.ndarray:
        """Absolute time of every pulse, frame-major then pulse-major."""
        return np.arange(self.k_frames * self.m_pulses) / self.prf

    def range_grid(self) -> np.ndarray:
        return self.r_min + np.arange(self.n_fast) * self.range_bin


# ---------------------------------------------------------------------------
# Motion primitives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        return np.full_like(t, self.value, dtype=np.float64)


@dataclass(frozen=True)
class Linear:
    start: float
    rate: float

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        return self.start + self.rate * t


@dataclass(frozen=True)
class Sinusoid:
    center: float
    amplitude: float
    freq_hz: float
    phase: float = 0.0

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        return self.center + self.amplitude * np.sin(2 * np.pi * self.freq_hz * t + self.phase)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Linear interpolation through (time, value) knots, clamped outside."""

    times: Sequence[float]
    values: Sequence[float]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values) or len(self.times) < 2:
            raise ValueError("need matching times/values with at least two knots")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("knot times must be strictly increasing")

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        return np.interp(t, self.times, self.values)


Motion = Union[Constant, Linear, Sinusoid, PiecewiseLinear]


@dataclass(frozen=True)
class Scatterer:
    range_motion: Motion
    rcs_motion: Motion


@dataclass(frozen=True)
class GestureScene:
    radar: RadarParams
    scatterers: Sequence[Scatterer]
    label: int
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.label < 0:
            raise ValueError(f"label must be non-negative, got {self.label}")


@dataclass
class ComplexCube:
    """A (K, M, N) complex recording: frames x pulses x range samples."""

    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 3:
            raise ValueError(f"cube must be 3D (K, M, N), got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("cube contains non-finite samples")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


def synthesize_cube(scene: GestureScene) -> ComplexCube:
    """Render a gesture scene into its complex baseband data cube."""
    radar = scene.radar
    t = radar.slow_times()
    grid = radar.range_grid()
    total = np.zeros((t.size, radar.n_fast), dtype=np.complex128)
    half = radar.envelope_half_width

    for sc in scene.scatterers:
        r = np.asarray(sc.range_motion.evaluate(t), dtype=np.float64)
        rho = np.asarray(sc.rcs_motion.evaluate(t), dtype=np.float64)
        if np.any(r <= 0):
            raise ValueError("scatterer range must stay positive (r^4 singularity)")
        if np.any(rho < 0):
            raise ValueError("scatterer reflectivity must be non-negative")
        r = np.clip(r, radar.r_min, radar.r_max)
        envelope = np.abs(grid[None, :] - r[:, None]) < half
        # rho multiplies last so that scaling all reflectivities by s
        # scales every output sample by exactly s.
        unit = (radar.a_tx / r**4) * np.exp(-2j * np.pi * radar.f_c * 2.0 * r / SPEED_OF_LIGHT)
        total += (rho * unit)[:, None] * envelope

    return ComplexCube(total.reshape(radar.k_frames, radar.m_pulses, radar.n_fast))


# ---------------------------------------------------------------------------
# Gesture catalog and dataset generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GestureTemplate:
    """Named recipe drawing a scatterer configuration from an RNG."""

    name: str
    builder: Callable[[np.random.Generator, RadarParams], list[Scatterer]]

    def build_scene(self, radar: RadarParams, label: int, rng: np.random.Generator) -> GestureScene:
        return GestureScene(radar=radar, scatterers=self.builder(rng, radar), label=label)


def _rho(rng: np.random.Generator) -> Constant:
    return Constant(float(rng.uniform(0.6, 1.4)))


def _hold(rng, radar):
    n = int(rng.integers(1, 3))
    return [
        Scatterer(Constant(float(rng.uniform(0.13, 0.27))), _rho(rng))
        for _ in range(n)
    ]


def _push(rng, radar):
    return [Scatterer(Linear(float(rng.uniform(0.22, 0.28)), -float(rng.uniform(0.10, 0.16))), _rho(rng))]


def _pull(rng, radar):
    return [Scatterer(Linear(float(rng.uniform(0.12, 0.18)), float(rng.uniform(0.10, 0.16))), _rho(rng))]


def _wave(rng, radar):
    return [
        Scatterer(
            Sinusoid(
                float(rng.uniform(0.15, 0.25)),
                float(rng.uniform(0.005, 0.012)),
                float(rng.uniform(1.5, 3.0)),
                float(rng.uniform(0, 2 * np.pi)),
            ),
            _rho(rng),
        )
    ]


def _push_fast(rng, radar):
    return [Scatterer(Linear(float(rng.uniform(0.25, 0.29)), -float(rng.uniform(0.17, 0.22))), _rho(rng))]


def _pull_fast(rng, radar):
    return [Scatterer(Linear(float(rng.uniform(0.11, 0.15)), float(rng.uniform(0.17, 0.22))), _rho(rng))]


def _wave_fast(rng, radar):
    return [
        Scatterer(
            Sinusoid(
                float(rng.uniform(0.16, 0.24)),
                float(rng.uniform(0.005, 0.009)),
                float(rng.uniform(3.0, 4.0)),
                float(rng.uniform(0, 2 * np.pi)),
            ),
            _rho(rng),
        )
    ]


def _circle(rng, radar):
    freq = float(rng.uniform(1.0, 2.0))
    phase = float(rng.uniform(0, 2 * np.pi))
    return [
        Scatterer(
            Sinusoid(float(rng.uniform(0.17, 0.23)), float(rng.uniform(0.008, 0.015)), freq, phase),
            Sinusoid(1.0, 0.4, freq, phase + np.pi / 2),
        )
    ]


def _swipe(rng, radar):
    duration = radar.k_frames * radar.m_pulses / radar.prf
    far = float(rng.uniform(0.24, 0.28))
    near = float(rng.uniform(0.12, 0.16))
    return [
        Scatterer(
            PiecewiseLinear([0.0, duration / 2, duration], [far, near, far]),
            _rho(rng),
        )
    ]


def _spread(rng, radar):
    start = float(rng.uniform(0.18, 0.22))
    return [
        Scatterer(Linear(start, -float(rng.uniform(0.08, 0.12))), _rho(rng)),
        Scatterer(Linear(start, float(rng.uniform(0.08, 0.12))), _rho(rng)),
    ]


def _flutter(rng, radar):
    return [
        Scatterer(
            Sinusoid(
                float(rng.uniform(0.12, 0.28)),
                float(rng.uniform(0.002, 0.004)),
                float(rng.uniform(3.0, 6.0)),
                float(rng.uniform(0, 2 * np.pi)),
            ),
            _rho(rng),
        )
        for _ in range(3)
    ]


def _nohand(rng, radar):
    return []


def default_gesture_templates() -> list[GestureTemplate]:
    """Twelve synthetic gesture classes, range-Doppler separable by design.

    The first four (hold, push, pull, wave) occupy well-separated Doppler
    bands and make a compact subset for fast experiments; the final class
    is the empty no-hand recording.
    """
    return [
        GestureTemplate("hold", _hold),
        GestureTemplate("push", _push),
        GestureTemplate("pull", _pull),
        GestureTemplate("wave", _wave),
        GestureTemplate("push-fast", _push_fast),
        GestureTemplate("pull-fast", _pull_fast),
        GestureTemplate("wave-fast", _wave_fast),
        GestureTemplate("circle", _circle),
        GestureTemplate("swipe", _swipe),
        GestureTemplate("spread", _spread),
        GestureTemplate("flutter", _flutter),
        GestureTemplate("nohand", _nohand),
    ]


def generate_dataset(
    templates: Sequence[GestureTemplate],
    per_class_count: int,
    radar: RadarParams | None = None,
    rng_seed: int = 0,
) -> list[tuple[ComplexCube, int]]:
    """Render a balanced labeled dataset, deterministic in ``rng_seed``.

    Recording j of class i draws its scene parameters from an RNG seeded
    with (rng_seed, i, j), so any recording can be regenerated in
    isolation and different workers can render disjoint slices.
    """
    if len(templates) < 2:
        raise ValueError(f"need at least 2 gesture classes, got {len(templates)}")
    if per_class_count < 1:
        raise ValueError("per_class_count must be >= 1")
    radar = radar or RadarParams()
    out: list[tuple[ComplexCube, int]] = []
    for label, template in enumerate(templates):
        for rep in range(per_class_count):
            rng = np.random.default_rng([rng_seed, label, rep])
            scene = template.build_scene(radar, label, rng)
            out.append((synthesize_cube(scene), label))
    return out
