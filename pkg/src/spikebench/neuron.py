"""Leaky integrate-and-fire dynamics and the bit-string <-> spike-raster boundary."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

INPUT_DRIVE = 1.0  # potential injected by an input bit of 1


@dataclass(frozen=True)
class LifParams:
    """Membrane constants shared by a layer.

    ``decay`` is the per-step leak factor. When omitted it is derived from the
    membrane time constant as ``exp(-dt / tau_m)``; an explicit value wins.
    """

    tau_m: float = 10.0  # ms
    threshold: float = 0.2
    reset: float = 0.0
    dt: float = 1.0  # ms
    decay: float | None = None

    def __post_init__(self):
        if not self.tau_m > 0:
            raise ValueError(f"tau_m must be > 0, got {self.tau_m!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if not self.threshold > self.reset:
            raise ValueError("threshold must exceed the reset potential")
        if self.decay is None:
            object.__setattr__(self, "decay", math.exp(-self.dt / self.tau_m))
        # decay = 0 is the memoryless limit, kept for gradient checks
        if not 0.0 <= self.decay <= 1.0:
            raise ValueError(f"decay must lie in [0, 1], got {self.decay!r}")


@dataclass
class LifState:
    u: float = 0.0
    last_spike_time: float | None = None
    t: float = 0.0  # time of the next step, ms


@dataclass
class SpikeRaster:
    spikes: np.ndarray  # (neurons, steps) uint8
    potentials: np.ndarray  # (neurons, steps) float, pre-reset values
    dt: float = 1.0
    n: int = field(init=False)
    T: int = field(init=False)

    def __post_init__(self):
        self.spikes = np.asarray(self.spikes, dtype=np.uint8)
        self.potentials = np.asarray(self.potentials, dtype=float)
        if self.spikes.ndim != 2 or self.spikes.shape != self.potentials.shape:
            raise ValueError("spikes and potentials must be matrices of the same shape")
        self.n, self.T = self.spikes.shape

    @classmethod
    def from_spikes(cls, spikes, dt: float = 1.0) -> "SpikeRaster":
        spikes = np.asarray(spikes, dtype=np.uint8)
        return cls(spikes, spikes * INPUT_DRIVE, dt)


def lif_step(state: LifState, z: float, params: LifParams) -> tuple[LifState, int]:
    """Advance one neuron by one step of exponential-Euler integration."""
    if not (math.isfinite(z) and math.isfinite(state.u)):
        raise FloatingPointError("non-finite membrane input")
    d = params.decay
    u = d * state.u + (1.0 - d) * z
    t = state.t
    if u >= params.threshold:
        return LifState(params.reset, t, t + params.dt), 1
    return LifState(u, state.last_spike_time, t + params.dt), 0


def layer_step(u: np.ndarray, z: np.ndarray, params: LifParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`lif_step`; returns (pre-reset potential, spikes, post-reset potential)."""
    d = params.decay
    pre = d * u + (1.0 - d) * z
    s = pre >= params.threshold
    post = np.where(s, params.reset, pre)
    return pre, s, post


def input_current(weights, x, bias: float = 0.0) -> float:
    w = np.asarray(weights, dtype=float)
    x = np.asarray(x, dtype=float)
    if w.shape != x.shape:
        raise ValueError(f"weight shape {w.shape} does not match input shape {x.shape}")
    return float(w @ x + bias)


def encode(seq, n: int, dt: float = 1.0) -> SpikeRaster:
    """Frame ``seq`` into ``n`` input neurons: step ``t`` carries bits ``t*n .. t*n+n-1``.

    The last frame is zero-padded.
    """
    if n <= 0:
        raise ValueError(f"layer width must be positive, got {n}")
    bits = np.asarray(seq, dtype=np.uint8)
    if bits.ndim != 1 or bits.size == 0:
        raise ValueError("sequence must be a nonempty 1-D bit array")
    T = -(-bits.size // n)
    padded = np.zeros(T * n, dtype=np.uint8)
    padded[: bits.size] = bits
    return SpikeRaster.from_spikes(padded.reshape(T, n).T, dt)


def decode(raster: SpikeRaster, target_length: int) -> np.ndarray:
    """Concatenate raster columns (time-major) and truncate to ``target_length``."""
    if raster.spikes.size == 0:
        raise ValueError("empty raster")
    if target_length < 1 or target_length > raster.spikes.size:
        raise ValueError(f"target_length {target_length} outside 1..{raster.spikes.size}")
    return raster.spikes.T.reshape(-1)[:target_length].copy()
