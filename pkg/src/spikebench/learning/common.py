from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..network import Network
from ..neuron import SpikeRaster
from ..sources import make_rng

DEFAULT_W_MAX = 5.0


@dataclass
class WeightDelta:
    d_ih: np.ndarray
    d_ho: np.ndarray
    info: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, n: int) -> "WeightDelta":
        return cls(np.zeros((n, n)), np.zeros((n, n)))

    def is_zero(self) -> bool:
        return not (self.d_ih.any() or self.d_ho.any())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.d_ih).all() and np.isfinite(self.d_ho).all())

    def __add__(self, other: "WeightDelta") -> "WeightDelta":
        return WeightDelta(self.d_ih + other.d_ih, self.d_ho + other.d_ho, {**self.info, **other.info})

    def __mul__(self, k: float) -> "WeightDelta":
        return WeightDelta(self.d_ih * k, self.d_ho * k, dict(self.info))

    __rmul__ = __mul__


def apply_delta(net: Network, delta: WeightDelta, w_max: float = DEFAULT_W_MAX) -> None:
    """Add ``delta`` in place and clip weights to [-w_max, w_max]."""
    if delta.d_ih.any():
        np.clip(net.w_ih + delta.d_ih, -w_max, w_max, out=net.w_ih)
    if delta.d_ho.any():
        np.clip(net.w_ho + delta.d_ho, -w_max, w_max, out=net.w_ho)


def spike_time(step, dt: float = 1.0):
    """Time stamp of a step: step k covers (k*dt, (k+1)*dt] and fires at its end."""
    return (np.asarray(step) + 1) * dt


def exp_window(T: int, dt: float, tau: float) -> np.ndarray:
    """``K[t, s] = exp(-|t - s| * dt / tau)``."""
    lag = np.abs(np.subtract.outer(np.arange(T), np.arange(T))) * dt
    return np.exp(-lag / tau)


def window_correlation(post: np.ndarray, pre: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Exponential-window cross-correlation ``C[i, j] = sum_{t,s} post_i(t) K[t,s] pre_j(s)``."""
    return post.astype(float) @ kernel @ pre.T.astype(float)


@dataclass
class TeacherSignal:
    teacher_raster: SpikeRaster
    target_times: list  # per output neuron, array of target spike times (ms)

    @classmethod
    def from_raster(cls, raster: SpikeRaster) -> "TeacherSignal":
        times = [(np.flatnonzero(row) + 0.5) * raster.dt for row in raster.spikes]
        return cls(raster, times)


def make_teacher(label: int, n: int, T: int, dt: float = 1.0, seed: int = 0) -> TeacherSignal:
    """Target output for one class.

    Class 0: one spike per output neuron at step 0 (near-constant output, low
    complexity). Class 1: a fixed half-density pseudo-random raster (high
    complexity), identical for every class-1 sample with the same seed.
    Teacher spikes sit in the middle of their bin.
    """
    spikes = np.zeros((n, T), dtype=np.uint8)
    if label == 0:
        spikes[:, 0] = 1
    else:
        spikes[:] = make_rng(seed, 11, n, T).random((n, T)) < 0.5
        silent = ~spikes.any(axis=1)
        spikes[silent, 0] = 1
    return TeacherSignal.from_raster(SpikeRaster.from_spikes(spikes, dt))


def surrogate_grad(x: np.ndarray, beta: float) -> np.ndarray:
    """Fast-sigmoid surrogate of dTheta/dx: beta / (1 + beta |x|)^2."""
    return beta / (1.0 + beta * np.abs(x)) ** 2
