"""Hebbian, STDP and SDSP updates. Each returns one delta per weight layer."""
from __future__ import annotations

import numpy as np

from ..network import ForwardTrace
from .common import WeightDelta
from .rules import Hebbian, Sdsp, Stdp


def _layers(trace: ForwardTrace):
    """(pre, post) spike matrices for input->hidden and hidden->output."""
    s_in = trace.input_raster.spikes.astype(float)
    s_h = trace.hidden_raster.spikes.astype(float)
    s_o = trace.output_raster.spikes.astype(float)
    return (s_in, s_h), (s_h, s_o)


def hebbian_update(trace: ForwardTrace, cfg: Hebbian) -> WeightDelta:
    (p1, q1), (p2, q2) = _layers(trace)
    return WeightDelta(cfg.eta * (q1 @ p1.T), cfg.eta * (q2 @ p2.T))


def stdp_window(lag: np.ndarray, cfg: Stdp) -> np.ndarray:
    """Pair contribution for lag = t_post - t_pre (ms). Zero lag contributes nothing."""
    lag = np.asarray(lag, dtype=float)
    cutoff = 5.0 * max(cfg.tau_plus, cfg.tau_minus)
    out = np.zeros_like(lag)
    ltp = (lag > 0) & (lag <= cutoff)
    ltd = (lag < 0) & (lag >= -cutoff)
    out[ltp] = cfg.a_plus * np.exp(-lag[ltp] / cfg.tau_plus)
    out[ltd] = -cfg.a_minus * np.exp(lag[ltd] / cfg.tau_minus)
    return out


def stdp_update(trace: ForwardTrace, cfg: Stdp) -> WeightDelta:
    """All-to-all pairing: ``dw_ij = sum_{t_post, t_pre} W(t_post - t_pre)``."""
    T, dt = trace.T, trace.dt
    steps = np.arange(T)
    window = stdp_window(np.subtract.outer(steps, steps) * dt, cfg)  # [t_post, t_pre]
    (p1, q1), (p2, q2) = _layers(trace)
    return WeightDelta(q1 @ window @ p1.T, q2 @ window @ p2.T)


def sdsp_update(trace: ForwardTrace, cfg: Sdsp) -> WeightDelta:
    """``dw_ij = A * sum_t (S_pre_j(t) - S_post_i(t))``."""
    (p1, q1), (p2, q2) = _layers(trace)

    def layer(pre, post):
        return cfg.a * (pre.sum(axis=1)[None, :] - post.sum(axis=1)[:, None])

    return WeightDelta(layer(p1, q1), layer(p2, q2))
