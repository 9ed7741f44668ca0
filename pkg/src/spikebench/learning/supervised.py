"""Supervised updates: surrogate-gradient BP/STBP, tempotron, spike-time rules, ReSuMe."""
from __future__ import annotations

import math

import numpy as np

from ..network import ForwardTrace, Network
from ..neuron import INPUT_DRIVE
from .common import TeacherSignal, WeightDelta, exp_window, surrogate_grad
from .rules import Bp, Chronotron, ReSuMe, SpikeProp, Tempotron

SLOPE_EPS = 1e-9


# -- surrogate-gradient backpropagation -------------------------------------

def readout(rate: float, cfg: Bp) -> float:
    # tanh form saturates to exactly 0.0 / 1.0 far from the center
    return 0.5 * (1.0 + math.tanh(0.5 * cfg.readout_gain * (rate - cfg.readout_center)))


def rate_loss(rate: float, label: int, cfg: Bp) -> tuple[float, float]:
    """Squared error of the logistic rate readout against the label; returns (E, dE/drate)."""
    y = readout(rate, cfg)
    err = y - label
    return 0.5 * err * err, err * cfg.readout_gain * y * (1.0 - y)


def surrogate_gradients(trace: ForwardTrace, label: int, net: Network, cfg: Bp, temporal: bool):
    """Gradients (d_ih, d_ho, E) of the rate loss, Heaviside replaced by a fast sigmoid.

    With ``temporal=False`` the membrane state carried into each step is held
    constant (spatial credit only); ``temporal=True`` also propagates credit
    through the leak and reset, dU_t/dU_{t-1} = decay.
    """
    p = trace.params
    d, th, reset = p.decay, p.threshold, p.reset
    x_in = trace.input_raster.spikes * INPUT_DRIVE
    s_h = trace.hidden_raster.spikes.astype(float)
    s_o = trace.output_raster.spikes.astype(float)
    pre_h = trace.hidden_raster.potentials
    pre_o = trace.output_raster.potentials
    n, T = s_o.shape

    loss, dE_drate = rate_loss(float(s_o.mean()), label, cfg)
    if dE_drate == 0.0:
        return np.zeros_like(net.w_ih), np.zeros_like(net.w_ho), loss
    g = dE_drate / (n * T)
    sg_h = surrogate_grad(pre_h - th, cfg.surrogate_beta)
    sg_o = surrogate_grad(pre_o - th, cfg.surrogate_beta)

    dz_o = np.empty((n, T))
    dz_h = np.empty((n, T))
    # reverse sweep over the unrolled trace; next_* is dE/du_pre at step t + 1
    carry = d if temporal else 0.0
    next_o = np.zeros(n)
    next_h = np.zeros(n)
    for t in range(T - 1, -1, -1):
        dpost_o = carry * next_o
        ds_o = g + dpost_o * (reset - pre_o[:, t])
        dpre_o = ds_o * sg_o[:, t] + dpost_o * (1.0 - s_o[:, t])
        dz_o[:, t] = (1.0 - d) * dpre_o
        dpost_h = carry * next_h
        ds_h = net.w_ho.T @ dz_o[:, t] + dpost_h * (reset - pre_h[:, t])
        dpre_h = ds_h * sg_h[:, t] + dpost_h * (1.0 - s_h[:, t])
        dz_h[:, t] = (1.0 - d) * dpre_h
        next_o, next_h = dpre_o, dpre_h

    grad_ho = dz_o @ s_h.T
    grad_ih = dz_h @ x_in.T
    return grad_ih, grad_ho, loss


def _gradient_delta(trace, label, net, cfg, temporal):
    grad_ih, grad_ho, loss = surrogate_gradients(trace, label, net, cfg, temporal)
    delta = WeightDelta(-cfg.eta * grad_ih, -cfg.eta * grad_ho, {"loss": loss})
    if not delta.is_finite():
        raise FloatingPointError("non-finite surrogate gradient")
    return delta


def bp_update(trace: ForwardTrace, label: int, net: Network, cfg: Bp) -> WeightDelta:
    return _gradient_delta(trace, label, net, cfg, temporal=False)


def stbp_update(trace: ForwardTrace, label: int, net: Network, cfg: Bp) -> WeightDelta:
    return _gradient_delta(trace, label, net, cfg, temporal=True)


# -- tempotron --------------------------------------------------------------

def tempotron_kernel(s, tau_m: float, tau_s: float) -> np.ndarray:
    """Double-exponential PSP kernel normalized to a peak of 1; zero for s < 0."""
    s = np.asarray(s, dtype=float)
    s_peak = tau_m * tau_s / (tau_m - tau_s) * math.log(tau_m / tau_s)
    v0 = 1.0 / (math.exp(-s_peak / tau_m) - math.exp(-s_peak / tau_s))
    pos = np.maximum(s, 0.0)
    return np.where(s >= 0, v0 * (np.exp(-pos / tau_m) - np.exp(-pos / tau_s)), 0.0)


def tempotron_update(trace: ForwardTrace, label: int, cfg: Tempotron) -> WeightDelta:
    """Error-driven update of the hidden->output weights.

    An output neuron errs when it stays silent on a label-1 pattern (missed
    spike, potentiate at the time of maximal potential) or fires on a label-0
    pattern (false spike, depress at the first spike time).
    """
    s_o = trace.output_raster.spikes
    n, T = s_o.shape
    fired = s_o.any(axis=1)
    wrong = ~fired if label else fired
    if not wrong.any():
        return WeightDelta.zeros(n)
    sign = 1.0 if label else -1.0
    t_f = np.where(fired, s_o.argmax(axis=1), trace.output_raster.potentials.argmax(axis=1))
    lag = (t_f[:, None] - np.arange(T)[None, :]) * trace.dt
    k = tempotron_kernel(lag, cfg.tau_m_kernel, cfg.tau_s_kernel)
    k[~wrong] = 0.0
    d_ho = sign * cfg.eta * (k @ trace.hidden_raster.spikes.T.astype(float))
    return WeightDelta(np.zeros((n, n)), d_ho, {"errors": int(wrong.sum())})


# -- spike-time rules (SpikeProp, Chronotron) -------------------------------

def _psp_sensitivity(s_pre: np.ndarray, d: float, start: int, k: int) -> np.ndarray:
    """dU_pre[k]/dw for a neuron whose potential was last reset before ``start``."""
    m = np.arange(start, k + 1)
    coef = (1.0 - d) * d ** (k - m)
    return s_pre[:, start:k + 1] @ coef


def spike_timings(trace: ForwardTrace, i: int):
    """Interpolated threshold-crossing times of output neuron ``i`` and their weight sensitivities.

    Returns a list of ``(t, dt_dw, singular)``. The crossing inside step ``k``
    is placed by linear interpolation between the previous and current
    potential; ``dt_dw = -(dU/dw) / (dU/dt)`` evaluated at that point.
    """
    p = trace.params
    d, th, reset, dt = p.decay, p.threshold, p.reset, trace.dt
    s_pre = trace.hidden_raster.spikes.astype(float)
    pre = trace.output_raster.potentials[i]
    out = []
    start = 0
    for k in np.flatnonzero(trace.output_raster.spikes[i]):
        k = int(k)
        dq = _psp_sensitivity(s_pre, d, start, k)
        if k == start:
            prev, dp = reset, np.zeros_like(dq)
        else:
            prev, dp = pre[k - 1], _psp_sensitivity(s_pre, d, start, k - 1)
        rise = pre[k] - prev
        if rise < SLOPE_EPS:
            out.append((spike_time_at(k, 1.0, dt), -dq, True))
        else:
            alpha = (th - prev) / rise
            du = dp + alpha * (dq - dp)
            out.append((spike_time_at(k, alpha, dt), -du * dt / rise, False))
        start = k + 1
    return out


def spike_time_at(k: int, alpha: float, dt: float) -> float:
    return (k + alpha) * dt


def no_fire_timing(trace: ForwardTrace, i: int, after: int = 0):
    """Fallback for a missing spike: time T*dt + tau_m, direction of the potential gradient
    at the step of maximal potential (searched from step ``after``)."""
    p = trace.params
    pre = trace.output_raster.potentials[i]
    T = trace.T
    if after >= T:
        after = 0
    k_star = after + int(np.argmax(pre[after:]))
    spikes = np.flatnonzero(trace.output_raster.spikes[i][:k_star])
    start = int(spikes[-1]) + 1 if spikes.size else 0
    sens = _psp_sensitivity(trace.hidden_raster.spikes.astype(float), p.decay, start, k_star)
    return T * trace.dt + p.tau_m, -sens


def timing_delta(errors, sensitivities, eta: float) -> np.ndarray:
    """``-eta * sum_k err_k * dt_k/dw`` for one neuron."""
    errors = np.asarray(errors, dtype=float)
    sens = np.asarray(sensitivities, dtype=float).reshape(len(errors), -1)
    return -eta * (errors @ sens)


def spikeprop_update(trace: ForwardTrace, teacher: TeacherSignal, net: Network, cfg: SpikeProp) -> WeightDelta:
    """First-spike-time gradient descent on the hidden->output weights."""
    n = net.n
    d_ho = np.zeros((n, n))
    loss = 0.0
    fallback = singular = 0
    for i in range(n):
        targets = np.asarray(teacher.target_times[i], dtype=float)
        if targets.size == 0:
            continue
        timings = spike_timings(trace, i)
        if timings:
            t, sens, sing = timings[0]
            singular += sing
        else:
            t, sens = no_fire_timing(trace, i)
            fallback += 1
        err = t - targets[0]
        loss += 0.5 * err * err
        d_ho[i] = timing_delta([err], [sens], cfg.eta)
    info = {"loss": loss, "fallback": fallback, "singular": singular}
    return WeightDelta(np.zeros((n, n)), d_ho, info)


def chronotron_errors(trace: ForwardTrace, i: int, targets) -> tuple[list, list]:
    """Per-spike errors and sensitivities after k-th to k-th matching."""
    targets = np.sort(np.asarray(targets, dtype=float))
    timings = spike_timings(trace, i)
    window_end = trace.T * trace.dt
    errors, sens = [], []
    for k, (t, s, _) in enumerate(timings):
        target = targets[k] if k < targets.size else window_end  # surplus spikes pushed out
        errors.append(t - target)
        sens.append(s)
    if targets.size > len(timings):
        after = int(np.flatnonzero(trace.output_raster.spikes[i])[-1]) + 1 if timings else 0
        t_miss, s_miss = no_fire_timing(trace, i, after)
        for target in targets[len(timings):]:
            errors.append(t_miss - target)
            sens.append(s_miss)
    return errors, sens


def chronotron_loss(trace: ForwardTrace, teacher: TeacherSignal) -> float:
    total = 0.0
    for i in range(trace.output_raster.n):
        errors, _ = chronotron_errors(trace, i, teacher.target_times[i])
        total += 0.5 * float(np.sum(np.square(errors)))
    return total


def chronotron_update(trace: ForwardTrace, teacher: TeacherSignal, net: Network, cfg: Chronotron) -> WeightDelta:
    n = net.n
    d_ho = np.zeros((n, n))
    loss = 0.0
    for i in range(n):
        errors, sens = chronotron_errors(trace, i, teacher.target_times[i])
        if not errors:
            continue
        loss += 0.5 * float(np.sum(np.square(errors)))
        d_ho[i] = timing_delta(errors, sens, cfg.eta)
    return WeightDelta(np.zeros((n, n)), d_ho, {"loss": loss})


# -- ReSuMe -----------------------------------------------------------------

def resume_update(trace: ForwardTrace, teacher: TeacherSignal, cfg: ReSuMe) -> WeightDelta:
    """``eta * [pre * teach - pre * post]`` with exponential-window correlations."""
    s_o = trace.output_raster.spikes
    if teacher.teacher_raster.spikes.shape != s_o.shape:
        raise ValueError("teacher raster does not match the output layer")
    n, T = s_o.shape
    diff = teacher.teacher_raster.spikes.astype(float) - s_o
    if not diff.any():
        return WeightDelta.zeros(n)
    kernel = exp_window(T, trace.dt, cfg.teacher_window)
    d_ho = cfg.eta * (diff @ kernel @ trace.hidden_raster.spikes.T.astype(float))
    return WeightDelta(np.zeros((n, n)), d_ho)
