"""Hybrid rules: ANN-to-SNN conversion, reward-modulated STDP, bio-inspired active learning."""
from __future__ import annotations

import math

import numpy as np

from ..complexity import normalized_lzc
from ..network import ForwardTrace, Network, init_network
from ..neuron import LifParams, decode, encode
from ..sources import LabeledDataset
from .common import WeightDelta, exp_window, window_correlation
from .rules import AnnSnn, Bal, RewardStdp


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def convert_weights(w_ann: np.ndarray, tau_syn: float) -> np.ndarray:
    return np.asarray(w_ann, dtype=float) / tau_syn


def train_ann(x: np.ndarray, labels: np.ndarray, init: Network, cfg: AnnSnn):
    """Full-batch gradient descent on a logistic 3-layer rate network.

    ``x`` holds one frame-averaged input vector per row. Each unit is the rate
    twin of a LIF neuron, ``sigmoid((a - threshold) / softness)`` with ``a``
    the synaptic drive, so the weights carry over to the spiking network.
    Every output unit is trained toward ``target_high`` for label 1 and
    ``target_low`` for label 0. Returns (w1, b1, w2, b2).
    """
    w1, b1 = init.w_ih.copy(), init.bias_h.copy()
    w2, b2 = init.w_ho.copy(), init.bias_o.copy()
    th, soft = init.params.threshold, cfg.softness
    target = np.where(labels[:, None] == 1, cfg.target_high, cfg.target_low)
    m = len(x)
    for _ in range(cfg.ann_epochs):
        h = _sigmoid((x @ w1.T + b1 - th) / soft)
        o = _sigmoid((h @ w2.T + b2 - th) / soft)
        err = o - target
        loss = 0.5 * float(np.mean(np.sum(err * err, axis=1)))
        if not math.isfinite(loss):
            raise FloatingPointError("ANN training diverged")
        d_o = err * o * (1 - o) / (m * soft)
        d_h = (d_o @ w2) * h * (1 - h) / soft
        w2 -= cfg.ann_eta * d_o.T @ h
        b2 -= cfg.ann_eta * d_o.sum(axis=0)
        w1 -= cfg.ann_eta * d_h.T @ x
        b1 -= cfg.ann_eta * d_h.sum(axis=0)
    return w1, b1, w2, b2


def ann_snn_convert(
    dataset: LabeledDataset,
    n: int,
    cfg: AnnSnn,
    params: LifParams | None = None,
    seed: int = 0,
    init_scale: float | None = None,
) -> Network:
    """Train the rate twin of the network, then map ``w_snn = w_ann / tau_syn`` (biases too)."""
    init = init_network(n, seed, init_scale, params, strict_width=False)
    x = np.stack([encode(seq, n).spikes.mean(axis=1) for seq in dataset.sequences])
    w1, b1, w2, b2 = train_ann(x, np.asarray(dataset.labels), init, cfg)
    return Network(
        convert_weights(w1, cfg.tau_syn),
        convert_weights(w2, cfg.tau_syn),
        convert_weights(b1, cfg.tau_syn),
        convert_weights(b2, cfg.tau_syn),
        init.params,
    )


def reward_stdp_update(trace: ForwardTrace, reward: float, cfg: RewardStdp) -> WeightDelta:
    """``eta * r * C`` for both layers, C the exponential-window pre/post correlation."""
    if not math.isfinite(reward):
        raise ValueError("reward must be finite")
    n = trace.input_raster.n
    if reward == 0:
        return WeightDelta.zeros(n)
    kernel = exp_window(trace.T, trace.dt, cfg.window)
    s_in = trace.input_raster.spikes
    s_h = trace.hidden_raster.spikes
    s_o = trace.output_raster.spikes
    k = cfg.eta * reward
    return WeightDelta(k * window_correlation(s_h, s_in, kernel), k * window_correlation(s_o, s_h, kernel))


def reward_for(correct: bool | None, cfg: RewardStdp, label: int | None = None) -> float:
    """Trial reward from the LZC decision; None (no decision yet) gives 0.

    With ``cfg.label_signed`` the penalty for a wrong decision flips sign on
    label-1 trials, so a too-regular output is pushed toward more activity
    and a too-irregular one toward less.
    """
    if correct is None:
        return 0.0
    if correct:
        return cfg.reward_map[0]
    r = cfg.reward_map[1]
    if cfg.label_signed and label == 1:
        r = -r
    return r


def mutual_information(post: np.ndarray, pre: np.ndarray) -> np.ndarray:
    """Plug-in MI (bits) between every post train i and pre train j from 2x2 spike histograms.

    A degenerate marginal (train all 0 or all 1) yields 0.
    """
    post = np.asarray(post, dtype=np.int64)
    pre = np.asarray(pre, dtype=np.int64)
    T = post.shape[1]
    n1_post = post.sum(axis=1)[:, None]
    n1_pre = pre.sum(axis=1)[None, :]
    n11 = post @ pre.T
    joint = {
        (1, 1): n11,
        (1, 0): n1_post - n11,
        (0, 1): n1_pre - n11,
        (0, 0): T - n1_post - n1_pre + n11,
    }
    marg_post = {1: n1_post, 0: T - n1_post}
    marg_pre = {1: n1_pre, 0: T - n1_pre}
    mi = np.zeros(n11.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for (a, b), count in joint.items():
            denom = marg_post[a] * marg_pre[b]
            ratio = (count * T) / denom  # exact 1.0 for independent integer counts
            term = (count / T) * np.log2(ratio)
            mi += np.where(count > 0, term, 0.0)
    return mi


def uncertainty(c_norm, threshold: float, scale: float) -> np.ndarray:
    """``1 - |2 p - 1|`` with p the logistic confidence of the LZC margin."""
    c = np.asarray(c_norm, dtype=float)
    p = _sigmoid((c - threshold) / scale)
    return 1.0 - np.abs(2.0 * p - 1.0)


def output_lzc(trace: ForwardTrace, length: int | None = None) -> float:
    raster = trace.output_raster
    return normalized_lzc(decode(raster, length or raster.spikes.size))


def bal_update(
    traces: list[ForwardTrace],
    labels,
    cfg: Bal,
    threshold: float = 0.5,
    lzc_values=None,
) -> tuple[WeightDelta, np.ndarray]:
    """Uncertainty-weighted mutual-information update over a pool of trials.

    Picks the ``ceil(pool_fraction * N)`` most uncertain trials and returns
    ``eta * mean(U) * mean(I)`` over them, with the selection for audit.
    """
    if not traces:
        raise ValueError("empty pool")
    if lzc_values is None:
        lzc_values = [output_lzc(tr) for tr in traces]
    u = uncertainty(lzc_values, threshold, cfg.margin_scale)
    k = math.ceil(cfg.pool_fraction * len(traces))
    selected = np.sort(np.argsort(-u, kind="stable")[:k])
    n = traces[0].input_raster.n
    u_bar = float(u[selected].mean())
    if u_bar == 0.0:
        return WeightDelta.zeros(n), selected
    mi_ih = np.zeros((n, n))
    mi_ho = np.zeros((n, n))
    for idx in selected:
        tr = traces[idx]
        mi_ih += mutual_information(tr.hidden_raster.spikes, tr.input_raster.spikes)
        mi_ho += mutual_information(tr.output_raster.spikes, tr.hidden_raster.spikes)
    scale = cfg.eta * u_bar / len(selected)
    return WeightDelta(scale * mi_ih, scale * mi_ho, {"uncertainty": u_bar}), selected
