"""Training and evaluation: encode -> forward -> update -> decode -> LZC decision -> metrics."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import learning as L
from .complexity import classify_by_lzc, normalized_lzc
from .network import WIDTHS, ForwardTrace, Network, forward, init_network
from .neuron import LifParams, decode, encode
from .sources import LabeledDataset


class TrainingError(RuntimeError):
    def __init__(self, message: str, epoch: int, index: int):
        super().__init__(f"{message} (epoch {epoch}, sample {index})")
        self.epoch = epoch
        self.index = index


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    n: int = 32
    rule: L.RuleConfig = field(default_factory=L.Stdp)
    lif: LifParams = field(default_factory=lambda: LifParams(threshold=0.2, decay=0.05))
    init_scale: float | None = None  # None -> 0.5 / sqrt(n)
    seed: int = 0
    w_max: float = L.DEFAULT_W_MAX
    calibration: str = "midpoint"  # or "roc"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.n not in WIDTHS:
            raise ValueError(f"n must be one of {WIDTHS}")
        if self.calibration not in ("midpoint", "roc"):
            raise ValueError(f"unknown calibration {self.calibration!r}")


@dataclass(frozen=True)
class Calibration:
    """LZC decision rule. ``swapped`` means label 0 is the high-complexity class."""

    threshold: float
    swapped: bool = False
    degenerate: bool = False

    def classify(self, c_norm: float) -> int:
        label = classify_by_lzc(c_norm, self.threshold)
        return 1 - label if self.swapped else label


def calibrate_lzc_threshold(values0: Sequence[float], values1: Sequence[float], method: str = "midpoint") -> Calibration:
    """Midpoint of the class-conditional mean LZC values.

    The class with the higher mean is treated as the high-complexity side;
    equal means give a degenerate rule at the common mean. ``method="roc"``
    instead picks the cut that maximizes training accuracy.
    """
    v0 = np.asarray(values0, dtype=float)
    v1 = np.asarray(values1, dtype=float)
    if v0.size == 0 or v1.size == 0:
        raise ValueError("both classes need at least one value")
    m0, m1 = float(v0.mean()), float(v1.mean())
    if m0 == m1:
        return Calibration(m0, swapped=False, degenerate=True)
    swapped = m0 > m1
    if method == "midpoint":
        return Calibration(0.5 * (m0 + m1), swapped)
    if method != "roc":
        raise ValueError(f"unknown calibration method {method!r}")
    lo, hi = (v1, v0) if swapped else (v0, v1)
    cuts = np.unique(np.concatenate([lo, hi]))
    candidates = np.concatenate([[cuts[0]], 0.5 * (cuts[1:] + cuts[:-1]), [np.nextafter(cuts[-1], np.inf)]])
    best, best_acc = candidates[0], -1.0
    for c in candidates:
        acc = (np.sum(hi >= c) + np.sum(lo < c)) / (lo.size + hi.size)
        if acc > best_acc:
            best, best_acc = c, acc
    return Calibration(float(best), swapped)


class RunningCalibration:
    """Class-mean tracker used by rules that need a decision during training."""

    def __init__(self):
        self.sums = [0.0, 0.0]
        self.counts = [0, 0]

    def ready(self) -> bool:
        return self.counts[0] > 0 and self.counts[1] > 0

    def current(self) -> Calibration | None:
        if not self.ready():
            return None
        return calibrate_lzc_threshold([self.sums[0] / self.counts[0]], [self.sums[1] / self.counts[1]])

    def update(self, c_norm: float, label: int) -> None:
        self.sums[label] += c_norm
        self.counts[label] += 1


class TrainResult(NamedTuple):
    network: Network
    calibration: Calibration
    train_accuracy: float
    updates: int


def output_complexity(net: Network, seq) -> tuple[float, ForwardTrace]:
    trace = forward(net, encode(seq, net.n))
    return normalized_lzc(decode(trace.output_raster, len(seq))), trace


def _rule_delta(rule, trace, label, net, teacher_seed, running: RunningCalibration, seq_len):
    name = rule.name
    if name == "hebbian":
        return L.hebbian_update(trace, rule)
    if name == "stdp":
        return L.stdp_update(trace, rule)
    if name == "sdsp":
        return L.sdsp_update(trace, rule)
    if name == "bp":
        return L.bp_update(trace, label, net, rule)
    if name == "stbp":
        return L.stbp_update(trace, label, net, rule)
    if name == "tempotron":
        return L.tempotron_update(trace, label, rule)
    if name in ("spikeprop", "chronotron", "resume"):
        teacher = L.make_teacher(label, net.n, trace.T, trace.dt, teacher_seed)
        if name == "spikeprop":
            return L.spikeprop_update(trace, teacher, net, rule)
        if name == "chronotron":
            return L.chronotron_update(trace, teacher, net, rule)
        return L.resume_update(trace, teacher, rule)
    if name == "reward_stdp":
        c = normalized_lzc(decode(trace.output_raster, seq_len))
        calib = running.current()
        correct = None if calib is None else calib.classify(c) == label
        running.update(c, label)
        return L.reward_stdp_update(trace, L.reward_for(correct, rule, label), rule)
    raise ValueError(f"rule {name!r} is not an online rule")


def train(dataset: LabeledDataset, cfg: TrainConfig) -> TrainResult:
    """Online training for ``cfg.epochs`` passes, then LZC threshold calibration.

    Deltas are applied sample by sample with weight clipping. BAL applies one
    delta per pool of ``pool_size`` samples; ANN-SNN conversion replaces the
    plastic epochs entirely.
    """
    rule = cfg.rule
    n = cfg.n
    seq_len = dataset.length
    if rule.name == "ann_snn":
        net = L.ann_snn_convert(dataset, n, rule, cfg.lif, cfg.seed, cfg.init_scale)
    else:
        net = init_network(n, cfg.seed, cfg.init_scale, cfg.lif)
    running = RunningCalibration()
    updates = 0
    if rule.name != "ann_snn":
        for epoch in range(cfg.epochs):
            pool: list[tuple[int, ForwardTrace, int, float]] = []
            for idx, (seq, label) in enumerate(dataset):
                trace = forward(net, encode(seq, n))
                if rule.name == "bal":
                    c = normalized_lzc(decode(trace.output_raster, seq_len))
                    pool.append((idx, trace, label, c))
                    if len(pool) == rule.pool_size or idx == len(dataset) - 1:
                        calib = running.current()
                        threshold = calib.threshold if calib else 0.5
                        delta, _ = L.bal_update(
                            [p[1] for p in pool], [p[2] for p in pool], rule, threshold, [p[3] for p in pool]
                        )
                        for _, _, lab, cv in pool:
                            running.update(cv, lab)
                        pool = []
                    else:
                        continue
                else:
                    delta = _rule_delta(rule, trace, label, net, cfg.seed, running, seq_len)
                if not delta.is_finite():
                    raise TrainingError("non-finite weight delta", epoch, idx)
                if not delta.is_zero():
                    L.apply_delta(net, delta, cfg.w_max)
                    updates += 1
                    if not net.is_finite():
                        raise TrainingError("non-finite weights", epoch, idx)

    values: list[list[float]] = [[], []]
    lzc = []
    for seq, label in dataset:
        c, _ = output_complexity(net, seq)
        values[label].append(c)
        lzc.append(c)
    calibration = calibrate_lzc_threshold(values[0], values[1], cfg.calibration)
    preds = [calibration.classify(c) for c in lzc]
    accuracy = 100.0 * float(np.mean(np.asarray(preds) == dataset.labels))
    return TrainResult(net, calibration, accuracy, updates)


def predict(net: Network, calibration: Calibration | float, seq) -> int:
    if not isinstance(calibration, Calibration):
        calibration = Calibration(float(calibration))
    c, _ = output_complexity(net, seq)
    return calibration.classify(c)


@dataclass
class Metrics:
    accuracy: float  # percent
    mse: float
    mae: float
    r2: float
    r2_defined: bool = True


def evaluate(predictions: Sequence[int], labels: Sequence[int]) -> Metrics:
    """Accuracy, MSE, MAE and R^2 of binary predictions.

    R^2 is NaN (with ``r2_defined`` False) when the labels have zero variance.
    """
    pred = np.asarray(predictions, dtype=float)
    lab = np.asarray(labels, dtype=float)
    if pred.shape != lab.shape or pred.size == 0:
        raise ValueError("predictions and labels must be nonempty and of equal length")
    err = pred - lab
    accuracy = 100.0 * float(np.mean(err == 0))
    mse = float(np.mean(err ** 2))
    mae = float(np.mean(np.abs(err)))
    ss_tot = float(np.sum((lab - lab.mean()) ** 2))
    if ss_tot == 0:
        return Metrics(accuracy, mse, mae, math.nan, r2_defined=False)
    r2 = 1.0 - float(np.sum(err ** 2)) / ss_tot
    return Metrics(accuracy, mse, mae, r2)


@dataclass
class EvalReport:
    rule_name: str
    source_name: str
    n: int
    epochs: int
    wall_time: float
    accuracy: float
    mse: float
    mae: float
    r2: float
    train_accuracy: float = math.nan
    r2_defined: bool = True

    def check_identities(self, balanced: bool = True, tol: float = 1e-12) -> None:
        """Raise if the binary-prediction metric identities do not hold."""
        err = 1.0 - self.accuracy / 100.0
        if abs(self.mse - err) > tol or abs(self.mae - err) > tol:
            raise AssertionError(f"mse/mae {self.mse}/{self.mae} != 1 - acc/100 = {err}")
        if balanced and self.r2_defined and abs(self.r2 - (1.0 - 4.0 * self.mse)) > tol:
            raise AssertionError(f"r2 {self.r2} != 1 - 4 mse")


def run_trial(train_set: LabeledDataset, test_set: LabeledDataset, cfg: TrainConfig, source_name: str = "") -> EvalReport:
    """Train on one set, evaluate on another; wall time spans both, monotonic clock."""
    t0 = time.perf_counter()
    result = train(train_set, cfg)
    preds = [predict(result.network, result.calibration, seq) for seq in test_set.sequences]
    m = evaluate(preds, test_set.labels)
    wall = time.perf_counter() - t0
    report = EvalReport(
        rule_name=cfg.rule.name,
        source_name=source_name,
        n=cfg.n,
        epochs=cfg.epochs,
        wall_time=wall,
        accuracy=m.accuracy,
        mse=m.mse,
        mae=m.mae,
        r2=m.r2,
        train_accuracy=result.train_accuracy,
        r2_defined=m.r2_defined,
    )
    report.check_identities(balanced=bool(np.sum(test_set.labels) * 2 == len(test_set)))
    return report
