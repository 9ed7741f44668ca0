"""Hyperparameter records for the twelve learning rules."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Union


def _positive(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not v > 0:
            raise ValueError(f"{type(obj).__name__}.{name} must be > 0, got {v!r}")


def _nonneg(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not v >= 0:
            raise ValueError(f"{type(obj).__name__}.{name} must be >= 0, got {v!r}")


@dataclass(frozen=True)
class Hebbian:
    eta: float = 1e-4
    name = "hebbian"

    def __post_init__(self):
        _positive(self, "eta")


@dataclass(frozen=True)
class Stdp:
    a_plus: float = 1e-2
    a_minus: float = 1e-2
    tau_plus: float = 20.0  # ms
    tau_minus: float = 20.0
    name = "stdp"

    def __post_init__(self):
        _nonneg(self, "a_plus", "a_minus")
        _positive(self, "tau_plus", "tau_minus")


@dataclass(frozen=True)
class Sdsp:
    a: float = 1e-4
    name = "sdsp"

    def __post_init__(self):
        _positive(self, "a")


@dataclass(frozen=True)
class Bp:
    eta: float = 0.05
    surrogate_beta: float = 5.0
    # logistic readout y = sigmoid(readout_gain * (rate - readout_center)); a low
    # center lets class 1 saturate before its output locks into a fixed pattern
    readout_gain: float = 20.0
    readout_center: float = 0.15
    name = "bp"

    def __post_init__(self):
        _positive(self, "eta", "surrogate_beta", "readout_gain")
        if not 0 <= self.readout_center <= 1:
            raise ValueError("readout_center must lie in [0, 1]")


@dataclass(frozen=True)
class Stbp(Bp):
    name = "stbp"


@dataclass(frozen=True)
class Tempotron:
    eta: float = 1e-2
    tau_m_kernel: float = 15.0  # ms
    tau_s_kernel: float = 3.75
    name = "tempotron"

    def __post_init__(self):
        _positive(self, "eta", "tau_m_kernel", "tau_s_kernel")
        if self.tau_m_kernel == self.tau_s_kernel:
            raise ValueError("kernel time constants must differ")


@dataclass(frozen=True)
class SpikeProp:
    eta: float = 1e-3
    name = "spikeprop"

    def __post_init__(self):
        _positive(self, "eta")


@dataclass(frozen=True)
class Chronotron:
    eta: float = 1e-3
    name = "chronotron"

    def __post_init__(self):
        _positive(self, "eta")


@dataclass(frozen=True)
class ReSuMe:
    eta: float = 1e-3
    teacher_window: float = 5.0  # ms
    name = "resume"

    def __post_init__(self):
        _positive(self, "eta", "teacher_window")


@dataclass(frozen=True)
class AnnSnn:
    tau_syn: float = 1.0
    ann_epochs: int = 10
    ann_eta: float = 0.1
    target_low: float = 0.0
    target_high: float = 0.5
    softness: float = 0.05  # width of the logistic step around the LIF threshold
    name = "ann_snn"

    def __post_init__(self):
        _positive(self, "tau_syn", "ann_eta", "softness")
        if self.ann_epochs < 1:
            raise ValueError("ann_epochs must be >= 1")


@dataclass(frozen=True)
class RewardStdp:
    eta: float = 1e-4
    # reward for a correct / incorrect trial-level LZC decision
    reward_map: tuple[float, float] = (0.0, -1.0)
    window: float = 5.0  # ms
    label_signed: bool = True
    name = "reward_stdp"

    def __post_init__(self):
        _positive(self, "eta", "window")
        object.__setattr__(self, "reward_map", tuple(float(r) for r in self.reward_map))
        if len(self.reward_map) != 2:
            raise ValueError("reward_map is (reward_if_correct, reward_if_wrong)")


@dataclass(frozen=True)
class Bal:
    eta: float = 1e-3
    pool_fraction: float = 0.5
    mi_bins: int = 2  # reserved; spike trains are binary
    pool_size: int = 20
    margin_scale: float = 0.05  # LZC distance that maps to confidence ~0.73
    name = "bal"

    def __post_init__(self):
        _positive(self, "eta", "margin_scale")
        if not 0 < self.pool_fraction <= 1:
            raise ValueError("pool_fraction must lie in (0, 1]")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")


RuleConfig = Union[
    Hebbian, Stdp, Sdsp, Bp, Stbp, Tempotron, SpikeProp, Chronotron, ReSuMe, AnnSnn, RewardStdp, Bal
]

RULES: dict[str, type] = {
    cls.name: cls
    for cls in (Hebbian, Stdp, Sdsp, Bp, Stbp, Tempotron, SpikeProp, Chronotron, ReSuMe, AnnSnn, RewardStdp, Bal)
}

# (table group, biologically inspired) as laid out in the result tables
CATEGORY = {
    "hebbian": ("unsupervised", True),
    "stdp": ("unsupervised", True),
    "sdsp": ("unsupervised", True),
    "bp": ("supervised", False),
    "stbp": ("supervised", False),
    "tempotron": ("supervised", True),
    "spikeprop": ("supervised", True),
    "chronotron": ("supervised", True),
    "resume": ("supervised", True),
    "ann_snn": ("hybrid", False),
    "reward_stdp": ("hybrid", False),
    "bal": ("hybrid", True),
}

# field that a sweep's "learning_rate" axis overrides
RATE_FIELD = {
    "hebbian": "eta",
    "stdp": "a_plus",
    "sdsp": "a",
    "bp": "eta",
    "stbp": "eta",
    "tempotron": "eta",
    "spikeprop": "eta",
    "chronotron": "eta",
    "resume": "eta",
    "ann_snn": "ann_eta",
    "reward_stdp": "eta",
    "bal": "eta",
}


def make_rule(name: str, **params) -> RuleConfig:
    try:
        cls = RULES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown rule {name!r}; choose from {sorted(RULES)}") from None
    return cls(**params)


def rule_to_dict(cfg: RuleConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["name"] = cfg.name
    return d


def rule_from_dict(d: dict) -> RuleConfig:
    d = dict(d)
    return make_rule(d.pop("name"), **d)


def with_rate(cfg: RuleConfig, rate: float) -> RuleConfig:
    """Copy of ``cfg`` with its learning rate set to ``rate``.

    For STDP both amplitudes move together, keeping their ratio.
    """
    field = RATE_FIELD[cfg.name]
    if cfg.name == "stdp":
        ratio = cfg.a_minus / cfg.a_plus if cfg.a_plus else 1.0
        return dataclasses.replace(cfg, a_plus=rate, a_minus=rate * ratio)
    return dataclasses.replace(cfg, **{field: rate})
