"""Labeled binary sequence generators (Bernoulli, two-state Markov, Poisson).

Every generator is a pure function of its parameters and a 64-bit seed.
Randomness comes from a counter-based Philox stream keyed through
``numpy.random.SeedSequence`` spawn keys, so the stream of one dataset item
does not depend on how many other items are generated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

DEFAULT_LENGTH = 1024

_SEED_MASK = (1 << 64) - 1


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for ``seed`` split along ``key``."""
    ss = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _check_prob(name: str, p: float) -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"{name} must be a probability in [0, 1], got {p!r}")
    return p


def _check_length(length: int) -> int:
    if int(length) != length or length < 1:
        raise ValueError(f"length must be a positive integer, got {length!r}")
    return int(length)


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        _check_prob("p", self.p)

    kind = "bernoulli"


@dataclass(frozen=True)
class Markov:
    p01: float
    p10: float
    initial: float | None = None  # P(x1 = 1); None means the stationary law

    def __post_init__(self):
        _check_prob("p01", self.p01)
        _check_prob("p10", self.p10)
        if self.initial is not None:
            _check_prob("initial", self.initial)
        elif self.p01 + self.p10 == 0:
            raise ValueError("absorbing chain (p01 = p10 = 0) needs an initial distribution")

    kind = "markov"


@dataclass(frozen=True)
class Poisson:
    rate: float  # events per second
    dt: float = 1e-3  # seconds per bin

    def __post_init__(self):
        if not self.rate >= 0 or math.isinf(self.rate):
            raise ValueError(f"rate must be finite and >= 0, got {self.rate!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt!r}")

    @property
    def q(self) -> float:
        """Per-bin spike probability of the discretized process."""
        return poisson_bin_probability(self.rate, self.dt)

    kind = "poisson"


SourceSpec = Union[Bernoulli, Markov, Poisson]


def poisson_bin_probability(rate: float, dt: float) -> float:
    return -math.expm1(-rate * dt)


def _bernoulli_bits(p: float, u: np.ndarray) -> np.ndarray:
    return (u < p).astype(np.uint8)


def gen_bernoulli(p: float, length: int = DEFAULT_LENGTH, seed: int = 0) -> np.ndarray:
    p = _check_prob("p", p)
    length = _check_length(length)
    return _bernoulli_bits(p, make_rng(seed).random(length))


def gen_markov(
    p01: float,
    p10: float,
    length: int = DEFAULT_LENGTH,
    seed: int = 0,
    initial: float | None = None,
) -> np.ndarray:
    """Two-state Markov chain with P(1|0) = p01 and P(0|1) = p10.

    The first bit is drawn from ``initial`` (probability of a 1) when given,
    otherwise from the stationary distribution p01 / (p01 + p10).
    """
    spec = Markov(p01, p10, initial)
    length = _check_length(length)
    if spec.initial is not None:
        p_first = spec.initial
    else:
        p_first = spec.p01 / (spec.p01 + spec.p10)
    u = make_rng(seed).random(length)
    out = np.empty(length, dtype=np.uint8)
    prev = 1 if u[0] < p_first else 0
    out[0] = prev
    for i in range(1, length):
        if prev:
            prev = 0 if u[i] < spec.p10 else 1
        else:
            prev = 1 if u[i] < spec.p01 else 0
        out[i] = prev
    return out


def gen_poisson(rate: float, dt: float = 1e-3, length: int = DEFAULT_LENGTH, seed: int = 0) -> np.ndarray:
    """Homogeneous Poisson process binned at ``dt`` (at most one event per bin).

    Uses the same uniform draws as :func:`gen_bernoulli`, so it is bit-identical
    to a Bernoulli sequence with p = 1 - exp(-rate * dt) under the same seed.
    """
    spec = Poisson(rate, dt)
    length = _check_length(length)
    return _bernoulli_bits(spec.q, make_rng(seed).random(length))


def generate(spec: SourceSpec, length: int = DEFAULT_LENGTH, seed: int = 0) -> np.ndarray:
    if isinstance(spec, Bernoulli):
        return gen_bernoulli(spec.p, length, seed)
    if isinstance(spec, Markov):
        return gen_markov(spec.p01, spec.p10, length, seed, initial=spec.initial)
    if isinstance(spec, Poisson):
        return gen_poisson(spec.rate, spec.dt, length, seed)
    raise TypeError(f"unknown source spec {spec!r}")


def spec_to_dict(spec: SourceSpec) -> dict:
    d = {"kind": spec.kind}
    d.update({k: v for k, v in vars(spec).items() if v is not None})
    return d


def spec_from_dict(d: dict) -> SourceSpec:
    d = dict(d)
    kind = d.pop("kind").lower()
    cls = {"bernoulli": Bernoulli, "markov": Markov, "poisson": Poisson}.get(kind)
    if cls is None:
        raise ValueError(f"unknown source kind {kind!r}")
    return cls(**d)


# low-complexity vs high-complexity parameterization of each family
DEFAULT_PAIRS: dict[str, tuple[SourceSpec, SourceSpec]] = {
    "bernoulli": (Bernoulli(0.1), Bernoulli(0.9)),
    "markov": (Markov(0.05, 0.05), Markov(0.45, 0.45)),
    "poisson": (Poisson(50.0), Poisson(500.0)),
}


@dataclass
class LabeledDataset:
    sequences: np.ndarray  # (items, length) uint8
    labels: np.ndarray  # (items,) uint8
    class0_spec: SourceSpec
    class1_spec: SourceSpec
    seed: int
    length: int = field(init=False)

    def __post_init__(self):
        self.length = int(self.sequences.shape[1])

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[tuple[np.ndarray, int]]:
        for seq, label in zip(self.sequences, self.labels):
            yield seq, int(label)

    @property
    def items(self) -> list[tuple[np.ndarray, int]]:
        return list(self)


def make_dataset(
    class0: SourceSpec,
    class1: SourceSpec,
    count_per_class: int,
    length: int = DEFAULT_LENGTH,
    seed: int = 0,
) -> LabeledDataset:
    """Balanced two-class dataset, deterministically shuffled by ``seed``.

    Item ``i`` of class ``c`` is generated from the sub-stream ``(seed, c, i)``.
    """
    if int(count_per_class) != count_per_class or count_per_class < 1:
        raise ValueError(f"count_per_class must be a positive integer, got {count_per_class!r}")
    length = _check_length(length)
    seqs = []
    labels = []
    for label, spec in enumerate((class0, class1)):
        for i in range(count_per_class):
            item_seed = int(make_rng(seed, label, i).integers(0, 2**63))
            seqs.append(generate(spec, length, item_seed))
            labels.append(label)
    order = make_rng(seed, 2).permutation(len(labels))
    sequences = np.stack(seqs)[order]
    return LabeledDataset(sequences, np.asarray(labels, dtype=np.uint8)[order], class0, class1, int(seed))
