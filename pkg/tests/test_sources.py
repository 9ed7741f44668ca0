import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikebench.sources import (
    DEFAULT_PAIRS,
    Bernoulli,
    Markov,
    Poisson,
    gen_bernoulli,
    gen_markov,
    gen_poisson,
    generate,
    make_dataset,
    spec_from_dict,
    spec_to_dict,
)


def bits(s):
    return np.array([int(c) for c in s], dtype=np.uint8)


@pytest.mark.parametrize("p,expected", [(0.0, "00000000"), (1.0, "11111111")])
def test_bernoulli_extremes(p, expected):
    for seed in (0, 1, 12345):
        assert np.array_equal(gen_bernoulli(p, 8, seed), bits(expected))


def test_bernoulli_mean():
    x = gen_bernoulli(0.5, 100_000, seed=3)
    assert abs(x.mean() - 0.5) < 0.01


def test_bernoulli_lag1_autocorrelation():
    x = gen_bernoulli(0.5, 100_000, seed=4).astype(float)
    x -= x.mean()
    rho = float(np.dot(x[:-1], x[1:]) / np.dot(x, x))
    assert abs(rho) < 0.02


@pytest.mark.parametrize("p", [-0.1, 1.5, math.nan])
def test_bernoulli_rejects_bad_probability(p):
    with pytest.raises(ValueError):
        gen_bernoulli(p, 8)


def test_markov_absorbing_and_alternating():
    assert np.array_equal(gen_markov(0, 0, 6, seed=9, initial=0.0), bits("000000"))
    assert np.array_equal(gen_markov(1, 1, 6, seed=9, initial=0.0), bits("010101"))


def test_markov_absorbing_without_initial_is_an_error():
    with pytest.raises(ValueError):
        gen_markov(0, 0, 6)


def test_markov_transition_frequencies():
    x = gen_markov(0.2, 0.2, 100_000, seed=5)
    prev, nxt = x[:-1], x[1:]
    p01 = np.mean(nxt[prev == 0] == 1)
    p10 = np.mean(nxt[prev == 1] == 0)
    assert abs(p01 - 0.2) < 0.01 and abs(p10 - 0.2) < 0.01


def test_markov_symmetric_marginal():
    x = gen_markov(0.3, 0.3, 100_000, seed=6)
    assert abs(x.mean() - 0.5) < 0.01


def test_poisson_zero_rate_and_half():
    assert not gen_poisson(0.0, 1e-3, 500, seed=1).any()
    assert Poisson(math.log(2) / 1e-3, 1e-3).q == pytest.approx(0.5, abs=1e-15)
    assert Poisson(math.log(2), 1.0).q == 0.5


def test_poisson_bin_probability():
    x = gen_poisson(100.0, 1e-3, 100_000, seed=7)
    q = 1 - math.exp(-0.1)
    assert q == pytest.approx(0.09516, abs=1e-5)
    assert abs(x.mean() - q) < 0.005


def test_poisson_rejects_negative_rate():
    with pytest.raises(ValueError):
        gen_poisson(-1.0)


@given(rate=st.floats(0, 2000), seed=st.integers(0, 2**64 - 1))
@settings(max_examples=50, deadline=None)
def test_poisson_is_bernoulli_with_bin_probability(rate, seed):
    q = Poisson(rate).q
    assert np.array_equal(gen_poisson(rate, 1e-3, 256, seed), gen_bernoulli(q, 256, seed))


@given(seed=st.integers(0, 2**64 - 1), p=st.floats(0, 1))
@settings(max_examples=30, deadline=None)
def test_generation_is_deterministic(seed, p):
    for spec in (Bernoulli(p), Markov(p, 1 - p, 0.5), Poisson(1000 * p)):
        assert np.array_equal(generate(spec, 128, seed), generate(spec, 128, seed))


def test_dataset_balance_and_determinism():
    c0, c1 = Bernoulli(0.1), Bernoulli(0.9)
    a = make_dataset(c0, c1, 100, 256, seed=11)
    b = make_dataset(c0, c1, 100, 256, seed=11)
    assert len(a) == 200 and int(a.labels.sum()) == 100
    assert np.array_equal(a.sequences, b.sequences) and np.array_equal(a.labels, b.labels)
    assert a.sequences[a.labels == 0].mean() < a.sequences[a.labels == 1].mean()
    other = make_dataset(c0, c1, 100, 256, seed=12)
    assert not np.array_equal(a.sequences, other.sequences)


def test_dataset_iteration_yields_int_labels():
    ds = make_dataset(*DEFAULT_PAIRS["poisson"], 3, 64, seed=0)
    items = ds.items
    assert len(items) == 6
    assert all(isinstance(lab, int) for _, lab in items)
    assert ds.length == 64


@pytest.mark.parametrize("spec", [Bernoulli(0.3), Markov(0.1, 0.2), Markov(0, 0, 1.0), Poisson(50.0, 2e-3)])
def test_spec_dict_round_trip(spec):
    assert spec_from_dict(spec_to_dict(spec)) == spec


def test_spec_from_dict_unknown_kind():
    with pytest.raises(ValueError):
        spec_from_dict({"kind": "gaussian"})
