import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_dot
from spikebench.network import WIDTHS, run_layer
from spikebench.neuron import LifParams, LifState, SpikeRaster, decode, encode, input_current, lif_step


def test_decay_from_time_constant():
    p = LifParams(tau_m=10.0, dt=1.0)
    assert p.decay == pytest.approx(math.exp(-0.1))
    assert LifParams(tau_m=10.0, decay=0.3).decay == 0.3


@pytest.mark.parametrize("kw", [dict(tau_m=0), dict(dt=-1), dict(threshold=0.0, reset=0.0), dict(decay=1.5)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        LifParams(**kw)


def test_rest_is_a_fixed_point():
    state, s = lif_step(LifState(), 0.0, LifParams())
    assert state.u == 0.0 and s == 0


def test_subthreshold_drive_never_spikes():
    p = LifParams(threshold=1.0, decay=0.9)
    state, prev = LifState(), 0.0
    for t in range(1, 200):
        state, s = lif_step(state, 0.5, p)
        assert s == 0
        assert prev < state.u < 0.5
        assert state.u == pytest.approx(0.5 * (1 - 0.9**t), abs=1e-12)
        prev = state.u


def test_one_step_crossing_resets():
    p = LifParams(threshold=1.0, decay=0.5)
    state, s = lif_step(LifState(), 2.0, p)
    assert s == 1 and state.u == p.reset and state.last_spike_time == 0.0
    assert state.t == 1.0


def test_non_finite_input_raises():
    with pytest.raises(FloatingPointError):
        lif_step(LifState(), math.inf, LifParams())


@given(u0=st.floats(-1, 0.9), z=st.floats(-2, 0.99), steps=st.integers(1, 60), d=st.floats(0.01, 0.99))
@settings(max_examples=100, deadline=None)
def test_subthreshold_closed_form(u0, z, steps, d):
    p = LifParams(threshold=1.0, decay=d)
    state = LifState(u=u0)
    for _ in range(steps):
        state, s = lif_step(state, z, p)
        assert s == 0
    assert state.u == pytest.approx(d**steps * u0 + (1 - d**steps) * z, abs=1e-10)


@given(seed=st.integers(0, 2**32 - 1), d=st.floats(0, 1))
@settings(max_examples=50, deadline=None)
def test_layer_spikes_are_threshold_crossings(seed, d):
    rng = np.random.default_rng(seed)
    p = LifParams(threshold=0.3, reset=-0.1, decay=d)
    z = rng.normal(0.2, 0.5, size=(6, 20))
    pre, spikes = run_layer(z, p)
    assert np.array_equal(spikes, (pre >= p.threshold).astype(np.uint8))
    # the potential carried out of a spiking step is exactly the reset value
    u = np.full(6, p.reset)
    for t in range(20):
        v = d * u + (1 - d) * z[:, t]
        assert np.array_equal(v, pre[:, t])
        u = np.where(spikes[:, t] == 1, p.reset, v)
        assert np.all(u[spikes[:, t] == 1] == p.reset)


def test_run_layer_matches_scalar_steps():
    p = LifParams(threshold=0.25, decay=0.4)
    z = np.random.default_rng(1).uniform(-0.2, 0.8, size=(3, 15))
    _, spikes = run_layer(z, p)
    for i in range(3):
        state = LifState()
        for t in range(15):
            state, s = lif_step(state, z[i, t], p)
            assert s == spikes[i, t]


def test_input_current():
    assert input_current(np.zeros(3), [1, 0, 1]) == 0.0
    assert input_current([1, 1], [1, 0], 0.5) == 1.5
    rng = np.random.default_rng(2)
    w, x = rng.normal(size=128), rng.integers(0, 2, 128)
    assert input_current(w, x, 0.3) == pytest.approx(naive_dot(w, x, 0.3), abs=1e-12)
    with pytest.raises(ValueError):
        input_current([1, 2], [1, 2, 3])


def test_encode_shapes_and_zeros():
    r = encode(np.zeros(1024, dtype=np.uint8), 128)
    assert r.spikes.shape == (128, 8) and not r.spikes.any()
    assert encode(np.ones(10, dtype=np.uint8), 4).spikes.shape == (4, 3)
    with pytest.raises(ValueError):
        encode([1, 0], 0)


def test_decode_is_time_major():
    r = SpikeRaster.from_spikes([[1, 0], [0, 1]])
    assert decode(r, 4).tolist() == [1, 0, 0, 1]
    assert not decode(SpikeRaster.from_spikes(np.zeros((3, 3))), 9).any()
    with pytest.raises(ValueError):
        decode(r, 5)


@pytest.mark.parametrize("n", WIDTHS)
def test_round_trip_all_widths(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        seq = rng.integers(0, 2, 1024).astype(np.uint8)
        assert np.array_equal(decode(encode(seq, n), 1024), seq)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=300), st.integers(1, 64))
@settings(max_examples=100, deadline=None)
def test_round_trip_any_length(seq, n):
    seq = np.array(seq, dtype=np.uint8)
    assert np.array_equal(decode(encode(seq, n), len(seq)), seq)
