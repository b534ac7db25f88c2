import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from aqpe.rng import RngStream
from aqpe.sim import (TWO_PI, DecoherenceModel, NoiseChannel, Phase, QubitPrep,
                      corrupt_control, fisher_information, measurement_probability,
                      run_episode, sample_outcome, signed_residue, simulate_estimates,
                      sql_bound, update_control, wrap)

angles = st.floats(-50.0, 50.0, allow_nan=False)
unit = st.floats(0.0, 1.0)


# ---------------------------------------------------------------- Phase

@given(angles)
def test_phase_canonical_range(x):
    v = Phase(x).value
    assert 0.0 <= v < TWO_PI


@given(angles, st.integers(-5, 5))
def test_phase_equality_modulo_two_pi(x, k):
    assert Phase(x) == Phase(x + TWO_PI * k)


@given(angles, angles)
def test_phase_arithmetic_recanonicalises(a, b):
    s = Phase(a) + Phase(b)
    d = Phase(a) - b
    assert 0.0 <= s.value < TWO_PI and 0.0 <= d.value < TWO_PI
    assert s == a + b
    assert d == a - b


def test_wrap_tiny_negative_is_zero():
    assert wrap(-1e-18) == 0.0
    assert np.all(wrap(np.array([-1e-18, TWO_PI])) == 0.0)


@given(angles)
def test_signed_residue_range(x):
    r = signed_residue(x)
    assert -math.pi < r <= math.pi + 1e-12
    assert Phase(r) == Phase(x)


# ---------------------------------------------------------------- probabilities

def test_probability_examples():
    assert measurement_probability(QubitPrep.PLUS, 0.0, 1.0) == 1.0
    assert measurement_probability(QubitPrep.MINUS, 0.0, 1.0) == 0.0
    assert measurement_probability(QubitPrep.PLUS, math.pi / 2, 1.0) == pytest.approx(0.5)
    assert measurement_probability(QubitPrep.PLUS, 0.0, 0.0) == 0.5
    assert measurement_probability(QubitPrep.PLUS, 0.0, 0.6) == pytest.approx(0.8)


@given(st.sampled_from(list(QubitPrep)), angles, unit)
def test_probability_bounds_and_complement(prep, d, nu):
    p = measurement_probability(prep, d, nu)
    q = measurement_probability(1 - prep, d, nu)
    assert 0.0 <= p <= 1.0
    assert p + q == pytest.approx(1.0)
    assert abs(p - 0.5) <= nu / 2 + 1e-15


def test_probability_rejects_bad_visibility():
    with pytest.raises(ValueError):
        measurement_probability(QubitPrep.PLUS, 0.0, 1.2)
    with pytest.raises(ValueError):
        DecoherenceModel(-0.1)


def test_sample_outcome_frequency():
    rng = RngStream(1)
    draws = [sample_outcome(0.3, rng) for _ in range(20000)]
    frac0 = 1.0 - np.mean(draws)
    assert abs(frac0 - 0.3) < 4 * math.sqrt(0.3 * 0.7 / 20000)


# ---------------------------------------------------------------- noise

def test_noise_channel_validation():
    with pytest.raises(ValueError):
        NoiseChannel.gaussian(-0.1)
    with pytest.raises(ValueError):
        NoiseChannel.rtn(0.2, 1.5)
    assert NoiseChannel.none().sample_offsets(RngStream(0), 5) is None


def test_gaussian_offsets_match_normal_law():
    off = NoiseChannel.gaussian(0.4).sample_offsets(RngStream(2), 20000)
    assert stats.kstest(off / 0.4, "norm").pvalue > 1e-3


def test_rtn_offsets_frequency():
    off = NoiseChannel.rtn(0.8, 0.4).sample_offsets(RngStream(3), 40000)
    assert set(np.unique(off)) <= {0.0, 0.8}
    frac = np.mean(off == 0.8)
    assert abs(frac - 0.4) < 4 * math.sqrt(0.24 / 40000)


def test_corrupt_control_none_and_rtn_edges():
    assert corrupt_control(1.0, NoiseChannel.none(), RngStream(0)) == 1.0
    assert corrupt_control(1.0, NoiseChannel.rtn(0.5, 1.0), RngStream(0)) == pytest.approx(1.5)
    assert corrupt_control(1.0, NoiseChannel.rtn(0.5, 0.0), RngStream(0)) == pytest.approx(1.0)


# ---------------------------------------------------------------- update rule and episodes

@given(angles, st.integers(0, 1), angles)
def test_update_rule(theta, z, x):
    got = update_control(theta, z, x)
    want = theta + x if z == 0 else theta - x
    assert Phase(got) == Phase(want)


def _straight_line(phi, policy, u, preps, offsets, nu):
    """Scalar re-implementation of one episode from explicit random numbers."""
    theta = 0.0
    bits, controls = [], []
    for m, x in enumerate(policy):
        physical = theta + (0.0 if offsets is None else offsets[m])
        p0 = 0.5 * (1.0 + (1 if preps[m] == 0 else -1) * nu * math.cos(phi - physical))
        z = 0 if u[m] < p0 else 1
        decoded = z ^ preps[m]
        theta = (theta + (x if decoded == 0 else -x)) % TWO_PI
        bits.append(z)
        controls.append(theta)
    return bits, controls, theta


@pytest.mark.parametrize("channel", [NoiseChannel.none(), NoiseChannel.gaussian(0.3),
                                     NoiseChannel.rtn(0.4, 0.4)])
def test_episode_matches_straight_line_resimulation(channel):
    policy = np.array([2.1, 0.4, 1.3, 0.9, 0.2, 3.0])
    nu, phi = 0.85, 1.234
    for seed in range(20):
        rec = run_episode(phi, policy, channel, DecoherenceModel(nu), RngStream(seed))
        # replay the exact draw order: preps, offsets, uniforms
        rng = RngStream(seed)
        preps = rng.integers(0, 2, size=(policy.size, 1))[:, 0]
        offs = channel.sample_offsets(rng, (policy.size, 1))
        offs = None if offs is None else offs[:, 0]
        u = rng.random((policy.size, 1))[:, 0]
        bits, controls, theta = _straight_line(phi, policy, u, preps, offs, nu)
        assert list(rec.outcomes) == bits
        assert list(rec.preps) == list(preps)
        np.testing.assert_allclose(rec.controls, controls, atol=1e-12)
        assert rec.final_estimate == pytest.approx(theta, abs=1e-12)
        assert rec.final_estimate == rec.controls[-1]


def test_episode_record_shapes_and_validation():
    rec = run_episode(0.3, [0.5, 0.5, 0.5], rng=RngStream(0))
    assert len(rec.outcomes) == len(rec.controls) == 3
    with pytest.raises(ValueError):
        run_episode(0.3, [])


def test_fixed_plus_prep_at_zero_difference_always_reads_zero():
    phi = np.zeros(100)
    _, (z, p, _) = simulate_estimates(phi, [0.0, 0.0], NoiseChannel.none(), 1.0,
                                      RngStream(0), prep=QubitPrep.PLUS, return_trace=True)
    assert np.all(z == 0) and np.all(p == 0)


# ---------------------------------------------------------------- Fisher information and SQL

@pytest.mark.parametrize("nu", [0.6, 0.8, 0.9, 1.0])
def test_fisher_maximum_at_quarter_turn(nu):
    assert abs(fisher_information(math.pi / 2, nu) - nu * nu) <= 1e-12
    grid = np.linspace(0.0, TWO_PI, 20001)
    assert np.max(fisher_information(grid, nu)) <= nu * nu + 1e-12


def test_fisher_quadrature_oracle():
    # direct definition: sum over outcomes of (dp/dphi)^2 / p
    nu = 0.7
    for d in np.linspace(0.1, 3.0, 12):
        p = 0.5 * (1 + nu * math.cos(d))
        dp = -0.5 * nu * math.sin(d)
        direct = dp * dp / p + dp * dp / (1 - p)
        assert fisher_information(d, nu) == pytest.approx(direct, rel=1e-12)


def test_fisher_singular_point_is_zero():
    assert fisher_information(0.0, 1.0) == 0.0
    assert fisher_information(math.pi, 1.0) == 0.0
    assert fisher_information(1.0, 0.0) == 0.0


def test_sql_bound():
    assert sql_bound(100, 1.0) == 0.1
    assert sql_bound(25, 0.5) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        sql_bound(0)
    with pytest.raises(ValueError):
        sql_bound(10, 0.0)
