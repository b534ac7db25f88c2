import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aqpe.baseline import (BaselineConfig, BinCount, PhaseSampling, _invert,
                           baseline_variance, count_outcomes, estimate_phase)
from aqpe.evaluate import holevo_from_deltas, holevo_stderr
from aqpe.harness.runner import binomial_chi_square, binomial_counts
from aqpe.rng import RngStream
from aqpe.sim import DecoherenceModel, NoiseChannel, QubitPrep


def test_trivial_counts():
    cfg = BaselineConfig(40, 1)
    assert count_outcomes(0.0, cfg, RngStream(0)).n_zero == 40
    assert count_outcomes(math.pi, cfg, RngStream(0)).n_zero == 0


def test_estimate_examples():
    assert estimate_phase(BinCount(10, 10)) == 0.0
    assert estimate_phase(BinCount(5, 10)) == pytest.approx(math.pi / 2)
    assert estimate_phase(BinCount(0, 10)) == pytest.approx(math.pi)
    assert estimate_phase(BinCount(0, 10), prep=QubitPrep.MINUS) == 0.0
    assert estimate_phase(BinCount(5, 10), theta=1.0) == pytest.approx(1.0 + math.pi / 2)


def test_bincount_validation():
    with pytest.raises(ValueError):
        BinCount(11, 10)
    with pytest.raises(ValueError):
        BinCount(0, 0)


@given(st.floats(0.0, math.pi), st.sampled_from(list(QubitPrep)))
def test_estimator_exact_at_expected_count(delta, prep):
    n = 1000
    p = 0.5 * (1 + (1 if prep is QubitPrep.PLUS else -1) * math.cos(delta))
    # a fractional count: the inversion itself must be lossless
    est = float(_invert(np.asarray(n * p), n, 0.0, prep))
    assert est == pytest.approx(delta, abs=1e-6)


def test_binomial_moments():
    counts = binomial_counts(0.3, 50, 4000, RngStream(1))
    mean_se = math.sqrt(50 * 0.3 * 0.7 / counts.size)
    assert abs(counts.mean() - 15.0) <= 3 * mean_se
    assert counts.var(ddof=1) == pytest.approx(50 * 0.3 * 0.7, rel=0.1)


def test_chi_square_detects_wrong_law():
    counts = binomial_counts(0.5, 50, 5000, RngStream(2))
    assert binomial_chi_square(counts, 50, 0.5)[2] > 1e-3
    assert binomial_chi_square(counts, 50, 0.45)[2] < 1e-6


def test_noise_is_redrawn_per_qubit():
    # a constant offset of pi flips every outcome; RTN with eta=0.5 flips about half
    cfg = BaselineConfig(2000, 1, channel=NoiseChannel.rtn(math.pi, 0.5))
    c = count_outcomes(0.0, cfg, RngStream(3)).n_zero
    assert abs(c - 1000) < 4 * math.sqrt(500)


def test_variance_close_to_sql_at_moderate_n():
    res = baseline_variance(BaselineConfig(50, 20000), RngStream(4))
    assert 1.0 < res.holevo * 50 < 1.3


def test_full_circle_sampling_is_much_worse():
    folded = baseline_variance(BaselineConfig(20, 5000), RngStream(5))
    full = baseline_variance(BaselineConfig(20, 5000, sampling=PhaseSampling.FULL), RngStream(5))
    assert full.holevo > 20 * folded.holevo


@pytest.mark.parametrize("nu", [0.6, 0.8])
def test_visibility_never_beats_adjusted_sql(nu):
    n = 30
    res = baseline_variance(BaselineConfig(n, 20000, deco=DecoherenceModel(nu)), RngStream(6))
    assert res.holevo >= 1.0 / (nu * nu * n) - 3 * res.stderr


def test_noisy_path_matches_per_call_counting():
    # the batched noisy sampler and count_outcomes share the same law
    cfg = BaselineConfig(30, 3000, channel=NoiseChannel.gaussian(0.3))
    batched = baseline_variance(cfg, RngStream(7)).holevo
    rng = RngStream(8)
    phis = rng.uniform(0, math.pi, 3000)
    est = [estimate_phase(count_outcomes(p, cfg, rng)) for p in phis]
    _, v = holevo_from_deltas(phis - np.array(est))
    se = holevo_stderr(phis - np.array(est))
    assert abs(v - batched) <= 4 * math.hypot(se, se)


def _quadrature_variance(n, grid=20000):
    """Infinite-K Holevo variance of the folded protocol by quadrature over delta."""
    from scipy.stats import binom
    d = (np.arange(grid) + 0.5) * math.pi / grid
    k = np.arange(n + 1)
    pmf = binom.pmf(k[None, :], n, 0.5 * (1 + np.cos(d))[:, None])
    est = np.arccos(np.clip(2 * k / n - 1, -1, 1))
    z = (pmf * np.exp(1j * (d[:, None] - est[None, :]))).sum(axis=1).mean()
    return abs(z) ** -2 - 1


@pytest.mark.parametrize("n", [5, 20, 100])
def test_variance_matches_quadrature_oracle(n):
    res = baseline_variance(BaselineConfig(n, 200_000), RngStream(n))
    assert abs(res.holevo - _quadrature_variance(n)) <= 3 * res.stderr
