import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aqpe.evaluate import EvalConfig
from aqpe.pso import (PsoParams, PsoSwarm, pso_init, pso_position_update, pso_step, pso_train,
                      pso_velocity_update, vmax_schedule)
from aqpe.rng import RngStream
from aqpe.sim import TWO_PI

CFG = EvalConfig(4, 60, 2)


@given(st.floats(0.01, 2.0), st.integers(1, 200))
def test_vmax_schedule_positive_and_non_increasing(v0, g_max):
    vals = [vmax_schedule(v0, g, g_max) for g in range(g_max + 1)]
    assert all(v > 0 for v in vals)
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[0] == v0
    assert min(vals) >= 0.01 * v0


def test_vmax_schedule_validation():
    with pytest.raises(ValueError):
        vmax_schedule(0.2, 11, 10)


def _swarm():
    x = np.array([[1.0, 1.0], [2.0, 2.0]])
    return PsoSwarm(x, np.zeros_like(x), x + 0.5, np.array([1.0, 2.0]),
                    np.array([3.0, 3.0]), 1.0)


def test_velocity_update_formula_and_clamp():
    sw = _swarm()
    params = PsoParams(alpha=0.5, beta=0.25)
    v = pso_velocity_update(sw, 0, params, vmax=10.0, ra=0.4, rb=0.8)
    np.testing.assert_allclose(v, 0.5 * 0.4 * 0.5 + 0.25 * 0.8 * 2.0)
    v = pso_velocity_update(sw, 0, params, vmax=0.05, ra=1.0, rb=1.0)
    np.testing.assert_allclose(v, 0.05)


def test_zero_coefficients_keep_velocity():
    sw = _swarm()
    sw.velocities[:] = 0.03
    v = pso_velocity_update(sw, 1, PsoParams(alpha=0.0, beta=0.0), vmax=1.0, ra=0.5, rb=0.5)
    np.testing.assert_allclose(v, 0.03)


def test_position_update_wraps():
    p = pso_position_update([6.2, 0.05], [0.5, -0.5], 0.8)
    np.testing.assert_allclose(p, [(6.2 + 0.4) % TWO_PI, (0.05 - 0.4) % TWO_PI])


def test_init_ranges():
    sw = pso_init(PsoParams(population=10), 4, CFG, RngStream(0))
    assert np.all((sw.positions >= 0) & (sw.positions < TWO_PI))
    assert np.all(np.abs(sw.velocities) <= 0.2)
    assert sw.gbest_fit == sw.pbest_fit.min()


def test_bests_monotone_and_velocities_clamped():
    params = PsoParams(population=10, max_generations=6)
    sw = pso_init(params, 4, CFG, RngStream(2))
    last_g, last_p = sw.gbest_fit, sw.pbest_fit.copy()
    for g in range(1, 7):
        pso_step(sw, params, CFG, RngStream(2))
        assert sw.gbest_fit <= last_g
        assert np.all(sw.pbest_fit <= last_p)
        assert np.all(np.abs(sw.velocities) <= vmax_schedule(0.2, g, 6) + 1e-15)
        assert sw.gbest_fit == sw.pbest_fit.min()
        last_g, last_p = sw.gbest_fit, sw.pbest_fit.copy()


def test_train_trace_and_reproducibility():
    params = PsoParams(population=8, max_generations=4)
    a, ta = pso_train(params, CFG, RngStream(5))
    b, tb = pso_train(params, CFG, RngStream(5))
    np.testing.assert_array_equal(a, b)
    assert len(ta) == ta.generations_used + 1
    assert np.all(np.diff(ta.best_fitness) <= 0)


def test_params_validation():
    with pytest.raises(ValueError):
        PsoParams(alpha=-1.0)
    with pytest.raises(ValueError):
        PsoParams(v_max0=0.0)
