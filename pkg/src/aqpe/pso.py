"""Particle Swarm Optimization over feedback policies.

Velocities follow ``v + alpha*Ra*(pbest - x) + beta*Rb*(gbest - x)`` with
scalar ``Ra, Rb`` per particle and generation, clamped to a limit that decays
linearly over the run.  Positions move by ``w * v`` and are canonicalised to
``[0, 2*pi)``.  The swarm is fully connected: every particle sees ``gbest``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .de import CONVERGENCE_THRESHOLD, TrainingTrace, default_population, score_members
from .evaluate import EvalConfig
from .rng import RngStream
from .sim import TWO_PI, wrap

_INIT, _VARY = 0, 1


@dataclass(frozen=True)
class PsoParams:
    alpha: float = 0.8
    beta: float = 0.8
    w: float = 0.8
    v_max0: float = 0.2
    population: int | None = None
    max_generations: int = 100
    convergence_threshold: float = CONVERGENCE_THRESHOLD
    resample: bool = True
    vmax_floor: float = 0.01

    def __post_init__(self):
        if min(self.alpha, self.beta, self.w) < 0.0:
            raise ValueError("alpha, beta and w must be >= 0")
        if not self.v_max0 > 0.0:
            raise ValueError("v_max0 must be > 0")
        if self.population is not None and self.population < 2:
            raise ValueError("a swarm needs at least 2 particles")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")

    def population_for(self, n: int) -> int:
        return default_population(n) if self.population is None else self.population


@dataclass
class PsoSwarm:
    positions: np.ndarray
    velocities: np.ndarray
    pbest_pos: np.ndarray
    pbest_fit: np.ndarray
    gbest_pos: np.ndarray
    gbest_fit: float
    generation: int = 0
    last_fitness: np.ndarray | None = None


def vmax_schedule(v_max0: float, generation: int, max_generations: int,
                  floor: float = 0.01) -> float:
    """Velocity clamp ``v_max0 * (1 - g/(G+1))``, never below ``floor * v_max0``."""
    if not 0 <= generation <= max_generations:
        raise ValueError("generation must lie in [0, max_generations]")
    return max(v_max0 * (1.0 - generation / (max_generations + 1.0)), floor * v_max0)


def pso_init(params: PsoParams, n: int, cfg: EvalConfig, rng: RngStream) -> PsoSwarm:
    p = params.population_for(n)
    init = rng.child(_INIT)
    x = wrap(init.uniform(0.0, TWO_PI, (p, n)))
    v = init.uniform(-params.v_max0, params.v_max0, (p, n))
    fit = score_members(x, cfg, rng, 0, params.resample)
    best = int(np.argmin(fit))
    return PsoSwarm(x, v, x.copy(), fit.copy(), x[best].copy(), float(fit[best]), 0)


def pso_velocity_update(swarm: PsoSwarm, i: int, params: PsoParams, rng: RngStream | None = None,
                        vmax: float | None = None, ra: float | None = None,
                        rb: float | None = None) -> np.ndarray:
    """New velocity row for particle ``i``, clamped to ``[-vmax, vmax]``.

    ``ra``/``rb`` are drawn from ``rng`` unless given explicitly.
    """
    if ra is None:
        ra = float(rng.random())
    if rb is None:
        rb = float(rng.random())
    if vmax is None:
        vmax = params.v_max0
    x = swarm.positions[i]
    v = (swarm.velocities[i]
         + params.alpha * ra * (swarm.pbest_pos[i] - x)
         + params.beta * rb * (swarm.gbest_pos - x))
    return np.clip(v, -vmax, vmax)


def pso_position_update(position, velocity, w: float) -> np.ndarray:
    return wrap(np.asarray(position, dtype=float) + w * np.asarray(velocity, dtype=float))


def _update_bests(swarm: PsoSwarm, fit: np.ndarray) -> None:
    improved = fit < swarm.pbest_fit
    swarm.pbest_pos[improved] = swarm.positions[improved]
    swarm.pbest_fit[improved] = fit[improved]
    # index-ordered fold; ties keep the earlier holder
    for i in np.flatnonzero(improved):
        if fit[i] < swarm.gbest_fit:
            swarm.gbest_fit = float(fit[i])
            swarm.gbest_pos = swarm.positions[i].copy()


def pso_step(swarm: PsoSwarm, params: PsoParams, cfg: EvalConfig, rng: RngStream) -> PsoSwarm:
    """Move every particle once, evaluate the new positions and refresh the bests."""
    g = swarm.generation + 1
    vmax = vmax_schedule(params.v_max0, g, max(params.max_generations, g), params.vmax_floor)
    vary = rng.child(_VARY, g)
    r = vary.random((swarm.positions.shape[0], 2))
    v = np.array([pso_velocity_update(swarm, i, params, vmax=vmax, ra=r[i, 0], rb=r[i, 1])
                  for i in range(swarm.positions.shape[0])])
    swarm.velocities = v
    swarm.positions = pso_position_update(swarm.positions, v, params.w)
    swarm.generation = g
    fit = score_members(swarm.positions, cfg, rng, g, params.resample)
    _update_bests(swarm, fit)
    swarm.last_fitness = fit
    return swarm


def pso_train(params: PsoParams, cfg: EvalConfig, rng: RngStream):
    """Fly the swarm until it converges or the generation budget runs out.

    Returns the entry-wise mean position and a :class:`TrainingTrace` whose
    ``best_fitness`` column is ``gbest_fit``.
    """
    swarm = pso_init(params, cfg.n_qubits, cfg, rng)
    trace = TrainingTrace()
    fit = swarm.pbest_fit.copy()
    L = trace.record(0, fit, swarm.positions)
    trace.best_fitness[-1] = swarm.gbest_fit
    while swarm.generation < params.max_generations and L > params.convergence_threshold:
        pso_step(swarm, params, cfg, rng)
        L = trace.record(swarm.generation, swarm.last_fitness, swarm.positions)
        trace.best_fitness[-1] = swarm.gbest_fit
    trace.best_member = swarm.gbest_pos.copy()
    return swarm.positions.mean(axis=0), trace
