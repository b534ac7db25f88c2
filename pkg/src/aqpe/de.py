"""Differential Evolution over feedback policies.

Five-vector mutation ``x_r1 + F*(x_r2 + x_r3 - x_r4 - x_r5)``, binomial
crossover with one forced mutant entry, and greedy selection that lets the
trial win ties.  Old members keep their cached fitness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .evaluate import EvalConfig, convergence_metric, evaluate_population
from .rng import RngStream
from .sim import TWO_PI, wrap

CONVERGENCE_THRESHOLD = 0.1256

# stream keys under the training stream
_INIT, _VARY, _EVAL = 0, 1, 2


def default_population(n: int) -> int:
    """Population size ``20 + 2*int(N/10) - 1`` used for the scaling runs."""
    return 20 + 2 * (n // 10) - 1


@dataclass(frozen=True)
class DeParams:
    F: float = 0.7
    C: float = 0.8
    population: int | None = None
    max_generations: int = 100
    convergence_threshold: float = CONVERGENCE_THRESHOLD
    resample: bool = True

    def __post_init__(self):
        if not 0.0 <= self.F <= 1.0:
            raise ValueError(f"F must lie in [0, 1], got {self.F}")
        if not 0.0 <= self.C <= 1.0:
            raise ValueError(f"C must lie in [0, 1], got {self.C}")
        if self.population is not None and self.population < 6:
            raise ValueError("DE needs a population of at least 6")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")

    def population_for(self, n: int) -> int:
        return default_population(n) if self.population is None else self.population


@dataclass
class DePopulation:
    members: np.ndarray
    fitness: np.ndarray
    generation: int = 0

    @property
    def best(self) -> int:
        return int(np.argmin(self.fitness))


@dataclass
class TrainingTrace:
    """Per-generation record; entry 0 describes the initial population."""

    generation: list[int] = field(default_factory=list)
    best_fitness: list[float] = field(default_factory=list)
    mean_fitness: list[float] = field(default_factory=list)
    convergence: list[float] = field(default_factory=list)
    best_member: np.ndarray | None = None

    def record(self, generation: int, fitness, members) -> float:
        fit = np.asarray(fitness, dtype=float)
        L = convergence_metric(members)
        self.generation.append(generation)
        self.best_fitness.append(float(fit.min()))
        finite = fit[np.isfinite(fit)]
        self.mean_fitness.append(float(finite.mean()) if finite.size else math.inf)
        self.convergence.append(L)
        return L

    def __len__(self) -> int:
        return len(self.generation)

    @property
    def terminal_convergence(self) -> float:
        return self.convergence[-1]

    @property
    def generations_used(self) -> int:
        return self.generation[-1]


def score_members(members, cfg: EvalConfig, rng: RngStream, generation: int,
                  resample: bool = True) -> np.ndarray:
    """Fitness of a batch of candidates during training.

    With ``resample`` the phases are redrawn for every candidate and generation;
    otherwise the whole run is scored on one fixed set of phases.
    """
    if resample:
        return evaluate_population(members, cfg, rng.child(_EVAL, generation))
    return evaluate_population(members, cfg, rng.child(_EVAL, 0), common=True)


def de_init(params: DeParams, n: int, cfg: EvalConfig, rng: RngStream) -> DePopulation:
    """Uniform random population on ``[0, 2*pi)`` with fitness evaluated once."""
    p = params.population_for(n)
    if p < 6:
        raise ValueError("DE needs a population of at least 6")
    members = wrap(rng.child(_INIT).uniform(0.0, TWO_PI, (p, n)))
    fitness = score_members(members, cfg, rng, 0, params.resample)
    return DePopulation(members, fitness, 0)


def pick_partners(p: int, i: int, rng: RngStream) -> np.ndarray:
    """Five distinct member indices, all different from ``i``."""
    others = np.delete(np.arange(p), i)
    return rng.generator.choice(others, size=5, replace=False)


def de_mutate(members, i: int, F: float, rng: RngStream | None = None,
              partners=None) -> np.ndarray:
    """Mutant vector for member ``i``, canonicalised to ``[0, 2*pi)``."""
    x = np.asarray(members, dtype=float)
    if partners is None:
        partners = pick_partners(x.shape[0], i, rng)
    r1, r2, r3, r4, r5 = (x[k] for k in partners)
    return wrap(r1 + F * (r2 + r3 - r4 - r5))


def de_crossover(target, mutant, C: float, rng: RngStream) -> np.ndarray:
    """Binomial crossover: mutant entry where ``R1 <= C`` or at the forced index ``R2``."""
    target = np.asarray(target, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if target.shape != mutant.shape:
        raise ValueError("target and mutant must have equal length")
    n = target.size
    r1 = rng.random(n)
    r2 = int(rng.integers(0, n))
    take = r1 <= C
    take[r2] = True
    return np.where(take, mutant, target)


def de_select(old, old_fitness: float, trial, trial_fitness: float):
    """Keep ``old`` only if it is strictly better than ``trial``."""
    if old_fitness < trial_fitness:
        return old, old_fitness
    return trial, trial_fitness


def de_generation(pop: DePopulation, params: DeParams, cfg: EvalConfig,
                  rng: RngStream) -> DePopulation:
    """One generation of mutation, crossover and selection over every member.

    All variation draws happen before any evaluation, and trial ``i`` of
    generation ``g`` is scored on ``rng.child(_EVAL, g, i)``, so the result does
    not depend on evaluation order (see :func:`score_members`).
    """
    g = pop.generation + 1
    vary = rng.child(_VARY, g)
    p = pop.members.shape[0]
    trials = np.empty_like(pop.members)
    for i in range(p):
        mutant = de_mutate(pop.members, i, params.F, vary)
        trials[i] = de_crossover(pop.members[i], mutant, params.C, vary)
    trial_fit = score_members(trials, cfg, rng, g, params.resample)
    members = pop.members.copy()
    fitness = pop.fitness.copy()
    for i in range(p):
        members[i], fitness[i] = de_select(pop.members[i], pop.fitness[i],
                                           trials[i], trial_fit[i])
    return DePopulation(members, fitness, g)


def de_train(params: DeParams, cfg: EvalConfig, rng: RngStream):
    """Evolve a population until it converges or the generation budget runs out.

    Returns
    -------
    policy : np.ndarray
        Entry-wise mean of the final population.
    trace : TrainingTrace
    """
    pop = de_init(params, cfg.n_qubits, cfg, rng)
    trace = TrainingTrace()
    L = trace.record(0, pop.fitness, pop.members)
    while pop.generation < params.max_generations and L > params.convergence_threshold:
        pop = de_generation(pop, params, cfg, rng)
        L = trace.record(pop.generation, pop.fitness, pop.members)
    trace.best_member = pop.members[pop.best].copy()
    return pop.members.mean(axis=0), trace
