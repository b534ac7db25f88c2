"""Scoring feedback policies by Holevo variance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream
from .sim import TWO_PI, DecoherenceModel, NoiseChannel, simulate_estimates, wrap

# sharpness at or below this is reported as exactly zero (V_H = inf)
SHARPNESS_FLOOR = 1e-12


def make_policy(increments) -> np.ndarray:
    """Validate a feedback policy and canonicalise its entries to ``[0, 2*pi)``."""
    x = np.asarray(increments, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("a policy is a non-empty 1-d sequence of increments")
    if not np.all(np.isfinite(x)):
        raise ValueError("policy increments must be finite")
    return wrap(x.copy())


def default_instances(n: int) -> int:
    return 10 * n * n


@dataclass(frozen=True)
class EvalConfig:
    """How a policy is scored.

    ``k_instances`` defaults to ``10 * N**2`` training phases and each score is
    the mean over ``m_repeats`` independent batches.
    """

    n_qubits: int
    k_instances: int | None = None
    m_repeats: int = 5
    channel: NoiseChannel = field(default_factory=NoiseChannel.none)
    deco: DecoherenceModel = field(default_factory=DecoherenceModel)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.k_instances is None:
            object.__setattr__(self, "k_instances", default_instances(self.n_qubits))
        if self.k_instances < 1 or self.m_repeats < 1:
            raise ValueError("k_instances and m_repeats must be >= 1")

    @property
    def nu(self) -> float:
        return self.deco.nu


@dataclass
class EvalResult:
    sharpness: float
    holevo: float
    per_repeat: list[float]
    stderr: float = math.nan

    @property
    def log_holevo(self) -> float:
        if self.holevo == 0.0:
            return -math.inf
        return math.log(self.holevo)


def holevo_from_deltas(deltas) -> tuple[float, float]:
    """Sharpness and Holevo variance of a sample of estimation errors.

    ``S = |mean(exp(i*delta))|`` and ``V_H = S**-2 - 1``; a vanishing sharpness
    gives ``V_H = inf`` rather than raising.
    """
    d = np.asarray(deltas, dtype=float)
    if d.size == 0:
        raise ValueError("need at least one phase difference")
    s = float(np.hypot(np.cos(d).mean(), np.sin(d).mean()))
    if s <= SHARPNESS_FLOOR:
        return 0.0, math.inf
    s = min(s, 1.0)
    return s, s ** -2 - 1.0


def holevo_stderr(deltas) -> float:
    """Delta-method standard error of the sample Holevo variance."""
    d = np.asarray(deltas, dtype=float)
    c, s = np.cos(d), np.sin(d)
    a, b = c.mean(), s.mean()
    r2 = a * a + b * b
    if r2 <= SHARPNESS_FLOOR ** 2 or d.size < 2:
        return math.inf
    cov = np.cov(np.vstack([c, s])) / d.size
    g = np.array([a, b]) * (-2.0 / r2 ** 2)
    return float(math.sqrt(max(g @ cov @ g, 0.0)))


def _sharpness_of(holevo: float) -> float:
    return 0.0 if math.isinf(holevo) else 1.0 / math.sqrt(1.0 + holevo)


def evaluate_policy(policy, cfg: EvalConfig, rng: RngStream) -> EvalResult:
    """Monte-Carlo Holevo variance of ``policy``.

    ``M x K`` phases are drawn uniformly on ``[0, 2*pi)`` from ``rng``, one
    episode is simulated per phase, and each row of ``K`` episodes yields one
    Holevo variance.  The reported variance is the mean over the ``M`` rows;
    ``sharpness`` is the matching value ``(1 + V_H)**-1/2``.
    """
    x = np.asarray(policy, dtype=float)
    if x.shape != (cfg.n_qubits,):
        raise ValueError(f"policy has length {x.size}, config expects {cfg.n_qubits}")
    m, k = cfg.m_repeats, cfg.k_instances
    phi = rng.uniform(0.0, TWO_PI, (m, k))
    est = simulate_estimates(phi.ravel(), x, cfg.channel, cfg.nu, rng).reshape(m, k)
    deltas = phi - est
    per_repeat = [holevo_from_deltas(row)[1] for row in deltas]
    holevo = math.inf if any(map(math.isinf, per_repeat)) else float(np.mean(per_repeat))
    if m == 1:
        stderr = holevo_stderr(deltas[0])
    elif math.isinf(holevo):
        stderr = math.inf
    else:
        stderr = float(np.std(per_repeat, ddof=1) / math.sqrt(m))
    return EvalResult(_sharpness_of(holevo), holevo, per_repeat, stderr)


def evaluate_population(members, cfg: EvalConfig, rng: RngStream,
                        common: bool = False) -> np.ndarray:
    """Holevo variance of every row of ``members``.

    Row ``i`` is scored on ``rng.child(i)``.  With ``common=True`` every row is
    scored on ``rng.child(0)``, i.e. on the same phases and uniforms (common
    random numbers).
    """
    return np.array([evaluate_policy(row, cfg, rng.child(0 if common else i)).holevo
                     for i, row in enumerate(np.asarray(members))])


def convergence_metric(candidates) -> float:
    """Mean absolute deviation of the candidates around their entry-wise mean.

    ``L = mean_j mean_i |xbar_j - x_ij|`` for a ``(P, N)`` matrix.
    """
    x = np.asarray(candidates, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise ValueError("need a (P, N) candidate matrix with P >= 2, N >= 1")
    dev = np.abs(x - x.mean(axis=0))
    # a rounded column mean can differ from a constant column by one ulp
    dev[:, np.all(x == x[0], axis=0)] = 0.0
    return float(dev.mean())
