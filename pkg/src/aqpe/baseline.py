"""Non-adaptive reference protocol.

All ``N`` qubits are measured at one fixed control phase.  The fraction of
zeros is inverted through the fringe ``p0 = (1 + cos(delta)) / 2`` to give the
estimate ``theta + arccos(2*n0/N - 1)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .evaluate import EvalResult, default_instances, holevo_from_deltas, holevo_stderr
from .rng import RngStream
from .sim import (TWO_PI, DecoherenceModel, NoiseChannel, QubitPrep,
                  measurement_probability, wrap)

# Bernoulli draws are generated in blocks of at most this many entries
_CHUNK = 1 << 22


class PhaseSampling(str, enum.Enum):
    """How the unknown phase is drawn relative to the control phase.

    ``FOLDED`` draws ``phi - theta`` uniformly on ``[0, pi]``, the branch the
    arccos estimator can resolve.  ``FULL`` draws ``phi`` on ``[0, 2*pi)``, in
    which case half of the phases are reported with the wrong sign.
    """

    FOLDED = "folded"
    FULL = "full"


@dataclass(frozen=True)
class BaselineConfig:
    n_qubits: int
    k_instances: int | None = None
    control_theta: float = 0.0
    prep: QubitPrep = QubitPrep.PLUS
    channel: NoiseChannel = field(default_factory=NoiseChannel.none)
    deco: DecoherenceModel = field(default_factory=DecoherenceModel)
    sampling: PhaseSampling = PhaseSampling.FOLDED

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.k_instances is None:
            object.__setattr__(self, "k_instances", default_instances(self.n_qubits))
        if self.k_instances < 1:
            raise ValueError("k_instances must be >= 1")
        object.__setattr__(self, "prep", QubitPrep(self.prep))
        object.__setattr__(self, "sampling", PhaseSampling(self.sampling))


@dataclass(frozen=True)
class BinCount:
    n_zero: int
    n_total: int

    def __post_init__(self):
        if self.n_total < 1 or not 0 <= self.n_zero <= self.n_total:
            raise ValueError(f"invalid count {self.n_zero}/{self.n_total}")


def _zero_counts(phi, cfg: BaselineConfig, rng: RngStream) -> np.ndarray:
    """Number of zeros for each phase in ``phi`` (array of shape ``(K,)``)."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    n, nu = cfg.n_qubits, cfg.deco.nu
    if cfg.channel.is_none:
        p0 = measurement_probability(cfg.prep, phi - cfg.control_theta, nu)
        return rng.generator.binomial(n, p0)
    counts = np.empty(phi.size, dtype=np.int64)
    rows = max(1, _CHUNK // n)
    for start in range(0, phi.size, rows):
        block = phi[start:start + rows, None]
        theta = cfg.control_theta + cfg.channel.sample_offsets(rng, (block.shape[0], n))
        p0 = measurement_probability(cfg.prep, block - theta, nu)
        counts[start:start + rows] = (rng.random(p0.shape) < p0).sum(axis=1)
    return counts


def count_outcomes(phi: float, cfg: BaselineConfig, rng: RngStream) -> BinCount:
    """Measure ``N`` qubits at the configured control phase and count zeros.

    Each draw sees a freshly corrupted control phase when the channel is
    noisy.  The draws are explicit Bernoulli trials: one uniform per qubit.
    """
    n = cfg.n_qubits
    offsets = cfg.channel.sample_offsets(rng, n)
    theta = cfg.control_theta if offsets is None else cfg.control_theta + offsets
    p0 = measurement_probability(cfg.prep, float(phi) - theta, cfg.deco.nu)
    n_zero = int(np.count_nonzero(rng.random(n) < p0))
    return BinCount(n_zero, n)


def estimate_phase(count: BinCount, theta: float = 0.0,
                   prep: QubitPrep = QubitPrep.PLUS) -> float:
    """Invert the zero fraction through the fringe.

    ``theta + arccos(2*n0/N - 1)`` for ``PLUS`` and ``theta + arccos(1 - 2*n0/N)``
    for ``MINUS``.  The argument is clamped to ``[-1, 1]``.
    """
    return float(_invert(np.asarray(count.n_zero), count.n_total, theta, prep))


def _invert(n_zero, n_total: int, theta: float, prep) -> np.ndarray:
    sign = 1.0 if QubitPrep(prep) is QubitPrep.PLUS else -1.0
    arg = np.clip(sign * (2.0 * n_zero / n_total - 1.0), -1.0, 1.0)
    return wrap(theta + np.arccos(arg))


def draw_phases(cfg: BaselineConfig, rng: RngStream) -> np.ndarray:
    if cfg.sampling is PhaseSampling.FOLDED:
        return cfg.control_theta + rng.uniform(0.0, math.pi, cfg.k_instances)
    return rng.uniform(0.0, TWO_PI, cfg.k_instances)


def baseline_variance(cfg: BaselineConfig, rng: RngStream) -> EvalResult:
    """Holevo variance of the non-adaptive protocol over ``K`` random phases.

    Noise-free counts are drawn from the binomial law directly (the sum of
    ``N`` identical Bernoulli trials); with a noisy channel every trial is
    drawn explicitly with its own control-phase offset.
    """
    phi = draw_phases(cfg, rng.child(0))
    counts = _zero_counts(phi, cfg, rng.child(1))
    est = _invert(counts, cfg.n_qubits, cfg.control_theta, cfg.prep)
    deltas = phi - est
    s, v = holevo_from_deltas(deltas)
    return EvalResult(s, v, [v], holevo_stderr(deltas))
