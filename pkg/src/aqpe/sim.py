"""Single-qubit Ramsey episodes with feedback on the control phase.

A sequence of qubits is measured one at a time.  Each qubit is prepared in
``|0>`` (:attr:`QubitPrep.PLUS`) or ``|1>`` (:attr:`QubitPrep.MINUS`), sees the
phase difference between the unknown phase ``phi`` and the (possibly noisy)
control phase, and yields a bit.  After every measurement the controller moves
its nominal control phase by ``+x_m`` or ``-x_m``; the final nominal control
phase is the estimate of ``phi``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream

TWO_PI = 2.0 * math.pi


def wrap(x):
    """Map angles onto ``[0, 2*pi)``; works on scalars and arrays."""
    r = np.mod(x, TWO_PI)
    # mod of a tiny negative number rounds up to exactly 2*pi
    if np.ndim(r) == 0:
        r = float(r)
        return 0.0 if r >= TWO_PI else r
    r[r >= TWO_PI] = 0.0
    return r


def signed_residue(x):
    """Map angles onto ``(-pi, pi]``."""
    r = math.pi - wrap(math.pi - np.asarray(x, dtype=float))
    return float(r) if np.ndim(r) == 0 else r


class Phase:
    """An angle held as its representative in ``[0, 2*pi)``.

    Equality is modulo ``2*pi`` with a round-off tolerance, so
    ``Phase(r) == Phase(r + 2*pi*k)`` for any integer ``k``.
    """

    __slots__ = ("value",)
    _EQ_TOL = 1e-9

    def __init__(self, value: float):
        self.value = wrap(float(value))

    def __float__(self) -> float:
        return self.value

    def __add__(self, other) -> "Phase":
        return Phase(self.value + float(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Phase":
        return Phase(self.value - float(other))

    def __rsub__(self, other) -> "Phase":
        return Phase(float(other) - self.value)

    def __neg__(self) -> "Phase":
        return Phase(-self.value)

    def __eq__(self, other) -> bool:
        if not isinstance(other, (Phase, int, float)):
            return NotImplemented
        return abs(signed_residue(self.value - float(other))) <= self._EQ_TOL

    __hash__ = None

    def signed(self) -> float:
        """Representative in ``(-pi, pi]``."""
        return signed_residue(self.value)

    def __repr__(self) -> str:
        return f"Phase({self.value!r})"


class QubitPrep(enum.IntEnum):
    PLUS = 0   # |0>
    MINUS = 1  # |1>


class NoiseKind(str, enum.Enum):
    NONE = "none"
    GAUSSIAN = "gaussian"
    RTN = "rtn"


@dataclass(frozen=True)
class NoiseChannel:
    """Corruption of the physical control phase.

    ``GAUSSIAN`` adds a normal offset of width ``sigma``; ``RTN`` adds the
    fixed offset ``lam`` with probability ``eta``, independently per step.
    """

    kind: NoiseKind = NoiseKind.NONE
    sigma: float = 0.0
    lam: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not self.sigma >= 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not math.isfinite(self.lam):
            raise ValueError(f"lam must be finite, got {self.lam}")

    @classmethod
    def none(cls) -> "NoiseChannel":
        return cls()

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseChannel":
        return cls(NoiseKind.GAUSSIAN, sigma=sigma)

    @classmethod
    def rtn(cls, lam: float, eta: float) -> "NoiseChannel":
        return cls(NoiseKind.RTN, lam=lam, eta=eta)

    @property
    def is_none(self) -> bool:
        return self.kind is NoiseKind.NONE

    def sample_offsets(self, rng: RngStream, size) -> np.ndarray | None:
        """Draw additive control-phase offsets, or ``None`` for a clean channel."""
        if self.kind is NoiseKind.GAUSSIAN:
            return self.sigma * rng.normal(size=size)
        if self.kind is NoiseKind.RTN:
            return np.where(rng.random(size) < self.eta, self.lam, 0.0)
        return None

    def tag(self) -> str:
        if self.kind is NoiseKind.GAUSSIAN:
            return f"gaussian(sigma={self.sigma:g})"
        if self.kind is NoiseKind.RTN:
            return f"rtn(lam={self.lam:g},eta={self.eta:g})"
        return "none"


@dataclass(frozen=True)
class DecoherenceModel:
    """Ramsey fringe visibility ``nu`` in ``[0, 1]``."""

    nu: float = 1.0

    def __post_init__(self):
        _check_nu(self.nu)


@dataclass
class EpisodeRecord:
    outcomes: np.ndarray       # raw detector bits
    preps: np.ndarray          # QubitPrep values used per qubit
    controls: np.ndarray       # nominal control phase after each update
    final_estimate: float


def _check_nu(nu) -> None:
    if not np.all((np.asarray(nu) >= 0.0) & (np.asarray(nu) <= 1.0)):
        raise ValueError(f"visibility must lie in [0, 1], got {nu}")


def measurement_probability(prep, delta, nu: float = 1.0):
    """Probability of reading ``0``: ``(1 +/- nu*cos(delta)) / 2``.

    The upper sign applies to :attr:`QubitPrep.PLUS`.  ``prep`` and ``delta``
    broadcast, so whole batches of episodes can be scored at once.
    """
    _check_nu(nu)
    sign = 1.0 - 2.0 * np.asarray(prep, dtype=float)
    p = 0.5 * (1.0 + sign * nu * np.cos(delta))
    p = np.clip(p, 0.0, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def sample_outcome(p0: float, rng: RngStream) -> int:
    """Return 0 with probability ``p0``, consuming one uniform draw."""
    return 0 if rng.random() < p0 else 1


def corrupt_control(theta: float, channel: NoiseChannel, rng: RngStream) -> float:
    """Physical control phase seen by the qubit (the nominal value is untouched)."""
    off = channel.sample_offsets(rng, None)
    if off is None:
        return wrap(theta)
    return wrap(theta + float(off))


def update_control(theta_prev, zeta, x):
    """Feedback rule ``theta_prev + (-1)**zeta * x``, canonicalised."""
    return wrap(theta_prev + (1.0 - 2.0 * np.asarray(zeta, dtype=float)) * x)


def simulate_estimates(phi, policy, channel: NoiseChannel, nu: float,
                       rng: RngStream, prep=None, return_trace: bool = False):
    """Run one episode per entry of ``phi`` and return the final estimates.

    Random numbers are drawn as whole arrays in a fixed order: preparations
    ``(N, E)``, channel offsets ``(N, E)`` (if the channel is noisy), then the
    measurement uniforms ``(N, E)``.  The controller knows which state it
    injected, so the feedback sign uses the outcome relative to the
    preparation: ``zeta XOR prep``.  For a ``PLUS`` qubit this is ``zeta``.

    Parameters
    ----------
    phi : array_like, shape (E,)
        Unknown phases, one per episode.
    policy : array_like, shape (N,)
        Feedback increments.
    prep : QubitPrep, optional
        Force every qubit into one preparation instead of drawing uniformly.
    return_trace : bool
        Also return ``(outcomes, preps, controls)`` arrays of shape ``(N, E)``.
    """
    _check_nu(nu)
    x = np.asarray(policy, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("policy must be a non-empty 1-d sequence")
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    n, shape = x.size, (x.size, phi.size)

    if prep is None:
        preps = rng.integers(0, 2, size=shape)
    else:
        preps = np.full(shape, int(QubitPrep(prep)))
    offsets = channel.sample_offsets(rng, shape)
    u = rng.random(shape)
    half_sign = 0.5 - preps            # +1/2 for PLUS, -1/2 for MINUS
    flip = preps.astype(bool)
    theta = np.zeros(phi.size)
    if return_trace:
        outcomes = np.empty(shape, dtype=np.int8)
        controls = np.empty(shape)
    for m in range(n):
        physical = theta if offsets is None else theta + offsets[m]
        zeta = u[m] >= 0.5 + half_sign[m] * (nu * np.cos(phi - physical))
        # angles are only reduced mod 2*pi at the end; cos() does not care
        theta = theta + x[m] * (1.0 - 2.0 * (zeta ^ flip[m]))
        if return_trace:
            outcomes[m] = zeta
            controls[m] = wrap(theta)
    theta = wrap(theta)
    if return_trace:
        return theta, (outcomes, preps, controls)
    return theta


def run_episode(phi: float, policy, channel: NoiseChannel | None = None,
                deco: DecoherenceModel | None = None,
                rng: RngStream | None = None, prep=None) -> EpisodeRecord:
    """Simulate one adaptive episode starting from ``theta_0 = 0``."""
    if len(np.atleast_1d(policy)) == 0:
        raise ValueError("policy must contain at least one increment")
    channel = channel or NoiseChannel.none()
    nu = 1.0 if deco is None else deco.nu
    if rng is None:
        rng = RngStream(0)
    theta, (z, p, c) = simulate_estimates([float(phi)], policy, channel, nu,
                                          rng, prep=prep, return_trace=True)
    return EpisodeRecord(outcomes=z[:, 0].astype(int), preps=p[:, 0].astype(int),
                         controls=c[:, 0].copy(), final_estimate=float(theta[0]))


_FISHER_SINGULAR = 1e-30


def fisher_information(delta, nu: float = 1.0):
    """Per-measurement Fisher information about the phase.

    ``nu**2 sin**2(d) / (1 - nu**2 cos**2(d))``.  The denominator is evaluated
    as ``sin**2 + (1 - nu**2) cos**2`` to avoid cancellation; the removable
    singularity at ``nu = 1, d in {0, pi}`` returns 0 (the limit in ``nu``).
    Denominators below ``1e-30`` count as singular, so that the floating-point
    ``pi`` (whose sine is ``1.2e-16``) is treated like the exact one.
    """
    _check_nu(nu)
    s2 = np.sin(delta) ** 2
    c2 = np.cos(delta) ** 2
    den = s2 + (1.0 - nu * nu) * c2
    ok = den > _FISHER_SINGULAR
    f = np.where(ok, nu * nu * s2 / np.where(ok, den, 1.0), 0.0)
    return float(f) if np.ndim(f) == 0 else f


def sql_bound(n: int, nu: float = 1.0) -> float:
    """Standard-quantum-limit phase uncertainty ``1 / (nu * sqrt(n))``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    _check_nu(nu)
    if nu == 0.0:
        raise ValueError("sql_bound is infinite for zero visibility")
    return 1.0 / (nu * math.sqrt(n))
