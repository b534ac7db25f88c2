"""Exact Bayesian bookkeeping and brute-force policy scoring.

The posterior over the unknown phase after ``m`` measurements is a
trigonometric polynomial of degree ``m``; it is stored as its Fourier
coefficients ``p[k]``, ``-m <= k <= m``, in the convention
``P(phi) = sum_k p[k] exp(i*k*phi)``.  Each measurement multiplies the density
by ``(1 +/- nu*cos(phi - theta)) / 2``, which mixes neighbouring coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluate import SHARPNESS_FLOOR
from .sim import TWO_PI, NoiseChannel, QubitPrep, wrap

MAX_DEPTH = 256          # coefficients shrink like 2**-m; beyond this they underflow
MAX_EXACT_QUBITS = 12
MAX_EXACT_QUBITS_WITH_PREPS = 8
EXACT_GRID = 720


class DegeneratePosteriorError(ValueError):
    """The posterior carries no usable normalisation or direction."""


@dataclass(frozen=True)
class MeasurementStep:
    zeta: int
    theta: float
    nu: float = 1.0
    prep: QubitPrep = QubitPrep.PLUS


@dataclass(frozen=True)
class FourierPosterior:
    """Unnormalised posterior coefficients on the band ``[-depth, depth]``.

    ``coeffs[j]`` holds ``p[j - depth]``.
    """

    coeffs: np.ndarray
    depth: int

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.depth:
            return 0j
        return complex(self.coeffs[k + self.depth])


def posterior_init() -> FourierPosterior:
    """Uniform prior ``1/(2*pi)``."""
    return FourierPosterior(np.array([1.0 / TWO_PI + 0j]), 0)


def posterior_update(post: FourierPosterior, step: MeasurementStep) -> FourierPosterior:
    """Absorb one outcome: ``p'[k] = p[k]/2 + s*nu/4 * (e^{-i theta} p[k-1] + e^{i theta} p[k+1])``.

    ``s = (-1)**zeta`` for a ``PLUS`` qubit and ``-(-1)**zeta`` for ``MINUS``.
    """
    if post.depth >= MAX_DEPTH:
        raise ValueError(f"posterior depth is capped at {MAX_DEPTH}")
    if not 0.0 <= step.nu <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {step.nu}")
    sign = 1.0 if step.zeta == 0 else -1.0
    if QubitPrep(step.prep) is QubitPrep.MINUS:
        sign = -sign
    old = np.zeros(post.coeffs.size + 2, dtype=complex)
    old[1:-1] = post.coeffs
    new = 0.5 * old
    # new[j] picks up old[j-1] (k-1) and old[j+1] (k+1)
    a = 0.25 * sign * step.nu
    new[1:] += a * np.exp(-1j * step.theta) * old[:-1]
    new[:-1] += a * np.exp(1j * step.theta) * old[1:]
    return FourierPosterior(new, post.depth + 1)


def posterior_from_steps(steps) -> FourierPosterior:
    post = posterior_init()
    for step in steps:
        post = posterior_update(post, step)
    return post


def _normalised(post: FourierPosterior, k: int) -> complex:
    p0 = post.coefficient(0).real
    if not p0 > 0.0:
        raise DegeneratePosteriorError("posterior has zero total mass")
    return post.coefficient(k) / (TWO_PI * p0)


def posterior_sharpness(post: FourierPosterior) -> float:
    """``|<exp(i*phi)>|`` of the normalised posterior, in ``[0, 1]``."""
    return min(abs(TWO_PI * _normalised(post, -1)), 1.0)


def posterior_mean_phase(post: FourierPosterior) -> float:
    """Circular mean ``arg <exp(i*phi)>`` in ``[0, 2*pi)``."""
    z = _normalised(post, -1)
    if abs(TWO_PI * z) <= SHARPNESS_FLOOR:
        raise DegeneratePosteriorError("circular mean is undefined for zero sharpness")
    return wrap(math.atan2(z.imag, z.real))


def posterior_density(post: FourierPosterior, phi) -> np.ndarray:
    """Normalised density evaluated at ``phi``."""
    phi = np.asarray(phi, dtype=float)
    k = np.arange(-post.depth, post.depth + 1)
    p0 = post.coefficient(0).real
    if not p0 > 0.0:
        raise DegeneratePosteriorError("posterior has zero total mass")
    vals = np.exp(1j * np.multiply.outer(phi, k)) @ post.coeffs
    return vals.real / (TWO_PI * p0)


def likelihood_on_grid(steps, phi) -> np.ndarray:
    """Product of outcome probabilities for a step sequence, on a phase grid."""
    phi = np.asarray(phi, dtype=float)
    out = np.ones_like(phi)
    for st in steps:
        sign = 1.0 if st.zeta == 0 else -1.0
        if QubitPrep(st.prep) is QubitPrep.MINUS:
            sign = -sign
        out = out * 0.5 * (1.0 + sign * st.nu * np.cos(phi - st.theta))
    return out


def _exact_moment(x: np.ndarray, nu: float, phi: np.ndarray,
                  enumerate_preps: bool, theta0: float = 0.0) -> complex:
    """``E[exp(i*(phi - theta_N))]`` with ``phi`` uniform on the grid."""
    theta = np.full(1, theta0)
    weight = np.ones((1, phi.size))
    for xm in x:
        # decoded bit d: probability (1 + (-1)**d nu cos(phi - theta)) / 2
        c = nu * np.cos(phi[None, :] - theta[:, None])
        if enumerate_preps:
            # the raw bit for each prep, fed back through the XOR decoding,
            # yields the same two branches; keep all four explicitly
            branches = []
            for prep_sign in (1.0, -1.0):
                for zeta_sign in (1.0, -1.0):
                    p = 0.25 * (1.0 + prep_sign * zeta_sign * c)
                    d_sign = prep_sign * zeta_sign
                    branches.append((theta + d_sign * xm, p))
        else:
            branches = [(theta + xm, 0.5 * (1.0 + c)), (theta - xm, 0.5 * (1.0 - c))]
        theta = np.concatenate([t for t, _ in branches])
        weight = np.concatenate([weight * p for _, p in branches])
    z = (weight * np.exp(1j * (phi[None, :] - theta[:, None]))).sum(axis=0)
    return complex(z.mean())


def exact_policy_variance(policy, nu: float = 1.0, channel: NoiseChannel | None = None,
                          enumerate_preps: bool = False, grid: int = EXACT_GRID,
                          offset: float = 0.0) -> float:
    """Holevo variance of a policy by enumerating every outcome sequence.

    The unknown phase is averaged over a uniform grid of ``grid`` points.  By
    default the two decoded feedback branches are enumerated per step; with
    ``enumerate_preps`` the preparation of every qubit is enumerated as well
    (``4**N`` leaves), which must give the same number.  ``offset`` rotates
    both the phase grid and the starting control phase.

    Raises
    ------
    ValueError
        If the policy is too long to enumerate or a control-noise channel is
        given (the outcome tree is only finite without control noise).
    """
    if channel is not None and not channel.is_none:
        raise ValueError("exact enumeration does not support control noise")
    x = np.asarray(policy, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("policy must be a non-empty 1-d sequence")
    cap = MAX_EXACT_QUBITS_WITH_PREPS if enumerate_preps else MAX_EXACT_QUBITS
    if x.size > cap:
        raise ValueError(f"exact enumeration refused for N={x.size} > {cap}")
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {nu}")
    phi = offset + np.arange(grid) * (TWO_PI / grid)
    s = abs(_exact_moment(x, nu, phi, enumerate_preps, offset))
    if s <= SHARPNESS_FLOOR:
        return math.inf
    return min(s, 1.0) ** -2 - 1.0
