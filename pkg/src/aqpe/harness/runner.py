"""Experiment orchestration.

Every cell of an experiment derives its random streams from its own
coordinates (base seed, scenario, optimizer, N), so cells are independent and
can run in any order on any number of worker processes.  Results are sorted
before they are returned.
"""
from __future__ import annotations

import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..baseline import BaselineConfig, PhaseSampling, count_outcomes, baseline_variance
from ..bayes import (MeasurementStep, exact_policy_variance, likelihood_on_grid,
                     posterior_density, posterior_from_steps, posterior_mean_phase,
                     posterior_sharpness)
from ..de import DeParams, de_train
from ..evaluate import EvalConfig, evaluate_policy
from ..pso import PsoParams, pso_train
from ..rng import RngStream
from ..sim import TWO_PI, DecoherenceModel, QubitPrep, sql_bound
from .config import BinomialConfig, EvalSpec, ExperimentConfig, OptimizerSpec, Scenario
from .output import BinomialRow, GridRow, ResultRow

MAX_VERIFY_QUBITS = 10
_TRAIN, _HELDOUT = 0, 1


def stable_id(text: str) -> int:
    """Process-independent integer key for a label."""
    return zlib.crc32(text.encode())


def default_threads() -> int:
    return os.cpu_count() or 1


def _pmap(fn, items, threads: int | None):
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _ln(v: float) -> float:
    if v == 0.0:
        return -math.inf
    return math.log(v)


def _sharpness(v: float) -> float:
    return 0.0 if math.isinf(v) else 1.0 / math.sqrt(1.0 + v)


# ---------------------------------------------------------------- experiment cells

@dataclass(frozen=True)
class Cell:
    scenario: Scenario
    optimizer: OptimizerSpec
    n: int
    seed: int
    eval: EvalSpec
    timing: bool = False


def run_cell(cell: Cell) -> list[ResultRow]:
    """Run one ``(scenario, optimizer, N, seed)`` cell.

    Trained policies are re-scored on a held-out stream that training never
    touched.  With ``report_best`` the best final member is scored on the same
    held-out stream and reported under the optimizer tag ``<kind>-best``.
    """
    t0 = time.perf_counter()
    sc, opt, n = cell.scenario, cell.optimizer, cell.n
    root = RngStream(cell.seed, (stable_id(sc.tag), stable_id(opt.tag), n))
    k = cell.eval.k_for(n)
    rows = []

    def row(tag, v, gens, L):
        wall = time.perf_counter() - t0 if cell.timing else 0.0
        return ResultRow(sc.tag, tag, n, cell.seed, _ln(v), _sharpness(v), gens, L, wall)

    if opt.kind in ("de", "pso"):
        cfg = EvalConfig(n, k, cell.eval.m_repeats, sc.channel, sc.deco)
        if opt.kind == "de":
            policy, trace = de_train(opt.de, cfg, root.child(_TRAIN))
        else:
            policy, trace = pso_train(opt.pso, cfg, root.child(_TRAIN))
        held = evaluate_policy(policy, cfg, root.child(_HELDOUT))
        gens, L = trace.generations_used, trace.terminal_convergence
        rows.append(row(opt.kind, held.holevo, gens, L))
        if opt.report_best:
            best = evaluate_policy(trace.best_member, cfg, root.child(_HELDOUT))
            rows.append(row(f"{opt.kind}-best", best.holevo, gens, L))
    elif opt.kind == "baseline":
        sampling = PhaseSampling.FOLDED if opt.fold else PhaseSampling.FULL
        bcfg = BaselineConfig(n, k, channel=sc.channel, deco=sc.deco, sampling=sampling)
        res = baseline_variance(bcfg, root.child(_TRAIN))
        rows.append(row("baseline", res.holevo, 0, math.nan))
    elif opt.kind == "sql-line":
        v = math.inf if sc.nu == 0.0 else sql_bound(n, sc.nu) ** 2
        rows.append(row("sql-line", v, 0, math.nan))
    else:
        raise ValueError(f"unknown optimizer {opt.kind!r}")
    return rows


def experiment_cells(cfg: ExperimentConfig, timing: bool = False) -> list[Cell]:
    return [Cell(s, o, n, seed, cfg.eval, timing)
            for s in cfg.scenarios for o in cfg.optimizers
            for n in cfg.n_range for seed in cfg.seeds]


def run_experiment(cfg: ExperimentConfig, threads: int | None = 1, timing: bool = False,
                   on_row=None) -> list[ResultRow]:
    """Run every cell of ``cfg`` and return the rows sorted by cell key.

    ``on_row`` is called with each row as its cell finishes (in cell order).
    """
    cells = experiment_cells(cfg, timing)
    rows = []
    for cell_rows in _pmap(run_cell, cells, threads):
        for r in cell_rows:
            if on_row is not None:
                on_row(r)
            rows.append(r)
    rows.sort(key=ResultRow.key)
    return rows


def power_law_exponent(rows) -> float:
    """``alpha`` in ``V_H ~ N**-alpha`` by least squares on ``ln V_H`` vs ``ln N``.

    Rows with a non-finite ``ln_vh`` are skipped.
    """
    pts = [(math.log(r.n), r.ln_vh) for r in rows if math.isfinite(r.ln_vh)]
    if len({p[0] for p in pts}) < 2:
        raise ValueError("need finite results at two or more distinct N")
    x, y = np.array(pts).T
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


# ---------------------------------------------------------------- parameter grids

@dataclass(frozen=True)
class GridCell:
    algorithm: str
    a: float
    b: float
    seed: int
    n: int
    generations: int
    k_instances: int
    population: int
    m_repeats: int
    w: float = 0.8
    v_max0: float = 0.2
    threshold: float = 0.1256


def run_grid_cell(c: GridCell) -> GridRow:
    cfg = EvalConfig(c.n, c.k_instances, c.m_repeats)
    root = RngStream(c.seed, (stable_id(c.algorithm), round(c.a * 10**6), round(c.b * 10**6)))
    if c.algorithm == "de":
        params = DeParams(F=c.a, C=c.b, population=c.population,
                          max_generations=c.generations, convergence_threshold=c.threshold)
        policy, trace = de_train(params, cfg, root.child(_TRAIN))
    elif c.algorithm == "pso":
        params = PsoParams(alpha=c.a, beta=c.b, w=c.w, v_max0=c.v_max0,
                           population=c.population, max_generations=c.generations,
                           convergence_threshold=c.threshold)
        policy, trace = pso_train(params, cfg, root.child(_TRAIN))
    else:
        raise ValueError(f"unknown algorithm {c.algorithm!r}")
    held = evaluate_policy(policy, cfg, root.child(_HELDOUT))
    L = trace.terminal_convergence
    return GridRow(c.algorithm, c.a, c.b, c.seed, L, _ln(held.holevo),
                   bool(L <= c.threshold), trace.generations_used)


def run_param_grid(algorithm: str, grid, n: int = 10, g: int = 50, k: int = 1000,
                   p: int = 20, m: int = 5, seeds=(0,), threads: int | None = 1,
                   w: float = 0.8, v_max0: float = 0.2,
                   threshold: float = 0.1256) -> list[GridRow]:
    """Train once per ``(param_a, param_b, seed)`` and tabulate terminal L and ln V_H.

    ``grid`` is a list of ``(param_a, param_b)`` pairs: ``(F, C)`` for DE and
    ``(alpha, beta)`` for PSO.
    """
    pairs = [(float(a), float(b)) for a, b in grid]
    for a, b in pairs:
        if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
            raise ValueError(f"grid values must lie in [0, 1], got {(a, b)}")
    cells = [GridCell(algorithm, a, b, s, n, g, k, p, m, w, v_max0, threshold)
             for a, b in pairs for s in seeds]
    rows = _pmap(run_grid_cell, cells, threads)
    rows.sort(key=GridRow.key)
    return rows


def square_grid(values) -> list[tuple[float, float]]:
    return [(a, b) for a in values for b in values]


# ---------------------------------------------------------------- binomial statistics

def binomial_counts(p: float, n: int, repeats: int, rng: RngStream) -> np.ndarray:
    """Zero counts from ``repeats`` calls of :func:`count_outcomes`.

    The phase is placed so that a ``PLUS`` qubit at ``theta = 0`` reads zero
    with probability ``p``.
    """
    cfg = BaselineConfig(n, 1)
    phi = math.acos(2.0 * p - 1.0)
    return np.array([count_outcomes(phi, cfg, rng).n_zero for _ in range(repeats)])


def binomial_chi_square(counts, n: int, p: float, min_expected: float = 5.0):
    """Pearson goodness of fit of zero counts against Binomial(n, p).

    Adjacent outcome bins are merged (from both tails inward) until each
    expected count reaches ``min_expected``.

    Returns
    -------
    stat, dof, pvalue : float, int, float
    """
    counts = np.asarray(counts)
    obs = np.bincount(counts, minlength=n + 1).astype(float)
    exp = stats.binom.pmf(np.arange(n + 1), n, p) * counts.size
    groups_o, groups_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            groups_o.append(acc_o)
            groups_e.append(acc_e)
            acc_o = acc_e = 0.0
    if groups_e:
        groups_o[-1] += acc_o
        groups_e[-1] += acc_e
    if len(groups_e) < 2:
        raise ValueError("too few populated bins for a chi-square test")
    go, ge = np.array(groups_o), np.array(groups_e)
    stat = float(((go - ge) ** 2 / ge).sum())
    dof = len(ge) - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def run_binomial(cfg: BinomialConfig) -> list[BinomialRow]:
    rows = []
    for i, p in enumerate(cfg.probabilities):
        counts = binomial_counts(p, cfg.n, cfg.repeats, RngStream(cfg.seed, (i,)))
        obs = np.bincount(counts, minlength=cfg.n + 1)
        exp = stats.binom.pmf(np.arange(cfg.n + 1), cfg.n, p) * cfg.repeats
        rows.extend(BinomialRow(p, k, int(obs[k]), float(exp[k])) for k in range(cfg.n + 1))
    return rows


# ---------------------------------------------------------------- verification

@dataclass
class VerifyReport:
    lines: list[str] = field(default_factory=list)
    passed: bool = True

    def check(self, name: str, ok: bool, detail: str) -> None:
        self.passed &= bool(ok)
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    def __str__(self) -> str:
        return "\n".join(self.lines)


def verify(n: int, policy=None, nu: float = 1.0, seed: int = 0, k: int = 100_000,
           grid_points: int = 10_000, tol: float = 1e-9, posterior=None) -> VerifyReport:
    """Cross-check the Monte-Carlo evaluator and the posterior recursion.

    Parameters
    ----------
    n : int
        Number of qubits, at most 10.
    policy : array_like, optional
        Policy to check; drawn uniformly from ``seed`` when omitted.
    posterior : callable, optional
        Replacement for the step-sequence-to-posterior routine; lets a test
        inject a faulty recursion.
    """
    if not 1 <= n <= MAX_VERIFY_QUBITS:
        raise ValueError(f"verify supports 1 <= N <= {MAX_VERIFY_QUBITS}, got {n}")
    rng = RngStream(seed, (stable_id("verify"), n))
    if policy is None:
        policy = rng.child(0).uniform(0.0, TWO_PI, n)
    policy = np.asarray(policy, dtype=float)
    if policy.shape != (n,):
        raise ValueError(f"policy must have length {n}")
    report = VerifyReport()

    exact = exact_policy_variance(policy, nu)
    mc = evaluate_policy(policy, EvalConfig(n, k, 1, deco=DecoherenceModel(nu)), rng.child(1))
    if math.isinf(exact):
        # zero true sharpness: the sample sharpness is Rayleigh with scale (2K)**-1/2
        ok = mc.sharpness <= 4.0 / math.sqrt(k)
        report.check("policy variance", ok,
                     f"exact=inf mc sharpness={mc.sharpness:.3g} (limit {4.0 / math.sqrt(k):.3g})")
    elif math.isinf(mc.holevo):
        report.check("policy variance", False, f"exact={exact:.6g} mc=inf")
    else:
        z = abs(mc.holevo - exact) / mc.stderr if mc.stderr > 0 else 0.0
        report.check("policy variance", z <= 3.0,
                     f"exact={exact:.6g} mc={mc.holevo:.6g} +/- {mc.stderr:.3g} ({z:.2f} SE)")

    seq = rng.child(2)
    steps = [MeasurementStep(int(seq.integers(0, 2)), float(seq.uniform(0.0, TWO_PI)), nu,
                             QubitPrep(int(seq.integers(0, 2)))) for _ in range(n)]
    build = posterior if posterior is not None else posterior_from_steps
    post = build(steps)
    phi = np.arange(grid_points) * (TWO_PI / grid_points)
    lik = likelihood_on_grid(steps, phi)
    mass = lik.mean() * TWO_PI
    if mass <= 0.0:
        report.check("posterior", False, "sequence has zero likelihood")
        return report
    quad = lik / mass
    err = float(np.max(np.abs(posterior_density(post, phi) - quad)))
    report.check("posterior density", err <= tol, f"sup-norm error {err:.2e}")
    z_quad = (quad * np.exp(1j * phi)).mean() * TWO_PI
    s_err = abs(posterior_sharpness(post) - abs(z_quad))
    report.check("posterior sharpness", s_err <= tol, f"error {s_err:.2e}")
    if abs(z_quad) > 1e-6:
        d = posterior_mean_phase(post) - math.atan2(z_quad.imag, z_quad.real)
        m_err = abs(math.remainder(d, TWO_PI))
        report.check("posterior mean phase", m_err <= tol, f"error {m_err:.2e}")
    return report
