"""Command-line entry point: ``aqpe <train|baseline|grid|verify|sql> ...``.

Exit status is 0 on success, 1 for configuration errors and 2 when a
verification check fails.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .harness.config import (BinomialConfig, ConfigError, ExperimentConfig, GridConfig,
                             OptimizerSpec, OutputSpec, Scenario, load_config, load_preset,
                             preset_names)
from .harness.output import render
from .harness.runner import (MAX_VERIFY_QUBITS, run_binomial, run_experiment, run_param_grid,
                             square_grid, verify)

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="YAML experiment file")
    src.add_argument("--preset", help="name of a bundled config (see --list-presets)")
    common.add_argument("--seed", type=_u64, help="replace the configured seed list with one seed")
    common.add_argument("--out", help="output file (default: config output path, else stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: all cores)")
    common.add_argument("--timing", action="store_true",
                        help="record wall-clock seconds per cell (output is then not reproducible)")

    ap = argparse.ArgumentParser(prog="aqpe", description="Adaptive phase estimation experiments.")
    ap.add_argument("--list-presets", action="store_true", help="print bundled preset names")
    sub = ap.add_subparsers(dest="command")

    sub.add_parser("train", parents=[common], help="train DE/PSO policies per config")
    bl = sub.add_parser("baseline", parents=[common],
                        help="non-adaptive protocol (experiment or binomial config)")
    bl.add_argument("--n", type=int, nargs="+", help="qubit counts when no config is given")
    bl.add_argument("--k", type=int, default=100_000, help="phases per N when no config is given")
    sub.add_parser("grid", parents=[common], help="DE/PSO hyperparameter sweep")
    sq = sub.add_parser("sql", parents=[common], help="standard-quantum-limit reference rows")
    sq.add_argument("--n", type=int, nargs="+", default=[5, 10, 15, 20, 25])
    sq.add_argument("--nu", type=float, default=1.0)
    vf = sub.add_parser("verify", parents=[common], help="oracle cross-checks at small N")
    vf.add_argument("--n", type=int, default=6)
    vf.add_argument("--nu", type=float, default=1.0)
    vf.add_argument("--k", type=int, default=100_000)
    vf.add_argument("--policy", type=float, nargs="+", help="increments; random if omitted")
    return ap


def _load(args):
    if args.config:
        return load_config(args.config)
    if args.preset:
        return load_preset(args.preset)
    return None


def _with_seed(cfg, seed):
    if seed is None:
        return cfg
    if isinstance(cfg, BinomialConfig):
        return dataclasses.replace(cfg, seed=seed)
    return dataclasses.replace(cfg, seeds=(seed,))


def _write(rows, args, output: OutputSpec | None) -> None:
    fmt = args.format or (output.format if output else "csv")
    path = args.out or (output.path if output else None)
    text = render(rows, fmt)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _cmd_train(args, cfg) -> int:
    if not isinstance(cfg, ExperimentConfig):
        raise ConfigError("", "train needs an experiment config (scenario/optimizer/n_range)")
    rows = run_experiment(cfg, threads=args.threads, timing=args.timing)
    _write(rows, args, cfg.output)
    return EXIT_OK


def _cmd_baseline(args, cfg) -> int:
    if cfg is None:
        ns = args.n or [5, 10, 20, 50, 100]
        cfg = ExperimentConfig((Scenario("ideal"),), (OptimizerSpec("baseline"),),
                               tuple(ns), (0,))
        cfg = dataclasses.replace(cfg, eval=dataclasses.replace(cfg.eval, k_instances=args.k))
    cfg = _with_seed(cfg, args.seed)
    if isinstance(cfg, BinomialConfig):
        _write(run_binomial(cfg), args, cfg.output)
        return EXIT_OK
    if not isinstance(cfg, ExperimentConfig):
        raise ConfigError("", "baseline needs an experiment or binomial config")
    bad = [o.kind for o in cfg.optimizers if o.kind not in ("baseline", "sql-line")]
    if bad:
        raise ConfigError("optimizer", f"baseline cannot run trained optimizers {bad}; use train")
    _write(run_experiment(cfg, threads=args.threads, timing=args.timing), args, cfg.output)
    return EXIT_OK


def _cmd_grid(args, cfg) -> int:
    if not isinstance(cfg, GridConfig):
        raise ConfigError("", "grid needs a config with a 'grid' section")
    rows = run_param_grid(cfg.algorithm, square_grid(cfg.values), n=cfg.n, g=cfg.generations,
                          k=cfg.k_instances, p=cfg.population, m=cfg.m_repeats,
                          seeds=cfg.seeds, threads=args.threads, w=cfg.w, v_max0=cfg.v_max0,
                          threshold=cfg.threshold)
    _write(rows, args, cfg.output)
    return EXIT_OK


def _cmd_sql(args, cfg) -> int:
    if cfg is None:
        if not 0.0 <= args.nu <= 1.0:
            raise ConfigError("nu", f"must lie in [0, 1], got {args.nu}")
        scen = Scenario("ideal") if args.nu == 1.0 else Scenario("visibility", nu=args.nu)
        cfg = ExperimentConfig((scen,), (OptimizerSpec("sql-line"),), tuple(args.n), (0,))
    if not isinstance(cfg, ExperimentConfig):
        raise ConfigError("", "sql needs an experiment config")
    cfg = dataclasses.replace(cfg, optimizers=(OptimizerSpec("sql-line"),))
    _write(run_experiment(_with_seed(cfg, args.seed), threads=1), args, cfg.output)
    return EXIT_OK


def _cmd_verify(args, cfg) -> int:
    if not 1 <= args.n <= MAX_VERIFY_QUBITS:
        raise ConfigError("n", f"verify refuses N={args.n}; supported range is 1..{MAX_VERIFY_QUBITS}")
    policy = None if args.policy is None else np.array(args.policy)
    if policy is not None and policy.size != args.n:
        raise ConfigError("policy", f"expected {args.n} increments, got {policy.size}")
    report = verify(args.n, policy, nu=args.nu, seed=args.seed or 0, k=args.k)
    print(report)
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_VERIFY


_COMMANDS = {"train": _cmd_train, "baseline": _cmd_baseline, "grid": _cmd_grid,
             "sql": _cmd_sql, "verify": _cmd_verify}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.list_presets:
        print("\n".join(preset_names()))
        return EXIT_OK
    if args.command is None:
        ap.print_help()
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load(args)
        if args.command in ("train", "grid") and cfg is None:
            raise ConfigError("", f"{args.command} needs --config or --preset")
        if args.command in ("train", "grid"):
            cfg = _with_seed(cfg, args.seed)
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
