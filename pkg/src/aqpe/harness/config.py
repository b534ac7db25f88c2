"""Experiment configuration files.

A config is one YAML document.  Exactly one of three experiment kinds is
described, chosen by its top-level keys:

``scenario`` / ``optimizer`` / ``n_range`` / ``seeds``
    Train or benchmark policies per ``(scenario, optimizer, N, seed)`` cell.
``grid``
    Hyperparameter sweep of DE (F, C) or PSO (alpha, beta).
``binomial``
    Histogram of zero counts of the non-adaptive protocol.

Unknown keys anywhere are errors, reported with their dotted path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from ..de import CONVERGENCE_THRESHOLD, DeParams
from ..pso import PsoParams
from ..sim import DecoherenceModel, NoiseChannel


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class Scenario:
    kind: str                  # ideal | gaussian | rtn | visibility
    sigma: float = 0.0
    lam: float = 0.0
    eta: float = 0.0
    nu: float = 1.0

    @property
    def channel(self) -> NoiseChannel:
        if self.kind == "gaussian":
            return NoiseChannel.gaussian(self.sigma)
        if self.kind == "rtn":
            return NoiseChannel.rtn(self.lam, self.eta)
        return NoiseChannel.none()

    @property
    def deco(self) -> DecoherenceModel:
        return DecoherenceModel(self.nu)

    @property
    def tag(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian(sigma={self.sigma:g})"
        if self.kind == "rtn":
            return f"rtn(lam={self.lam:g},eta={self.eta:g})"
        if self.kind == "visibility":
            return f"visibility(nu={self.nu:g})"
        return "ideal"


@dataclass(frozen=True)
class OptimizerSpec:
    kind: str                  # de | pso | baseline | sql-line
    de: DeParams | None = None
    pso: PsoParams | None = None
    fold: bool = True          # baseline phase sampling
    report_best: bool = False  # also report the best member as "<kind>-best"

    @property
    def tag(self) -> str:
        return self.kind


@dataclass(frozen=True)
class EvalSpec:
    k_factor: float = 10.0          # K = k_factor * N**2 ...
    k_instances: int | None = None  # ... unless a fixed K is given
    m_repeats: int = 5

    def k_for(self, n: int) -> int:
        if self.k_instances is not None:
            return self.k_instances
        return max(1, int(round(self.k_factor * n * n)))


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple[Scenario, ...]
    optimizers: tuple[OptimizerSpec, ...]
    n_range: tuple[int, ...]
    seeds: tuple[int, ...]
    eval: EvalSpec = field(default_factory=EvalSpec)
    output: OutputSpec = field(default_factory=OutputSpec)


@dataclass(frozen=True)
class GridConfig:
    algorithm: str
    values: tuple[float, ...]
    n: int = 10
    generations: int = 50
    k_instances: int = 1000
    population: int = 20
    m_repeats: int = 5
    seeds: tuple[int, ...] = (0,)
    w: float = 0.8
    v_max0: float = 0.2
    threshold: float = CONVERGENCE_THRESHOLD
    output: OutputSpec = field(default_factory=OutputSpec)


@dataclass(frozen=True)
class BinomialConfig:
    n: int
    repeats: int
    probabilities: tuple[float, ...]
    seed: int = 0
    output: OutputSpec = field(default_factory=OutputSpec)


# ---------------------------------------------------------------- parsing helpers

def _mapping(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected a mapping, got {type(obj).__name__}")
    return obj


def _check_keys(obj: dict, allowed, path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(_join(path, str(key)), "unknown key")


def _join(path: str, key) -> str:
    return f"{path}.{key}" if path else str(key)


def _number(obj: dict, key: str, path: str, default=None, lo=None, hi=None,
            integer: bool = False):
    if key not in obj:
        if default is None:
            raise ConfigError(_join(path, key), "missing required field")
        return default
    val = obj[key]
    p = _join(path, key)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(p, f"expected a number, got {val!r}")
    if integer and not float(val).is_integer():
        raise ConfigError(p, f"expected an integer, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(p, "must be finite")
    if lo is not None and val < lo:
        raise ConfigError(p, f"must be >= {lo}, got {val}")
    if hi is not None and val > hi:
        raise ConfigError(p, f"must be <= {hi}, got {val}")
    return int(val) if integer else float(val)


def _bool(obj: dict, key: str, path: str, default: bool) -> bool:
    val = obj.get(key, default)
    if not isinstance(val, bool):
        raise ConfigError(_join(path, key), f"expected true/false, got {val!r}")
    return val


def _int_list(obj, path: str, lo: int | None = None) -> tuple[int, ...]:
    if isinstance(obj, dict) and set(obj) <= {"start", "stop", "step"}:
        start = _number(obj, "start", path, integer=True)
        stop = _number(obj, "stop", path, integer=True)
        step = _number(obj, "step", path, default=1, lo=1, integer=True)
        obj = list(range(start, stop + 1, step))
    if not isinstance(obj, list) or not obj:
        raise ConfigError(path, "expected a non-empty list")
    out = []
    for i, v in enumerate(obj):
        out.append(_number({"v": v}, "v", f"{path}[{i}]", lo=lo, integer=True))
    return tuple(out)


def _as_list(obj) -> list:
    return obj if isinstance(obj, list) else [obj]


# ---------------------------------------------------------------- sections

_SCENARIO_FIELDS = {
    "ideal": (),
    "gaussian": ("sigma",),
    "rtn": ("lam", "eta"),
    "visibility": ("nu",),
}


def parse_scenario(obj, path: str) -> Scenario:
    if isinstance(obj, str):
        obj = {"kind": obj}
    obj = _mapping(obj, path)
    kind = obj.get("kind")
    if kind not in _SCENARIO_FIELDS:
        raise ConfigError(_join(path, "kind"),
                          f"expected one of {sorted(_SCENARIO_FIELDS)}, got {kind!r}")
    _check_keys(obj, ("kind",) + _SCENARIO_FIELDS[kind], path)
    if kind == "gaussian":
        return Scenario(kind, sigma=_number(obj, "sigma", path, lo=0.0))
    if kind == "rtn":
        return Scenario(kind, lam=_number(obj, "lam", path),
                        eta=_number(obj, "eta", path, lo=0.0, hi=1.0))
    if kind == "visibility":
        return Scenario(kind, nu=_number(obj, "nu", path, lo=0.0, hi=1.0))
    return Scenario(kind)


_DE_KEYS = ("F", "C", "population", "max_generations", "convergence_threshold", "resample")
_PSO_KEYS = ("alpha", "beta", "w", "v_max0", "population", "max_generations",
             "convergence_threshold", "vmax_floor", "resample")


def _params(obj: dict, keys, path: str, cls):
    kw: dict[str, Any] = {}
    for key in keys:
        if key not in obj:
            continue
        if key == "resample":
            kw[key] = _bool(obj, key, path, True)
        elif key in ("population", "max_generations"):
            kw[key] = _number(obj, key, path, lo=0, integer=True)
        else:
            kw[key] = _number(obj, key, path)
    try:
        return cls(**kw)
    except ValueError as exc:
        # point at the offending field when the message names one
        named = [k for k in kw if k.replace("_", " ") in str(exc) or k in str(exc)]
        raise ConfigError(_join(path, named[0]) if named else path, str(exc)) from None


def parse_optimizer(obj, path: str) -> OptimizerSpec:
    if isinstance(obj, str):
        obj = {"kind": obj}
    obj = _mapping(obj, path)
    kind = obj.get("kind")
    if kind == "de":
        _check_keys(obj, ("kind", "report_best") + _DE_KEYS, path)
        return OptimizerSpec("de", de=_params(obj, _DE_KEYS, path, DeParams),
                             report_best=_bool(obj, "report_best", path, False))
    if kind == "pso":
        _check_keys(obj, ("kind", "report_best") + _PSO_KEYS, path)
        return OptimizerSpec("pso", pso=_params(obj, _PSO_KEYS, path, PsoParams),
                             report_best=_bool(obj, "report_best", path, False))
    if kind == "baseline":
        _check_keys(obj, ("kind", "fold"), path)
        return OptimizerSpec("baseline", fold=_bool(obj, "fold", path, True))
    if kind == "sql-line":
        _check_keys(obj, ("kind",), path)
        return OptimizerSpec("sql-line")
    raise ConfigError(_join(path, "kind"),
                      f"expected one of de, pso, baseline, sql-line, got {kind!r}")


def parse_eval(obj, path: str) -> EvalSpec:
    obj = _mapping(obj, path)
    _check_keys(obj, ("k_factor", "k_instances", "m_repeats"), path)
    k_inst = obj.get("k_instances")
    if k_inst is not None:
        k_inst = _number(obj, "k_instances", path, lo=1, integer=True)
    return EvalSpec(k_factor=_number(obj, "k_factor", path, default=10.0, lo=0.0),
                    k_instances=k_inst,
                    m_repeats=_number(obj, "m_repeats", path, default=5, lo=1, integer=True))


def parse_output(obj, path: str) -> OutputSpec:
    obj = _mapping(obj, path)
    _check_keys(obj, ("path", "format"), path)
    fmt = obj.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(_join(path, "format"), f"expected csv or json, got {fmt!r}")
    out_path = obj.get("path")
    if out_path is not None and not isinstance(out_path, str):
        raise ConfigError(_join(path, "path"), "expected a string")
    return OutputSpec(out_path, fmt)


def parse_grid(obj, path: str) -> GridConfig:
    obj = _mapping(obj, path)
    _check_keys(obj, ("algorithm", "values", "n", "generations", "k_instances", "population",
                      "m_repeats", "seeds", "w", "v_max0", "threshold"), path)
    algo = obj.get("algorithm")
    if algo not in ("de", "pso"):
        raise ConfigError(_join(path, "algorithm"), f"expected de or pso, got {algo!r}")
    vals = obj.get("values")
    if not isinstance(vals, list) or not vals:
        raise ConfigError(_join(path, "values"), "expected a non-empty list")
    values = tuple(_number({"v": v}, "v", f"{path}.values[{i}]", lo=0.0, hi=1.0)
                   for i, v in enumerate(vals))
    return GridConfig(
        algorithm=algo, values=values,
        n=_number(obj, "n", path, default=10, lo=1, integer=True),
        generations=_number(obj, "generations", path, default=50, lo=0, integer=True),
        k_instances=_number(obj, "k_instances", path, default=1000, lo=1, integer=True),
        population=_number(obj, "population", path, default=20, lo=6, integer=True),
        m_repeats=_number(obj, "m_repeats", path, default=5, lo=1, integer=True),
        seeds=_int_list(obj.get("seeds", [0]), _join(path, "seeds"), lo=0),
        w=_number(obj, "w", path, default=0.8, lo=0.0),
        v_max0=_number(obj, "v_max0", path, default=0.2, lo=0.0),
        threshold=_number(obj, "threshold", path, default=CONVERGENCE_THRESHOLD, lo=0.0),
    )


def parse_binomial(obj, path: str) -> BinomialConfig:
    obj = _mapping(obj, path)
    _check_keys(obj, ("n", "repeats", "probabilities", "seed"), path)
    probs = obj.get("probabilities")
    if not isinstance(probs, list) or not probs:
        raise ConfigError(_join(path, "probabilities"), "expected a non-empty list")
    return BinomialConfig(
        n=_number(obj, "n", path, lo=1, integer=True),
        repeats=_number(obj, "repeats", path, lo=1, integer=True),
        probabilities=tuple(_number({"v": v}, "v", f"{path}.probabilities[{i}]", lo=0.0, hi=1.0)
                            for i, v in enumerate(probs)),
        seed=_number(obj, "seed", path, default=0, lo=0, integer=True),
    )


def parse_config(doc) -> ExperimentConfig | GridConfig | BinomialConfig:
    """Validate a loaded YAML document and build the matching config object."""
    doc = _mapping(doc, "")
    output = parse_output(doc.get("output", {}), "output")
    if "grid" in doc:
        _check_keys(doc, ("grid", "output"), "")
        cfg = parse_grid(doc["grid"], "grid")
        return replace(cfg, output=output)
    if "binomial" in doc:
        _check_keys(doc, ("binomial", "output"), "")
        cfg = parse_binomial(doc["binomial"], "binomial")
        return replace(cfg, output=output)
    _check_keys(doc, ("scenario", "optimizer", "n_range", "seeds", "eval", "output"), "")
    for key in ("scenario", "optimizer", "n_range"):
        if key not in doc:
            raise ConfigError(key, "missing required field")
    scen = _as_list(doc["scenario"])
    opts = _as_list(doc["optimizer"])
    scenarios = tuple(parse_scenario(s, f"scenario[{i}]") for i, s in enumerate(scen))
    optimizers = tuple(parse_optimizer(o, f"optimizer[{i}]") for i, o in enumerate(opts))
    for name, items in (("scenario", scenarios), ("optimizer", optimizers)):
        tags = [it.tag for it in items]
        for i, t in enumerate(tags):
            if t in tags[:i]:
                raise ConfigError(f"{name}[{i}]", f"duplicate entry {t!r}")
    return ExperimentConfig(
        scenarios=scenarios,
        optimizers=optimizers,
        n_range=_int_list(doc["n_range"], "n_range", lo=1),
        seeds=_int_list(doc.get("seeds", [0]), "seeds", lo=0),
        eval=parse_eval(doc.get("eval", {}), "eval"),
        output=output,
    )


def load_config(path) -> ExperimentConfig | GridConfig | BinomialConfig:
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"cannot parse {path}: {exc}") from None
    return parse_config(doc)


def preset_names() -> list[str]:
    root = resources.files("aqpe.harness") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str):
    root = resources.files("aqpe.harness") / "presets"
    res = root / f"{name}.yaml"
    if not res.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return parse_config(yaml.safe_load(res.read_text()))
