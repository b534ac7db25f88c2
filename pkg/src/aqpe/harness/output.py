"""Result rows and their CSV/JSON rendering."""
from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

RESULT_COLUMNS = ("scenario", "optimizer", "n", "seed", "ln_vh", "sharpness",
                  "generations", "terminal_l", "wall_time_s")
GRID_COLUMNS = ("algorithm", "param_a", "param_b", "seed", "terminal_l", "ln_vh",
                "converged", "generations")
BINOMIAL_COLUMNS = ("p", "n_zero", "observed", "expected")


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    optimizer: str
    n: int
    seed: int
    ln_vh: float
    sharpness: float
    generations: int
    terminal_l: float
    wall_time_s: float = 0.0

    def key(self):
        return (self.scenario, self.optimizer, self.n, self.seed)


@dataclass(frozen=True)
class GridRow:
    """One cell of a hyperparameter sweep; ``param_a, param_b`` are (F, C) or (alpha, beta)."""

    algorithm: str
    param_a: float
    param_b: float
    seed: int
    terminal_l: float
    ln_vh: float
    converged: bool
    generations: int

    def key(self):
        return (self.algorithm, self.param_a, self.param_b, self.seed)


@dataclass(frozen=True)
class BinomialRow:
    p: float
    n_zero: int
    observed: int
    expected: float

    def key(self):
        return (self.p, self.n_zero)


def format_float(x: float) -> str:
    """Ten significant digits; ``inf``/``-inf``/``nan`` spelled out."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.10g}"


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return format_float(v)
    if isinstance(v, float):
        return float(format_float(v))
    return v


def render(rows, fmt: str = "csv") -> str:
    """Render rows sorted by their key, as CSV or as a JSON array of objects."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    rows.sort(key=lambda r: r.key())
    columns = list(asdict(rows[0]))
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        for r in rows:
            buf.write(",".join(_cell(getattr(r, c)) for c in columns) + "\n")
        return buf.getvalue()
    if fmt == "json":
        objs = [{c: _json_value(getattr(r, c)) for c in columns} for r in rows]
        return json.dumps(objs, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_results(rows, fmt: str, path) -> Path:
    """Write rendered rows to ``path``; I/O failures propagate as ``OSError``."""
    text = render(rows, fmt)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
