"""Seeded Monte Carlo sweeps over K or M for all schemes, with CSV/JSON export."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigTemplate
from .model import draw_channels
from .solver import Scheme, SolverOptions, solve

__all__ = ["SweepSpec", "SolveRecord", "Aggregate", "ExperimentResult", "run_sweep",
           "export", "load_result", "CSV_COLUMNS"]

log = logging.getLogger(__name__)

CSV_COLUMNS = ["scheme", "sweep_variable", "sweep_value", "realization", "seed", "mse",
               "misalignment", "noise_induced", "iterations", "converged", "wall_ms"]


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[int, ...]
    realizations: int = 200
    base_seed: int = 0

    def __post_init__(self):
        var = str(self.variable).upper()
        if var not in ("K", "M"):
            raise ValueError(f"sweep variable must be 'K' or 'M', got {self.variable!r}")
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise ValueError("sweep values must be nonempty")
        if any(v < 1 for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing positive integers")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        object.__setattr__(self, "variable", var)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SolveRecord:
    scheme: str
    sweep_variable: str
    sweep_value: int
    realization: int
    seed: int
    mse: float
    misalignment: float
    noise_induced: float
    iterations: int
    converged: bool
    wall_ms: float
    error: str = ""


@dataclass(frozen=True)
class Aggregate:
    scheme: str
    sweep_value: int
    mean: float
    stderr: float
    count: int


@dataclass
class ExperimentResult:
    sweep: SweepSpec
    schemes: tuple[str, ...]
    records: list[SolveRecord] = field(default_factory=list)
    aggregates: list[Aggregate] = field(default_factory=list)

    def aggregate(self, scheme, value) -> Aggregate:
        scheme = Scheme(scheme).value
        for a in self.aggregates:
            if a.scheme == scheme and a.sweep_value == value:
                return a
        raise KeyError((scheme, value))

    def means(self, scheme) -> list[float]:
        return [self.aggregate(scheme, v).mean for v in self.sweep.values]

    def to_dict(self) -> dict:
        return {
            "sweep": {"variable": self.sweep.variable, "values": list(self.sweep.values),
                      "realizations": self.sweep.realizations, "base_seed": self.sweep.base_seed},
            "schemes": list(self.schemes),
            "records": [asdict(r) for r in self.records],
            "aggregates": [asdict(a) for a in self.aggregates],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentResult":
        s = data["sweep"]
        sweep = SweepSpec(s["variable"], tuple(s["values"]), s["realizations"], s["base_seed"])
        return cls(sweep, tuple(data["schemes"]),
                   [SolveRecord(**r) for r in data["records"]],
                   [Aggregate(**a) for a in data["aggregates"]])


def _aggregate(records, schemes, values) -> list[Aggregate]:
    out = []
    for scheme in schemes:
        for v in values:
            vals = np.array([r.mse for r in records
                             if r.scheme == scheme and r.sweep_value == v and math.isfinite(r.mse)])
            n = vals.size
            mean = float(vals.mean()) if n else float("nan")
            se = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
            out.append(Aggregate(scheme, v, mean, se, n))
    return out


def _solve_one(task):
    """Solve every scheme on one channel draw (common random numbers)."""
    template, variable, value, index, seed, schemes, epsilon, max_iters, timing = task
    dims = {"num_wds": value} if variable == "K" else {"num_relays": value}
    cfg, geom = template.instantiate(**dims)
    chan = draw_channels(cfg, geom, np.random.default_rng(seed))
    out = []
    for scheme in schemes:
        t0 = time.perf_counter()
        try:
            tr = solve(cfg, chan, SolverOptions(epsilon, max_iters, Scheme(scheme)))
            b = tr.final
            rec = dict(mse=b.total, misalignment=b.misalignment, noise_induced=b.noise_induced,
                       iterations=tr.iterations, converged=tr.converged,
                       error="" if tr.converged else tr.message)
        except Exception as exc:  # one bad realization must not sink the sweep
            log.exception("solve failed for %s, %s=%d, realization %d", scheme, variable, value, index)
            rec = dict(mse=float("nan"), misalignment=float("nan"), noise_induced=float("nan"),
                       iterations=0, converged=False, error=f"{type(exc).__name__}: {exc}")
        wall = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        out.append(SolveRecord(scheme, variable, value, index, seed, wall_ms=wall, **rec))
    return out


def run_sweep(template: ConfigTemplate, sweep: SweepSpec, schemes=tuple(Scheme), *,
              epsilon: float = 1e-4, max_outer_iters: int = 200, workers: int = 1,
              timing: bool = True, progress=None) -> ExperimentResult:
    """Solve every scheme on ``sweep.realizations`` channel draws per sweep value.

    Realization ``i`` uses seed ``base_seed + i`` at every sweep value, and all
    schemes share that draw. Results are ordered by (value, realization, scheme)
    regardless of ``workers``. With ``timing=False`` the wall-time column is
    zero so the output is a pure function of the inputs.
    """
    schemes = tuple(Scheme(s).value for s in schemes)
    dim = {"K": "num_wds", "M": "num_relays"}[sweep.variable]
    for v in sweep.values:  # surface config errors before any work
        template.instantiate(**{dim: v})
    SolverOptions(epsilon, max_outer_iters)

    tasks = [(template, sweep.variable, v, i, sweep.base_seed + i, schemes, epsilon,
              max_outer_iters, timing)
             for v in sweep.values for i in range(sweep.realizations)]
    records: list[SolveRecord] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for n, chunk in enumerate(pool.map(_solve_one, tasks, chunksize=8)):
                records.extend(chunk)
                if progress:
                    progress(n + 1, len(tasks))
    else:
        for n, task in enumerate(tasks):
            records.extend(_solve_one(task))
            if progress:
                progress(n + 1, len(tasks))
    return ExperimentResult(sweep, schemes, records,
                            _aggregate(records, schemes, sweep.values))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def export(result: ExperimentResult, fmt: str, path) -> Path:
    """Write ``result`` as CSV (one row per solve) or JSON (everything, incl. aggregates)."""
    path = Path(path)
    fmt = fmt.lower()
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in result.records:
                w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    elif fmt == "json":
        path.write_text(json.dumps(result.to_dict(), indent=1))
    else:
        raise ValueError(f"unknown format {fmt!r}; use 'csv' or 'json'")
    return path


def load_result(path) -> ExperimentResult:
    return ExperimentResult.from_dict(json.loads(Path(path).read_text()))
