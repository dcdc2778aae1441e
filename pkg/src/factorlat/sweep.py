"""Parameter sweeps, h_f and pseudo-critical-field locators, cusp diagnostics."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .eigensolver import SolverConfig, ground_state
from .entanglement import entanglement_report
from .lattice import LatticeSpec
from .model import Hamiltonian, ModelParams
from .observables import measure

PARAMETERS = ("hz", "hx", "hy", "dy", "dz", "pin")
DIGITS = 12


class SweepError(ValueError):
    pass


def fmt(x) -> str:
    """12-significant-digit text form used for every float in output files."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.{DIGITS}g}"


def rounded(x):
    if x is None or isinstance(x, (bool, int, str, np.bool_, np.integer)):
        return x
    return float(fmt(x))


@dataclass(frozen=True)
class SweepGrid:
    parameter: str
    values: tuple[float, ...]
    params: ModelParams
    lattice: LatticeSpec

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise SweepError(f"unknown sweep parameter {self.parameter!r}")
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 1 or np.any(np.diff(vals) <= 0):
            raise SweepError("sweep values must be strictly increasing")

    @classmethod
    def from_range(cls, parameter: str, start: float, stop: float, step: float,
                   params: ModelParams, lattice: LatticeSpec) -> "SweepGrid":
        if not step > 0:
            raise SweepError("step must be positive")
        if stop < start:
            raise SweepError("stop must not be below start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        # integer multiples keep the grid exactly uniform and reproducible
        return cls(parameter, tuple(start + k * step for k in range(n)), params, lattice)

    def params_at(self, value: float) -> ModelParams:
        p = self.params
        hx, hy, hz = p.field
        if self.parameter == "hz":
            return replace(p, field=(hx, hy, value))
        if self.parameter == "hx":
            return replace(p, field=(value, hy, hz))
        if self.parameter == "hy":
            return replace(p, field=(hx, value, hz))
        if self.parameter == "dy":
            return replace(p, delta_y=value)
        if self.parameter == "dz":
            return replace(p, delta_z=value)
        return replace(p, pinning=value)

    def describe(self) -> dict:
        return {"parameter": self.parameter, "values": [rounded(v) for v in self.values],
                "model": self.params.describe(), "lattice": self.lattice.describe()}


@dataclass
class SweepRow:
    param: float
    energy: float = math.nan
    gap: float = math.nan
    gap_sector: float = math.nan
    degenerate: bool = False
    parity: int = 0
    M: tuple = (math.nan,) * 3
    g: dict = field(default_factory=dict)
    tau1: float = math.nan
    C: list = field(default_factory=list)
    branch: list = field(default_factory=list)
    C1: list = field(default_factory=list)
    C2: list = field(default_factory=list)
    tau2: float = math.nan
    R: float | None = None
    ckw_margin: float = math.nan
    residual: float = math.nan
    iters: int = 0
    sxx0: float = math.nan
    wootters_dev: float = math.nan
    tau1_dev: float = math.nan
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def _columns(labels: Sequence[str]) -> list[str]:
    cols = ["param", "energy", "gap", "degenerate", "Mx", "My", "Mz"]
    for lab in labels:
        cols += [f"gxx_{lab}", f"gyy_{lab}", f"gzz_{lab}"]
    cols.append("tau1")
    cols += [f"C_{lab}" for lab in labels]
    cols += [f"branch_{lab}" for lab in labels]
    cols += ["tau2", "R", "ckw_margin", "residual", "iters"]
    cols += ["gap_sector", "parity", "sxx0", "wootters_dev", "tau1_dev"]
    cols += [f"C1_{lab}" for lab in labels] + [f"C2_{lab}" for lab in labels]
    cols.append("error")
    return cols


def row_record(row: SweepRow, labels: Sequence[str]) -> dict:
    """Flat record with floats rounded to the output precision."""
    nan = math.nan
    rec = {"param": row.param, "energy": row.energy, "gap": row.gap,
           "degenerate": bool(row.degenerate),
           "Mx": row.M[0], "My": row.M[1], "Mz": row.M[2]}
    keys = list(row.g)
    for k, lab in enumerate(labels):
        g = row.g[keys[k]] if k < len(keys) else (nan, nan, nan)
        rec[f"gxx_{lab}"], rec[f"gyy_{lab}"], rec[f"gzz_{lab}"] = g
    rec["tau1"] = row.tau1
    for k, lab in enumerate(labels):
        rec[f"C_{lab}"] = row.C[k] if k < len(row.C) else nan
    for k, lab in enumerate(labels):
        rec[f"branch_{lab}"] = row.branch[k] if k < len(row.branch) else ""
    rec.update(tau2=row.tau2, R=row.R, ckw_margin=row.ckw_margin,
               residual=row.residual, iters=int(row.iters),
               gap_sector=row.gap_sector, parity=int(row.parity), sxx0=row.sxx0,
               wootters_dev=row.wootters_dev, tau1_dev=row.tau1_dev)
    for k, lab in enumerate(labels):
        rec[f"C1_{lab}"] = row.C1[k] if k < len(row.C1) else nan
    for k, lab in enumerate(labels):
        rec[f"C2_{lab}"] = row.C2[k] if k < len(row.C2) else nan
    rec["error"] = row.error
    return {k: rounded(v) for k, v in rec.items()}


@dataclass(frozen=True)
class PointTask:
    grid: SweepGrid
    index: int
    solver: SolverConfig
    want_gap: bool
    oracle: bool
    cutoff: int | None
    n_threads: int | None


def evaluate_point(task: PointTask) -> SweepRow:
    """Solve and measure one grid point; failures are recorded in the row."""
    grid = task.grid
    value = grid.values[task.index]
    row = SweepRow(param=value)
    try:
        ham = Hamiltonian(grid.params_at(value), grid.lattice, n_threads=task.n_threads)
        gs = ground_state(ham, task.solver, want_gap=task.want_gap)
        row.energy, row.gap, row.gap_sector = gs.energy, gs.gap, gs.gap_sector
        row.degenerate, row.parity = gs.degenerate, gs.parity
        row.residual, row.iters = gs.residual, gs.iterations
        obs = measure(gs.vector, grid.lattice)
        rep = entanglement_report(gs.vector, grid.lattice, obs, cutoff=task.cutoff,
                                  oracle=task.oracle)
        row.M = tuple(float(m) for m in obs.M)
        row.g = {k: tuple(float(x) for x in v) for k, v in obs.g.items()}
        row.sxx0 = obs.sxx0
        row.tau1, row.tau2, row.R = rep.tau1, rep.tau2, rep.ratio
        row.C = [c.value for c in rep.concurrences]
        row.branch = [c.branch for c in rep.concurrences]
        row.C1 = [c.c1 for c in rep.concurrences]
        row.C2 = [c.c2 for c in rep.concurrences]
        row.ckw_margin = rep.ckw_margin
        row.wootters_dev = rep.wootters_deviation
        row.tau1_dev = rep.tau1_deviation
    except Exception as exc:  # a failed point never aborts the sweep
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def default_jobs() -> int:
    env = os.environ.get("FACTORLAT_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(grid: SweepGrid, solver: SolverConfig = SolverConfig(),
              jobs: int | None = None, want_gap: bool = True, oracle: bool = True,
              cutoff: int | None = None) -> list[SweepRow]:
    """Evaluate every grid point; rows come back in grid order.

    Points are independent and each uses ``solver.seed``, so the rows do
    not depend on ``jobs``.
    """
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    threads = 1 if jobs > 1 else None
    tasks = [PointTask(grid, i, solver, want_gap, oracle, cutoff, threads)
             for i in range(len(grid.values))]
    if jobs == 1 or len(tasks) == 1:
        return [evaluate_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(evaluate_point, tasks))


def shell_labels(lattice: LatticeSpec) -> list[str]:
    return [sh.label for sh in lattice.shells]


def column(rows: Sequence[SweepRow], name: str) -> np.ndarray:
    out = []
    for r in rows:
        v = getattr(r, name)
        out.append(math.nan if v is None else v)
    return np.asarray(out, dtype=float)


@dataclass
class CrossingEstimate:
    found: bool
    field: float = math.nan
    bracket: tuple[float, float] = (math.nan, math.nan)


def find_concurrence_zero(rows: Sequence[SweepRow], shell: int = 0,
                          zero_tol: float = 1e-12) -> CrossingEstimate:
    """Field where the C1 and C2 branches of one shell cross.

    Below the factorizing field C2 dominates, above it C1 does; the crossing
    is where both vanish.  Among several upward crossings the one with the
    smallest concurrence at its brackets is returned.
    """
    good = [r for r in rows if r.ok and len(r.C1) > shell]
    if len(good) < 2:
        return CrossingEstimate(False)
    x = np.array([r.param for r in good])
    d = np.array([r.C1[shell] - r.C2[shell] for r in good])
    d[np.abs(d) <= zero_tol] = 0.0
    size = np.array([max(abs(r.C1[shell]), abs(r.C2[shell])) for r in good])
    best = None
    for k in range(len(x) - 1):
        if d[k] < 0 <= d[k + 1]:
            score = size[k] + size[k + 1]
            if best is None or score < best[0]:
                best = (score, k)
    if best is None:
        return CrossingEstimate(False)
    k = best[1]
    frac = -d[k] / (d[k + 1] - d[k])
    return CrossingEstimate(True, float(x[k] + frac * (x[k + 1] - x[k])),
                            (float(x[k]), float(x[k + 1])))


@dataclass
class GapMinimum:
    found: bool
    field: float = math.nan
    gap: float = math.nan
    index: int = -1
    at_boundary: bool = False
    label: str = "finite-size surrogate"


def find_gap_minimum(rows: Sequence[SweepRow], column_name: str = "gap_sector") -> GapMinimum:
    """Parabolic estimate of the gap-minimum field (pseudo-critical field)."""
    good = [r for r in rows if r.ok and np.isfinite(getattr(r, column_name))]
    if len(good) < 3:
        return GapMinimum(False)
    x = np.array([r.param for r in good])
    y = np.array([getattr(r, column_name) for r in good])
    k = int(np.argmin(y))
    if k == 0 or k == len(y) - 1:
        warnings.warn("gap minimum at the sweep boundary", stacklevel=2)
        return GapMinimum(True, float(x[k]), float(y[k]), k, True)
    x0, x1, x2 = x[k - 1:k + 2]
    y0, y1, y2 = y[k - 1:k + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 ** 2 * (y0 - y1) + x1 ** 2 * (y2 - y0) + x0 ** 2 * (y1 - y2)) / denom
    xm = -b / (2 * a) if a > 0 else x1
    xm = float(np.clip(xm, x0, x2))
    ym = float(np.polyval([a, b, y1 - a * x1 ** 2 - b * x1], xm)) if a > 0 else float(y1)
    return GapMinimum(True, xm, ym, k, False)


@dataclass
class Derivatives:
    x: np.ndarray
    forward: np.ndarray
    backward: np.ndarray
    central: np.ndarray
    cusp_score: np.ndarray

    def argmax_cusp(self) -> int:
        """Index into the full grid of the interior point with the largest score."""
        return int(np.nanargmax(self.cusp_score)) + 1


def derivative_diagnostics(x: Sequence[float], y: Sequence[float]) -> Derivatives:
    """One-sided and central differences at every interior grid point.

    The cusp score |f - b| / (|f| + |b| + 1e-12) is 0 for a smooth linear
    profile and 1 where the two one-sided slopes are equal and opposite.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3 or len(x) != len(y):
        raise SweepError("derivative diagnostics need >= 3 matching points")
    steps = np.diff(x)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise SweepError("derivative diagnostics need a uniform grid")
    h = steps[0]
    fwd = (y[2:] - y[1:-1]) / h
    bwd = (y[1:-1] - y[:-2]) / h
    cen = (y[2:] - y[:-2]) / (2 * h)
    score = np.abs(fwd - bwd) / (np.abs(fwd) + np.abs(bwd) + 1e-12)
    return Derivatives(x[1:-1], fwd, bwd, cen, score)


def interior_minima(y: Sequence[float]) -> list[int]:
    y = np.asarray(y, dtype=float)
    return [k for k in range(1, len(y) - 1) if y[k] < y[k - 1] and y[k] <= y[k + 1]]


# ---------------------------------------------------------------- output files

def write_csv(rows: Sequence[SweepRow], lattice: LatticeSpec, provenance: dict) -> str:
    labels = shell_labels(lattice)
    buf = io.StringIO()
    buf.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    cols = _columns(labels)
    writer.writerow(cols)
    for row in rows:
        rec = row_record(row, labels)
        writer.writerow([fmt(rec[c]) if not isinstance(rec[c], str) else rec[c]
                         for c in cols])
    return buf.getvalue()


def _parse(value: str):
    if value == "":
        return None
    try:
        if value.lstrip("-").isdigit():
            return int(value)
        return float(value)
    except ValueError:
        return value


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse a sweep CSV back into (provenance, records)."""
    lines = text.splitlines()
    prov = {}
    body = []
    for line in lines:
        if line.startswith("# ") and not body:
            prov = json.loads(line[2:])
        else:
            body.append(line)
    reader = csv.DictReader(body)
    records = []
    for raw in reader:
        rec = {}
        for k, v in raw.items():
            if k.startswith("branch_") or k == "error":
                rec[k] = v
            elif k == "degenerate":
                rec[k] = v == "1"
            else:
                rec[k] = _parse(v)
        records.append(rec)
    return prov, records


def _jsonable(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def write_json(rows: Sequence[SweepRow], lattice: LatticeSpec, provenance: dict,
               grid: SweepGrid | None = None, summary: dict | None = None) -> str:
    labels = shell_labels(lattice)
    doc = {"config": provenance,
           "grid": grid.describe() if grid is not None else None,
           "rows": [{k: _jsonable(v) for k, v in row_record(r, labels).items()}
                    for r in rows]}
    if summary is not None:
        doc["summary"] = summary
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def read_json(text: str) -> dict:
    doc = json.loads(text)
    for rec in doc.get("rows", []):
        for k, v in rec.items():
            if v is None and k not in ("R",):
                rec[k] = math.nan
    return doc
