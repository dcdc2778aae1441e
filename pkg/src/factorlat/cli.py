"""``factorlat`` command line: ground-state solves, sweeps, factorization."""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .eigensolver import SolverConfig
from .factorization import (certify_factorization, ellipsoid_field, factorized_energy,
                            product_angles_xyx, variational_product_solve)
from .kernels import BACKEND
from .lattice import LatticeError, LatticeSpec, coordination
from .model import MAX_SITES, ModelParams
from .sweep import (SweepError, SweepGrid, default_jobs, find_concurrence_zero,
                    find_gap_minimum, rounded, run_sweep, write_csv, write_json)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_CERT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser, lattice_required: bool) -> None:
    p.add_argument("--config", help="flat key=value file; explicit flags override it")
    g = p.add_argument_group("lattice")
    g.add_argument("--lattice", choices=("chain", "square"), default=None,
                   required=False)
    g.add_argument("--L", type=int, help="length (chain) or Lx (square)")
    g.add_argument("--Ly", type=int, help="Ly for the square lattice (default Lx)")
    g.add_argument("--bc", choices=("periodic", "open"), default=None)
    g = p.add_argument_group("model")
    g.add_argument("--dy", type=float, help="Delta_y")
    g.add_argument("--dz", type=float, help="Delta_z")
    for axis in "xyz":
        g.add_argument(f"--h{axis}", type=float, help=f"uniform field along {axis}")
    g.add_argument("--pin", type=float, help="staggered pinning field epsilon")
    g.add_argument("--norm", choices=("square", "unit"), default=None,
                   help="'square': J = 4/coordination (default); 'unit': J = 1")
    g = p.add_argument_group("solver")
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int, dest="max_iter")
    g.add_argument("--seed", type=int)
    g = p.add_argument_group("output")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--out", help="output file (default: standard output)")
    p.set_defaults(lattice_required=lattice_required)


DEFAULTS = dict(lattice=None, L=None, Ly=None, bc="periodic", dy=1.0, dz=1.0,
                hx=0.0, hy=0.0, hz=0.0, pin=0.0, norm="square", tol=1e-10,
                max_iter=500, seed=0, format="csv", out=None, jobs=None,
                param="hz", start=None, stop=None, step=None, direction=None,
                oracle=True)

TYPES = dict(L=int, Ly=int, max_iter=int, seed=int, jobs=int, dy=float, dz=float,
             hx=float, hy=float, hz=float, pin=float, tol=float, start=float,
             stop=float, step=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="factorlat", description=__doc__)
    parser.add_argument("--version", action="version", version=f"factorlat {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ground", help="ground state and observables at one point")
    _add_common(p, True)

    p = sub.add_parser("sweep", help="scan one parameter over a uniform grid")
    _add_common(p, True)
    p.add_argument("--param", choices=("hz", "hx", "hy", "dy", "dz", "pin"))
    p.add_argument("--from", type=float, dest="start")
    p.add_argument("--to", type=float, dest="stop")
    p.add_argument("--step", type=float)
    p.add_argument("--jobs", type=int, help="worker processes (env FACTORLAT_JOBS)")
    p.add_argument("--no-oracle", action="store_false", dest="oracle", default=None,
                   help="skip the Wootters concurrence cross-check")

    p = sub.add_parser("factorize", help="certify the factorized ground state")
    _add_common(p, False)
    p.add_argument("--direction", help="field direction ux,uy,uz (default 0,0,1)")
    return parser


def read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{n}: unknown key {key!r}")
            try:
                values[key] = TYPES.get(key, str)(value)
            except ValueError as exc:
                raise UsageError(f"{path}:{n}: {exc}") from None
    return values


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            cfg.update(read_config_file(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
    cfg["command"] = args.command
    if cfg["command"] == "factorize":
        cfg["lattice"] = cfg["lattice"] or "chain"
        if cfg["L"] is None:
            cfg["L"] = 10 if cfg["lattice"] == "chain" else 4
    if cfg["lattice"] is None:
        raise UsageError("--lattice is required")
    if cfg["L"] is None:
        raise UsageError("--L is required")
    return cfg


def make_lattice(cfg: dict) -> LatticeSpec:
    if cfg["lattice"] == "chain":
        if cfg["Ly"] is not None:
            raise UsageError("--Ly only applies to the square lattice")
        lat = LatticeSpec.chain(cfg["L"], cfg["bc"])
    else:
        lat = LatticeSpec.square(cfg["L"], cfg["Ly"] or cfg["L"], cfg["bc"])
    if lat.n_sites > MAX_SITES:
        raise UsageError(f"N={lat.n_sites} exceeds the site cap of {MAX_SITES}")
    return lat


def make_params(cfg: dict, lattice: LatticeSpec) -> ModelParams:
    kw = dict(delta_y=cfg["dy"], delta_z=cfg["dz"],
              field=(cfg["hx"], cfg["hy"], cfg["hz"]), pinning=cfg["pin"])
    if cfg["norm"] == "unit":
        return ModelParams(**kw)
    return ModelParams.for_lattice(lattice, **kw)


# settings that change where or how fast output is produced, never its content
_EXECUTION_KEYS = ("out", "jobs")


def provenance(cfg: dict, lattice: LatticeSpec, params: ModelParams) -> dict:
    return {"artifact": "factorlat", "version": __version__, "backend": BACKEND,
            "config": {k: v for k, v in sorted(cfg.items()) if k not in _EXECUTION_KEYS},
            "lattice": lattice.describe(), "model": params.describe()}


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solver(cfg: dict) -> SolverConfig:
    return SolverConfig(tolerance=cfg["tol"], max_iterations=cfg["max_iter"],
                        seed=cfg["seed"])


def cmd_ground(cfg: dict) -> int:
    lattice = make_lattice(cfg)
    params = make_params(cfg, lattice)
    value = params.field[2]
    grid = SweepGrid("hz", (value,), params, lattice)
    rows = run_sweep(grid, _solver(cfg), jobs=1)
    prov = provenance(cfg, lattice, params)
    writer = write_json if cfg["format"] == "json" else write_csv
    emit(writer(rows, lattice, prov), cfg["out"])
    if rows[0].error:
        print(f"factorlat: solver failure: {rows[0].error}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    for key, flag in (("start", "--from"), ("stop", "--to"), ("step", "--step")):
        if cfg[key] is None:
            raise UsageError(f"{flag} is required")
    lattice = make_lattice(cfg)
    params = make_params(cfg, lattice)
    try:
        grid = SweepGrid.from_range(cfg["param"], cfg["start"], cfg["stop"], cfg["step"],
                                    params, lattice)
    except SweepError as exc:
        raise UsageError(str(exc)) from None
    jobs = cfg["jobs"] if cfg["jobs"] is not None else default_jobs()
    rows = run_sweep(grid, _solver(cfg), jobs=jobs, oracle=cfg["oracle"])

    summary = {}
    cross = find_concurrence_zero(rows)
    summary["h_f"] = rounded(cross.field) if cross.found else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        gmin = find_gap_minimum(rows)
    summary["gap_minimum"] = rounded(gmin.field) if gmin.found else None
    summary["gap_minimum_at_boundary"] = gmin.at_boundary
    prov = provenance(cfg, lattice, params)
    if cfg["format"] == "json":
        text = write_json(rows, lattice, prov, grid, summary)
    else:
        text = write_csv(rows, lattice, prov)
    emit(text, cfg["out"])

    failed = sum(1 for r in rows if r.error)
    hf = f"{cross.field:.6g}" if cross.found else "not found"
    gm = f"{gmin.field:.6g} ({gmin.label}{', at boundary' if gmin.at_boundary else ''})" \
        if gmin.found else "not found"
    print(f"h_f estimate: {hf}; gap minimum: {gm}; failed points: {failed}/{len(rows)}",
          file=sys.stderr)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return EXIT_SOLVER if failed == len(rows) else EXIT_OK


def _direction(text: str | None) -> np.ndarray:
    if text is None:
        return np.array([0.0, 0.0, 1.0])
    try:
        u = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise UsageError("--direction expects ux,uy,uz") from None
    if u.shape != (3,) or not np.linalg.norm(u) > 0:
        raise UsageError("--direction must be a non-zero 3-vector")
    return u / np.linalg.norm(u)


def cmd_factorize(cfg: dict) -> int:
    lattice = make_lattice(cfg)
    u = _direction(cfg["direction"])
    dy, dz = cfg["dy"], cfg["dz"]
    h = ellipsoid_field(dy, dz, u)
    cfg = dict(cfg, hx=float(h[0]), hy=float(h[1]), hz=float(h[2]))
    params = make_params(cfg, lattice)
    if cfg["norm"] == "unit":
        # the ellipsoid refers to J = 4/z; with J = 1 the field scales by z/4
        params = params.with_field(tuple(h * coordination(lattice) / 4))
    closed_form = dz == 1 and u[0] == 0 and u[1] == 0 and u[2] > 0 and dy > 0 \
        and cfg["pin"] == 0
    if closed_form:
        angles = product_angles_xyx(dy)
        method = "closed-form"
    else:
        angles, _ = variational_product_solve(params, lattice, seed=cfg["seed"])
        method = "variational"
    cert = certify_factorization(params, lattice, angles, _solver(cfg))
    doc = {"config": provenance(cfg, lattice, params),
           "certificate": {**{k: _round(v) for k, v in cert.describe().items()},
                           "method": method,
                           "expected_energy_per_site": rounded(factorized_energy(dy, dz)),
                           "lattice": lattice.describe()}}
    emit(json.dumps(doc, indent=1) + "\n", cfg["out"])
    if not cert.valid:
        print(f"factorlat: certification failed (residual {cert.residual:.3e}, "
              f"is_ground {cert.is_ground})", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def _round(v):
    if isinstance(v, dict):
        return {k: _round(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_round(x) for x in v]
    if isinstance(v, float) and math.isnan(v):
        return None
    return rounded(v)


COMMANDS = {"ground": cmd_ground, "sweep": cmd_sweep, "factorize": cmd_factorize}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"factorlat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LatticeError, ValueError) as exc:
        print(f"factorlat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
