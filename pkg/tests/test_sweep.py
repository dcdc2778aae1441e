import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from factorlat.eigensolver import SolverConfig
from factorlat.lattice import LatticeSpec
from factorlat.model import ModelParams
from factorlat.sweep import (SweepError, SweepGrid, SweepRow, column, derivative_diagnostics,
                             find_concurrence_zero, find_gap_minimum, read_csv, read_json,
                             row_record, run_sweep, shell_labels, write_csv, write_json)

CHAIN8 = LatticeSpec.chain(8)


def grid(values, lattice=CHAIN8, dy=0.25, parameter="hz", **kw):
    p = ModelParams.for_lattice(lattice, delta_y=dy, delta_z=1.0, **kw)
    return SweepGrid(parameter, tuple(values), p, lattice)


def test_grid_validation():
    with pytest.raises(SweepError):
        grid([1.0, 1.0, 2.0])
    with pytest.raises(SweepError):
        grid([1.0], parameter="temperature")
    with pytest.raises(SweepError):
        SweepGrid.from_range("hz", 0, 1, 0, grid([0]).params, CHAIN8)
    g = SweepGrid.from_range("hz", 0.0, 1.0, 0.1, grid([0]).params, CHAIN8)
    assert len(g.values) == 11 and g.values[-1] == pytest.approx(1.0)
    assert g.params_at(0.3).field == (0, 0, 0.3)
    assert g.__class__("dy", (0.5,), g.params, CHAIN8).params_at(0.5).delta_y == 0.5


def test_large_field_sweep_polarizes():
    # tau1 ~ (J/h)^2: unit exchange, as in the raw model
    rows = run_sweep(grid([50.0, 75.0, 100.0], exchange=1.0), jobs=1)
    tau1 = column(rows, "tau1")
    assert np.all(tau1 <= 1e-4)
    assert np.all(np.diff(tau1) < 0)
    assert all(r.ok for r in rows)


def test_row_invariants_small_sweep():
    rows = run_sweep(grid(np.arange(0.0, 5.01, 0.5)), jobs=1)
    for r in rows:
        assert r.ok
        assert r.ckw_margin >= -1e-9
        assert r.wootters_dev <= 1e-10
        assert r.tau1_dev <= 1e-12
        assert r.residual <= 1e-10


def test_failed_points_recorded_and_sweep_continues():
    rows = run_sweep(grid([1.0, 2.0]), SolverConfig(max_iterations=2, krylov_size=2), jobs=1)
    assert len(rows) == 2
    assert all("ConvergenceError" in r.error for r in rows)
    rec = row_record(rows[0], shell_labels(CHAIN8))
    assert math.isnan(rec["energy"]) and rec["error"]


def test_determinism_and_jobs_independence():
    g = grid([2.0, 3.0, 4.0], pinning=1e-3)
    prov = {"case": "determinism"}
    a = write_csv(run_sweep(g, jobs=1), CHAIN8, prov)
    b = write_csv(run_sweep(g, jobs=1), CHAIN8, prov)
    c = write_csv(run_sweep(g, jobs=2), CHAIN8, prov)
    assert a == b == c


def test_csv_and_json_round_trip():
    g = grid([0.0, 3.0, 40.0])
    rows = run_sweep(g, jobs=1)
    labels = shell_labels(CHAIN8)
    records = [row_record(r, labels) for r in rows]
    prov = {"version": "test", "seed": 0}

    text = write_csv(rows, CHAIN8, prov)
    prov_back, parsed = read_csv(text)
    assert prov_back == prov
    assert len(parsed) == len(records)
    for rec, back in zip(records, parsed):
        for key, value in rec.items():
            if isinstance(value, float) and math.isnan(value):
                assert math.isnan(back[key]), key
            else:
                assert back[key] == value, key
    header = text.splitlines()[1].split(",")
    assert header[:7] == ["param", "energy", "gap", "degenerate", "Mx", "My", "Mz"]
    assert header[7:10] == ["gxx_d1", "gyy_d1", "gzz_d1"]

    doc = read_json(write_json(rows, CHAIN8, prov, g))
    assert doc["config"] == prov and doc["grid"]["parameter"] == "hz"
    for rec, back in zip(records, doc["rows"]):
        for key, value in rec.items():
            if value is None or (isinstance(value, float) and math.isnan(value)):
                assert back[key] is None or math.isnan(back[key])
            else:
                assert back[key] == value, key
    # R is undefined at the polarized point
    assert records[-1]["R"] is None or records[-1]["tau1"] >= 1e-8


def synthetic(xs, c1, c2, gap=None):
    rows = []
    for k, x in enumerate(xs):
        r = SweepRow(param=float(x))
        r.C1, r.C2 = [float(c1[k])], [float(c2[k])]
        if gap is not None:
            r.gap_sector = float(gap[k])
        rows.append(r)
    return rows


def test_concurrence_zero_synthetic():
    xs = np.linspace(0, 2, 21)
    rows = synthetic(xs, xs - 1.23, 1.23 - xs)
    est = find_concurrence_zero(rows)
    assert est.found and est.field == pytest.approx(1.23)
    assert est.bracket == pytest.approx((1.2, 1.3))
    assert not find_concurrence_zero(synthetic(xs, -1 - xs, xs)).found


def test_concurrence_zero_touching_zero():
    # both branches reach exactly zero (saturation) without changing sign
    xs = np.linspace(3, 5, 5)
    rows = synthetic(xs, [-0.3, -0.1, 0.0, 0.0, 0.0], [0.2, 0.05, 0.0, 0.0, 0.0])
    assert find_concurrence_zero(rows).field == pytest.approx(4.0)


def test_gap_minimum_synthetic():
    xs = np.linspace(0, 4, 41)
    est = find_gap_minimum(synthetic(xs, xs, xs, gap=(xs - 2.345) ** 2 + 0.1))
    assert est.found and not est.at_boundary
    assert est.field == pytest.approx(2.345, abs=1e-9)
    assert est.label == "finite-size surrogate"
    with pytest.warns(UserWarning, match="boundary"):
        est = find_gap_minimum(synthetic(xs, xs, xs, gap=xs + 1))
    assert est.at_boundary


def test_derivatives():
    x = np.linspace(0, 1, 11)
    d = derivative_diagnostics(x, 3 * x + 1)
    assert np.allclose(d.central, 3) and np.allclose(d.cusp_score, 0)
    d = derivative_diagnostics(x, np.abs(x - 0.4))
    assert d.cusp_score[3] == pytest.approx(1.0)
    assert x[d.argmax_cusp()] == pytest.approx(0.4)
    with pytest.raises(SweepError):
        derivative_diagnostics([0, 1, 3], [0, 1, 2])
    with pytest.raises(SweepError):
        derivative_diagnostics([0, 1], [0, 1])


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 1))
def test_cusp_score_bounds(a, b, h):
    x = np.arange(6) * h
    y = np.where(x < 2.5 * h, a * x, a * 2.5 * h + b * (x - 2.5 * h))
    d = derivative_diagnostics(x, y)
    assert np.all((d.cusp_score >= 0) & (d.cusp_score <= 1 + 1e-12))


def test_concurrence_zero_stable_under_refinement():
    lat = LatticeSpec.chain(10)
    coarse = find_concurrence_zero(run_sweep(grid(np.arange(2.8, 3.6, 0.1), lat), jobs=1))
    fine = find_concurrence_zero(run_sweep(grid(np.arange(2.8, 3.6, 0.05), lat), jobs=1))
    assert coarse.found and fine.found
    assert abs(coarse.field - fine.field) < 0.1
