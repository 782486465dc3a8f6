import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ci_lab.analysis import (CiCurve, CrossingError, collapse_objective, find_crossing, fss_collapse, parse_grid,
                             sign_changes, threshold_table)

GRID = np.linspace(0.0, 1.0, 51)


def line(a, b, x=GRID, label="line"):
    return CiCurve(label, x, a + b * x, np.zeros_like(x))


def test_curve_validation():
    with pytest.raises(ValueError):
        CiCurve("bad", [0.0, 0.0], [1.0, 1.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        CiCurve("bad", [0.0, 1.0], [1.0], [0.0])
    with pytest.raises(ValueError):
        CiCurve("bad", [0.0, 1.0], [1.0, 1.0], [-1.0, 0.0])


def test_csv_roundtrip():
    c = CiCurve("c", [0.1, 0.2], [0.5, 1 / 3], [0.0, 0.01], meta={"axis": "p"})
    back = CiCurve.from_csv("# comment\n" + c.to_csv())
    assert c.to_csv().splitlines()[0] == "p,ci,stderr"
    assert np.array_equal(back.x, c.x) and np.array_equal(back.ci, c.ci) and np.array_equal(back.stderr, c.stderr)


def test_erasure_line_versus_zero():
    xc, unc = find_crossing(line(1.0, -2.0), line(0.0, 0.0))
    assert xc == pytest.approx(0.5, abs=1e-15)
    # lands on a grid point: the uncertainty spans the two neighbouring steps
    assert unc == pytest.approx(0.04)


@given(st.floats(-2, 2), st.floats(-3, 3), st.floats(-2, 2), st.floats(-3, 3))
def test_lines_cross_exactly(a1, b1, a2, b2):
    if abs(b1 - b2) < 1e-3:
        return
    xc = (a2 - a1) / (b1 - b2)
    if not 0.01 < xc < 0.99 or np.min(np.abs((a1 - a2) + (b1 - b2) * GRID)) < 1e-9:
        return
    got, _ = find_crossing(line(a1, b1), line(a2, b2))
    assert got == pytest.approx(xc, abs=1e-9)


def test_identical_curves():
    with pytest.raises(CrossingError, match="no sign change"):
        find_crossing(line(1.0, -1.0), line(1.0, -1.0))


def test_multiple_sign_changes():
    wave = CiCurve("sin", GRID, np.sin(12 * GRID), np.zeros_like(GRID))
    with pytest.raises(CrossingError, match="multiple"):
        find_crossing(wave, line(0.0, 0.0))


def test_touching_at_edge_is_not_a_crossing():
    a = CiCurve("a", GRID, 1 - GRID ** 2, np.zeros_like(GRID))
    b = CiCurve("b", GRID, 1 - GRID, np.zeros_like(GRID))
    # equal at x=0 and x=1 only
    with pytest.raises(CrossingError):
        find_crossing(a, b)
    assert sign_changes(np.array([0.0, 1.0, 0.0, -1.0])) == [(1, 3)]


def test_window_and_grid_checks():
    wave = CiCurve("sin", GRID, np.sin(12 * GRID), np.zeros_like(GRID))
    xc, _ = find_crossing(wave, line(0.0, 0.0), window=(0.1, 0.4))
    assert xc == pytest.approx(np.pi / 12, abs=2e-3)
    with pytest.raises(ValueError):
        find_crossing(line(0, 1), line(1, 0, x=GRID[:-1]))


def test_crossing_uncertainty_includes_stderr():
    a = CiCurve("a", GRID, 1 - 2 * GRID, np.full(GRID.shape, 0.01))
    _, unc = find_crossing(a, line(0.0, 0.0))
    assert unc > 0.02


def synthetic(e_th, nu, distances, noise, seed, k=1.0):
    rng = np.random.default_rng(seed)
    x = np.linspace(0.3, 0.7, 41)
    out = []
    for d in distances:
        u = (x - e_th) * d ** (1 / nu)
        y = k * (0.5 - 0.5 * np.tanh(1.5 * u + 0.3 * u ** 2))
        out.append(CiCurve(f"d={d}", x, y + noise * rng.standard_normal(x.size), np.full(x.size, noise),
                           meta={"d": d, "k": k}))
    return out


@pytest.mark.parametrize("e_th,nu", [(0.5, 1.33), (0.47, 0.8), (0.53, 2.0)])
def test_collapse_recovers_planted(e_th, nu):
    curves = synthetic(e_th, nu, [5, 7, 9, 13], noise=0.002, seed=1)
    res = fss_collapse(curves, bootstrap=20, seed=3)
    se, snu = res.bootstrap_errors
    assert abs(res.e_th - e_th) <= max(4 * se, 2e-3)
    # the local-linear master curve biases nu by up to ~3% when the scaled curves saturate
    assert abs(res.nu - nu) <= max(4 * snu, 0.04 * nu)
    assert res.residual >= 0 and not res.at_boundary


def test_collapse_small_codes_small_nu():
    res = fss_collapse(synthetic(0.5, 0.75, [3, 5, 7], 0.0, 0), bootstrap=0)
    assert res.nu == pytest.approx(0.75, abs=0.02) and res.e_th == pytest.approx(0.5, abs=1e-3)


def test_collapse_normalizes_by_k():
    a = fss_collapse(synthetic(0.5, 1.2, [5, 7, 9], 0.0, 0), bootstrap=0)
    b = fss_collapse(synthetic(0.5, 1.2, [5, 7, 9], 0.0, 0, k=3.0), bootstrap=0)
    assert a.e_th == pytest.approx(b.e_th, abs=1e-6) and a.nu == pytest.approx(b.nu, abs=1e-5)


def test_collapse_needs_three_distances():
    with pytest.raises(ValueError):
        fss_collapse(synthetic(0.5, 1.2, [5, 7], 0.0, 0))


def test_collapse_objective_minimal_at_truth():
    curves = synthetic(0.5, 1.0, [5, 9, 13], 0.0, 0)
    xs = np.concatenate([c.x for c in curves])
    ys = np.concatenate([c.ci for c in curves])
    ds = np.concatenate([np.full(c.x.size, c.meta["d"]) for c in curves])
    gs = np.concatenate([np.full(c.x.size, i) for i, c in enumerate(curves)])
    truth = collapse_objective(xs, ys, ds, gs, 0.5, 1.0)
    assert truth < collapse_objective(xs, ys, ds, gs, 0.46, 1.0)
    assert truth < collapse_objective(xs, ys, ds, gs, 0.5, 1.6)
    assert collapse_objective(xs, ys, ds, gs, 0.5, -1.0) == np.inf


def test_parse_grid():
    assert np.allclose(parse_grid("0:0.7:0.1"), np.arange(8) * 0.1)
    assert parse_grid("0.1,0.2,0.4").tolist() == [0.1, 0.2, 0.4]
    for bad in ("0:1:0", "1:0:0.1", "a:b:c", "0.2,0.1"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_threshold_table_pure():
    config = {"pairs": [["surface:1", "color:3"]], "e": [0.0, 0.2], "families": ["bf"],
              "grids": {"bf": "0.002:0.2:0.002"}}
    a, b = threshold_table(config), threshold_table(config)
    assert a == b
    assert [r["e"] for r in a] == [0.0, 0.2]
    assert a[0]["crossing"] == pytest.approx(0.10853, abs=0.002)
