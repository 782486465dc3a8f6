import numpy as np
import pytest

from ci_lab.codes import (CssCode, build_color_488, build_lcs, build_rotated_surface, build_toric,
                          distance_bruteforce, from_spec, validate)
from ci_lab.gf2_linalg import BitMatrix, dense_rank

ALL_SPECS = ["surface:1", "surface:3", "surface:5", "surface:7", "color:3", "color:5", "color:7",
             "toric:2", "toric:3", "toric:4", "lcs:2,1", "lcs:3,1", "lcs:4,1", "lcs:3,2", "lcs:5,2"]


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_invariants(spec):
    report = validate(from_spec(spec))
    assert report.ok, report.failures


@pytest.mark.parametrize("L", range(2, 7))
@pytest.mark.parametrize("ell", range(1, 4))
def test_lcs_parameters(L, ell):
    code = build_lcs(L, ell)
    assert code.n == ((ell + 1) ** 2 + ell ** 2) * L
    assert code.k == L
    assert code.declared_distance == min(L, 2 * ell + 1)
    assert validate(code).ok


@pytest.mark.parametrize("d,n", [(1, 1), (3, 9), (5, 25), (7, 49)])
def test_surface_size(d, n):
    code = build_rotated_surface(d)
    assert (code.n, code.k) == (n, 1)


def test_surface_d1_is_bare_qubit():
    code = build_rotated_surface(1)
    assert code.hx.rows == code.hz.rows == 0
    assert code.lx.to_dense().tolist() == [[1]] and code.lz.to_dense().tolist() == [[1]]


def test_surface_d5_ranks():
    code = build_rotated_surface(5)
    assert dense_rank(code.hx_dense) == dense_rank(code.hz_dense) == 12


@pytest.mark.parametrize("d", [3, 5, 7, 9])
def test_surface_participation(d):
    code = build_rotated_surface(d)
    px, pz = code.hx_dense.sum(axis=0), code.hz_dense.sum(axis=0)
    assert px.max() <= 2 and pz.max() <= 2
    boundary = [i * d + j for i in range(d) for j in range(d) if i in (0, d - 1) or j in (0, d - 1)]
    assert all(min(px[q], pz[q]) == 1 for q in boundary)


@pytest.mark.parametrize("d", [3, 5, 7, 9, 11])
def test_color_size_and_participation(d):
    code = build_color_488(d)
    assert (code.n, code.k) == ((d * d - 1) // 2 + d, 1)
    assert np.array_equal(code.hx_dense, code.hz_dense)
    assert code.hx_dense.sum(axis=0).max() <= 3
    assert set(code.hx_dense.sum(axis=1).tolist()) <= {4, 8}


def test_steane_ranks():
    code = build_color_488(3)
    assert dense_rank(code.hx_dense) == dense_rank(code.hz_dense) == 3


def test_toric():
    code = build_toric(2)
    assert (code.n, code.k) == (8, 2)
    code3 = build_toric(3)
    assert dense_rank(code3.hx_dense) == dense_rank(code3.hz_dense) == 8


def test_toric_plaquettes_multiply_to_identity():
    d = 3
    code = build_toric(d)
    # the dropped plaquette equals the sum of all kept ones
    dropped = code.hz_dense.sum(axis=0) % 2
    assert dropped.sum() == 4


@pytest.mark.parametrize("spec,expected", [
    ("surface:1", 1), ("surface:3", 3), ("surface:5", 5), ("color:3", 3), ("color:5", 5), ("color:7", 7),
    ("toric:2", 2), ("toric:3", 3), ("toric:4", 4),
])
def test_distance(spec, expected):
    code = from_spec(spec)
    assert distance_bruteforce(code, "X") == distance_bruteforce(code, "Z") == expected


@pytest.mark.parametrize("L,ell", [(2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (2, 2), (3, 2)])
def test_lcs_distance(L, ell):
    code = build_lcs(L, ell)
    for sector in ("X", "Z"):
        assert distance_bruteforce(code, sector) == min(L, 2 * ell + 1)


def test_distance_bound():
    with pytest.raises(ValueError):
        distance_bruteforce(build_rotated_surface(9), "X")


def test_flipped_bit_breaks_orthogonality():
    code = build_color_488(3)
    hx = code.hx_dense.copy()
    hx[0, np.flatnonzero(hx[0] == 0)[0]] ^= 1
    bad = CssCode(code.name, code.n, code.k, BitMatrix.from_dense(hx), code.hz, code.lx, code.lz, 3)
    assert any("orthogonality" in f for f in validate(bad).failures)


@pytest.mark.parametrize("bad", [("surface", 4), ("surface", 0), ("color", 1), ("color", 4), ("toric", 1)])
def test_invalid_parameters(bad):
    family, d = bad
    builder = {"surface": build_rotated_surface, "color": build_color_488, "toric": build_toric}[family]
    with pytest.raises(ValueError):
        builder(d)
    with pytest.raises(ValueError):
        build_lcs(1, 1)
    with pytest.raises(ValueError):
        from_spec("hexagon:3")
