"""CSS code families: rotated surface, 4.8.8 color, toric and lift-connected surface codes."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .gf2_linalg import BitMatrix, dense_null_space, dense_rank, rref


@dataclass(frozen=True)
class CssCode:
    """A CSS code given by X/Z check matrices and paired logical generators.

    ``lx[i]`` and ``lz[i]`` form the i-th logical pair (``lx @ lz.T == I``).
    """

    name: str
    n: int
    k: int
    hx: BitMatrix
    hz: BitMatrix
    lx: BitMatrix
    lz: BitMatrix
    declared_distance: int
    meta: dict = field(default_factory=dict, compare=False)

    @cached_property
    def hx_dense(self) -> np.ndarray:
        return self.hx.to_dense()

    @cached_property
    def hz_dense(self) -> np.ndarray:
        return self.hz.to_dense()

    @cached_property
    def lx_dense(self) -> np.ndarray:
        return self.lx.to_dense()

    @cached_property
    def lz_dense(self) -> np.ndarray:
        return self.lz.to_dense()

    def __str__(self) -> str:
        return f"{self.name} [[{self.n},{self.k},{self.declared_distance}]]"


@dataclass
class ValidationReport:
    code: str
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        if self.ok:
            return f"{self.code}: all invariants hold"
        return f"{self.code}: " + "; ".join(self.failures)


def _as_matrix(rows, n: int) -> BitMatrix:
    arr = np.asarray(rows, dtype=np.uint8).reshape(-1, n)
    return BitMatrix.from_dense(arr)


def _support_rows(supports: list[list[int]], n: int) -> np.ndarray:
    h = np.zeros((len(supports), n), dtype=np.uint8)
    for i, s in enumerate(supports):
        h[i, s] ^= 1
    return h


def _gf2_inverse(m: np.ndarray) -> np.ndarray:
    size = m.shape[0]
    aug = np.hstack([m % 2, np.eye(size, dtype=np.uint8)]).astype(np.uint8)
    red, piv = rref(BitMatrix.from_dense(aug))
    if piv[:size] != list(range(size)):
        raise ValueError("matrix is singular over GF(2)")
    return red.to_dense()[:, size:]


def _independent_mod(candidates: np.ndarray, base: np.ndarray, count: int) -> np.ndarray:
    """Pick ``count`` rows of ``candidates`` independent modulo the row space of ``base``."""
    chosen: list[np.ndarray] = []
    r0 = dense_rank(base) if base.shape[0] else 0
    current = base
    for v in candidates:
        trial = np.vstack([current, v[None, :]])
        if dense_rank(trial) > r0 + len(chosen):
            chosen.append(v)
            current = trial
            if len(chosen) == count:
                break
    if len(chosen) != count:
        raise ValueError("could not find enough independent logicals")
    return np.array(chosen, dtype=np.uint8)


def find_logicals(hx: np.ndarray, hz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Paired logical generators for the CSS code (hx, hz) with lx @ lz.T = I."""
    n = hx.shape[1]
    k = n - (dense_rank(hx) if hx.shape[0] else 0) - (dense_rank(hz) if hz.shape[0] else 0)
    if k == 0:
        empty = np.zeros((0, n), dtype=np.uint8)
        return empty, empty
    ker_z = dense_null_space(hz) if hz.shape[0] else np.eye(n, dtype=np.uint8)
    ker_x = dense_null_space(hx) if hx.shape[0] else np.eye(n, dtype=np.uint8)
    lx = _independent_mod(ker_z, hx, k)
    lz = _independent_mod(ker_x, hz, k)
    pairing = (lx.astype(np.int64) @ lz.T.astype(np.int64)) % 2
    fix = _gf2_inverse(pairing.astype(np.uint8)).T
    lz = ((fix.astype(np.int64) @ lz.astype(np.int64)) % 2).astype(np.uint8)
    return lx, lz


def _make(name, hx, hz, lx, lz, distance, **meta) -> CssCode:
    n = hx.shape[1] if hx.ndim == 2 else len(lx[0])
    return CssCode(
        name=name,
        n=n,
        k=int(np.asarray(lx).shape[0]),
        hx=_as_matrix(hx, n),
        hz=_as_matrix(hz, n),
        lx=_as_matrix(lx, n),
        lz=_as_matrix(lz, n),
        declared_distance=distance,
        meta=meta,
    )


def build_rotated_surface(d: int) -> CssCode:
    """Rotated surface code on a d x d grid of qubits, index ``row * d + col``.

    X plaquettes carry weight-2 boundary checks on the top and bottom edges,
    Z plaquettes on the left and right edges.  Z_L runs along the top row and
    X_L along the left column.
    """
    if d < 1 or d % 2 == 0:
        raise ValueError(f"surface code distance must be odd and >= 1, got {d}")
    n = d * d
    if d == 1:
        one = np.ones((1, 1), dtype=np.uint8)
        empty = np.zeros((0, 1), dtype=np.uint8)
        return _make("surface:1", empty, empty, one, one, 1)
    xs, zs = [], []
    for i in range(-1, d):
        for j in range(-1, d):
            corners = [(i + a) * d + (j + b) for a in (0, 1) for b in (0, 1)
                       if 0 <= i + a < d and 0 <= j + b < d]
            is_x = (i + j) % 2 == 0
            if len(corners) == 4:
                (xs if is_x else zs).append(corners)
            elif len(corners) == 2:
                if is_x and i in (-1, d - 1):
                    xs.append(corners)
                elif not is_x and j in (-1, d - 1):
                    zs.append(corners)
    hx, hz = _support_rows(xs, n), _support_rows(zs, n)
    lz = np.zeros((1, n), dtype=np.uint8)
    lz[0, :d] = 1
    lx = np.zeros((1, n), dtype=np.uint8)
    lx[0, ::d] = 1
    return _make(f"surface:{d}", hx, hz, lx, lz, d)


# 4.8.8 tiling: face centres (4a, 4b); squares where a + b is odd, octagons
# otherwise (red when a is even, blue when a is odd).  Qubits sit on vertices.
def _face_vertices(a: int, b: int) -> list[tuple[int, int]]:
    cx, cy = 4 * a, 4 * b
    if (a + b) % 2:
        return [(cx + s, cy + t) for s in (-1, 1) for t in (-1, 1)]
    return [(cx + 3 * s, cy + t) for s in (-1, 1) for t in (-1, 1)] + [
        (cx + t, cy + 3 * s) for s in (-1, 1) for t in (-1, 1)
    ]


def _face_color(a: int, b: int) -> str:
    if (a + b) % 2:
        return "green"
    return "red" if a % 2 == 0 else "blue"


def _color_faces(d: int) -> list[tuple[int, int]]:
    """Face centres of the distance-d triangle, as staircase rows.

    Row 0 holds the octagons at odd positions below the first full row; each
    later pair of rows shrinks by two faces on alternating ends.
    """
    faces = [(col + 1, 0) for col in range(1, d - 1, 2)]
    row = 1
    while True:
        start = 2 * (row // 2)
        stop = d - 2 - 2 * ((row - 1) // 2)
        if start > stop:
            break
        faces += [(col + 1, row) for col in range(start, stop + 1)]
        row += 1
    return faces


def build_color_488(d: int) -> CssCode:
    """Triangular 4.8.8 color code, [[(d^2 - 1)/2 + d, 1, d]].

    Qubits are the tiling vertices shared by at least two chosen faces, plus
    one corner vertex for each face that would otherwise have odd weight.
    Qubits are indexed row-major by vertex coordinate (y, then x).
    """
    if d < 3 or d % 2 == 0:
        raise ValueError(f"color code distance must be odd and >= 3, got {d}")
    faces = _color_faces(d)
    verts = [_face_vertices(*f) for f in faces]
    count: dict[tuple[int, int], int] = {}
    for vs in verts:
        for v in vs:
            count[v] = count.get(v, 0) + 1
    qubits = {v for v, c in count.items() if c >= 2}
    for vs in verts:
        if sum(v in qubits for v in vs) % 2:
            qubits.add(min(v for v in vs if count[v] == 1))
    order = sorted(qubits, key=lambda v: (v[1], v[0]))
    index = {v: i for i, v in enumerate(order)}
    n = len(order)
    h = _support_rows([[index[v] for v in vs if v in index] for vs in verts], n)
    colors = [_face_color(*f) for f in faces]
    # X_L = Z_L: the boundary side without red faces
    red_rows = h[[c == "red" for c in colors]]
    weight = h.sum(axis=0)
    side = (weight <= 2) & (red_rows.sum(axis=0) == 0)
    logical = side.astype(np.uint8)[None, :]
    return _make(f"color:{d}", h, h.copy(), logical, logical.copy(), d,
                 coords=order, face_colors=colors)


def build_toric(d: int) -> CssCode:
    """Toric code on a d x d periodic lattice, [[2 d^2, 2, d]].

    Edge indices: horizontal edge (i, j) -> i*d + j, vertical edge (i, j) ->
    d^2 + i*d + j.  Stars are X checks, plaquettes Z checks; the last star and
    the last plaquette are dropped since each set multiplies to the identity.
    """
    if d < 2:
        raise ValueError(f"toric code needs d >= 2, got {d}")
    n = 2 * d * d

    def h(i, j):
        return (i % d) * d + (j % d)

    def v(i, j):
        return d * d + (i % d) * d + (j % d)

    stars = [[h(i, j), h(i, j - 1), v(i, j), v(i - 1, j)] for i in range(d) for j in range(d)]
    plaqs = [[h(i, j), h(i + 1, j), v(i, j), v(i, j + 1)] for i in range(d) for j in range(d)]
    hx = _support_rows(stars[:-1], n)
    hz = _support_rows(plaqs[:-1], n)
    lx = _support_rows([[h(i, 0) for i in range(d)], [v(0, j) for j in range(d)]], n)
    lz = _support_rows([[h(0, j) for j in range(d)], [v(i, 0) for i in range(d)]], n)
    return _make(f"toric:{d}", hx, hz, lx, lz, d)


def _lcs_base(ell: int, L: int) -> list[list[list[int]]]:
    """ell x (ell+1) base matrix over F2[x]/(x^L - 1): 1 on the diagonal, 1 + x above it.

    Entries are lists of monomial exponents.
    """
    base = [[[] for _ in range(ell + 1)] for _ in range(ell)]
    for i in range(ell):
        base[i][i] = [0]
        base[i][i + 1] = [0, 1 % L] if L > 1 else []
    return base


def _circulant(exps: list[int], L: int, conj: bool = False) -> np.ndarray:
    """Matrix of sum_e x^e; row q has ones at columns q + e (mod L)."""
    m = np.zeros((L, L), dtype=np.uint8)
    for e in exps:
        shift = (-e) % L if conj else e % L
        m[np.arange(L), (np.arange(L) + shift) % L] ^= 1
    return m


def build_lcs(L: int, ell: int) -> CssCode:
    """Lift-connected surface code: L cyclically coupled surface-code sheets.

    Lifted hypergraph product of the ell x (ell+1) base matrix with itself.
    Qubit (block, sheet) has index ``block * L + sheet``; the (ell+1)^2 sheet
    blocks (i, j) come first in row-major order, then the ell^2 blocks (a, b).
    X check (a, j) on sheet q is row ``(a*(ell+1) + j) * L + q``; Z check (i, b)
    is row ``(i*ell + b) * L + q``.
    """
    if L < 2 or ell < 1:
        raise ValueError(f"LCS needs L >= 2 and ell >= 1, got L={L}, ell={ell}")
    base = _lcs_base(ell, L)
    na, ra = ell + 1, ell
    nblocks = na * na + ra * ra
    n = nblocks * L

    def blk_v(i, j):
        return i * na + j

    def blk_c(a, b):
        return na * na + a * ra + b

    hx = np.zeros((ra * na * L, n), dtype=np.uint8)
    for a in range(ra):
        for j in range(na):
            rows = slice((a * na + j) * L, (a * na + j + 1) * L)
            for i in range(na):
                c = blk_v(i, j)
                hx[rows, c * L:(c + 1) * L] ^= _circulant(base[a][i], L)
            for b in range(ra):
                c = blk_c(a, b)
                hx[rows, c * L:(c + 1) * L] ^= _circulant(base[b][j], L, conj=True)
    hz = np.zeros((na * ra * L, n), dtype=np.uint8)
    for i in range(na):
        for b in range(ra):
            rows = slice((i * ra + b) * L, (i * ra + b + 1) * L)
            for j in range(na):
                c = blk_v(i, j)
                hz[rows, c * L:(c + 1) * L] ^= _circulant(base[b][j], L)
            for a in range(ra):
                c = blk_c(a, b)
                hz[rows, c * L:(c + 1) * L] ^= _circulant(base[a][i], L, conj=True)
    lx, lz = find_logicals(hx, hz)
    return _make(f"lcs:{L},{ell}", hx, hz, lx, lz, min(L, 2 * ell + 1), L=L, ell=ell)


def validate(code: CssCode) -> ValidationReport:
    failures = []
    hx, hz, lx, lz = code.hx_dense.astype(np.int64), code.hz_dense.astype(np.int64), \
        code.lx_dense.astype(np.int64), code.lz_dense.astype(np.int64)
    if ((hx @ hz.T) % 2).any():
        failures.append("CSS orthogonality: hx hz^T != 0")
    if ((lx @ hz.T) % 2).any():
        failures.append("X logicals do not commute with Z checks")
    if ((lz @ hx.T) % 2).any():
        failures.append("Z logicals do not commute with X checks")
    if lx.shape[0] != code.k or lz.shape[0] != code.k:
        failures.append("logical count differs from k")
    elif not np.array_equal((lx @ lz.T) % 2, np.eye(code.k, dtype=np.int64)):
        failures.append("logical pairing lx lz^T != identity")
    rx = dense_rank(code.hx_dense) if hx.shape[0] else 0
    rz = dense_rank(code.hz_dense) if hz.shape[0] else 0
    if rx + rz != code.n - code.k:
        failures.append(f"rank(hx) + rank(hz) = {rx + rz} != n - k = {code.n - code.k}")
    return ValidationReport(str(code), failures)


def distance_bruteforce(code: CssCode, sector: str = "X", limit: int = 24) -> int:
    """Minimum weight of a sector operator in span(checks, logicals) that acts on the logicals."""
    sector = sector.upper()
    if sector not in ("X", "Z"):
        raise ValueError("sector must be 'X' or 'Z'")
    h, l, other = (code.hx_dense, code.lx_dense, code.lz_dense) if sector == "X" else \
        (code.hz_dense, code.lz_dense, code.lx_dense)
    from .gf2_linalg import dense_row_basis
    gens_h = dense_row_basis(h) if h.shape[0] else np.zeros((0, code.n), dtype=np.uint8)
    gens = np.vstack([gens_h, l])
    if gens.shape[0] > limit:
        raise ValueError(f"enumeration over 2^{gens.shape[0]} elements exceeds the bound 2^{limit}")
    nw = (code.n + 63) // 64
    from .gf2_linalg import _pack_rows
    packed = _pack_rows(gens)
    tags = np.zeros(gens.shape[0], dtype=np.int64)
    tags[gens_h.shape[0]:] = 1 << np.arange(l.shape[0])  # which logicals are included
    vals = np.zeros((1, nw), dtype=np.uint64)
    lab = np.zeros(1, dtype=np.int64)
    for g, t in zip(packed, tags):
        vals = np.vstack([vals, vals ^ g])
        lab = np.concatenate([lab, lab ^ t])
    weight = np.bitwise_count(vals).sum(axis=1)
    # an element acts nontrivially iff its logical label is nonzero (pairing is the identity)
    nontrivial = lab != 0
    if not nontrivial.any():
        raise ValueError("code has no logical qubits")
    del other
    return int(weight[nontrivial].min())


_SPEC = re.compile(r"^(surface|color|toric|lcs):(\d+)(?:,(\d+))?$")


def from_spec(spec: str) -> CssCode:
    """Build a code from ``family:params`` (surface:d, color:d, toric:d, lcs:L,ell)."""
    m = _SPEC.match(spec.strip().lower())
    if not m:
        raise ValueError(f"unknown code spec {spec!r}; expected surface:d, color:d, toric:d or lcs:L,ell")
    family, a, b = m.group(1), int(m.group(2)), m.group(3)
    if family == "lcs":
        if b is None:
            raise ValueError("lcs spec needs two parameters, e.g. lcs:3,1")
        return build_lcs(a, int(b))
    if b is not None:
        raise ValueError(f"{family} takes a single parameter")
    return {"surface": build_rotated_surface, "color": build_color_488, "toric": build_toric}[family](a)


FAMILIES = {
    "surface": "rotated surface code, surface:d with odd d >= 1 (d=1 is the bare qubit)",
    "color": "triangular 4.8.8 color code, color:d with odd d >= 3",
    "toric": "toric code on a d x d torus, toric:d with d >= 2",
    "lcs": "lift-connected surface code, lcs:L,ell with L >= 2, ell >= 1",
}
