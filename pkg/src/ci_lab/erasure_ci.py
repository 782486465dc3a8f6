"""Coherent information under erasures: recoverability, exact averages and stratified sampling."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np
from scipy.stats import binom

from .codes import CssCode
from .gf2_linalg import BitMatrix, BitVector, _pack_rows, dense_null_space, dense_rank

EXACT_MAX_QUBITS = 20


@dataclass(frozen=True)
class ErasureConfig:
    mask: BitVector

    @classmethod
    def from_indices(cls, n: int, erased) -> "ErasureConfig":
        return cls(BitVector.from_indices(n, erased))

    @classmethod
    def empty(cls, n: int) -> "ErasureConfig":
        return cls(BitVector(n))

    @property
    def m(self) -> int:
        return self.mask.popcount()

    @property
    def erased(self) -> np.ndarray:
        return self.mask.indices()

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.mask.to_dense() == 0)


@dataclass
class ErasureAnalysis:
    """Logical structure left after an erasure.

    ``vx``/``vz`` are bases of the recoverable logical combinations (rows in
    GF(2)^k).  ``rep_x``/``rep_z`` hold, row by row, a representative of each
    basis combination supported off the erasure.  ``sx``/``sz`` are generators
    of the stabilizers supported off the erasure.
    """

    k: int
    k_prime: int
    b: int
    c: int
    vx: BitMatrix
    vz: BitMatrix
    sx: BitMatrix
    sz: BitMatrix
    rep_x: BitMatrix
    rep_z: BitMatrix

    @property
    def ci(self) -> int:
        return self.k - self.b - 2 * self.c

    @property
    def class_bits(self) -> int:
        return self.vx.rows + self.vz.rows


def _pick_independent(vs: np.ndarray) -> list[int]:
    """Indices of a maximal independent subset of the rows of vs, greedy in row order."""
    keep: list[int] = []
    for i in range(vs.shape[0]):
        if dense_rank(vs[keep + [i]]) == len(keep) + 1:
            keep.append(i)
    return keep


def _recoverable(logicals: np.ndarray, h: np.ndarray, erased: np.ndarray):
    """Recoverable combinations v with representatives (v L + u H) vanishing on the erasure."""
    k, n = logicals.shape
    r = h.shape[0]
    stacked = np.vstack([h[:, erased], logicals[:, erased]]).reshape(r + k, erased.size)
    pairs = dense_null_space(stacked.T) if stacked.size else np.eye(r + k, dtype=np.uint8)
    pairs = pairs.reshape(-1, r + k)
    u, v = pairs[:, :r], pairs[:, r:]
    keep = _pick_independent(v) if v.shape[0] else []
    v, u = v[keep], u[keep]
    reps = (v.astype(np.int64) @ logicals.astype(np.int64) + u.astype(np.int64) @ h.astype(np.int64)) % 2
    return v.reshape(-1, k).astype(np.uint8), reps.reshape(-1, n).astype(np.uint8)


def recoverable_subgroup(logicals: BitMatrix, h: BitMatrix, cfg: ErasureConfig) -> BitMatrix:
    """Basis of V = {v : (v L) on the erased columns lies in the row space of H there}."""
    if logicals.cols != cfg.mask.length or h.cols != cfg.mask.length:
        raise ValueError("logicals, checks and erasure mask must have the same qubit count")
    v, _ = _recoverable(logicals.to_dense(), h.to_dense(), cfg.erased)
    return BitMatrix.from_dense(v.reshape(-1, logicals.rows))


def _clean_stabilizers(h: np.ndarray, erased: np.ndarray) -> np.ndarray:
    n = h.shape[1]
    if h.shape[0] == 0:
        return np.zeros((0, n), dtype=np.uint8)
    if erased.size == 0:
        u = np.eye(h.shape[0], dtype=np.uint8)
    else:
        u = dense_null_space(h[:, erased].T).reshape(-1, h.shape[0])
    s = (u.astype(np.int64) @ h.astype(np.int64)) % 2
    s = s.astype(np.uint8).reshape(-1, n)
    keep = _pick_independent(s) if s.shape[0] else []
    return s[keep].reshape(-1, n)


def analyze(code: CssCode, cfg: ErasureConfig) -> ErasureAnalysis:
    if cfg.mask.length != code.n:
        raise ValueError("erasure mask length differs from the qubit count")
    erased = cfg.erased
    vx, rep_x = _recoverable(code.lx_dense, code.hx_dense, erased)
    vz, rep_z = _recoverable(code.lz_dense, code.hz_dense, erased)
    pairing = (vx.astype(np.int64) @ vz.T.astype(np.int64)) % 2
    k_prime = dense_rank(pairing.astype(np.uint8)) if pairing.size else 0
    b = vx.shape[0] + vz.shape[0] - 2 * k_prime
    c = code.k - k_prime - b
    return ErasureAnalysis(
        k=code.k,
        k_prime=k_prime,
        b=b,
        c=c,
        vx=BitMatrix.from_dense(vx.reshape(-1, code.k)),
        vz=BitMatrix.from_dense(vz.reshape(-1, code.k)),
        sx=BitMatrix.from_dense(_clean_stabilizers(code.hx_dense, erased)),
        sz=BitMatrix.from_dense(_clean_stabilizers(code.hz_dense, erased)),
        rep_x=BitMatrix.from_dense(rep_x.reshape(-1, code.n)),
        rep_z=BitMatrix.from_dense(rep_z.reshape(-1, code.n)),
    )


def ci_single(code: CssCode, cfg: ErasureConfig) -> int:
    """k - b - 2c for one erasure configuration, in units of log 2."""
    return analyze(code, cfg).ci


# Fast path: I_l = dim Vx + dim Vz - k with dim V = k + rank(H_E) - rank([H; L]_E).
# Ranks over erased columns are tracked by inserting column vectors into XOR bases.

def _column_words(code: CssCode) -> tuple[np.ndarray, ...]:
    """Packed column vectors of hx, [hx; lx], hz, [hz; lz] (shape n x words each)."""
    mats = [code.hx_dense, np.vstack([code.hx_dense, code.lx_dense]),
            code.hz_dense, np.vstack([code.hz_dense, code.lz_dense])]
    return tuple(_pack_rows(np.ascontiguousarray(m.T.reshape(code.n, -1))) for m in mats)


@numba.njit(cache=True, nogil=True)
def _top_bit(v):
    for w in range(v.shape[0] - 1, -1, -1):
        x = v[w]
        if x != 0:
            b = 63
            while (x >> np.uint64(b)) & np.uint64(1) == 0:
                b -= 1
            return w * 64 + b
    return -1


@numba.njit(cache=True, nogil=True)
def _insert(basis, used, col):
    """Reduce col against the basis; store it and return 1 if independent."""
    v = col.copy()
    while True:
        t = _top_bit(v)
        if t < 0:
            return 0
        if not used[t]:
            basis[t, :] = v
            used[t] = True
            return 1
        for w in range(v.shape[0]):
            v[w] ^= basis[t, w]


@numba.njit(cache=True, nogil=True)
def _chain_ci(c0, c1, c2, c3, perms, k):
    """CI of every prefix of each erasure order: out[i, m] for m = 0..n."""
    nsamp, n = perms.shape
    out = np.empty((nsamp, n + 1), dtype=np.int64)
    for i in range(nsamp):
        b0 = np.zeros((c0.shape[1] * 64, c0.shape[1]), dtype=np.uint64)
        b1 = np.zeros((c1.shape[1] * 64, c1.shape[1]), dtype=np.uint64)
        b2 = np.zeros((c2.shape[1] * 64, c2.shape[1]), dtype=np.uint64)
        b3 = np.zeros((c3.shape[1] * 64, c3.shape[1]), dtype=np.uint64)
        u0 = np.zeros(b0.shape[0], dtype=np.bool_)
        u1 = np.zeros(b1.shape[0], dtype=np.bool_)
        u2 = np.zeros(b2.shape[0], dtype=np.bool_)
        u3 = np.zeros(b3.shape[0], dtype=np.bool_)
        r0 = r1 = r2 = r3 = 0
        out[i, 0] = k
        for m in range(n):
            q = perms[i, m]
            r0 += _insert(b0, u0, c0[q])
            r1 += _insert(b1, u1, c1[q])
            r2 += _insert(b2, u2, c2[q])
            r3 += _insert(b3, u3, c3[q])
            out[i, m + 1] = k + r0 - r1 + r2 - r3
    return out


@numba.njit(cache=True)
def _exact_sums(c0, c1, c2, c3, n, k):
    """Sum of I_l over all erasure configurations of each weight."""
    sums = np.zeros(n + 1, dtype=np.int64)
    for mask in range(1 << n):
        b0 = np.zeros((c0.shape[1] * 64, c0.shape[1]), dtype=np.uint64)
        b1 = np.zeros((c1.shape[1] * 64, c1.shape[1]), dtype=np.uint64)
        b2 = np.zeros((c2.shape[1] * 64, c2.shape[1]), dtype=np.uint64)
        b3 = np.zeros((c3.shape[1] * 64, c3.shape[1]), dtype=np.uint64)
        u0 = np.zeros(b0.shape[0], dtype=np.bool_)
        u1 = np.zeros(b1.shape[0], dtype=np.bool_)
        u2 = np.zeros(b2.shape[0], dtype=np.bool_)
        u3 = np.zeros(b3.shape[0], dtype=np.bool_)
        r = 0
        m = 0
        for q in range(n):
            if (mask >> q) & 1:
                m += 1
                r += _insert(b0, u0, c0[q]) - _insert(b1, u1, c1[q])
                r += _insert(b2, u2, c2[q]) - _insert(b3, u3, c3[q])
        sums[m] += k + r
    return sums


def stratum_weights(n: int, e: np.ndarray | float) -> np.ndarray:
    """P(m erasures) = C(n, m) e^m (1-e)^(n-m); shape (len(e), n+1)."""
    e = np.atleast_1d(np.asarray(e, dtype=float))
    return binom.pmf(np.arange(n + 1)[None, :], n, e[:, None])


def exact_strata(code: CssCode) -> np.ndarray:
    """Mean CI over all erasure configurations with m erasures, for m = 0..n."""
    if code.n > EXACT_MAX_QUBITS:
        raise ValueError(f"exact erasure average needs n <= {EXACT_MAX_QUBITS}, got n={code.n}")
    from scipy.special import comb
    sums = _exact_sums(*_column_words(code), code.n, code.k)
    return sums / comb(code.n, np.arange(code.n + 1), exact=False)


def exact_ci(code: CssCode, e) -> np.ndarray | float:
    """sum_l e^m (1-e)^(n-m) I_l, by enumeration of all 2^n configurations."""
    means = exact_strata(code)
    out = stratum_weights(code.n, e) @ means
    return float(out[0]) if np.ndim(e) == 0 else out


def erasure_orders(n: int, samples: int, seed: int, start: int = 0) -> np.ndarray:
    """One uniformly random qubit order per sample index; stream i is SeedSequence([seed, i])."""
    perms = np.empty((samples, n), dtype=np.int64)
    for row, i in enumerate(range(start, start + samples)):
        perms[row] = np.random.default_rng(np.random.SeedSequence([seed, i])).permutation(n)
    return perms


def default_workers() -> int:
    env = os.environ.get("CI_LAB_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sample_strata(code: CssCode, samples: int, seed: int, workers: int | None = None) -> np.ndarray:
    """CI of nested erasure configurations: row i holds I for the first m qubits of order i."""
    if samples < 1:
        raise ValueError("samples_per_stratum must be >= 1")
    cols = _column_words(code)
    workers = workers or default_workers()
    chunk = max(1, -(-samples // workers))
    starts = list(range(0, samples, chunk))

    def run(s):
        perms = erasure_orders(code.n, min(chunk, samples - s), seed, start=s)
        return _chain_ci(*cols, perms, code.k)

    if workers == 1 or len(starts) == 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    return np.vstack(parts)


def stratified_ci(code: CssCode, e_grid, samples_per_stratum: int, seed: int,
                  workers: int | None = None, label: str | None = None):
    """Stratified estimate of the erasure CI on every point of e_grid.

    Strata means are computed once.  Each sample index draws one random qubit
    order and contributes to every stratum through its prefixes, so the
    weight-m masks are uniform for every m.  Strata with m < declared distance
    are exactly k.  Standard errors come from the spread of the per-order
    weighted sums.
    """
    from .analysis import CiCurve

    e_grid = np.asarray(e_grid, dtype=float)
    per_order = sample_strata(code, samples_per_stratum, seed, workers).astype(float)
    per_order[:, : min(code.declared_distance, code.n + 1)] = code.k
    weights = stratum_weights(code.n, e_grid)
    values = per_order @ weights.T  # (samples, len(e))
    ci = values.mean(axis=0)
    n_s = values.shape[0]
    stderr = values.std(axis=0, ddof=1) / np.sqrt(n_s) if n_s > 1 else np.zeros_like(ci)
    return CiCurve(label or f"{code.name} erasure", e_grid, ci, stderr,
                   meta={"k": code.k, "n": code.n, "d": code.declared_distance,
                         "strata_mean": per_order.mean(axis=0).tolist()})
