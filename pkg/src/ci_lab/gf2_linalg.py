"""Bit-packed linear algebra over GF(2).

Rows are stored as little-endian 64-bit words: column ``j`` lives in word
``j // 64`` at bit ``j % 64``.  All operations are defined by their GF(2)
semantics only; the packing is an implementation detail.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

WORD = 64


def _nwords(cols: int) -> int:
    return max(1, (cols + WORD - 1) // WORD)


def _pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a 2D 0/1 array into uint64 words (one row of words per row)."""
    rows, cols = dense.shape
    nw = _nwords(cols)
    padded = np.zeros((rows, nw * WORD), dtype=np.uint8)
    padded[:, :cols] = dense & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").astype(np.uint64, copy=True).reshape(rows, nw)


def _unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    if rows == 0:
        return np.zeros((0, cols), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(words.astype("<u8")).view(np.uint8).reshape(rows, -1)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :cols].copy()


class BitVector:
    """Fixed-length packed bit vector."""

    __slots__ = ("length", "words")

    def __init__(self, length: int, words: np.ndarray | None = None):
        if length < 0:
            raise ValueError("length must be non-negative")
        self.length = int(length)
        if words is None:
            words = np.zeros(_nwords(length), dtype=np.uint64)
        self.words = np.asarray(words, dtype=np.uint64)

    @classmethod
    def from_dense(cls, bits: Iterable[int] | np.ndarray) -> "BitVector":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        arr = arr.reshape(1, -1)
        return cls(arr.shape[1], _pack_rows(arr)[0])

    @classmethod
    def from_indices(cls, length: int, indices: Iterable[int]) -> "BitVector":
        dense = np.zeros(length, dtype=np.uint8)
        for i in indices:
            if not 0 <= i < length:
                raise IndexError(f"index {i} out of range for length {length}")
            dense[i] = 1
        return cls.from_dense(dense)

    def to_dense(self) -> np.ndarray:
        return _unpack_rows(self.words.reshape(1, -1), self.length)[0]

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.to_dense())

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self.length:
            raise IndexError(f"bit {j} out of range for length {self.length}")
        return int((self.words[j // WORD] >> np.uint64(j % WORD)) & np.uint64(1))

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitVector)
            and other.length == self.length
            and bool(np.array_equal(other.words, self.words))
        )

    def __xor__(self, other: "BitVector") -> "BitVector":
        if other.length != self.length:
            raise ValueError("length mismatch")
        return BitVector(self.length, self.words ^ other.words)

    def __repr__(self) -> str:
        return f"BitVector({''.join(map(str, self.to_dense()))})"


class BitMatrix:
    """Dense bit-packed matrix over GF(2), row-major."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimension")
        self.rows = int(rows)
        self.cols = int(cols)
        if words is None:
            words = np.zeros((rows, _nwords(cols)), dtype=np.uint64)
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (self.rows, _nwords(self.cols)):
            raise ValueError("word array has wrong shape")
        self.words = words

    # construction / conversion
    @classmethod
    def from_dense(cls, dense: Sequence[Sequence[int]] | np.ndarray, cols: int | None = None) -> "BitMatrix":
        arr = np.asarray(dense, dtype=np.uint8)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, cols or 0)
        if arr.ndim != 2:
            raise ValueError("expected a 2D array")
        return cls(arr.shape[0], arr.shape[1], _pack_rows(arr))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, size: int) -> "BitMatrix":
        return cls.from_dense(np.eye(size, dtype=np.uint8))

    @classmethod
    def from_rows(cls, vectors: Sequence[BitVector], cols: int) -> "BitMatrix":
        if any(v.length != cols for v in vectors):
            raise ValueError("row length mismatch")
        words = np.array([v.words for v in vectors], dtype=np.uint64).reshape(len(vectors), _nwords(cols))
        return cls(len(vectors), cols, words)

    def to_dense(self) -> np.ndarray:
        return _unpack_rows(self.words, self.cols)

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.words.copy())

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    # element access
    def _check(self, i: int, j: int) -> None:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) out of range for {self.rows}x{self.cols} matrix")

    def __getitem__(self, key: tuple[int, int]) -> int:
        i, j = key
        self._check(i, j)
        return int((self.words[i, j // WORD] >> np.uint64(j % WORD)) & np.uint64(1))

    def set(self, i: int, j: int, value: int) -> None:
        self._check(i, j)
        bit = np.uint64(1) << np.uint64(j % WORD)
        if value & 1:
            self.words[i, j // WORD] |= bit
        else:
            self.words[i, j // WORD] &= ~bit

    def row(self, i: int) -> BitVector:
        if not 0 <= i < self.rows:
            raise IndexError(f"row {i} out of range")
        return BitVector(self.cols, self.words[i].copy())

    # row operations
    def xor_row(self, target: int, source: int) -> None:
        """row[target] ^= row[source]."""
        self.words[target] ^= self.words[source]

    def swap_rows(self, a: int, b: int) -> None:
        self.words[[a, b]] = self.words[[b, a]]

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if other.cols != self.cols:
            raise ValueError("column mismatch")
        return BitMatrix(self.rows + other.rows, self.cols, np.vstack([self.words, other.words]))

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ValueError("inner dimension mismatch")
        prod = (self.to_dense().astype(np.int64) @ other.to_dense().astype(np.int64)) & 1
        return BitMatrix.from_dense(prod.astype(np.uint8).reshape(self.rows, other.cols))

    def is_zero(self) -> bool:
        return not self.words.any()

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitMatrix)
            and other.shape == self.shape
            and bool(np.array_equal(other.words, self.words))
        )

    def __repr__(self) -> str:
        body = "\n ".join("".join(map(str, r)) for r in self.to_dense())
        return f"BitMatrix({self.rows}x{self.cols}\n {body})"


def _rref_words(words: np.ndarray, cols: int) -> tuple[np.ndarray, list[int]]:
    """Row-reduce packed rows in place; returns (words, pivot columns)."""
    rows = words.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        w = c // WORD
        bit = np.uint64(1) << np.uint64(c % WORD)
        column = (words[:, w] & bit) != 0
        cand = np.flatnonzero(column[r:])
        if cand.size == 0:
            continue
        p = r + int(cand[0])
        if p != r:
            words[[r, p]] = words[[p, r]]
            column[[r, p]] = column[[p, r]]
        column[r] = False
        hit = np.flatnonzero(column)
        if hit.size:
            words[hit] ^= words[r]
        pivots.append(c)
        r += 1
    return words, pivots


def rref(m: BitMatrix) -> tuple[BitMatrix, list[int]]:
    """Reduced row echelon form with leftmost pivots; zero rows sink to the bottom."""
    words, pivots = _rref_words(m.words.copy(), m.cols)
    return BitMatrix(m.rows, m.cols, words), pivots


def rank(m: BitMatrix) -> int:
    return len(rref(m)[1])


def row_basis(m: BitMatrix) -> BitMatrix:
    """Independent rows spanning the row space (the nonzero rows of the rref)."""
    red, piv = rref(m)
    return BitMatrix(len(piv), m.cols, red.words[: len(piv)].copy())


def in_row_space(m: BitMatrix, v: BitVector) -> bool:
    if v.length != m.cols:
        raise ValueError(f"vector length {v.length} does not match {m.cols} columns")
    red, piv = rref(m)
    w = v.words.copy()
    for i, c in enumerate(piv):
        if (w[c // WORD] >> np.uint64(c % WORD)) & np.uint64(1):
            w ^= red.words[i]
    return not w.any()


def null_space(m: BitMatrix) -> BitMatrix:
    """Basis of {x : m x^T = 0}, one basis vector per free column."""
    red, piv = rref(m)
    dense = red.to_dense()[: len(piv)]
    free = [c for c in range(m.cols) if c not in set(piv)]
    basis = np.zeros((len(free), m.cols), dtype=np.uint8)
    for t, f in enumerate(free):
        basis[t, f] = 1
        if piv:
            basis[t, piv] = dense[:, f]
    return BitMatrix.from_dense(basis.reshape(len(free), m.cols))


def select_columns(m: BitMatrix, mask: BitVector) -> BitMatrix:
    if mask.length != m.cols:
        raise ValueError(f"mask length {mask.length} does not match {m.cols} columns")
    keep = np.flatnonzero(mask.to_dense())
    return BitMatrix.from_dense(m.to_dense()[:, keep].reshape(m.rows, keep.size))


def solve(m: BitMatrix, rhs: BitMatrix) -> BitMatrix | None:
    """Return x with x @ m == rhs (one row of x per target row), or None if unsolvable."""
    if rhs.cols != m.cols:
        raise ValueError("column mismatch")
    mt = m.to_dense().T
    targets = rhs.to_dense()
    out = np.zeros((rhs.rows, m.rows), dtype=np.uint8)
    for t in range(rhs.rows):
        aug = BitMatrix.from_dense(np.hstack([mt, targets[t][:, None]]))
        red, piv = rref(aug)
        if m.rows in piv:
            return None
        col = red.to_dense()[:, m.rows]
        for i, p in enumerate(piv):
            out[t, p] = col[i]
    return BitMatrix.from_dense(out.reshape(rhs.rows, m.rows))


# dense helpers used by the numerical modules
def dense_rank(a: np.ndarray) -> int:
    return rank(BitMatrix.from_dense(a))


def dense_null_space(a: np.ndarray) -> np.ndarray:
    return null_space(BitMatrix.from_dense(a)).to_dense()


def dense_row_basis(a: np.ndarray) -> np.ndarray:
    return row_basis(BitMatrix.from_dense(a)).to_dense()
