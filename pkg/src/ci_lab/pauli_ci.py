"""Exact coherent information under Pauli noise and Pauli noise combined with erasures.

Errors are grouped into cells (syndrome, logical class).  The CI of a fixed
erasure configuration is ``(k - b - 2c) - H(class | syndrome)`` in bits, where
the syndrome is measured with the stabilizers supported off the erasure and
the class is the commutation pattern with the recoverable logicals.

For one-parameter channels the cell masses are polynomials in p whose
coefficients (error counts per weight) do not depend on p.  They are obtained
either by enumerating error patterns or, when the label space is smaller than
the pattern space, through a Walsh-Hadamard transform of the label
characteristic function.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import comb, xlogy

from .codes import CssCode
from .erasure_ci import ErasureAnalysis, ErasureConfig, analyze, default_workers, stratum_weights
from .gf2_linalg import BitMatrix, BitVector
from .noise import NoiseSpec, PauliChannel

MAX_ENUM_BITS = 24  # log2 of the largest pattern or label space we enumerate
MAX_LABEL_BITS = 62


@dataclass
class CosetTable:
    """Probability mass per (syndrome label, class label).

    ``syndromes`` are the sorted syndrome labels with nonzero mass; row i of
    ``probs`` holds the 2^class_bits class masses for ``syndromes[i]``.
    """

    syndrome_bits: int
    class_bits: int
    syndromes: np.ndarray
    probs: np.ndarray

    def total(self) -> float:
        return float(self.probs.sum())

    def row(self, syndrome: int) -> np.ndarray:
        i = np.searchsorted(self.syndromes, np.uint64(syndrome))
        if i < len(self.syndromes) and self.syndromes[i] == np.uint64(syndrome):
            return self.probs[i]
        return np.zeros(self.probs.shape[1])

    def as_dict(self) -> dict[int, np.ndarray]:
        return {int(s): self.probs[i] for i, s in enumerate(self.syndromes)}

    def log_ratio(self, syndrome: int, cls: int) -> float:
        """log2[ sum_D p(s, D) / p(s, cls) ] for an error with labels (s, cls)."""
        r = self.row(syndrome)
        return float(np.log2(r.sum() / r[cls]))


def conditional_entropy(probs: np.ndarray) -> np.ndarray:
    """H(class | syndrome) in bits for probs[..., syndrome, class] (extra leading axes allowed)."""
    joint = -xlogy(probs, probs).sum(axis=(-1, -2))
    marg = probs.sum(axis=-1)
    return (joint + xlogy(marg, marg).sum(axis=-1)) / np.log(2)


def ci_from_table(t: CosetTable, base: float) -> float:
    return float(base - conditional_entropy(t.probs))


@dataclass
class LabelMap:
    """Bit labels toggled by single-qubit X and Z errors on the active qubits.

    Label layout: the low ``syndrome_bits`` bits hold the commutation with the
    Z-type then the X-type clean stabilizers; the next ``class_bits`` bits hold
    the commutation with the X logical representatives then the Z ones.
    """

    active: np.ndarray
    col_x: np.ndarray
    col_z: np.ndarray
    syndrome_bits: int
    class_bits: int

    @property
    def bits(self) -> int:
        return self.syndrome_bits + self.class_bits

    def split(self, labels):
        labels = np.asarray(labels, dtype=np.uint64)
        smask = np.uint64((1 << self.syndrome_bits) - 1)
        return labels & smask, labels >> np.uint64(self.syndrome_bits)

    def label(self, ex: np.ndarray, ez: np.ndarray) -> tuple[int, int]:
        """(syndrome, class) labels of the error with full-length X part ex and Z part ez."""
        lab = np.uint64(0)
        for i, q in enumerate(self.active):
            if ex[q]:
                lab ^= self.col_x[i]
            if ez[q]:
                lab ^= self.col_z[i]
        s, c = self.split(lab)
        return int(s), int(c)

    def sector(self, which: str) -> "LabelMap":
        """Restrict to the labels one error sector can toggle ('X' or 'Z')."""
        return _sector_map(self, which)


def _pack_columns(rows: np.ndarray, offset: int) -> np.ndarray:
    """Column q -> integer whose bit (offset + i) is rows[i, q]."""
    weights = np.uint64(1) << (np.arange(rows.shape[0], dtype=np.uint64) + np.uint64(offset))
    return (rows.astype(np.uint64) * weights[:, None]).sum(axis=0, dtype=np.uint64) if rows.shape[0] \
        else np.zeros(rows.shape[1], dtype=np.uint64)


def build_label_map(active: np.ndarray, sx: np.ndarray, sz: np.ndarray,
                    class_lx: np.ndarray, class_lz: np.ndarray) -> LabelMap:
    active = np.asarray(active, dtype=np.int64)
    nsz, nsx, ncx, ncz = sz.shape[0], sx.shape[0], class_lx.shape[0], class_lz.shape[0]
    rs, cb = nsz + nsx, ncx + ncz
    if rs + cb > MAX_LABEL_BITS:
        raise ValueError(f"label space of {rs + cb} bits exceeds {MAX_LABEL_BITS}")
    # an X error is seen by Z-type stabilizers and Z-type logicals
    col_x = _pack_columns(sz[:, active], 0) | _pack_columns(class_lz[:, active], rs + ncx)
    col_z = _pack_columns(sx[:, active], nsz) | _pack_columns(class_lx[:, active], rs)
    meta = {"nsz": nsz, "nsx": nsx, "ncx": ncx, "ncz": ncz}
    lm = LabelMap(active, col_x, col_z, rs, cb)
    lm._layout = meta  # type: ignore[attr-defined]
    return lm


def _compress(cols: np.ndarray, keep_bits: list[int]) -> np.ndarray:
    out = np.zeros_like(cols)
    for new, old in enumerate(keep_bits):
        out |= ((cols >> np.uint64(old)) & np.uint64(1)) << np.uint64(new)
    return out


def _sector_map(lm: LabelMap, which: str) -> LabelMap:
    lay = lm._layout  # type: ignore[attr-defined]
    rs = lm.syndrome_bits
    if which == "X":
        sb = list(range(0, lay["nsz"]))
        cbits = list(range(rs + lay["ncx"], rs + lay["ncx"] + lay["ncz"]))
        cols = lm.col_x
    else:
        sb = list(range(lay["nsz"], rs))
        cbits = list(range(rs, rs + lay["ncx"]))
        cols = lm.col_z
    packed = _compress(cols, sb + cbits)
    zero = np.zeros_like(packed)
    return LabelMap(lm.active, packed if which == "X" else zero, packed if which == "Z" else zero,
                    len(sb), len(cbits))


def analysis_label_map(code: CssCode, cfg: ErasureConfig, ana: ErasureAnalysis | None = None) -> LabelMap:
    ana = ana or analyze(code, cfg)
    return build_label_map(cfg.active, ana.sx.to_dense(), ana.sz.to_dense(),
                           ana.rep_x.to_dense(), ana.rep_z.to_dense())


# weight-resolved cell counts

@dataclass
class WeightHistogram:
    """counts[s, c, w]: number of error patterns of weight w in cell (syndromes[s], c).

    ``kind`` is 'sector' (one Pauli type per qubit) or 'depol' (any of X, Y, Z);
    the mass of a pattern of weight w is f^w (1-p)^(a-w) with f = p for
    sectors and p/3 for depolarizing noise.
    """

    kind: str
    active: int
    syndrome_bits: int
    class_bits: int
    syndromes: np.ndarray
    counts: np.ndarray
    method: str = field(default="enumerate")

    def weight_probs(self, p: np.ndarray) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        f = p if self.kind == "sector" else p / 3
        w = np.arange(self.active + 1)[:, None]
        return f[None, :] ** w * (1 - p[None, :]) ** (self.active - w)

    def table(self, p: float) -> CosetTable:
        probs = self.counts @ self.weight_probs(p)[:, 0]
        keep = probs.sum(axis=1) > 0
        return CosetTable(self.syndrome_bits, self.class_bits, self.syndromes[keep], probs[keep])

    def entropy(self, p, chunk: int = 1 << 22) -> np.ndarray:
        """H(class | syndrome) for every p (one value per entry)."""
        wp = self.weight_probs(p)
        ns = self.counts.shape[0]
        step = max(1, chunk // max(1, self.counts.shape[1] * wp.shape[1]))
        out = np.zeros(wp.shape[1])
        for s in range(0, ns, step):
            probs = np.moveaxis(self.counts[s:s + step] @ wp, -1, 0)
            out += conditional_entropy(probs)
        return out


def _enumerate_labels(cols_x: np.ndarray, cols_z: np.ndarray | None):
    lab = np.zeros(1, dtype=np.uint64)
    w = np.zeros(1, dtype=np.int8)
    for i in range(cols_x.size):
        if cols_z is None:
            lab = np.concatenate([lab, lab ^ cols_x[i]])
            w = np.concatenate([w, w + 1])
        else:
            cx, cz = cols_x[i], cols_z[i]
            lab = np.concatenate([lab, lab ^ cx, lab ^ cx ^ cz, lab ^ cz])
            w = np.concatenate([w, w + 1, w + 1, w + 1])
    return lab, w


def _hist_enumerate(lm: LabelMap, kind: str) -> WeightHistogram:
    a = lm.active.size
    lab, w = _enumerate_labels(lm.col_x if kind == "depol" else lm.col_x | lm.col_z,
                               lm.col_z if kind == "depol" else None)
    uniq, inv = np.unique(lab, return_inverse=True)
    counts = np.bincount(inv.ravel() * (a + 1) + w, minlength=uniq.size * (a + 1))
    counts = counts.reshape(uniq.size, a + 1)
    synd, cls = lm.split(uniq)
    su, sinv = np.unique(synd, return_inverse=True)
    dense = np.zeros((su.size, 1 << lm.class_bits, a + 1))
    dense[sinv.ravel(), cls.astype(np.int64)] = counts
    return WeightHistogram(kind, a, lm.syndrome_bits, lm.class_bits, su, dense, "enumerate")


def _walsh_hadamard(arr: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 0 (length a power of two)."""
    size = arr.shape[0]
    rest = arr.shape[1:]
    h = 1
    while h < size:
        view = arr.reshape((-1, 2, h) + rest)
        lo, hi = view[:, 0].copy(), view[:, 1]
        view[:, 0] += hi
        view[:, 1] = lo - hi
        h *= 2
    return arr


def _hist_transform(lm: LabelMap, kind: str) -> WeightHistogram:
    """Counts from the characteristic function q^(s) = prod over qubits of the character values.

    For a label functional s the character of a qubit is 1 if no error on it
    flips s, and (1 - 4p/3) (depolarizing) or (1 - 2p) (sector) otherwise.
    """
    a, r = lm.active.size, lm.bits
    bit = np.arange(a, dtype=np.uint64)
    # for each label bit, the qubits whose X (Z) error toggles it
    char_x = np.zeros(1, dtype=np.uint64)
    char_z = np.zeros(1, dtype=np.uint64)
    for b in range(r):
        tx = (((lm.col_x >> np.uint64(b)) & np.uint64(1)) << bit).sum(dtype=np.uint64)
        tz = (((lm.col_z >> np.uint64(b)) & np.uint64(1)) << bit).sum(dtype=np.uint64)
        char_x = np.concatenate([char_x, char_x ^ tx])
        char_z = np.concatenate([char_z, char_z ^ tz])
    j = np.bitwise_count(char_x | char_z).astype(np.int64)
    del char_x, char_z
    onehot = np.zeros((1 << r, a + 1), dtype=np.int64)
    onehot[np.arange(1 << r), j] = 1
    spectrum = _walsh_hadamard(onehot)
    slope = 3 if kind == "depol" else 1
    kernel = np.zeros((a + 1, a + 1), dtype=np.int64)
    for jj in range(a + 1):
        poly = P.polymul(P.polypow([1, -1], jj), P.polypow([1, slope], a - jj))
        kernel[jj, : len(poly)] = np.rint(poly).astype(np.int64)
    counts = (spectrum @ kernel) >> r
    counts = counts.reshape(1 << lm.class_bits, 1 << lm.syndrome_bits, a + 1).transpose(1, 0, 2)
    keep = np.flatnonzero(counts.any(axis=(1, 2)))
    return WeightHistogram(kind, a, lm.syndrome_bits, lm.class_bits, keep.astype(np.uint64),
                           counts[keep].astype(float), "transform")


def weight_histogram(lm: LabelMap, kind: str, method: str = "auto") -> WeightHistogram:
    """Cell counts per error weight; ``kind`` in {'sector', 'depol'}."""
    a, r = lm.active.size, lm.bits
    enum_bits = a * (2 if kind == "depol" else 1)
    if method == "auto":
        method = "enumerate" if enum_bits <= min(r + 4, MAX_ENUM_BITS) or enum_bits <= 12 else "transform"
        if method == "transform" and r > MAX_ENUM_BITS - 4:
            method = "enumerate"
    if method == "enumerate":
        if enum_bits > MAX_ENUM_BITS:
            raise ValueError(f"enumeration over 2^{enum_bits} error patterns exceeds the bound 2^{MAX_ENUM_BITS}")
        return _hist_enumerate(lm, kind)
    if r > MAX_ENUM_BITS - 2:
        raise ValueError(f"transform over 2^{r} labels exceeds the bound 2^{MAX_ENUM_BITS - 2}")
    return _hist_transform(lm, kind)


# explicit tables (general channels)

def build_sector_table(h: BitMatrix, l: BitMatrix, flip_prob_per_qubit: float,
                       qubit_mask: BitVector) -> CosetTable:
    """Table of one error sector: syndrome h e^T, class l e^T, i.i.d. flips on the masked qubits."""
    if h.cols != qubit_mask.length or l.cols != qubit_mask.length:
        raise ValueError("qubit mask length differs from the matrix width")
    active = qubit_mask.indices()
    zero = np.zeros((0, h.cols), dtype=np.uint8)
    lm = build_label_map(active, zero, h.to_dense(), zero, l.to_dense())
    return weight_histogram(lm, "sector", "enumerate" if active.size <= MAX_ENUM_BITS else "auto").table(
        flip_prob_per_qubit)


def build_joint_table(code: CssCode, c: PauliChannel, qubit_mask: BitVector,
                      sx: BitMatrix, sz: BitMatrix, class_lx: BitMatrix, class_lz: BitMatrix) -> CosetTable:
    """Table of all Pauli patterns on the masked qubits under an arbitrary i.i.d. channel."""
    active = qubit_mask.indices()
    if 2 * active.size > MAX_ENUM_BITS - 2:
        raise ValueError(f"joint enumeration over 4^{active.size} patterns exceeds the bound")
    lm = build_label_map(active, sx.to_dense(), sz.to_dense(), class_lx.to_dense(), class_lz.to_dense())
    lab = np.zeros(1, dtype=np.uint64)
    prob = np.ones(1)
    p_i, p_x, p_y, p_z = c.probs
    for i in range(active.size):
        cx, cz = lm.col_x[i], lm.col_z[i]
        lab = np.concatenate([lab, lab ^ cx, lab ^ cx ^ cz, lab ^ cz])
        prob = np.concatenate([prob * p_i, prob * p_x, prob * p_y, prob * p_z])
    uniq, inv = np.unique(lab, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=prob, minlength=uniq.size)
    synd, cls = lm.split(uniq)
    su, sinv = np.unique(synd, return_inverse=True)
    dense = np.zeros((su.size, 1 << lm.class_bits))
    dense[sinv.ravel(), cls.astype(np.int64)] = mass
    return CosetTable(lm.syndrome_bits, lm.class_bits, su, dense)


# CI evaluation

def _channel_mode(channels: list[PauliChannel]) -> str:
    if all(ch.is_independent for ch in channels):
        return "sector"
    if all(ch.p_x == ch.p_y == ch.p_z for ch in channels):
        return "depol"
    return "general"


class ConfigEvaluator:
    """CI of one erasure configuration as a function of the channel."""

    def __init__(self, code: CssCode, cfg: ErasureConfig, mode: str, method: str = "auto"):
        self.code, self.cfg = code, cfg
        self.analysis = analyze(code, cfg)
        self.labels = analysis_label_map(code, cfg, self.analysis)
        self.mode = mode
        if mode == "sector":
            self.hists = [weight_histogram(self.labels.sector(s), "sector", method) for s in ("X", "Z")]
        elif mode == "depol":
            self.hists = [weight_histogram(self.labels, "depol", method)]
        else:
            self.hists = []

    @property
    def base(self) -> int:
        return self.analysis.ci

    def ci(self, channels: list[PauliChannel]) -> np.ndarray:
        if self.labels.class_bits == 0 or not channels:
            return np.full(len(channels), float(self.base))
        if self.mode == "sector":
            hx, hz = self.hists
            ent = hx.entropy([ch.flip_x for ch in channels]) + hz.entropy([ch.flip_z for ch in channels])
        elif self.mode == "depol":
            ent = self.hists[0].entropy([ch.p for ch in channels])
        else:
            a = self.analysis
            mask = BitVector.from_indices(self.code.n, self.labels.active)
            ent = np.array([conditional_entropy(build_joint_table(
                self.code, ch, mask, a.sx, a.sz, a.rep_x, a.rep_z).probs) for ch in channels])
        return self.base - ent

    def log_ratio(self, channel: PauliChannel, ex: np.ndarray, ez: np.ndarray) -> float:
        """log2[ sum_D p(s, D) / p(s, D_E) ] for the error with parts (ex, ez) on the active qubits."""
        if self.mode == "sector":
            total = 0.0
            for sector, hist, f in zip(("X", "Z"), self.hists, (channel.flip_x, channel.flip_z)):
                s, c = self.labels.sector(sector).label(ex, ez)
                total += hist.table(f).log_ratio(s, c)
            return total
        s, c = self.labels.label(ex, ez)
        if self.mode == "depol":
            return self.hists[0].table(channel.p).log_ratio(s, c)
        a = self.analysis
        mask = BitVector.from_indices(self.code.n, self.labels.active)
        return build_joint_table(self.code, channel, mask, a.sx, a.sz, a.rep_x, a.rep_z).log_ratio(s, c)


def combined_ci_single(code: CssCode, cfg: ErasureConfig, c: PauliChannel) -> float:
    """(k - b - 2c) - H(class | syndrome) for one erasure configuration."""
    return float(ConfigEvaluator(code, cfg, _channel_mode([c])).ci([c])[0])


def pauli_ci(code: CssCode, spec: NoiseSpec | PauliChannel) -> float:
    """Exact CI without erasures."""
    channel = spec.channel if isinstance(spec, NoiseSpec) else spec
    if isinstance(spec, NoiseSpec) and spec.e != 0:
        raise ValueError("pauli_ci takes e = 0; use combined_ci for erasures")
    return combined_ci_single(code, ErasureConfig.empty(code.n), channel)


def pauli_ci_curve(code: CssCode, channels: list[PauliChannel]) -> np.ndarray:
    """Exact CI without erasures for a list of channels (shares the cell counts)."""
    return ConfigEvaluator(code, ErasureConfig.empty(code.n), _channel_mode(channels)).ci(channels)


def _stratum_configs(n: int, m: int, samples: int | None, seed: int):
    """All weight-m masks if there are at most ``samples`` of them, else a seeded uniform sample."""
    from itertools import combinations
    total = comb(n, m, exact=True)
    if samples is None or total <= samples:
        return [np.array(c, dtype=np.int64) for c in combinations(range(n), m)], True
    out = []
    for i in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence([seed, m, i]))
        out.append(np.sort(rng.choice(n, size=m, replace=False)))
    return out, False


@dataclass
class CombinedResult:
    """CI[e_index, channel_index] with standard errors from sampled strata."""

    e_values: np.ndarray
    ci: np.ndarray
    stderr: np.ndarray
    strata_mean: np.ndarray
    strata_exact: list[bool]


def combined_ci_grid(code: CssCode, channels: list[PauliChannel], e_values, samples: int | None = None,
                     seed: int = 0, exact_max_n: int = 12, max_stratum: int | None = None,
                     workers: int | None = None, method: str = "auto") -> CombinedResult:
    """CI averaged over erasures for every (e, channel) pair.

    Erasure configurations are enumerated exactly when n <= exact_max_n.
    Otherwise each weight stratum is enumerated if it has at most ``samples``
    configurations and sampled uniformly (``samples`` draws) if not.  Strata
    above ``max_stratum`` are skipped; they must carry negligible weight.
    """
    e_values = np.atleast_1d(np.asarray(e_values, dtype=float))
    n = code.n
    mode = _channel_mode(channels)
    use_samples = None if n <= exact_max_n else samples
    if n > exact_max_n and samples is None:
        raise ValueError(f"n={n} > {exact_max_n}: pass samples for stratified erasure averaging")
    weights = stratum_weights(n, e_values)
    top = n if max_stratum is None else min(n, max_stratum)
    need = [m for m in range(top + 1) if weights[:, m].max() > 0]
    means = np.zeros((n + 1, len(channels)))
    varis = np.zeros((n + 1, len(channels)))
    exact_flags = [True] * (n + 1)

    def evaluate(mask_idx):
        cfg = ErasureConfig.from_indices(n, mask_idx)
        return ConfigEvaluator(code, cfg, mode, method).ci(channels)

    workers = workers or default_workers()
    for m in need:
        configs, exact = _stratum_configs(n, m, use_samples, seed)
        if workers > 1 and len(configs) > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(workers) as pool:
                vals = np.array(list(pool.map(evaluate, configs)))
        else:
            vals = np.array([evaluate(c) for c in configs])
        means[m] = vals.mean(axis=0)
        exact_flags[m] = exact
        if not exact and len(configs) > 1:
            varis[m] = vals.var(axis=0, ddof=1) / len(configs)
    ci = weights @ means
    stderr = np.sqrt((weights ** 2) @ varis)
    return CombinedResult(e_values, ci, stderr, means, exact_flags)


def combined_ci(code: CssCode, spec: NoiseSpec, samples: int | None = None, seed: int = 0,
                exact_max_n: int = 12, workers: int | None = None) -> tuple[float, float]:
    """(CI, stderr) averaged over erasures for one noise spec."""
    res = combined_ci_grid(code, [spec.channel], [spec.e], samples, seed, exact_max_n, workers=workers)
    return float(res.ci[0, 0]), float(res.stderr[0, 0])
