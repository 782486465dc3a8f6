"""Disordered spin models of CSS codes and CI through their partition functions.

One sigma spin per X-check generator and one tau spin per Z-check generator.
For qubit l, P^X_l is the product of the sigma spins of the X checks that
contain l (P^Z_l likewise), and the Hamiltonian is

    H = sum_l eta^x_l (J_x - J_1/2) P^X_l / 2 + eta^z_l (J_z - J_1/2) P^Z_l / 2
              + eta^x_l eta^z_l J_1 P^X_l P^Z_l / 4

with (eta^x, eta^z) = (+,+) I, (-,+) X, (-,-) Y, (+,-) Z and (0,0) for an
erased qubit.  exp(H) is proportional to the probability of the error times a
stabilizer, so Z_D / Z_0 is a ratio of coset probabilities.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .codes import CssCode
from .erasure_ci import ErasureAnalysis, ErasureConfig, analyze
from .gf2_linalg import BitMatrix, dense_rank, solve
from .noise import Couplings, NoiseSpec, PauliChannel, couplings, eta_distribution

SCHEMA = "ci_lab.spin_model"
SCHEMA_VERSION = 1
MAX_SPINS = 26
_CHUNK = 1 << 22


@dataclass
class SpinModel:
    """Spin model of a CSS code.

    ``x_terms[l]`` / ``z_terms[l]`` list the sigma / tau spins in P^X_l / P^Z_l.
    ``defect_x[i]`` is the support of the i-th X logical representative (it
    flips eta^x), ``defect_z[i]`` that of the i-th Z logical.
    """

    code_name: str
    n: int
    k: int
    x_spins: int
    z_spins: int
    x_terms: tuple[tuple[int, ...], ...]
    z_terms: tuple[tuple[int, ...], ...]
    couplings: Couplings
    defect_x: tuple[tuple[int, ...], ...]
    defect_z: tuple[tuple[int, ...], ...]
    channel: PauliChannel | None = field(default=None, compare=False)

    @property
    def coefficients(self) -> tuple[float, float, float]:
        """(alpha, beta, gamma) multiplying eta^x P^X, eta^z P^Z and eta^x eta^z P^X P^Z."""
        c = self.couplings
        return (c.J_x - c.J_1 / 2) / 2, (c.J_z - c.J_1 / 2) / 2, c.J_1 / 4

    def _incidence(self, terms, spins) -> np.ndarray:
        m = np.zeros((spins, self.n), dtype=np.uint8)
        for q, s in enumerate(terms):
            m[list(s), q] = 1
        return m

    @cached_property
    def px_table(self) -> np.ndarray:
        """P^X_l for every sigma configuration, shape (2^x_spins, n), entries +-1."""
        return _products(self._incidence(self.x_terms, self.x_spins))

    @cached_property
    def pz_table(self) -> np.ndarray:
        return _products(self._incidence(self.z_terms, self.z_spins))

    def defect_flips(self, defect: int) -> tuple[np.ndarray, np.ndarray]:
        """0/1 flip patterns of eta^x and eta^z for a defect label.

        Bit i (< k) of the label inserts X logical i; bit k + i inserts Z logical i.
        """
        fx = np.zeros(self.n, dtype=np.uint8)
        fz = np.zeros(self.n, dtype=np.uint8)
        for i in range(self.k):
            if defect >> i & 1:
                fx[list(self.defect_x[i])] ^= 1
            if defect >> (self.k + i) & 1:
                fz[list(self.defect_z[i])] ^= 1
        return fx, fz


def _products(incidence: np.ndarray) -> np.ndarray:
    parity = np.zeros((1, incidence.shape[1]), dtype=np.uint8)
    for row in incidence:
        parity = np.vstack([parity, parity ^ row])
    return 1.0 - 2.0 * parity


def build_spin_model(code: CssCode, c: PauliChannel) -> SpinModel:
    """Spin model with spins on the (independent) check generators of the code."""
    hx, hz = code.hx_dense, code.hz_dense
    for name, h in (("X", hx), ("Z", hz)):
        if h.shape[0] and dense_rank(h) != h.shape[0]:
            raise ValueError(f"{name} checks of {code.name} are not independent")
    cp = couplings(c)
    if not all(np.isfinite([cp.J_x, cp.J_z, cp.J_1])):
        raise OverflowError("coupling overflow")
    return SpinModel(
        code_name=code.name,
        n=code.n,
        k=code.k,
        x_spins=hx.shape[0],
        z_spins=hz.shape[0],
        x_terms=tuple(tuple(int(i) for i in np.flatnonzero(hx[:, q])) for q in range(code.n)),
        z_terms=tuple(tuple(int(i) for i in np.flatnonzero(hz[:, q])) for q in range(code.n)),
        couplings=cp,
        defect_x=tuple(tuple(int(i) for i in np.flatnonzero(r)) for r in code.lx_dense),
        defect_z=tuple(tuple(int(i) for i in np.flatnonzero(r)) for r in code.lz_dense),
        channel=c,
    )


def term_sizes(model: SpinModel, sector: str = "X") -> list[int]:
    terms = model.x_terms if sector.upper() == "X" else model.z_terms
    return [len(t) for t in terms]


# partition functions

def _check_size(model: SpinModel) -> None:
    if model.x_spins + model.z_spins > MAX_SPINS:
        raise ValueError(f"{model.x_spins + model.z_spins} spins exceed the exact-sum bound {MAX_SPINS}")


def log_partitions(model: SpinModel, eta_x: np.ndarray, eta_z: np.ndarray) -> np.ndarray:
    """Natural-log partition function for a batch of eta configurations, shape (B, n) each."""
    _check_size(model)
    eta_x = np.atleast_2d(np.asarray(eta_x, dtype=float))
    eta_z = np.atleast_2d(np.asarray(eta_z, dtype=float))
    alpha, beta, gamma = model.coefficients
    px, pz = model.px_table, model.pz_table
    ex = alpha * eta_x @ px.T  # (B, Sx)
    ez = beta * eta_z @ pz.T  # (B, Sz)
    if gamma == 0.0:
        return logsumexp(ex, axis=1) + logsumexp(ez, axis=1)
    cross = gamma * eta_x * eta_z  # (B, n)
    out = np.empty(eta_x.shape[0])
    rows = max(1, _CHUNK // (pz.shape[0] * px.shape[0]))
    for b0 in range(0, eta_x.shape[0], rows):
        sl = slice(b0, b0 + rows)
        if px.shape[0] * pz.shape[0] <= _CHUNK:
            energy = (px[None, :, :] * cross[sl, None, :]) @ pz.T  # (b, Sx, Sz)
            energy += ex[sl, :, None] + ez[sl, None, :]
            out[sl] = logsumexp(energy.reshape(energy.shape[0], -1), axis=1)
        else:
            for b in range(sl.start, min(sl.stop, eta_x.shape[0])):
                step = max(1, _CHUNK // pz.shape[0])
                parts = []
                for s0 in range(0, px.shape[0], step):
                    e = (px[s0:s0 + step] * cross[b]) @ pz.T + ex[b, s0:s0 + step, None] + ez[b][None, :]
                    parts.append(logsumexp(e))
                out[b] = logsumexp(parts)
    return out


def log_partition(model: SpinModel, eta: np.ndarray, defect: int = 0) -> float:
    """log Z_D for eta of shape (n, 2) holding (eta^x, eta^z) per qubit."""
    eta = np.asarray(eta)
    fx, fz = model.defect_flips(defect)
    ex = eta[:, 0] * (1 - 2.0 * fx)
    ez = eta[:, 1] * (1 - 2.0 * fz)
    return float(log_partitions(model, ex[None], ez[None])[0])


def eta_from_error(ex: np.ndarray, ez: np.ndarray, erased: np.ndarray | None = None) -> np.ndarray:
    """(eta^x, eta^z) per qubit from the X and Z parts of an error; erased qubits get (0, 0)."""
    eta = np.stack([1 - 2 * np.asarray(ex, dtype=np.int8), 1 - 2 * np.asarray(ez, dtype=np.int8)], axis=1)
    if erased is not None and len(erased):
        eta[np.asarray(erased)] = 0
    return eta.astype(np.int8)


def sample_eta(spec: NoiseSpec, n: int, seed: int | np.random.SeedSequence) -> np.ndarray:
    """i.i.d. (eta^x, eta^z) per qubit; shape (n, 2)."""
    values, masses = eta_distribution(spec)
    rng = np.random.default_rng(seed)
    return values[rng.choice(len(masses), size=n, p=masses)]


@dataclass
class DefectSet:
    """Logical insertions matched one-to-one to the logical classes of an erasure analysis.

    X insertion i flips exactly the i-th Z-class bit; Z insertion j flips
    exactly the j-th X-class bit.  Labels follow SpinModel.defect_flips.
    """

    labels: np.ndarray
    x_part: np.ndarray  # (dz, k)
    z_part: np.ndarray  # (dx, k)


def defect_set(ana: ErasureAnalysis) -> DefectSet:
    k = ana.k

    def dual(v: BitMatrix) -> np.ndarray:
        if v.rows == 0:
            return np.zeros((0, k), dtype=np.uint8)
        # rows u with v u^T = e_i, i.e. u @ v^T = e_i
        out = solve(BitMatrix.from_dense(v.to_dense().T), BitMatrix.identity(v.rows))
        if out is None:
            raise ValueError("recoverable basis is not independent")
        return out.to_dense()

    xs = dual(ana.vz)  # X insertions, dual to the Z-recoverable combinations
    zs = dual(ana.vx)
    gens = [int(sum(int(b) << i for i, b in enumerate(row))) for row in xs]
    gens += [int(sum(int(b) << (k + i) for i, b in enumerate(row))) for row in zs]
    labels = np.zeros(1, dtype=np.int64)
    for g in gens:
        labels = np.concatenate([labels, labels ^ g])
    return DefectSet(labels, xs, zs)


def log_ratio(model: SpinModel, eta: np.ndarray, defects: DefectSet | None = None) -> float:
    """log2 of sum_D Z_D / Z_0 over the defect set (all 4^k logicals by default)."""
    labels = np.arange(1 << (2 * model.k)) if defects is None else defects.labels
    eta = np.asarray(eta)
    ex = np.empty((labels.size, model.n))
    ez = np.empty((labels.size, model.n))
    for i, lab in enumerate(labels):
        fx, fz = model.defect_flips(int(lab))
        ex[i] = eta[:, 0] * (1 - 2.0 * fx)
        ez[i] = eta[:, 1] * (1 - 2.0 * fz)
    logz = log_partitions(model, ex, ez)
    return float((logsumexp(logz) - logz[0]) / np.log(2))


def _batched_log_ratios(model: SpinModel, etas: np.ndarray, defects: DefectSet) -> np.ndarray:
    """log2 sum_D Z_D / Z_0 for a batch of eta configurations, shape (B, n, 2)."""
    flips = [model.defect_flips(int(lab)) for lab in defects.labels]
    logz = np.empty((etas.shape[0], len(flips)))
    for j, (fx, fz) in enumerate(flips):
        logz[:, j] = log_partitions(model, etas[:, :, 0] * (1 - 2.0 * fx), etas[:, :, 1] * (1 - 2.0 * fz))
    return (logsumexp(logz, axis=1) - logz[:, 0]) / np.log(2)


def _all_errors(active: np.ndarray, n: int, channel: PauliChannel):
    """Every Pauli pattern on the active qubits with its probability: eta (4^a, n, 2), prob."""
    a = active.size
    digits = (np.arange(4 ** a)[:, None] // 4 ** np.arange(a)[None, :]) % 4  # 0=I,1=X,2=Y,3=Z
    xs = np.isin(digits, (1, 2))
    zs = np.isin(digits, (2, 3))
    etas = np.zeros((4 ** a, n, 2), dtype=np.int8)
    etas[:, active, 0] = 1 - 2 * xs
    etas[:, active, 1] = 1 - 2 * zs
    prob = np.prod(channel.probs[digits], axis=1)
    return etas, prob


def ci_statmech(code: CssCode, spec: NoiseSpec, disorder_samples: int = 1000, seed: int = 0,
                exact_max_active: int = 10, chunk: int = 4096) -> tuple[float, float]:
    """CI as (k - b - 2c) - log2 sum_D Z_D / Z_0, averaged over erasures and errors.

    Without erasures and with at most ``exact_max_active`` qubits the error
    average is an exact sum over all 4^n patterns (stderr 0).  Otherwise
    (erasure set, error) pairs are drawn from their physical distribution,
    stream i seeded by SeedSequence([seed, i]).
    """
    model = build_spin_model(code, spec.channel)
    _check_size(model)
    if spec.e == 0 and code.n <= exact_max_active:
        cfg = ErasureConfig.empty(code.n)
        ana = analyze(code, cfg)
        defs = defect_set(ana)
        etas, prob = _all_errors(np.arange(code.n), code.n, spec.channel)
        keep = prob > 0
        etas, prob = etas[keep], prob[keep]
        vals = np.concatenate([_batched_log_ratios(model, etas[s:s + chunk], defs)
                               for s in range(0, len(prob), chunk)])
        return float(ana.ci - prob @ vals), 0.0
    cache: dict[bytes, tuple[ErasureAnalysis, DefectSet]] = {}
    values = np.empty(disorder_samples)
    for i in range(disorder_samples):
        eta = sample_eta(spec, code.n, np.random.SeedSequence([seed, i]))
        erased = np.flatnonzero(eta[:, 0] == 0)
        key = erased.tobytes()
        if key not in cache:
            ana = analyze(code, ErasureConfig.from_indices(code.n, erased))
            cache[key] = (ana, defect_set(ana))
        ana, defs = cache[key]
        values[i] = ana.ci - _batched_log_ratios(model, eta[None].astype(float), defs)[0]
    err = values.std(ddof=1) / np.sqrt(disorder_samples) if disorder_samples > 1 else 0.0
    return float(values.mean()), float(err)


# export / import

def model_to_dict(model: SpinModel) -> dict:
    return {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "code": {"name": model.code_name, "n": model.n, "k": model.k},
        "qubit_indexing": "qubit index as in the code construction (see README)",
        "spins": {"x": model.x_spins, "z": model.z_spins},
        "terms": [{"qubit": q, "x": list(model.x_terms[q]), "z": list(model.z_terms[q])} for q in range(model.n)],
        "couplings": {"J_x": model.couplings.J_x, "J_z": model.couplings.J_z, "J_1": model.couplings.J_1},
        "channel": None if model.channel is None else
        {"p_x": model.channel.p_x, "p_y": model.channel.p_y, "p_z": model.channel.p_z},
        "defects": {"x": [list(d) for d in model.defect_x], "z": [list(d) for d in model.defect_z]},
    }


def model_from_dict(data: dict) -> SpinModel:
    if data.get("schema") != SCHEMA:
        raise ValueError("not a spin-model document")
    if data.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported spin-model schema version {data.get('version')}")
    terms = sorted(data["terms"], key=lambda t: t["qubit"])
    ch = data.get("channel")
    return SpinModel(
        code_name=data["code"]["name"],
        n=data["code"]["n"],
        k=data["code"]["k"],
        x_spins=data["spins"]["x"],
        z_spins=data["spins"]["z"],
        x_terms=tuple(tuple(t["x"]) for t in terms),
        z_terms=tuple(tuple(t["z"]) for t in terms),
        couplings=Couplings(**data["couplings"]),
        defect_x=tuple(tuple(d) for d in data["defects"]["x"]),
        defect_z=tuple(tuple(d) for d in data["defects"]["z"]),
        channel=None if ch is None else PauliChannel(ch["p_x"], ch["p_y"], ch["p_z"]),
    )


def export_model(model: SpinModel, destination) -> None:
    Path(destination).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def import_model(source) -> SpinModel:
    return model_from_dict(json.loads(Path(source).read_text(encoding="utf-8")))
