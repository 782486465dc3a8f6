"""Curve crossings, finite-size-scaling collapse and pseudo-threshold tables."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


class CrossingError(ValueError):
    pass


@dataclass
class CiCurve:
    """CI as a function of one error probability, with per-point standard errors."""

    label: str
    x: np.ndarray
    ci: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.ci = np.asarray(self.ci, dtype=float)
        self.stderr = np.zeros_like(self.x) if self.stderr is None else np.asarray(self.stderr, dtype=float)
        if not (self.x.shape == self.ci.shape == self.stderr.shape) or self.x.ndim != 1:
            raise ValueError("x, ci and stderr must be 1D arrays of equal length")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("x must be strictly increasing")
        if np.any(self.stderr < 0):
            raise ValueError("stderr must be non-negative")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.meta.get("axis", "e"), "ci", "stderr"])
        for row in zip(self.x, self.ci, self.stderr):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, label: str = "", **meta) -> "CiCurve":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        header, body = rows[0], rows[1:]
        data = np.array(body, dtype=float).reshape(-1, 3)
        return cls(label, data[:, 0], data[:, 1], data[:, 2], meta={"axis": header[0], **meta})


def sign_changes(diff: np.ndarray, atol: float = 1e-12) -> list[tuple[int, int]]:
    """Pairs (i, j) of consecutive clearly nonzero entries of diff with opposite signs.

    Entries with |diff| <= atol count as zero; touching zero without changing
    sign (e.g. curves that agree at the grid edge) is not a crossing.
    """
    nz = np.flatnonzero(np.abs(diff) > atol)
    s = np.sign(diff[nz])
    flips = np.flatnonzero(s[:-1] != s[1:])
    return [(int(nz[f]), int(nz[f + 1])) for f in flips]


def find_crossing(a: CiCurve, b: CiCurve, window: tuple[float, float] | None = None) -> tuple[float, float]:
    """Linearly interpolated crossing of two curves on a shared grid.

    The uncertainty combines the local grid spacing with the propagated
    standard error of the difference.
    """
    if a.x.shape != b.x.shape or not np.allclose(a.x, b.x, rtol=0, atol=1e-12):
        raise ValueError("curves must share the same x grid")
    x = a.x
    keep = np.ones_like(x, dtype=bool) if window is None else (x >= window[0]) & (x <= window[1])
    x, diff = x[keep], (a.ci - b.ci)[keep]
    err = np.hypot(a.stderr, b.stderr)[keep]
    pairs = sign_changes(diff)
    if not pairs:
        raise CrossingError("no sign change")
    if len(pairs) > 1:
        raise CrossingError(f"multiple sign changes near x = {[float(x[i]) for i, _ in pairs]}")
    i, j = pairs[0]
    if j > i + 1:
        # the difference vanishes on the grid points between i and j
        mid = (i + j) // 2 if (j - i) % 2 == 0 else None
        xc = float(x[mid]) if mid is not None else float((x[i + 1] + x[j - 1]) / 2)
        return xc, float(x[j] - x[i])
    d0, d1 = diff[i], diff[j]
    t = d0 / (d0 - d1)
    xc = x[i] + t * (x[j] - x[i])
    slope = (d1 - d0) / (x[j] - x[i])
    sigma = ((1 - t) * err[i] + t * err[j]) / abs(slope)
    return float(xc), float(np.hypot(x[j] - x[i], sigma))


# finite-size scaling

@dataclass
class CollapseResult:
    e_th: float
    nu: float
    residual: float
    bootstrap_errors: tuple[float, float]
    at_boundary: bool = False
    method: dict = field(default_factory=dict)


def _tricube(t: np.ndarray) -> np.ndarray:
    t = np.clip(np.abs(t), 0, 1)
    return (1 - t ** 3) ** 3


def collapse_objective(xs, ys, ds, groups, e_th: float, nu: float, retain: float = 0.6,
                       bandwidth: float = 0.2) -> float:
    """Mean squared deviation of the rescaled points from a local-linear master curve.

    Points are rescaled to u = (x - e_th) d^(1/nu).  Only the fraction
    ``retain`` of points with the smallest |u| enter.  The master curve at a
    point is a tricube-weighted local linear fit through the points of the
    other distances, with bandwidth ``bandwidth`` times the retained u-range.
    """
    if nu <= 0:
        return np.inf
    u = (xs - e_th) * ds ** (1.0 / nu)
    umax = np.quantile(np.abs(u), retain)
    sel = np.abs(u) <= umax
    u, y, g = u[sel], ys[sel], groups[sel]
    if len(np.unique(g)) < 2:
        return np.inf
    h = bandwidth * (u.max() - u.min())
    if h <= 0:
        return np.inf
    w = _tricube((u[:, None] - u[None, :]) / h)
    w[g[:, None] == g[None, :]] = 0.0
    du = u[None, :] - u[:, None]
    s0 = w.sum(1)
    s1 = (w * du).sum(1)
    s2 = (w * du ** 2).sum(1)
    t0 = (w * y[None, :]).sum(1)
    t1 = (w * du * y[None, :]).sum(1)
    det = s0 * s2 - s1 ** 2
    ok = (s0 > 0) & (det > 1e-14 * np.maximum(s0 * s2, 1e-300))
    if ok.sum() < max(3, 0.5 * len(u)):
        return np.inf
    fit = (s2[ok] * t0[ok] - s1[ok] * t1[ok]) / det[ok]
    return float(np.mean((y[ok] - fit) ** 2))


def _stack(curves: list[CiCurve], distances, windows):
    xs, ys, ds, gs, es = [], [], [], [], []
    for gi, (c, d) in enumerate(zip(curves, distances)):
        k = float(c.meta.get("k", 1))
        keep = np.ones_like(c.x, dtype=bool)
        if windows is not None:
            lo, hi = windows[gi] if isinstance(windows[0], (tuple, list)) else windows
            keep = (c.x >= lo) & (c.x <= hi)
        xs.append(c.x[keep])
        ys.append(c.ci[keep] / k)
        es.append(c.stderr[keep] / k)
        ds.append(np.full(keep.sum(), float(d)))
        gs.append(np.full(keep.sum(), gi))
    return tuple(np.concatenate(v) for v in (xs, ys, ds, gs, es))


def fss_collapse(curves: list[CiCurve], distances=None, windows=None,
                 e_grid=None, nu_grid=None, bootstrap: int = 50, seed: int = 0,
                 retain: float = 0.6, bandwidth: float = 0.2) -> CollapseResult:
    """Fit (e_th, nu) so that ci/k versus (x - e_th) d^(1/nu) falls on one curve.

    Coarse grid scan, then Nelder-Mead refinement, then a parametric
    bootstrap that resamples every point from N(ci, stderr) and refits.
    """
    if len(curves) < 3:
        raise ValueError("fss_collapse needs at least 3 distances")
    if distances is None:
        distances = [c.meta["d"] for c in curves]
    xs, ys, ds, gs, errs = _stack(curves, distances, windows)
    e_grid = np.linspace(xs.min(), xs.max(), 41)[1:-1] if e_grid is None else np.asarray(e_grid)
    nu_grid = np.linspace(0.4, 3.0, 53) if nu_grid is None else np.asarray(nu_grid)

    def obj(params, y=ys):
        return collapse_objective(xs, y, ds, gs, params[0], params[1], retain, bandwidth)

    def fit(y, start=None):
        if start is None:
            scores = np.array([[obj((e, nu), y) for nu in nu_grid] for e in e_grid])
            i, j = np.unravel_index(np.nanargmin(scores), scores.shape)
            start = (e_grid[i], nu_grid[j])
        res = minimize(obj, np.array(start, dtype=float), args=(y,), method="Nelder-Mead",
                       options={"xatol": 1e-5, "fatol": 1e-12, "maxiter": 2000})
        return res.x, float(res.fun), start

    best, resid, start = fit(ys)
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(bootstrap):
        yb = ys + rng.standard_normal(ys.shape) * errs
        b, _, _ = fit(yb, start=best)
        boots.append(b)
    boots = np.array(boots) if boots else np.zeros((0, 2))
    sig = tuple(float(v) for v in boots.std(axis=0, ddof=1)) if len(boots) > 1 else (0.0, 0.0)
    span_e, span_nu = (e_grid.min(), e_grid.max()), (nu_grid.min(), nu_grid.max())
    at_boundary = not (span_e[0] < best[0] < span_e[1] and span_nu[0] < best[1] < span_nu[1])
    return CollapseResult(float(best[0]), float(best[1]), resid, sig, at_boundary,
                          method={"objective": "local-linear tricube master curve, other distances only",
                                  "retain": retain, "bandwidth": bandwidth, "bootstrap": bootstrap,
                                  "seed": seed})


# pseudo-threshold tables

DEFAULT_GRIDS = {"bf": (0.002, 0.2, 0.002), "depol": (0.003, 0.3, 0.003)}


def parse_grid(text: str) -> np.ndarray:
    """'start:stop:step' (stop inclusive within half a step) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(np.floor((stop - start) / step + 0.5)) + 1
            return start + step * np.arange(count)
        vals = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ValueError(f"invalid grid {text!r}; expected start:stop:step or a comma list") from None
    if np.any(np.diff(vals) <= 0):
        raise ValueError(f"grid {text!r} is not strictly increasing")
    return vals


def grid_from(spec) -> np.ndarray:
    if isinstance(spec, str):
        return parse_grid(spec)
    start, stop, step = spec
    return start + step * np.arange(int(np.floor((stop - start) / step + 0.5)) + 1)


def pauli_curves(code_spec: str, family: str, p_grid, e_values, samples: int | None = None,
                 seed: int = 0, workers: int | None = None) -> list[CiCurve]:
    """One CI-versus-p curve per erasure probability."""
    from .codes import from_spec
    from .noise import channel_family
    from .pauli_ci import combined_ci_grid

    code = from_spec(code_spec)
    p_grid = np.asarray(p_grid, dtype=float)
    make = channel_family(family)
    res = combined_ci_grid(code, [make(p) for p in p_grid], e_values, samples=samples, seed=seed, workers=workers)
    return [CiCurve(f"{code_spec} {family} e={e:g}", p_grid, res.ci[i] / code.k, res.stderr[i] / code.k,
                    meta={"axis": "p", "k": 1, "code": code_spec, "e": float(e), "per_logical": True})
            for i, e in enumerate(res.e_values)]


def threshold_table(config: dict) -> list[dict]:
    """Rows {e, pair, family, crossing, uncertainty} for each requested code pair.

    config keys: ``pairs`` (list of [code_a, code_b]), ``e`` (erasure values),
    ``families`` (subset of bf/depol), optional ``grids`` {family: grid},
    ``samples`` and ``seed`` for codes too large for exact erasure averaging.
    Curves are compared per logical qubit (ci / k).
    """
    e_values = [float(e) for e in config["e"]]
    families = config.get("families", ["bf", "depol"])
    grids = {f: grid_from(config.get("grids", {}).get(f, DEFAULT_GRIDS[f])) for f in families}
    rows = []
    cache: dict[tuple[str, str], list[CiCurve]] = {}
    for a, b in config["pairs"]:
        for fam in families:
            for spec in (a, b):
                if (spec, fam) not in cache:
                    cache[(spec, fam)] = pauli_curves(spec, fam, grids[fam], e_values,
                                                      samples=config.get("samples"), seed=config.get("seed", 0),
                                                      workers=config.get("workers"))
            for i, e in enumerate(e_values):
                row = {"e": e, "pair": f"{a}|{b}", "family": fam}
                try:
                    xc, unc = find_crossing(cache[(a, fam)][i], cache[(b, fam)][i])
                    row.update(crossing=xc, uncertainty=unc)
                except CrossingError as err:
                    row.update(crossing=float("nan"), uncertainty=float("nan"), error=str(err))
                rows.append(row)
    return rows
