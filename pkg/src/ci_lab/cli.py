"""Command-line front end: ``ci-lab <command> ...`` (also ``python3 -m ci_lab``)."""
from __future__ import annotations

import argparse
import json
import shlex
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__


class UsageError(Exception):
    """Bad user input: exit code 2."""


@dataclass
class RunManifest:
    command_line: str
    code: str | None = None
    noise: str | None = None
    erasure: float | None = None
    grids: dict = field(default_factory=dict)
    seed: int | None = None
    samples: int | None = None
    workers: int = 1
    version: str = __version__
    wall_time: float = 0.0


def _code(spec: str):
    from .codes import from_spec
    try:
        return from_spec(spec)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _noise(spec: str):
    from .noise import parse_noise
    try:
        return parse_noise(spec)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _grid(spec: str) -> np.ndarray:
    from .analysis import parse_grid
    try:
        return parse_grid(spec)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _prob(value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"probability must lie in [0, 1], got {v}")
    return v


def _write(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _csv_with_manifest(curve, manifest: RunManifest) -> str:
    return "# manifest: " + json.dumps(asdict(manifest), sort_keys=True) + "\n" + curve.to_csv()


def read_curve_file(path: str):
    """Load a curve CSV written by this tool; returns (CiCurve, manifest dict or None)."""
    from .analysis import CiCurve
    text = Path(path).read_text(encoding="utf-8")
    manifest = None
    body = []
    for line in text.splitlines():
        if line.startswith("# manifest: "):
            manifest = json.loads(line[len("# manifest: "):])
        elif not line.startswith("#"):
            body.append(line)
    return CiCurve.from_csv("\n".join(body), label=path), manifest


def _hex_rows(m) -> list[str]:
    """Rows as hex strings; bit j of a row is bit (j % 4) of hex digit j // 4, digits left to right."""
    dense = m.to_dense()
    out = []
    for row in dense:
        digits = []
        for j in range(0, len(row), 4):
            nib = sum(int(b) << i for i, b in enumerate(row[j:j + 4]))
            digits.append(f"{nib:x}")
        out.append("".join(digits))
    return out


# command handlers


def cmd_codes(args, manifest) -> int:
    from .codes import FAMILIES, distance_bruteforce, validate
    if args.action == "list":
        for name, desc in FAMILIES.items():
            print(f"{name:8s} {desc}")
        return 0
    if not args.code:
        raise UsageError(f"codes {args.action} needs --code")
    code = _code(args.code)
    if args.action == "info":
        print(f"{code.name} [[{code.n},{code.k},{code.declared_distance}]]")
        print(f"X checks: {code.hx.rows} (weights {sorted(set(code.hx.row_weights().tolist()))})")
        print(f"Z checks: {code.hz.rows} (weights {sorted(set(code.hz.row_weights().tolist()))})")
        return 0
    if args.action == "check":
        report = validate(code)
        print(report)
        if args.distance:
            for sector in ("X", "Z"):
                d = distance_bruteforce(code, sector)
                flag = "" if d == code.declared_distance else f" (declared {code.declared_distance})"
                print(f"{sector} distance: {d}{flag}")
                if d != code.declared_distance:
                    return 1
        return 0 if report.ok else 1
    if args.action == "export":
        doc = {"name": code.name, "n": code.n, "k": code.k, "d": code.declared_distance,
               "bit_order": "bit j of a row is bit (j mod 4) of hex digit floor(j/4)",
               "hx": _hex_rows(code.hx), "hz": _hex_rows(code.hz),
               "lx": _hex_rows(code.lx), "lz": _hex_rows(code.lz),
               "manifest": asdict(manifest)}
        _write(args.out, json.dumps(doc, indent=2) + "\n")
        return 0
    raise UsageError(f"unknown codes action {args.action!r}")


def cmd_ci(args, manifest) -> int:
    code = _code(args.code)
    manifest.code = args.code
    t0 = time.perf_counter()
    if args.kind == "erasure":
        from .erasure_ci import EXACT_MAX_QUBITS, exact_ci, stratified_ci
        from .analysis import CiCurve
        grid = _grid(args.e_grid)
        manifest.grids = {"e": args.e_grid}
        manifest.seed, manifest.samples = args.seed, args.samples
        method = args.method
        if method == "auto":
            method = "exact" if code.n <= 16 else "stratified"
        if method == "exact":
            if code.n > EXACT_MAX_QUBITS:
                raise ValueError(f"exact erasure average needs n <= {EXACT_MAX_QUBITS}")
            curve = CiCurve(code.name, grid, exact_ci(code, grid), np.zeros_like(grid))
        else:
            curve = stratified_ci(code, grid, args.samples, args.seed, workers=args.workers)
        manifest.wall_time = time.perf_counter() - t0
        _write(args.out, _csv_with_manifest(curve, manifest))
        return 0
    from .noise import NoiseSpec
    from .pauli_ci import combined_ci, pauli_ci
    channel = _noise(args.noise)
    manifest.noise = args.noise
    if args.kind == "pauli":
        value, err, method = pauli_ci(code, channel), 0.0, "coset-table"
    else:
        manifest.erasure, manifest.seed, manifest.samples = args.erasure, args.seed, args.samples
        value, err = combined_ci(code, NoiseSpec(channel, args.erasure), samples=args.samples,
                                 seed=args.seed, workers=args.workers)
        method = "coset-table, exact erasure average" if code.n <= 12 else "coset-table, stratified erasures"
    manifest.wall_time = time.perf_counter() - t0
    doc = {"code": code.name, "ci": value, "stderr": err, "method": method,
           "runtime": manifest.wall_time, "manifest": asdict(manifest)}
    _write(args.out, json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_scan(args, manifest) -> int:
    from .analysis import CiCurve
    from .noise import channel_family
    from .pauli_ci import combined_ci_grid
    code = _code(args.code)
    grid = _grid(args.p_grid)
    try:
        make = channel_family(args.family)
    except ValueError as err:
        raise UsageError(str(err)) from None
    manifest.code, manifest.noise, manifest.erasure = args.code, args.family, args.erasure
    manifest.grids = {"p": args.p_grid}
    manifest.seed, manifest.samples = args.seed, args.samples
    t0 = time.perf_counter()
    res = combined_ci_grid(code, [make(p) for p in grid], [args.erasure], samples=args.samples,
                           seed=args.seed, workers=args.workers)
    scale = code.k if args.per_logical else 1
    curve = CiCurve(code.name, grid, res.ci[0] / scale, res.stderr[0] / scale, meta={"axis": "p"})
    manifest.wall_time = time.perf_counter() - t0
    _write(args.out, _csv_with_manifest(curve, manifest))
    return 0


def cmd_cross(args, manifest) -> int:
    from .analysis import find_crossing
    a, _ = read_curve_file(args.a)
    b, _ = read_curve_file(args.b)
    window = None
    if args.window:
        lo, hi = (float(v) for v in args.window.split(":"))
        window = (lo, hi)
    xc, unc = find_crossing(a, b, window)
    doc = {"crossing": xc, "uncertainty": unc, "a": args.a, "b": args.b, "manifest": asdict(manifest)}
    _write(args.out, json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_collapse(args, manifest) -> int:
    from .analysis import CiCurve, fss_collapse
    curves, dists = [], []
    for i, path in enumerate(args.curves):
        c, man = read_curve_file(path)
        if args.distances:
            d, k = args.distances[i], (args.k[i] if args.k else 1)
        elif man and man.get("code"):
            code = _code(man["code"])
            d, k = code.declared_distance, code.k
        else:
            raise UsageError(f"{path}: no manifest with a code spec; pass --distances")
        curves.append(CiCurve(path, c.x, c.ci, c.stderr, meta={"k": k, "d": d}))
        dists.append(d)
    window = tuple(float(v) for v in args.window.split(":")) if args.window else None
    res = fss_collapse(curves, dists, windows=window, bootstrap=args.bootstrap, seed=args.seed)
    manifest.seed = args.seed
    doc = {"e_th": res.e_th, "nu": res.nu, "residual": res.residual,
           "bootstrap_errors": list(res.bootstrap_errors), "at_boundary": res.at_boundary,
           "distances": dists, "method": res.method, "manifest": asdict(manifest)}
    _write(args.out, json.dumps(doc, indent=2) + "\n")
    if res.at_boundary:
        print("warning: optimum at the scan boundary", file=sys.stderr)
    return 0


def cmd_table(args, manifest) -> int:
    import csv
    import io
    from .analysis import threshold_table
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise UsageError(f"cannot read config: {err}") from None
    config.setdefault("workers", args.workers)
    rows = threshold_table(config)
    manifest.grids = config.get("grids", {})
    manifest.seed = config.get("seed")
    if args.out.endswith(".json"):
        _write(args.out, json.dumps({"rows": rows, "manifest": asdict(manifest)}, indent=2) + "\n")
        return 0
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(asdict(manifest), sort_keys=True) + "\n")
    w = csv.DictWriter(buf, ["e", "pair", "family", "crossing", "uncertainty", "error"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    _write(args.out, buf.getvalue())
    return 0


def cmd_export_statmech(args, manifest) -> int:
    from .statmech import build_spin_model, model_to_dict
    code = _code(args.code)
    model = build_spin_model(code, _noise(args.noise))
    doc = model_to_dict(model)
    manifest.code, manifest.noise = args.code, args.noise
    doc["manifest"] = asdict(manifest)
    _write(args.out, json.dumps(doc, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ci-lab", description="Coherent information of CSS codes under erasure and Pauli noise.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--workers", type=int, default=None, help="worker threads (default: CI_LAB_WORKERS or CPU count)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("codes", help="list, inspect, check or export codes")
    c.add_argument("action", choices=["list", "info", "check", "export"])
    c.add_argument("--code")
    c.add_argument("--distance", action="store_true", help="also brute-force the distance (check)")
    c.add_argument("--format", choices=["json"], default="json")
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_codes)

    ci = sub.add_parser("ci", help="coherent information for one setting")
    ci_sub = ci.add_subparsers(dest="kind", required=True)
    e = ci_sub.add_parser("erasure")
    e.add_argument("--code", required=True)
    e.add_argument("--e-grid", default="0:0.7:0.01")
    e.add_argument("--samples", type=int, default=10000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--method", choices=["auto", "exact", "stratified"], default="auto")
    e.add_argument("--out", default="-")
    pa = ci_sub.add_parser("pauli")
    pa.add_argument("--code", required=True)
    pa.add_argument("--noise", required=True)
    pa.add_argument("--out", default="-")
    co = ci_sub.add_parser("combined")
    co.add_argument("--code", required=True)
    co.add_argument("--noise", required=True)
    co.add_argument("--erasure", type=_prob, required=True)
    co.add_argument("--samples", type=int, default=200)
    co.add_argument("--seed", type=int, default=0)
    co.add_argument("--out", default="-")
    ci.set_defaults(func=cmd_ci)

    s = sub.add_parser("scan", help="CI versus Pauli error probability at fixed erasure")
    s.add_argument("--code", required=True)
    s.add_argument("--family", choices=["bf", "depol"], required=True)
    s.add_argument("--p-grid", required=True)
    s.add_argument("--erasure", type=_prob, default=0.0)
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--per-logical", action="store_true", help="divide CI by k")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_scan)

    x = sub.add_parser("cross", help="crossing of two curve files")
    x.add_argument("--a", required=True)
    x.add_argument("--b", required=True)
    x.add_argument("--window")
    x.add_argument("--out", default="-")
    x.set_defaults(func=cmd_cross)

    fs = sub.add_parser("collapse", help="finite-size scaling collapse of erasure curves")
    fs.add_argument("--curves", nargs="+", required=True)
    fs.add_argument("--distances", nargs="+", type=int)
    fs.add_argument("--k", nargs="+", type=int)
    fs.add_argument("--window", help="x range lo:hi")
    fs.add_argument("--bootstrap", type=int, default=50)
    fs.add_argument("--seed", type=int, default=0)
    fs.add_argument("--out", default="-")
    fs.set_defaults(func=cmd_collapse)

    t = sub.add_parser("table", help="pseudo-threshold table from a JSON config")
    t.add_argument("--config", required=True)
    t.add_argument("--out", default="-")
    t.set_defaults(func=cmd_table)

    ex = sub.add_parser("export-statmech", help="export the spin model of a code as JSON")
    ex.add_argument("--code", required=True)
    ex.add_argument("--noise", required=True)
    ex.add_argument("--out", default="-")
    ex.set_defaults(func=cmd_export_statmech)
    return p


def dispatch(argv: list[str] | None = None) -> int:
    from .erasure_ci import default_workers
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.workers is not None and args.workers < 1:
        parser.print_usage(sys.stderr)
        print("ci-lab: error: --workers must be >= 1", file=sys.stderr)
        return 2
    args.workers = args.workers or default_workers()
    manifest = RunManifest(command_line=shlex.join(["ci-lab", *argv]), workers=args.workers)
    try:
        return args.func(args, manifest)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"ci-lab: error: {err}", file=sys.stderr)
        return 2
    except (ValueError, OverflowError, OSError) as err:
        print(f"ci-lab: computation failed: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())
