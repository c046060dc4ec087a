"""Command-line front end: ``rsclass VERB [options]``.

Verbs: classgroup, average, scan, series, kernels.  Options may also come
from a JSON file given with --config; flags on the command line win.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import arith, classfield, hecke, mellin, quadseq, rankin

EXIT_OK = 0
EXIT_FAILED = 2


def parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    return min(lo, hi), max(lo, hi)


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def discriminants(args) -> list[int]:
    out = list(args.disc or [])
    if args.disc_range is not None:
        out += arith.fundamental_discriminants(*args.disc_range)
    return out


def kernel_spec(args) -> mellin.KernelSpec:
    spec = mellin.DEFAULT_SPEC
    if args.kernel_T is not None:
        spec = replace(spec, T=args.kernel_T)
    if args.kernel_sigma is not None:
        spec = replace(spec, sigma=args.kernel_sigma)
    return spec


def truncation(args) -> rankin.TruncationParams:
    return rankin.TruncationParams(cutoff_mult=args.cutoff_mult, kernel=kernel_spec(args))


def emit(text: str, args) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# verbs

def cmd_classgroup(args) -> int:
    rows = []
    for D in discriminants(args):
        try:
            rows.append(classfield.class_group(D).to_json())
        except ValueError as exc:
            rows.append({"D": D, "error": str(exc)})
    if args.format == "csv":
        text = _csv(["D", "h", "w", "forms", "error"],
                    [[r["D"], r.get("h", ""), r.get("w", ""), json.dumps(r.get("forms", "")) if "forms" in r else "",
                      r.get("error", "")] for r in rows])
    else:
        text = json.dumps(rows, indent=1) + "\n"
    emit(text, args)
    return EXIT_OK


def preflight(curve, Ds, force: bool) -> tuple[list[int], list[rankin.ScanRow]]:
    """Split Ds into runnable ones and skipped rows, reporting each on stderr."""
    run, skipped = [], []
    for D in Ds:
        try:
            sign = rankin.check_admissible(curve, D, force)
            note = "admissible" if sign == -1 else "forced (sign +1)"
            run.append(D)
        except ValueError as exc:
            note = f"skipped: {exc}"
            skipped.append(rankin.ScanRow(D, None, str(exc)))
        print(f"# D={D}: {note}", file=sys.stderr)
    return run, skipped


def _one_report(job):
    curve, D, params, force, cache = job
    return rankin.average_scan(curve, [D], params, force, cache)[0]


def cmd_scan(args) -> int:
    curve = hecke.load_curve(args.curve)
    Ds = discriminants(args)
    run, skipped = preflight(curve, Ds, args.force)
    params = truncation(args)
    jobs = [(curve, D, params, args.force, args.cache) for D in run]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_one_report, jobs))
    else:
        done = [_one_report(j) for j in jobs]
    by_D = {row.D: row for row in done + skipped}
    rows = [by_D[D] for D in Ds]
    text = rankin.scan_to_csv(rows) if args.format == "csv" else rankin.scan_to_json(rows) + "\n"
    emit(text, args)
    failed = any(r.report is not None and not r.report.identities_ok for r in rows)
    failed = failed or any(r.report is None and r.D in run for r in rows)
    return EXIT_FAILED if failed else EXIT_OK


def cmd_series(args) -> int:
    curve = hecke.load_curve(args.curve)
    if args.b_range is None:
        raise SystemExit("series needs --b-range LO:HI")
    lo, hi = args.b_range
    bs = list(range(lo, hi + 1)) if args.count is None else quadseq.log_spaced_b(lo, hi, args.count)
    if args.depth is None:
        depth = int(max(args.radius or 0, 300) ** 2 + abs(args.a) * (args.radius or 300) + hi + 1)
    else:
        depth = args.depth
    table = hecke.build_table(curve, depth, args.cache)
    rows = []
    for b in bs:
        try:
            p = quadseq.series_eval(table, quadseq.QuadPoly(args.a, b), args.s, args.radius)
            rows.append([b, rankin.fmt(args.s), rankin.fmt(p.value), rankin.fmt(p.tail_bound), ""])
        except ValueError as exc:
            rows.append([b, rankin.fmt(args.s), "", "", str(exc)])
    if args.format == "csv":
        text = _csv(["b", "s", "value", "tail_bound", "error"], rows)
    else:
        keys = ["b", "s", "value", "tail_bound", "error"]
        text = json.dumps([dict(zip(keys, r)) for r in rows], indent=1) + "\n"
    emit(text, args)
    return EXIT_FAILED if any(r[4] for r in rows) else EXIT_OK


def cmd_kernels(args) -> int:
    curve = hecke.load_curve(args.curve)
    if args.x:
        xs = np.array(args.x, dtype=float)
    else:
        lo, hi, n = args.x_range
        xs = np.geomspace(lo, hi, int(n))
    spec = kernel_spec(args)
    D = (args.disc or [-4])[0]
    vs = mellin.V(xs, spec)
    ws = mellin.W(xs, D, curve.conductor, spec)
    R0, R1 = mellin.small_x_law(spec)
    header = ["x", "V", "W", "log_law"]
    rows = [[rankin.fmt(x), rankin.fmt(v), rankin.fmt(w), rankin.fmt(R1 - R0 * math.log(x))]
            for x, v, w in zip(xs, vs, ws)]
    if args.format == "csv":
        text = _csv(header, rows)
    else:
        text = json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n"
    emit(text, args)
    return EXIT_OK


VERBS = {
    "classgroup": cmd_classgroup,
    "average": cmd_scan,
    "scan": cmd_scan,
    "series": cmd_series,
    "kernels": cmd_kernels,
}


def _x_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected LO:HI:N")
    return float(parts[0]), float(parts[1]), int(parts[2])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsclass", description=__doc__.splitlines()[0])
    p.add_argument("verb", choices=sorted(VERBS))
    p.add_argument("--config", help="JSON file of option defaults (flags win)")
    p.add_argument("--curve", default="37a", help="built-in label (11a, 37a) or curve JSON file")
    p.add_argument("--disc", type=parse_int_list, help="discriminant or comma-separated list")
    p.add_argument("--disc-range", type=parse_range, help="LO:HI, all fundamental D in between")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--cache", help="directory for cached prime traces")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--force", action="store_true", help="compute even when the root-number sign is +1")
    p.add_argument("--kernel-sigma", type=float)
    p.add_argument("--kernel-T", type=float)
    p.add_argument("--cutoff-mult", type=float, default=rankin.TruncationParams().cutoff_mult)
    g = p.add_argument_group("series")
    g.add_argument("--a", type=int, default=0)
    g.add_argument("--b-range", type=parse_range)
    g.add_argument("--s", type=float, default=2.0)
    g.add_argument("--count", type=int, help="log-spaced b values instead of every b")
    g.add_argument("--radius", type=float, help="gamma scan radius")
    g.add_argument("--depth", type=int, help="eigenvalue table depth")
    k = p.add_argument_group("kernels")
    k.add_argument("--x", type=float, nargs="+")
    k.add_argument("--x-range", type=_x_range, default=(1e-3, 10.0, 9), help="LO:HI:N, log-spaced")
    return p


_VALUE_FLAGS = ("--disc", "--disc-range", "--b-range", "--x-range")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--disc -23,-4`` into ``--disc=-23,-4`` so argparse does not read a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit():
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    args = parser.parse_args(argv)
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        known = {a.dest for a in parser._actions}
        unknown = set(cfg) - known
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        for key in ("disc", "disc_range"):
            if key in cfg and isinstance(cfg[key], str):
                cfg[key] = (parse_int_list if key == "disc" else parse_range)(cfg[key])
        if "disc" in cfg and isinstance(cfg["disc"], int):
            cfg["disc"] = [cfg["disc"]]
        parser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if not 1 <= args.jobs <= 256:
        parser.error("--jobs must be between 1 and 256")
    if not 1.0 <= args.cutoff_mult <= 64.0:
        parser.error("--cutoff-mult must be between 1 and 64")
    if args.kernel_sigma is not None and not 0 < args.kernel_sigma < 100:
        parser.error("--kernel-sigma must lie in (0, 100)")
    if args.kernel_T is not None and args.kernel_T <= 0:
        parser.error("--kernel-T must be positive")
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return VERBS[args.verb](args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"rsclass: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
