"""``semistream`` command-line entry point.

Single runs print JSON; sweeps print CSV preceded by a ``# config`` line.
Exit status is 0 on success, 2 on bad input or configuration, and 3 when an
invariant or the adversary protocol is violated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict

from . import __version__
from .bench import bench_cluster_quality, bench_ratio_vs_t, summarize_ratios
from .compress import compress_b, nearest_neighbor_map
from .errors import InputError, InvariantViolation, ParameterError, ProtocolViolation
from .io import ingest_points, read_trace
from .kmedian import cluster_amplified, default_m, extract_centers
from .lowerbound import run_lowerbound_experiment
from .metric import WeightedPointSet
from .ofl import ofl_run, ofl_summary
from .oracle import cost
from .order import ADVERSARIES, make_strategy, min_bound, reorder, semirandom_stream

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
SEED_ENV = "SEMISTREAM_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list:
    return [v.strip() for v in text.split(",") if v.strip()]


def _clean(value):
    """JSON-safe values: non-finite floats become strings, tuples become lists."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _config(args) -> dict:
    skip = {"func", "output", "timing"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit_json(args, metrics: dict, started: float) -> str:
    record = {"config": _config(args), "version": __version__, **metrics}
    if args.timing:
        record["wall_time_s"] = round(time.perf_counter() - started, 6)
    return json.dumps(_clean(record), indent=2, sort_keys=False) + "\n"


def _emit_csv(args, rows: list, started: float) -> str:
    buf = io.StringIO()
    buf.write(f"# config {json.dumps(_clean(_config(args)), sort_keys=True)} version={__version__}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    if args.timing:
        buf.write(f"# wall_time_s {time.perf_counter() - started:.6f}\n")
    return buf.getvalue()


def _load(args):
    data = ingest_points(args.input, args.format)
    return data, data.measure(args.measure)


def _ordered(points, args):
    """The file order, or a shuffled and adversarially reordered copy."""
    if args.adversary is None:
        return list(points), None
    strategy = make_strategy(args.adversary, points, args.t, args.seed)
    stream, _, trace = semirandom_stream(points, strategy, args.t, args.seed)
    return stream, trace


def _payload(p):
    return list(p.payload) if isinstance(p.payload, tuple) else p.payload


# --------------------------------------------------------------------------
# subcommands


def cmd_ofl(args, started):
    data, measure = _load(args)
    if args.order_file is not None:
        if args.adversary is not None:
            raise ParameterError("--order-file and --adversary are mutually exclusive")
        trace = read_trace(args.order_file)
        stream = reorder(list(data.points), trace.sigma)
    else:
        stream, trace = _ordered(data.points, args)
    state = ofl_run(stream, args.f, measure, args.seed)
    out = ofl_summary(state)
    out["n"] = len(stream)
    if trace is not None:
        out["hand_high_water"] = trace.hand_high_water
    return _emit_json(args, out, started)


def cmd_compress(args, started):
    data, measure = _load(args)
    A = WeightedPointSet.unit(data.points)
    pi = nearest_neighbor_map(A, measure)
    Z, lam = compress_b(A, args.k, pi, measure)
    rows = []
    for p, w in Z:
        coords = p.payload if isinstance(p.payload, tuple) else (p.payload,)
        rows.append({"id": p.id, **{f"x{i}": c for i, c in enumerate(coords)}, "weight": w})
    text = _emit_csv(args, rows, started)
    summary = {"n": len(A), "size": len(Z), "size_bound": (len(A) + args.k) // 2, "lambda": lam}
    return text + f"# summary {json.dumps(summary, sort_keys=True)}\n"


def cmd_cluster(args, started):
    data, measure = _load(args)
    m = args.m if args.m is not None else default_m(args.k, args.t)
    stream, trace = _ordered(data.points, args)
    report = cluster_amplified(stream, m, measure, args.delta, args.seed)
    centers = extract_centers(report.psi_final, args.k, measure)
    value = cost(list(data.points), centers, measure, assign=False).value
    out = {
        "m": m,
        "centers": [{"id": p.id, "payload": _payload(p)} for p in centers],
        "cost": value,
        "L_final": report.L_final,
        "max_support": report.max_support,
        "space_bound": 29 * m,
        "epochs": report.epochs,
        "history": [list(h) for h in report.history],
    }
    if trace is not None:
        out["hand_high_water"] = trace.hand_high_water
    return _emit_json(args, out, started)


def cmd_lowerbound(args, started):
    rows = run_lowerbound_experiment(args.t_list, z=args.z, n=args.n, f=args.f, trials=args.trials, seed=args.seed)
    table = [{k: r._asdict()[k] for k in ("t", "m", "h", "n", "opt", "mean_ratio", "stderr")} for r in rows]
    return _emit_csv(args, table, started)


def cmd_bench_ratio(args, started):
    rows = bench_ratio_vs_t(args.t_list, z=args.z, n=args.n, f=args.f, trials=args.trials, seed=args.seed)
    return _emit_csv(args, rows, started)


def cmd_bench_cluster(args, started):
    for name in args.adversaries:
        if name not in ADVERSARIES:
            raise ParameterError(f"unknown adversary {name!r}")
    rows = bench_cluster_quality(
        k=args.k, n=args.n, t_values=args.t_list, adversaries=args.adversaries, trials=args.trials,
        seed=args.seed, m=args.m, with_oracle=not args.no_oracle, jobs=args.jobs,
    )
    breaches = [r for r in rows if r.status == "ok" and r.max_support > r.space_bound]
    text = _emit_csv(args, [asdict(r) for r in rows], started)
    summary = summarize_ratios(rows)
    text += f"# summary {json.dumps(_clean(summary), sort_keys=True)}\n"
    if breaches:
        return text, EXIT_INVARIANT, f"{len(breaches)} runs exceeded the 29m space bound"
    return text


def cmd_check_order(args, started):
    if args.trace is not None:
        sigma = read_trace(args.trace).sigma
    elif args.sigma is not None:
        sigma = args.sigma
    else:
        raise ParameterError("give --trace or --sigma")
    bound = min_bound(sigma)
    out = {"n": len(sigma), "min_bound": bound}
    if args.t is not None:
        out["t"] = args.t
        out["ok"] = bound <= args.t
    text = _emit_json(args, out, started)
    if args.t is not None and bound > args.t:
        return text, EXIT_INVARIANT, f"order needs a hand of {bound} > t={args.t}"
    return text


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semistream", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV} or 0)")
        p.add_argument("--output", "-o", default=None, help="write the result here instead of stdout")
        p.add_argument("--timing", action="store_true", help="append wall-clock time (breaks byte-identical output)")

    def points_input(p):
        p.add_argument("--input", required=True, help="CSV of coordinates or a distance-matrix file")
        p.add_argument("--format", choices=("csv", "matrix"), default="csv")
        p.add_argument("--measure", default="linear", help="linear, gaussian, huber, cauchy, tukey or lp:<p>")

    def ordering(p):
        p.add_argument("--adversary", choices=ADVERSARIES, default=None, help="shuffle, then reorder with this strategy")
        p.add_argument("--t", type=int, default=1, help="adversary hand size")

    p = sub.add_parser("ofl", help="online facility location on a point file")
    points_input(p)
    ordering(p)
    p.add_argument("--f", type=float, required=True, help="facility cost")
    p.add_argument("--order-file", default=None, help="trace JSON whose sigma reorders the input")
    common(p)
    p.set_defaults(func=cmd_ofl)

    p = sub.add_parser("compress", help="one compression step on unit-weight points")
    points_input(p)
    p.add_argument("--k", type=int, required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("cluster", help="streaming k-median")
    points_input(p)
    ordering(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, default=None, help="space parameter (default k * (4 + ceil(log2 t)))")
    p.add_argument("--delta", type=float, default=0.5, help="failure probability; runs ceil(log2(1/delta)) instances")
    common(p)
    p.set_defaults(func=cmd_cluster)

    for name, func, helptext in (
        ("lowerbound", cmd_lowerbound, "OFL ratio on the hard tree family"),
        ("bench-ratio", cmd_bench_ratio, "OFL ratio against t with a random-order control"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--t-list", type=_int_list, default=[4, 16, 256])
        p.add_argument("--z", type=int, default=64)
        p.add_argument("--n", type=int, default=None, help="demands per instance (default t)")
        p.add_argument("--f", type=float, default=1.0)
        p.add_argument("--trials", type=int, default=500)
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("bench-cluster", help="clustering quality and space over mixtures")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--t-list", type=_int_list, default=[1])
    p.add_argument("--adversaries", type=_str_list, default=["passthrough"])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--no-oracle", action="store_true", help="skip the offline reference cost")
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_bench_cluster)

    p = sub.add_parser("check-order", help="smallest t for which an order is t-bounded")
    p.add_argument("--trace", default=None, help="trace JSON with a sigma array")
    p.add_argument("--sigma", type=_int_list, default=None, help="comma-separated emission positions")
    p.add_argument("--t", type=int, default=None, help="fail with exit 3 if the order needs more than t")
    common(p, seed=False)
    p.set_defaults(func=cmd_check_order)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        result = args.func(args, started)
    except (InvariantViolation, ProtocolViolation) as exc:
        print(f"semistream: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InputError, ParameterError) as exc:
        print(f"semistream: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    # a subcommand may report a violation alongside its normal output
    text, code, problem = result if isinstance(result, tuple) else (result, EXIT_OK, None)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if problem:
        print(f"semistream: {problem}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
