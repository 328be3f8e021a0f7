"""Command-line entry point: ``zkrylov <subcommand> [options]``."""

import argparse
import json
import sys
from contextlib import nullcontext
from dataclasses import asdict

import numpy as np

from . import _parallel, krylov
from .bench import (
    DEFAULT_SIZES,
    FORMATS,
    BenchConfig,
    DeterminismError,
    bench_kernels,
    bench_solvers,
    bench_spmv,
    default_solver_configs,
    emit,
    load_system,
)
from .core import csr_from_coo, matrix_stats
from .helmholtz import generate, load_spec, parse_spec
from .krylov import METHODS, SolverConfig
from .mmio import write_matrix_market
from .precond import KINDS

EXIT_ERROR = 1
EXIT_DETERMINISM = 3


def _int_list(text):
    try:
        values = [int(v.replace("_", "")) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _helmholtz(text):
    """``dim=..,n=..,f=..`` inline, or ``@path`` for a key-value file."""
    try:
        return load_spec(text[1:]) if text.startswith("@") else parse_spec(text)
    except (OSError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _add_sources(p):
    p.add_argument("--matrix", action="append", default=[], metavar="PATH",
                   help="Matrix Market file (repeatable)")
    p.add_argument("--helmholtz", action="append", default=[], type=_helmholtz, metavar="SPEC",
                   help="generated problem, e.g. dim=3,n=20,f=500,c=340,eta=0 "
                        "or @file with one key = value per line (repeatable)")


def _add_output(p):
    p.add_argument("--format", choices=FORMATS, default="table")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")


def _add_bench(p):
    p.add_argument("--reps", type=int, default=100, help="timed repetitions (default 100)")
    p.add_argument("--threads", type=_int_list, default=None,
                   help="comma-separated worker counts, one backend each (1 = sequential)")
    p.add_argument("--seed", type=int, default=42)


def _add_solver(p, multi):
    if multi:
        p.add_argument("--method", action="append", choices=METHODS, default=None,
                       help="method to run (repeatable; default: all three)")
    else:
        p.add_argument("--method", choices=METHODS, default="bicgstab")
    p.add_argument("--l", type=int, default=8, help="BiCGSTAB(l) degree (default 8)")
    p.add_argument("--precond", choices=KINDS, default="jacobi")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=1000)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zkrylov",
        description="Complex sparse kernels, Krylov solvers and their benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench-kernels", help="time the BLAS-1 kernels")
    p.add_argument("--sizes", type=_int_list, default=list(DEFAULT_SIZES))
    _add_bench(p)
    _add_output(p)

    p = sub.add_parser("bench-spmv", help="time CSR SpMV")
    _add_sources(p)
    _add_bench(p)
    _add_output(p)

    p = sub.add_parser("bench-solvers", help="time the Krylov solvers")
    _add_sources(p)
    _add_bench(p)
    _add_solver(p, multi=True)
    _add_output(p)

    p = sub.add_parser("solve", help="solve one system and print the report")
    _add_sources(p)
    _add_solver(p, multi=False)
    p.add_argument("--threads", type=int, default=None)
    _add_output(p)

    p = sub.add_parser("gen", help="write a generated Helmholtz system as Matrix Market")
    p.add_argument("--helmholtz", required=True, type=_helmholtz, metavar="SPEC")
    p.add_argument("--out", required=True, metavar="PATH", help="matrix file")
    p.add_argument("--rhs-out", metavar="PATH", help="also write b as an n x 1 matrix")

    p = sub.add_parser("stats", help="print matrix statistics")
    _add_sources(p)
    _add_output(p)
    return parser


def _sources(args):
    sources = list(args.matrix) + list(args.helmholtz)
    if not sources:
        raise ValueError("give at least one --matrix or --helmholtz source")
    return sources


def _bench_config(args, sizes=(), matrices=()):
    kwargs = {"repetitions": args.reps, "sizes": sizes, "matrices": matrices,
              "seed": args.seed, "output": args.format}
    if args.threads is not None:
        kwargs["backends"] = args.threads
    return BenchConfig(**kwargs)


def _write(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_text(label, report, fmt):
    data = {"problem": label, **asdict(report)}
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt == "csv":
        keys = [k for k, v in data.items() if not isinstance(v, (list, dict)) and v is not None]
        return ",".join(keys) + "\n" + ",".join(str(data[k]) for k in keys) + "\n"
    lines = [
        f"problem            {label}",
        f"method             {report.method}",
        f"converged          {'yes' if report.converged else 'no'} ({report.stop_reason})",
        f"iterations         {report.iterations}",
        f"matvecs            {report.matvecs}",
        f"restarts           {report.restarts}",
        f"recursive relres   {report.final_relres:.3e}",
        f"true relres        {report.final_true_relres:.3e}",
        f"elapsed (s)        {report.elapsed:.4f}",
        f"flops              {report.total_flops}",
    ]
    return "\n".join(lines) + "\n"


def _stats_text(rows, fmt):
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "table":
        rows = [{k: f"{v:.6g}" if isinstance(v, float) else v for k, v in r.items()} for r in rows]
    keys = list(rows[0])
    if fmt == "csv":
        return "\n".join([",".join(keys)] + [",".join(str(r[k]) for k in keys) for r in rows]) + "\n"
    widths = [max(len(k), *(len(str(r[k])) for r in rows)) for k in keys]
    out = ["  ".join(k.rjust(w) for k, w in zip(keys, widths))]
    out += ["  ".join(str(r[k]).rjust(w) for k, w in zip(keys, widths)) for r in rows]
    return "\n".join(out) + "\n"


def run(args):
    cmd = args.command
    if cmd == "bench-kernels":
        rows = bench_kernels(_bench_config(args, sizes=args.sizes))
        _write(emit(rows, args.format), args.out)
    elif cmd == "bench-spmv":
        rows = bench_spmv(_bench_config(args, matrices=_sources(args)))
        _write(emit(rows, args.format), args.out)
    elif cmd == "bench-solvers":
        cfgs = default_solver_configs(args.tol, args.max_iter, args.l, args.precond)
        if args.method:
            cfgs = [c for c in cfgs if c.method in args.method]
        rows = bench_solvers(_bench_config(args, matrices=_sources(args)), cfgs)
        _write(emit(rows, args.format), args.out)
    elif cmd == "solve":
        sources = _sources(args)
        if len(sources) != 1:
            raise ValueError("solve takes exactly one --matrix or --helmholtz source")
        label, A, b = load_system(sources[0])
        cfg = SolverConfig(method=args.method, tol=args.tol, max_iter=args.max_iter,
                           l=args.l, precond=args.precond)
        ctx = nullcontext() if args.threads is None else _parallel.num_threads(args.threads)
        with ctx:
            _, report = krylov.solve(A, b, cfg)
        _write(_report_text(label, report, args.format), args.out)
    elif cmd == "gen":
        A, b = generate(args.helmholtz)
        write_matrix_market(A, args.out, comment=f"{args.helmholtz}")
        if args.rhs_out:
            nz = np.flatnonzero(b)
            write_matrix_market(csr_from_coo(b.size, 1, nz, np.zeros_like(nz), b[nz]),
                                args.rhs_out)
    elif cmd == "stats":
        rows = []
        for source in _sources(args):
            label, A, _ = load_system(source)
            rows.append({"label": label, **asdict(matrix_stats(A))})
        _write(_stats_text(rows, args.format), args.out)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run(args)
    except DeterminismError as exc:
        print(f"zkrylov: determinism violation: {exc}", file=sys.stderr)
        return EXIT_DETERMINISM
    except (OSError, ValueError, TypeError, RuntimeError) as exc:
        print(f"zkrylov: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
