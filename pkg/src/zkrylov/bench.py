"""Benchmark harness: kernel, SpMV and solver timings with Gflops and speed-up.

Each backend is the same code run with a different worker count; one worker is
the ``sequential`` backend. Timings are the mean over ``repetitions`` calls
after one untimed warm-up, measured with a monotonic clock around the kernel
call only. Non-timing outputs must agree bit for bit across backends,
otherwise :class:`DeterminismError` is raised.
"""

import csv
import io
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import _parallel, kernels, krylov, sparse
from .core import CsrMatrix
from .helmholtz import HelmholtzSpec, generate, point_source
from .krylov import SolverConfig
from .mmio import read_matrix_market

__all__ = [
    "DEFAULT_SIZES",
    "FORMATS",
    "KERNEL_LABELS",
    "BenchConfig",
    "BenchRow",
    "DeterminismError",
    "backend_name",
    "bench_kernels",
    "bench_solvers",
    "bench_spmv",
    "default_solver_configs",
    "emit",
    "load_system",
]

DEFAULT_SIZES = (648_849, 2_000_000, 9_000_000, 14_000_000)
FORMATS = ("table", "csv", "json")
KERNEL_LABELS = {
    "assign": "ZASSIGN",
    "scale": "ZSCAL",
    "axpy": "ZAXPY",
    "ewproduct": "ZAXMY",
    "dot": "ZDOT",
    "norm": "ZNORM",
}


class DeterminismError(RuntimeError):
    """A non-timing result differed between backends."""


def backend_name(threads):
    return "sequential" if threads == 1 else f"parallel({threads})"


def _default_backends():
    cpus = os.cpu_count() or 1
    return (1,) if cpus == 1 else (1, cpus)


@dataclass
class BenchConfig:
    repetitions: int = 100
    sizes: tuple = DEFAULT_SIZES
    matrices: tuple = ()
    backends: tuple = field(default_factory=_default_backends)
    seed: int = 42
    output: str = "table"

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        self.backends = tuple(dict.fromkeys(int(t) for t in self.backends))
        self.matrices = tuple(self.matrices)
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if not self.backends:
            raise ValueError("at least one backend is required")
        for t in self.backends:
            if not 1 <= t <= _parallel.max_threads():
                raise ValueError(f"thread count {t} outside [1, {_parallel.max_threads()}]")
        if any(s < 0 for s in self.sizes):
            raise ValueError("sizes must be non-negative")
        if self.output not in FORMATS:
            raise ValueError(f"unknown output format {self.output!r}")


@dataclass
class BenchRow:
    """One table line: a (kernel, h), (matrix) or (problem, method) measurement."""

    kind: str
    label: str
    backends: list
    elapsed_ms: list
    flops: int = None
    h: int = None
    nnz: int = None
    method: str = None
    iterations: int = None
    converged: bool = None
    final_true_relres: float = None
    error: str = None

    @property
    def gflops(self):
        if self.flops is None:
            return [None] * len(self.elapsed_ms)
        return [self.flops / (ms * 1e-3) / 1e9 if ms else math.inf for ms in self.elapsed_ms]

    def elapsed_for(self, backend):
        if backend not in self.backends or not self.elapsed_ms:
            return None
        return self.elapsed_ms[self.backends.index(backend)]

    def gflops_for(self, backend):
        if backend not in self.backends or not self.elapsed_ms:
            return None
        return self.gflops[self.backends.index(backend)]

    @property
    def ratio(self):
        """Elapsed time of the first backend over the last (sequential/parallel)."""
        if len(self.elapsed_ms) < 2 or not self.elapsed_ms[-1]:
            return None
        return self.elapsed_ms[0] / self.elapsed_ms[-1]


def _random_complex(rng, n):
    return rng.uniform(-1.0, 1.0, n) + 1j * rng.uniform(-1.0, 1.0, n)


def _time_call(fn, reset, repetitions):
    """Mean seconds of ``fn()`` after one warm-up; ``reset()`` runs untimed before each call."""
    reset()
    result = fn()
    total = 0.0
    for _ in range(repetitions):
        reset()
        t0 = time.perf_counter()
        fn()
        total += time.perf_counter() - t0
    return total / repetitions, result


def _bitwise_equal(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and a.tobytes() == b.tobytes()


def _kernel_case(op, x, y, y0, alpha, plan):
    """Callable running ``op`` once, plus the reset restoring its mutable input."""

    def reset():
        y[:] = y0

    calls = {
        "assign": lambda: kernels.assign(y, x),
        "scale": lambda: kernels.scale(alpha, y),
        "axpy": lambda: kernels.axpy(alpha, x, y),
        "ewproduct": lambda: kernels.ewproduct(x, y),
        "dot": lambda: kernels.dot(x, y, plan),
        "norm": lambda: kernels.norm2(y, plan),
    }
    return calls[op], reset


def bench_kernels(cfg, ops=tuple(KERNEL_LABELS), block_size=kernels.DEFAULT_BLOCK_SIZE):
    """Time every BLAS-1 kernel at every size on every backend."""
    if not cfg.sizes:
        raise ValueError("kernel benchmarks need at least one size")
    plan = kernels.ReductionPlan(block_size)
    names = [backend_name(t) for t in cfg.backends]
    rows = []
    for op in ops:
        for h in cfg.sizes:
            label = KERNEL_LABELS[op]
            try:
                rng = np.random.default_rng(cfg.seed)
                x = _random_complex(rng, h)
                y0 = _random_complex(rng, h)
                y = y0.copy()
            except MemoryError:
                rows.append(BenchRow("kernel", label, names, [], h=h, error="allocation failed"))
                continue
            # unit modulus keeps repeated scaling away from overflow and denormals
            alpha = complex(np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))
            fn, reset = _kernel_case(op, x, y, y0, alpha, plan)
            elapsed, outputs = [], []
            for threads in cfg.backends:
                with _parallel.num_threads(threads):
                    seconds, result = _time_call(fn, reset, cfg.repetitions)
                    if op not in ("dot", "norm"):
                        reset()
                        fn()
                        result = y.copy()
                outputs.append(result)
                elapsed.append(seconds * 1e3)
            for name, out in zip(names[1:], outputs[1:]):
                if not _bitwise_equal(out, outputs[0]):
                    raise DeterminismError(f"{label} h={h}: {name} differs from {names[0]}")
            rows.append(BenchRow("kernel", label, names, elapsed,
                                 flops=kernels.flop_count(op, h), h=h))
    return rows


def _warm_up(threads):
    """Load every compiled kernel for ``threads`` workers before anything is timed."""
    one = np.ones(1, dtype=np.complex128)
    out = np.ones(1, dtype=np.complex128)
    A = sparse.CsrMatrix(1, 1, [0, 1], [0], [1.0])
    with _parallel.num_threads(threads):
        kernels.assign(out, one)
        kernels.scale(1.0, out)
        kernels.axpy(1.0, one, out)
        kernels.ewproduct(one, out)
        kernels.dot(one, out)
        kernels.norm2(out)
        sparse.spmv(A, one, out)


def load_system(source):
    """``(label, A, b)`` for a Matrix Market path, a :class:`HelmholtzSpec` or a
    :class:`~zkrylov.core.CsrMatrix`.

    Matrix Market and in-memory matrices get a unit point source in the
    middle row.
    """
    if isinstance(source, HelmholtzSpec):
        A, b = generate(source)
        return source.label, A, b
    if isinstance(source, CsrMatrix):
        return f"csr-{source.n_rows}x{source.n_cols}", source, point_source(source.n_rows)
    A = read_matrix_market(source)
    return os.path.splitext(os.path.basename(str(source)))[0], A, point_source(A.n_rows)


def _spmv_reference(A, x):
    rows = A.row_indices()
    prod = A.values * x[A.col_idx]
    return (np.bincount(rows, prod.real, minlength=A.n_rows)
            + 1j * np.bincount(rows, prod.imag, minlength=A.n_rows))


def bench_spmv(cfg):
    """Time CSR SpMV for each matrix source on every backend."""
    if not cfg.matrices:
        raise ValueError("SpMV benchmarks need at least one matrix source")
    names = [backend_name(t) for t in cfg.backends]
    rows = []
    for source in cfg.matrices:
        label, A, _ = load_system(source)
        rng = np.random.default_rng(cfg.seed)
        x = _random_complex(rng, A.n_cols)
        y = np.zeros(A.n_rows, dtype=np.complex128)

        sparse.spmv(A, x, y)
        ref = _spmv_reference(A, x)
        if not np.allclose(y, ref, rtol=1e-12, atol=1e-12 * (np.abs(ref).max() + 1.0)):
            raise RuntimeError(f"{label}: SpMV output failed the correctness check")

        elapsed, outputs = [], []
        for threads in cfg.backends:
            with _parallel.num_threads(threads):
                seconds, _ = _time_call(lambda: sparse.spmv(A, x, y), lambda: None, cfg.repetitions)
            outputs.append(y.copy())
            elapsed.append(seconds * 1e3)
        for name, out in zip(names[1:], outputs[1:]):
            if not _bitwise_equal(out, outputs[0]):
                raise DeterminismError(f"SpMV {label}: {name} differs from {names[0]}")
        rows.append(BenchRow("spmv", label, names, elapsed,
                             flops=kernels.flop_count("spmv", A.nnz), h=A.n_rows, nnz=A.nnz))
    return rows


def default_solver_configs(tol=1e-9, max_iter=1000, l=8, precond="jacobi"):
    """P-BiCGSTAB, P-BiCGSTAB(l) and P-TFQMR with a shared stopping rule."""
    return [SolverConfig(method=m, tol=tol, max_iter=max_iter, l=l, precond=precond)
            for m in ("bicgstab", "bicgstab_l", "tfqmr")]


def bench_solvers(cfg, solver_cfgs=None):
    """Run each method on each problem and backend.

    Non-convergence is reported in the row. Iteration counts and solutions
    must match across backends.
    """
    if not cfg.matrices:
        raise ValueError("solver benchmarks need at least one matrix source")
    solver_cfgs = default_solver_configs() if solver_cfgs is None else list(solver_cfgs)
    names = [backend_name(t) for t in cfg.backends]
    systems = [load_system(source) for source in cfg.matrices]
    for threads in cfg.backends:
        _warm_up(threads)
    rows = []
    for scfg in solver_cfgs:
        for label, A, b in systems:
            elapsed, reports, solutions = [], [], []
            for threads in cfg.backends:
                with _parallel.num_threads(threads):
                    x, report = krylov.solve(A, b, scfg)
                elapsed.append(report.elapsed * 1e3)
                reports.append(report)
                solutions.append(x)
            for name, rep, x in zip(names[1:], reports[1:], solutions[1:]):
                if rep.iterations != reports[0].iterations:
                    raise DeterminismError(
                        f"{scfg.label} on {label}: {name} took {rep.iterations} iterations, "
                        f"{names[0]} took {reports[0].iterations}"
                    )
                if not _bitwise_equal(x, solutions[0]):
                    raise DeterminismError(f"{scfg.label} on {label}: {name} solution differs")
            first = reports[0]
            rows.append(BenchRow(
                "solver", label, names, elapsed, flops=first.total_flops, h=A.n_rows,
                nnz=A.nnz, method=scfg.label, iterations=first.iterations,
                converged=first.converged, final_true_relres=first.final_true_relres,
            ))
    return rows


def _fmt(value, spec):
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    return format(value, spec)


def _columns(rows):
    """(header, getter, format) triples shared by the table and CSV outputs."""
    backends = list(dict.fromkeys(name for row in rows for name in row.backends))
    kind = rows[0].kind

    def seconds(name):
        def get(r):
            ms = r.elapsed_for(name)
            return None if ms is None else ms * 1e-3
        return get

    if kind == "solver":
        cols = [("problem", lambda r: r.label, "s"), ("method", lambda r: r.method, "s"),
                ("#iter", lambda r: r.iterations, "d")]
        cols += [(f"{b} time (s)", seconds(b), ".4f") for b in backends]
        cols += [("speed-up", lambda r: r.ratio, ".2f"),
                 ("converged", lambda r: r.converged, ""),
                 ("true relres", lambda r: r.final_true_relres, ".2e")]
        return cols
    first = ("h", lambda r: r.h, ",d") if kind == "kernel" else ("nnz", lambda r: r.nnz, ",d")
    cols = [("problem" if kind == "spmv" else "kernel", lambda r: r.label, "s"), first]
    for b in backends:
        cols += [(f"{b} time (ms)", lambda r, b=b: r.elapsed_for(b), ".3f"),
                 (f"{b} Gflops", lambda r, b=b: r.gflops_for(b), ".2f")]
    cols += [("ratio", lambda r: r.ratio, ".2f")]
    if any(r.error for r in rows):
        cols.append(("error", lambda r: r.error, "s"))
    return cols


def _emit_table(rows, out):
    cols = _columns(rows)
    cells = [[_fmt(get(r), spec) for _, get, spec in cols] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, (h, _, _) in enumerate(cols)]
    line = "  ".join(h.rjust(w) for (h, _, _), w in zip(cols, widths))
    out.write(line + "\n" + "-" * len(line) + "\n")
    current = None
    for row, cell in zip(rows, cells):
        if row.kind == "solver" and row.method != current:
            current = row.method
            out.write(f"{current}\n")
        out.write("  ".join(c.rjust(w) for c, w in zip(cell, widths)) + "\n")


def _emit_csv(rows, out):
    cols = _columns(rows)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([h for h, _, _ in cols])
    for r in rows:
        writer.writerow(["" if get(r) is None else get(r) for _, get, _ in cols])


def _record(row):
    rec = {
        "label": row.label,
        "h": row.h,
        "nnz": row.nnz,
        "method": row.method,
        "backend": list(row.backends),
        "elapsed_ms": list(row.elapsed_ms),
        "flops": row.flops,
        "gflops": row.gflops if row.elapsed_ms else [],
        "ratio": row.ratio,
        "iterations": row.iterations,
        "converged": row.converged,
        "final_true_relres": row.final_true_relres,
        "error": row.error,
    }
    return {k: v for k, v in rec.items() if v is not None}


def emit(rows, fmt="table", out=None):
    """Write ``rows`` as an aligned table, CSV, or a JSON array.

    Returns the text when ``out`` is None.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    buf = io.StringIO() if out is None else out
    if fmt == "table":
        _emit_table(rows, buf)
    elif fmt == "csv":
        _emit_csv(rows, buf)
    else:
        json.dump([_record(r) for r in rows], buf, indent=2)
        buf.write("\n")
    return buf.getvalue() if out is None else None
