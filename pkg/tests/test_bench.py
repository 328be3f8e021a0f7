import io
import json

import numpy as np
import pytest

from zkrylov import bench, kernels
from zkrylov.bench import (
    BenchConfig,
    BenchRow,
    DeterminismError,
    backend_name,
    bench_kernels,
    bench_solvers,
    bench_spmv,
    default_solver_configs,
    emit,
    load_system,
)
from zkrylov.core import csr_from_triplets
from zkrylov.helmholtz import HelmholtzSpec, stencil_nnz
from zkrylov.mmio import write_matrix_market


@pytest.fixture(scope="module")
def kernel_rows():
    return bench_kernels(BenchConfig(repetitions=3, sizes=[1000, 4097], backends=[1, 2]))


def test_kernel_rows_accounting(kernel_rows):
    assert len(kernel_rows) == 12
    assert [r.label for r in kernel_rows[::2]] == ["ZASSIGN", "ZSCAL", "ZAXPY", "ZAXMY", "ZDOT", "ZNORM"]
    weights = [1, 6, 8, 6, 8, 5]
    for row, w in zip(kernel_rows[::2], weights):
        assert row.h == 1000 and row.flops == w * 1000
        assert row.backends == ["sequential", "parallel(2)"]
    for row in kernel_rows:
        for ms, gf in zip(row.elapsed_ms, row.gflops):
            assert ms > 0
            assert gf == pytest.approx(row.flops / (ms * 1e-3) / 1e9)
        assert row.ratio == pytest.approx(row.elapsed_ms[0] / row.elapsed_ms[1])


def test_determinism_gate(monkeypatch):
    calls = {"n": 0}
    original = kernels.dot

    def flaky_dot(x, y, plan=kernels.DEFAULT_PLAN, counter=None):
        calls["n"] += 1
        return original(x, y, plan, counter) + (1e-12 if calls["n"] > 2 else 0)

    monkeypatch.setattr(kernels, "dot", flaky_dot)
    with pytest.raises(DeterminismError, match="ZDOT"):
        bench_kernels(BenchConfig(repetitions=1, sizes=[10], backends=[1, 2]), ops=["dot"])


def test_kernel_allocation_failure_becomes_row(monkeypatch):
    def boom(rng, n):
        raise MemoryError

    monkeypatch.setattr(bench, "_random_complex", boom)
    rows = bench_kernels(BenchConfig(repetitions=1, sizes=[10], backends=[1]), ops=["axpy"])
    assert rows[0].error == "allocation failed" and rows[0].elapsed_ms == []
    assert "allocation failed" in emit(rows, "table")


def test_spmv_rows():
    spec = HelmholtzSpec(dim=3, n_per_axis=10)
    rows = bench_spmv(BenchConfig(repetitions=2, matrices=[spec], backends=[1, 2]))
    (row,) = rows
    assert row.nnz == stencil_nnz(3, 10) and row.flops == 8 * row.nnz
    assert row.label == spec.label


def test_spmv_correctness_gate(monkeypatch):
    def wrong(m, x, y, counter=None):
        y[:] = 0

    monkeypatch.setattr(bench.sparse, "spmv", wrong)
    with pytest.raises(RuntimeError, match="correctness"):
        bench_spmv(BenchConfig(repetitions=1, matrices=[HelmholtzSpec(dim=1, n_per_axis=5)],
                               backends=[1]))


def test_matrix_market_source(tmp_path):
    p = tmp_path / "eye3.mtx"
    write_matrix_market(csr_from_triplets(3, 3, [(i, i, 1.0) for i in range(3)]), p)
    label, A, b = load_system(str(p))
    assert label == "eye3" and A.nnz == 3 and b.tolist() == [0, 1, 0]
    rows = bench_solvers(BenchConfig(repetitions=1, matrices=[str(p)], backends=[1]))
    assert [r.iterations for r in rows] == [1, 1, 1]
    assert [r.method for r in rows] == ["P-BiCGSTAB", "P-BiCGSTAB(8)", "P-TFQMR"]
    assert all(r.converged for r in rows)


def test_solver_rows_report_non_convergence():
    spec = HelmholtzSpec(dim=2, n_per_axis=20, frequency=2000.0)
    with pytest.warns(RuntimeWarning):
        rows = bench_solvers(BenchConfig(repetitions=1, matrices=[spec], backends=[1, 2]),
                             default_solver_configs(max_iter=7))
    for r in rows:
        assert not r.converged and r.iterations == 7
        assert len(r.elapsed_ms) == 2


def test_solver_determinism_gate(monkeypatch):
    from zkrylov import krylov

    seen = {"n": 0}
    original = krylov.solve

    def drifting(A, b, cfg=None, M=None):
        x, rep = original(A, b, cfg, M)
        seen["n"] += 1
        return x + seen["n"] * 1e-15, rep

    monkeypatch.setattr(krylov, "solve", drifting)
    with pytest.raises(DeterminismError, match="solution differs"):
        bench_solvers(BenchConfig(repetitions=1, matrices=[HelmholtzSpec(dim=1, n_per_axis=9)],
                                  backends=[1, 2]))


def test_emit_formats(kernel_rows):
    text = emit(kernel_rows[:1], "csv")
    lines = text.strip().splitlines()
    assert len(lines) == 2
    assert lines[0].split(",")[:3] == ["kernel", "h", "sequential time (ms)"]
    records = json.loads(emit(kernel_rows, "json"))
    assert records[0]["backend"] == ["sequential", "parallel(2)"]
    assert records[0]["flops"] == 1000 and len(records[0]["gflops"]) == 2
    table = emit(kernel_rows, "table")
    assert "ZAXPY" in table and "ratio" in table.splitlines()[0]
    buf = io.StringIO()
    assert emit(kernel_rows, "table", buf) is None and buf.getvalue() == table


def test_emit_errors(kernel_rows):
    with pytest.raises(ValueError):
        emit([], "table")
    with pytest.raises(ValueError):
        emit(kernel_rows, "xml")


def test_config_validation():
    assert backend_name(1) == "sequential" and backend_name(4) == "parallel(4)"
    with pytest.raises(ValueError):
        BenchConfig(repetitions=0)
    with pytest.raises(ValueError):
        BenchConfig(backends=[])
    with pytest.raises(ValueError):
        BenchConfig(backends=[10**6])
    with pytest.raises(ValueError):
        BenchConfig(output="xml")
    with pytest.raises(ValueError):
        bench_kernels(BenchConfig(sizes=[]))
    with pytest.raises(ValueError):
        bench_spmv(BenchConfig())
    assert BenchConfig(backends=[1, 1, 2]).backends == (1, 2)


def test_row_helpers():
    row = BenchRow("kernel", "ZDOT", ["sequential"], [2.0], flops=8000, h=1000)
    assert row.ratio is None and row.gflops_for("sequential") == pytest.approx(0.004)
    assert row.elapsed_for("parallel(2)") is None
