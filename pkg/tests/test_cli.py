import json

import pytest

from zkrylov import bench
from zkrylov.cli import EXIT_DETERMINISM, EXIT_ERROR, main
from zkrylov.mmio import read_matrix_market

SMALL = "dim=2,n=8,f=200"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bench_kernels(capsys):
    code, out, _ = run(capsys, "bench-kernels", "--sizes", "1000", "--reps", "2",
                       "--threads", "1", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 7 and lines[0].startswith("kernel,h,sequential time (ms)")


def test_bench_spmv_json(capsys):
    code, out, _ = run(capsys, "bench-spmv", "--helmholtz", "dim=3,n=6", "--reps", "2",
                       "--threads", "1,2", "--format", "json")
    assert code == 0
    (rec,) = json.loads(out)
    assert rec["backend"] == ["sequential", "parallel(2)"] and rec["flops"] == 8 * rec["nnz"]


def test_bench_solvers_table_to_file(capsys, tmp_path):
    out_path = tmp_path / "solvers.txt"
    code, out, _ = run(capsys, "bench-solvers", "--helmholtz", SMALL, "--method", "tfqmr",
                       "--threads", "1", "--out", str(out_path))
    assert code == 0 and out == ""
    text = out_path.read_text()
    assert "P-TFQMR" in text and "#iter" in text and "P-BiCGSTAB" not in text


def test_solve_text_and_json(capsys):
    code, out, _ = run(capsys, "solve", "--helmholtz", SMALL, "--method", "bicgstab_l",
                       "--l", "4", "--threads", "2")
    assert code == 0 and "converged          yes" in out
    code, out, _ = run(capsys, "solve", "--helmholtz", SMALL, "--format", "json")
    data = json.loads(out)
    assert data["converged"] and data["residual_history"][0] == 1.0


def test_gen_and_stats(capsys, tmp_path):
    mtx, rhs = tmp_path / "a.mtx", tmp_path / "b.mtx"
    code, _, _ = run(capsys, "gen", "--helmholtz", SMALL, "--out", str(mtx), "--rhs-out", str(rhs))
    assert code == 0
    A = read_matrix_market(mtx)
    assert A.shape == (64, 64) and read_matrix_market(rhs).shape == (64, 1)
    code, out, _ = run(capsys, "stats", "--matrix", str(mtx), "--format", "json")
    assert code == 0 and json.loads(out)[0]["nnz"] == A.nnz
    code, out, _ = run(capsys, "solve", "--matrix", str(mtx))
    assert code == 0 and "problem            a" in out


def test_spec_file(capsys, tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("dim = 1\nn = 5\n")
    code, out, _ = run(capsys, "stats", "--helmholtz", f"@{cfg}", "--format", "csv")
    assert code == 0 and "helmholtz1d-n5-f0" in out


def test_errors(capsys, tmp_path):
    code, _, err = run(capsys, "solve")
    assert code == EXIT_ERROR and "at least one" in err
    code, _, err = run(capsys, "stats", "--matrix", str(tmp_path / "missing.mtx"))
    assert code == EXIT_ERROR
    code, _, err = run(capsys, "bench-kernels", "--threads", "100000", "--sizes", "10")
    assert code == EXIT_ERROR
    with pytest.raises(SystemExit):
        main(["bench-kernels", "--sizes", "ten"])
    with pytest.raises(SystemExit):
        main(["gen", "--helmholtz", "dim=2,bogus=1", "--out", "x"])


def test_determinism_violation_exit_code(capsys, monkeypatch):
    def violate(cfg, *args, **kwargs):
        raise bench.DeterminismError("ZDOT h=10: parallel(2) differs from sequential")

    monkeypatch.setattr("zkrylov.cli.bench_kernels", violate)
    code, _, err = run(capsys, "bench-kernels", "--sizes", "10")
    assert code == EXIT_DETERMINISM and "determinism" in err
