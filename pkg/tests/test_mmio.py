import numpy as np
import pytest

from oracles import random_sparse_dense
from zkrylov.core import as_csr, csr_from_triplets
from zkrylov.mmio import MatrixMarketError, read_matrix_market, write_matrix_market


def _write(path, text):
    path.write_text(text)
    return path


def test_real_general(tmp_path):
    p = _write(tmp_path / "a.mtx", "%%MatrixMarket matrix coordinate real general\n"
               "% comment\n2 2 2\n1 1 1.5\n2 1 -2\n")
    m = read_matrix_market(p)
    np.testing.assert_array_equal(m.to_dense(), [[1.5, 0], [-2, 0]])


def test_complex_general(tmp_path):
    p = _write(tmp_path / "a.mtx", "%%MatrixMarket matrix coordinate complex general\n"
               "2 2 2\n1 2 1 2\n2 2 0 -1\n")
    np.testing.assert_array_equal(read_matrix_market(p).to_dense(), [[0, 1 + 2j], [0, -1j]])


def test_symmetric_expands_without_duplicating_diagonal(tmp_path):
    p = _write(tmp_path / "s.mtx", "%%MatrixMarket matrix coordinate complex symmetric\n"
               "3 3 3\n1 1 4 0\n3 1 1 1\n2 2 5 0\n")
    m = read_matrix_market(p)
    assert m.nnz == 4
    np.testing.assert_array_equal(m.to_dense(), [[4, 0, 1 + 1j], [0, 5, 0], [1 + 1j, 0, 0]])


def test_hermitian_mirrors_are_conjugated(tmp_path):
    p = _write(tmp_path / "h.mtx", "%%MatrixMarket matrix coordinate complex hermitian\n"
               "2 2 3\n1 1 2 0\n2 1 1 3\n2 2 -1 0\n")
    d = read_matrix_market(p).to_dense()
    np.testing.assert_array_equal(d, [[2, 1 - 3j], [1 + 3j, -1]])
    np.testing.assert_array_equal(d, d.conj().T)


@pytest.mark.parametrize(
    "text",
    [
        "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n",
        "%%MatrixMarket matrix coordinate integer general\n2 2 1\n1 1 3\n",
        "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n",
        "not a header\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
        "%%MatrixMarket matrix coordinate real general\n2 2\n",
        "%%MatrixMarket matrix coordinate complex hermitian\n2 2 1\n1 1 1 1\n",
    ],
    ids=["pattern", "integer", "array", "header", "bounds", "short", "size", "herm-diag"],
)
def test_malformed_inputs_rejected(tmp_path, text):
    with pytest.raises(MatrixMarketError):
        read_matrix_market(_write(tmp_path / "bad.mtx", text))


def test_duplicate_entries_rejected(tmp_path):
    p = _write(tmp_path / "d.mtx", "%%MatrixMarket matrix coordinate real general\n"
               "2 2 2\n1 1 1\n1 1 2\n")
    with pytest.raises(ValueError):
        read_matrix_market(p)


def test_round_trip_keeps_empty_rows_and_comment(tmp_path):
    m = csr_from_triplets(4, 3, [(0, 2, 1e-300 + 3j), (3, 0, -0.1)])
    p = tmp_path / "r.mtx"
    write_matrix_market(m, p, comment="two lines\nof comment")
    assert read_matrix_market(p) == m
    assert "% of comment" in p.read_text()


def test_random_round_trips_are_bit_exact(tmp_path, rng):
    for k in range(30):
        n = int(rng.integers(1, 40))
        m = as_csr(random_sparse_dense(rng, n, int(rng.integers(1, 40)), 0.2)
                   * 10.0 ** rng.uniform(-200, 200))
        p = tmp_path / f"m{k}.mtx"
        write_matrix_market(m, p)
        back = read_matrix_market(p)
        assert back == m
        assert back.values.tobytes() == m.values.tobytes()
