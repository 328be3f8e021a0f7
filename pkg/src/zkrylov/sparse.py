"""CSR sparse matrix-vector product."""

import numpy as np

from . import _parallel  # noqa: F401
from .core import CsrMatrix, check_out_vector
from numba import njit, prange

__all__ = ["DENSE_ORACLE_MAX_ENTRIES", "spmv", "spmv_dense_oracle"]

DENSE_ORACLE_MAX_ENTRIES = 10**6


@njit(parallel=True, cache=True)
def _csr_spmv(row_ptr, col_idx, values, x, y):
    # one worker per row; each row sums in stored (ascending column) order
    for i in prange(y.shape[0]):
        acc = 0j
        for k in range(row_ptr[i], row_ptr[i + 1]):
            acc += values[k] * x[col_idx[k]]
        y[i] = acc


def spmv(m, x, y, counter=None):
    """``y <- m @ x``. ``y`` is overwritten; it must not share memory with ``x``."""
    if not isinstance(m, CsrMatrix):
        raise TypeError("m must be a CsrMatrix")
    check_out_vector(y, "y")
    if not (isinstance(x, np.ndarray) and x.dtype == np.complex128 and x.flags.c_contiguous):
        x = np.ascontiguousarray(x, dtype=np.complex128)
    if x.ndim != 1 or x.shape[0] != m.n_cols:
        raise ValueError(f"x has shape {x.shape}, expected ({m.n_cols},)")
    if y.shape[0] != m.n_rows:
        raise ValueError(f"y has length {y.shape[0]}, expected {m.n_rows}")
    if np.shares_memory(x, y):
        raise ValueError("x and y must not alias")
    _csr_spmv(m.row_ptr, m.col_idx, m.values, x, y)
    if counter is not None:
        counter.add("spmv", m.nnz)


def spmv_dense_oracle(m, x):
    """Expand ``m`` to a dense array and multiply naively. Test oracle only."""
    if m.n_rows * m.n_cols > DENSE_ORACLE_MAX_ENTRIES:
        raise ValueError(
            f"{m.n_rows}x{m.n_cols} exceeds the dense oracle cap of {DENSE_ORACLE_MAX_ENTRIES} entries"
        )
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (m.n_cols,):
        raise ValueError(f"x has shape {x.shape}, expected ({m.n_cols},)")
    return m.to_dense() @ x
