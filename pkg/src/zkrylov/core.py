"""Complex vectors, CSR matrices and the validation helpers shared by every module.

A complex scalar is a Python ``complex`` / ``numpy.complex128`` and a dense
vector is a one-dimensional, C-contiguous ``complex128`` array. Only
:class:`CsrMatrix` needs a dedicated container.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CsrMatrix",
    "DuplicateEntryError",
    "MatrixStats",
    "as_csr",
    "check_vector",
    "check_out_vector",
    "csr_from_coo",
    "csr_from_triplets",
    "matrix_stats",
]


class DuplicateEntryError(ValueError):
    """Raised when two triplets address the same (row, col) coordinate."""

    def __init__(self, row, col):
        super().__init__(f"duplicate entry at ({row}, {col})")
        self.row = row
        self.col = col


def check_vector(x, name="x", length=None):
    """Validate ``x`` as a finite complex vector and return it as complex128.

    Real input is promoted with a zero imaginary part. A contiguous complex128
    array is returned as is (no copy).
    """
    arr = np.ascontiguousarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_out_vector(y, name="y"):
    """Check that ``y`` can be written in place by a kernel.

    Kernels mutate their output, so no conversion is attempted here.
    """
    if not isinstance(y, np.ndarray) or y.dtype != np.complex128 or y.ndim != 1:
        raise TypeError(f"{name} must be a one-dimensional complex128 ndarray")
    if not y.flags.c_contiguous or not y.flags.writeable:
        raise ValueError(f"{name} must be C-contiguous and writeable")
    return y


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Complex matrix in canonical compressed sparse row form.

    Column indices are strictly increasing inside each row. The arrays are
    copied on construction and made read-only, so instances can be shared
    between threads.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        n_rows, n_cols = int(self.n_rows), int(self.n_cols)
        if n_rows < 1 or n_cols < 1:
            raise ValueError(f"matrix dimensions must be positive, got {n_rows}x{n_cols}")
        row_ptr = np.array(self.row_ptr, dtype=np.int64)
        col_idx = np.array(self.col_idx, dtype=np.int64)
        values = np.array(self.values, dtype=np.complex128)
        if row_ptr.ndim != 1 or row_ptr.shape[0] != n_rows + 1:
            raise ValueError(f"row_ptr must have length n_rows + 1 = {n_rows + 1}")
        nnz = col_idx.shape[0]
        if col_idx.ndim != 1 or values.shape != (nnz,):
            raise ValueError("col_idx and values must be 1-D arrays of equal length")
        if row_ptr[0] != 0 or row_ptr[-1] != nnz:
            raise ValueError(f"row_ptr must start at 0 and end at nnz={nnz}")
        if np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if nnz and (col_idx.min() < 0 or col_idx.max() >= n_cols):
            raise ValueError(f"column index out of range [0, {n_cols})")
        if nnz > 1:
            increasing = np.diff(col_idx) > 0
            # the first entry of a row has no predecessor constraint
            starts = row_ptr[:-1][np.diff(row_ptr) > 0]
            increasing[starts[starts > 0] - 1] = True
            if not increasing.all():
                k = int(np.flatnonzero(~increasing)[0]) + 1
                row = int(np.searchsorted(row_ptr, k, side="right") - 1)
                raise ValueError(f"column indices of row {row} are not strictly increasing")
        if not np.isfinite(values).all():
            raise ValueError("matrix values contain NaN or Inf")
        for arr in (row_ptr, col_idx, values):
            arr.flags.writeable = False
        object.__setattr__(self, "n_rows", n_rows)
        object.__setattr__(self, "n_cols", n_cols)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.col_idx.shape[0])

    def row_indices(self):
        """Row index of every stored entry, in storage order."""
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_ptr))

    def to_triplets(self):
        return list(zip(self.row_indices().tolist(), self.col_idx.tolist(), self.values.tolist()))

    def to_dense(self):
        dense = np.zeros(self.shape, dtype=np.complex128)
        dense[self.row_indices(), self.col_idx] = self.values
        return dense

    def diagonal(self):
        """Stored diagonal, with structurally missing entries as 0."""
        diag = np.zeros(min(self.shape), dtype=np.complex128)
        rows = self.row_indices()
        on_diag = rows == self.col_idx
        diag[rows[on_diag]] = self.values[on_diag]
        return diag

    def has_diagonal_entry(self):
        """Boolean mask: does row ``i`` store an entry at column ``i``."""
        present = np.zeros(min(self.shape), dtype=bool)
        rows = self.row_indices()
        present[rows[rows == self.col_idx]] = True
        return present

    def transpose(self):
        return csr_from_coo(self.n_cols, self.n_rows, self.col_idx, self.row_indices(), self.values)

    def __eq__(self, other):
        if not isinstance(other, CsrMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"


def csr_from_coo(n_rows, n_cols, rows, cols, values):
    """Build a canonical :class:`CsrMatrix` from coordinate arrays.

    Input order is irrelevant. Duplicate coordinates raise
    :class:`DuplicateEntryError` rather than being summed.
    """
    n_rows, n_cols = int(n_rows), int(n_cols)
    rows = np.asarray(rows, dtype=np.int64).reshape(-1)
    cols = np.asarray(cols, dtype=np.int64).reshape(-1)
    values = np.asarray(values, dtype=np.complex128).reshape(-1)
    if not rows.shape == cols.shape == values.shape:
        raise ValueError("rows, cols and values must have equal length")
    if rows.size:
        if rows.min() < 0 or rows.max() >= n_rows:
            bad = int(np.flatnonzero((rows < 0) | (rows >= n_rows))[0])
            raise IndexError(f"row index {rows[bad]} out of range [0, {n_rows})")
        if cols.min() < 0 or cols.max() >= n_cols:
            bad = int(np.flatnonzero((cols < 0) | (cols >= n_cols))[0])
            raise IndexError(f"column index {cols[bad]} out of range [0, {n_cols})")
    if not np.isfinite(values).all():
        raise ValueError("matrix values contain NaN or Inf")

    order = np.lexsort((cols, rows))
    rows, cols, values = rows[order], cols[order], values[order]
    dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
    if dup.any():
        k = int(np.flatnonzero(dup)[0])
        raise DuplicateEntryError(int(rows[k]), int(cols[k]))

    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=row_ptr[1:])
    return CsrMatrix(n_rows, n_cols, row_ptr, cols, values)


def csr_from_triplets(n_rows, n_cols, entries):
    """Build a canonical :class:`CsrMatrix` from ``(row, col, value)`` triplets."""
    entries = list(entries)
    if not entries:
        return csr_from_coo(n_rows, n_cols, [], [], [])
    rows, cols, values = zip(*entries)
    return csr_from_coo(n_rows, n_cols, rows, cols, values)


def as_csr(A):
    """Coerce ``A`` to :class:`CsrMatrix`.

    Accepts a :class:`CsrMatrix`, anything exposing ``tocoo()`` (scipy sparse
    matrices and arrays) or a dense 2-D array, whose exact zeros are dropped.
    """
    if isinstance(A, CsrMatrix):
        return A
    if hasattr(A, "tocoo"):
        coo = A.tocoo()
        return csr_from_coo(coo.shape[0], coo.shape[1], coo.row, coo.col, coo.data)
    dense = np.asarray(A, dtype=np.complex128)
    if dense.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {dense.shape}")
    rows, cols = np.nonzero(dense)
    return csr_from_coo(dense.shape[0], dense.shape[1], rows, cols, dense[rows, cols])


@dataclass(frozen=True)
class MatrixStats:
    n: int
    nnz: int
    density_percent: float
    nnz_max_per_row: int
    nnz_mean_per_row: float
    bandwidth: int


def matrix_stats(m):
    """Size, fill and bandwidth figures of a CSR matrix."""
    per_row = np.diff(m.row_ptr)
    nnz = int(m.row_ptr[-1])
    bandwidth = int(np.abs(m.row_indices() - m.col_idx).max()) if nnz else 0
    return MatrixStats(
        n=m.n_rows,
        nnz=nnz,
        density_percent=100.0 * nnz / (m.n_rows * m.n_cols),
        nnz_max_per_row=int(per_row.max()),
        nnz_mean_per_row=nnz / m.n_rows,
        bandwidth=bandwidth,
    )
