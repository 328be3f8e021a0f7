"""Matrix Market coordinate-format reader and writer."""

import numpy as np

from .core import csr_from_coo

__all__ = ["MatrixMarketError", "read_matrix_market", "write_matrix_market"]

_FIELDS = ("real", "complex")
_SYMMETRIES = ("general", "symmetric", "hermitian")


class MatrixMarketError(ValueError):
    pass


def _parse_header(line):
    tokens = line.split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(f"malformed header: {line.strip()!r}")
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"only 'matrix coordinate' is supported, got {obj} {fmt}")
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r} (expected real or complex)")
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}")
    return field, symmetry


def read_matrix_market(path):
    """Load a Matrix Market coordinate file as a canonical :class:`CsrMatrix`.

    Symmetric and hermitian storage is expanded to the full matrix; hermitian
    mirrors are conjugated and diagonal entries are not duplicated.
    """
    with open(path, "r") as fh:
        field, symmetry = _parse_header(fh.readline())
        line = fh.readline()
        while line and (line.startswith("%") or not line.strip()):
            line = fh.readline()
        try:
            n_rows, n_cols, nnz = (int(t) for t in line.split())
        except ValueError:
            raise MatrixMarketError(f"malformed size line: {line.strip()!r}") from None
        if n_rows < 1 or n_cols < 1 or nnz < 0:
            raise MatrixMarketError(f"invalid size line: {line.strip()!r}")
        if symmetry != "general" and n_rows != n_cols:
            raise MatrixMarketError(f"{symmetry} storage requires a square matrix")

        width = 4 if field == "complex" else 3
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.complex128)
        k = 0
        for lineno, line in enumerate(fh, start=3):
            if not line.strip() or line.startswith("%"):
                continue
            tokens = line.split()
            if len(tokens) != width or k >= nnz:
                raise MatrixMarketError(f"line {lineno}: unexpected entry {line.strip()!r}")
            try:
                i, j = int(tokens[0]), int(tokens[1])
                re = float(tokens[2])
                im = float(tokens[3]) if width == 4 else 0.0
            except ValueError:
                raise MatrixMarketError(f"line {lineno}: cannot parse {line.strip()!r}") from None
            if not (1 <= i <= n_rows and 1 <= j <= n_cols):
                raise MatrixMarketError(
                    f"line {lineno}: index ({i}, {j}) outside {n_rows}x{n_cols}"
                )
            rows[k], cols[k], vals[k] = i - 1, j - 1, complex(re, im)
            k += 1
    if k != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, found {k}")

    if symmetry != "general":
        off = rows != cols
        mirrored = np.conj(vals[off]) if symmetry == "hermitian" else vals[off]
        if symmetry == "hermitian" and np.any(vals[~off].imag != 0):
            raise MatrixMarketError("hermitian matrix has a non-real diagonal entry")
        rows, cols = np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]])
        vals = np.concatenate([vals, mirrored])
    return csr_from_coo(n_rows, n_cols, rows, cols, vals)


def write_matrix_market(m, path, comment=None):
    """Write ``m`` as ``complex general`` with 17 significant digits.

    17 digits round-trip every double, so reading the file back reproduces
    the matrix bit for bit.
    """
    rows = m.row_indices() + 1
    cols = m.col_idx + 1
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate complex general\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{m.n_rows} {m.n_cols} {m.nnz}\n")
        for i, j, v in zip(rows.tolist(), cols.tolist(), m.values.tolist()):
            fh.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")
