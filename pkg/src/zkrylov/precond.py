"""Identity and Jacobi (inverse diagonal) preconditioners."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import check_out_vector

__all__ = [
    "KINDS",
    "Preconditioner",
    "ZeroDiagonalError",
    "apply",
    "build_identity",
    "build_jacobi",
    "build_preconditioner",
    "safe_reciprocal",
]

KINDS = ("identity", "jacobi")


class ZeroDiagonalError(ValueError):
    def __init__(self, row):
        super().__init__(f"zero or missing diagonal entry in row {row}")
        self.row = row


@dataclass(frozen=True, eq=False)
class Preconditioner:
    kind: str
    n: int
    inv_diag: np.ndarray = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown preconditioner {self.kind!r}; choose from {KINDS}")
        if (self.kind == "jacobi") != (self.inv_diag is not None):
            raise ValueError("inv_diag is required for jacobi and only for jacobi")
        if self.inv_diag is not None:
            self.inv_diag.flags.writeable = False


def safe_reciprocal(d):
    """Complex reciprocal ``1 / d`` that divides by the larger component first.

    Avoids the overflow of ``conj(d) / |d|**2`` for very large or very small
    magnitudes.
    """
    d = np.asarray(d, dtype=np.complex128)
    a, b = d.real, d.imag
    out = np.empty_like(d)
    real_dominant = np.abs(a) >= np.abs(b)
    # np.where evaluates both branches; only the selected one is meaningful
    with np.errstate(all="ignore"):
        ra = np.where(real_dominant, b / a, a / b)
        den = np.where(real_dominant, a + b * ra, a * ra + b)
        out.real = np.where(real_dominant, 1.0 / den, ra / den)
        out.imag = np.where(real_dominant, -ra / den, -1.0 / den)
    return out


def build_identity(m):
    return Preconditioner("identity", m.n_rows)


def build_jacobi(m):
    """Inverse-diagonal preconditioner of a square CSR matrix."""
    if m.n_rows != m.n_cols:
        raise ValueError(f"Jacobi preconditioner needs a square matrix, got {m.shape}")
    diag = m.diagonal()
    bad = ~m.has_diagonal_entry() | (diag == 0)
    if bad.any():
        raise ZeroDiagonalError(int(np.flatnonzero(bad)[0]))
    return Preconditioner("jacobi", m.n_rows, safe_reciprocal(diag))


def build_preconditioner(m, kind):
    if kind == "identity":
        return build_identity(m)
    if kind == "jacobi":
        return build_jacobi(m)
    raise ValueError(f"unknown preconditioner {kind!r}; choose from {KINDS}")


def apply(p, r, z, counter=None):
    """``z <- M^{-1} r``. ``z`` may be ``r`` itself."""
    check_out_vector(z, "z")
    if r.shape[0] != p.n or z.shape[0] != p.n:
        raise ValueError(f"vector length must be {p.n}")
    if z is not r:
        kernels.assign(z, r, counter=counter)
    if p.kind == "jacobi":
        kernels.ewproduct(p.inv_diag, z, counter=counter)
