"""scikit-learn compatible wrappers around the preconditioners and solvers.

``fit`` takes the system matrix (a :class:`~zkrylov.core.CsrMatrix`, a scipy
sparse matrix or a dense array). Vectors passed to ``transform`` / ``predict``
are either one right-hand side of shape ``(n,)`` or a stack of them with
shape ``(n_rhs, n)``.
"""

from contextlib import nullcontext

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _parallel, krylov, precond, sparse
from .core import as_csr, check_vector
from .krylov import SolverConfig

__all__ = ["KrylovSolver", "PreconditionerTransformer"]


def _threads(n_threads):
    return nullcontext() if n_threads is None else _parallel.num_threads(n_threads)


def _each_vector(V, n, fn):
    V = np.asarray(V)
    if V.ndim == 1:
        return fn(check_vector(V, "vector", n))
    if V.ndim != 2:
        raise ValueError(f"expected shape (n,) or (n_rhs, n), got {V.shape}")
    return np.stack([fn(check_vector(v, "vector", n)) for v in V])


class PreconditionerTransformer(TransformerMixin, BaseEstimator):
    """Applies ``M^{-1}`` (identity or Jacobi) built from the fitted matrix.

    Parameters
    ----------
    kind : {"jacobi", "identity"}
    n_threads : int or None
        Worker count for the kernels; None keeps the current setting.
    """

    def __init__(self, kind="jacobi", n_threads=None):
        self.kind = kind
        self.n_threads = n_threads

    def fit(self, A, y=None):
        A = as_csr(A)
        self.preconditioner_ = precond.build_preconditioner(A, self.kind)
        self.n_features_in_ = A.n_cols
        return self

    def fit_transform(self, A, X):
        """Fit on the matrix ``A``, then precondition the vectors ``X``.

        Unlike most transformers the fitted object (a matrix) and the
        transformed data (vectors) differ, so both are required.
        """
        return self.fit(A).transform(X)

    def transform(self, X):
        check_is_fitted(self, "preconditioner_")

        def apply_one(r):
            z = np.empty_like(r)
            precond.apply(self.preconditioner_, r, z)
            return z

        with _threads(self.n_threads):
            return _each_vector(X, self.n_features_in_, apply_one)


class KrylovSolver(BaseEstimator):
    """Preconditioned BiCGSTAB / BiCGSTAB(l) / TFQMR as an estimator.

    ``fit(A)`` validates the configuration and builds the preconditioner once;
    ``predict(b)`` solves ``A x = b`` and returns ``x``. The per-solve
    :class:`~zkrylov.krylov.SolveReport` is kept in ``report_`` (last
    right-hand side) and ``reports_`` (all of them).

    Parameters
    ----------
    method : {"bicgstab", "bicgstab_l", "tfqmr"}
    tol : float
        Relative residual target ``||b - A x|| / ||b||``.
    max_iter : int
        Iteration cap (cycles for BiCGSTAB(l)).
    l : int
        Polynomial degree of BiCGSTAB(l).
    precond : {"jacobi", "identity"}
    block_size : int
        Block length of the deterministic reductions.
    n_threads : int or None
        Worker count for the kernels; None keeps the current setting.

    Examples
    --------
    >>> import numpy as np
    >>> solver = KrylovSolver(method="tfqmr").fit(np.diag([2.0, 4.0]))
    >>> solver.predict(np.array([2.0, 4.0])).real
    array([1., 1.])
    """

    def __init__(self, method="bicgstab", tol=1e-9, max_iter=1000, l=8,
                 precond="jacobi", block_size=256, n_threads=None):
        self.method = method
        self.tol = tol
        self.max_iter = max_iter
        self.l = l
        self.precond = precond
        self.block_size = block_size
        self.n_threads = n_threads

    def _config(self, x0=None):
        return SolverConfig(method=self.method, tol=self.tol, max_iter=self.max_iter,
                            l=self.l, precond=self.precond, x0=x0, block_size=self.block_size)

    def fit(self, A, y=None):
        self._config()
        A = as_csr(A)
        if A.n_rows != A.n_cols:
            raise ValueError(f"matrix must be square, got {A.shape}")
        self.matrix_ = A
        self.preconditioner_ = precond.build_preconditioner(A, self.precond)
        self.n_features_in_ = A.n_cols
        return self

    def predict(self, b, x0=None):
        check_is_fitted(self, "matrix_")
        cfg = self._config(x0)
        self.reports_ = []

        def solve_one(rhs):
            x, report = krylov.solve(self.matrix_, rhs, cfg, M=self.preconditioner_)
            self.reports_.append(report)
            return x

        with _threads(self.n_threads):
            result = _each_vector(b, self.n_features_in_, solve_one)
        self.report_ = self.reports_[-1]
        return result

    def fit_predict(self, A, b, x0=None):
        return self.fit(A).predict(b, x0=x0)

    def score(self, b, x):
        """Negative relative residual of ``x`` (higher is better, 0 is exact)."""
        check_is_fitted(self, "matrix_")
        n = self.n_features_in_
        worst = 0.0
        for bi, xi in zip(np.atleast_2d(b), np.atleast_2d(x)):
            bi = check_vector(bi, "b", n)
            ax = np.empty(n, dtype=np.complex128)
            sparse.spmv(self.matrix_, check_vector(xi, "x", n), ax)
            worst = max(worst, np.linalg.norm(bi - ax) / np.linalg.norm(bi))
        return -float(worst)
