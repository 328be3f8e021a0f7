"""Complex double-precision sparse kernels and Krylov solvers for Helmholtz systems."""

from . import _parallel
from ._parallel import get_num_threads, num_threads, set_num_threads
from .core import (
    CsrMatrix,
    DuplicateEntryError,
    MatrixStats,
    as_csr,
    check_vector,
    csr_from_coo,
    csr_from_triplets,
    matrix_stats,
)
from .estimators import KrylovSolver, PreconditionerTransformer
from .helmholtz import HelmholtzSpec, analytic_eigenvalues, generate
from .kernels import (
    FLOP_WEIGHTS,
    FlopCounter,
    KernelReport,
    ReductionPlan,
    assign,
    axpy,
    dot,
    ewproduct,
    flop_count,
    norm2,
    scale,
)
from .krylov import SolveReport, SolverConfig, solve, solve_bicgstab, solve_bicgstab_l, solve_tfqmr
from .mmio import MatrixMarketError, read_matrix_market, write_matrix_market
from .precond import Preconditioner, ZeroDiagonalError, apply, build_jacobi
from .sparse import spmv, spmv_dense_oracle

__version__ = "0.1.0"

__all__ = [
    "CsrMatrix",
    "DuplicateEntryError",
    "FLOP_WEIGHTS",
    "FlopCounter",
    "HelmholtzSpec",
    "KernelReport",
    "KrylovSolver",
    "MatrixMarketError",
    "MatrixStats",
    "Preconditioner",
    "PreconditionerTransformer",
    "ReductionPlan",
    "SolveReport",
    "SolverConfig",
    "ZeroDiagonalError",
    "analytic_eigenvalues",
    "apply",
    "as_csr",
    "assign",
    "axpy",
    "build_jacobi",
    "check_vector",
    "csr_from_coo",
    "csr_from_triplets",
    "dot",
    "ewproduct",
    "flop_count",
    "generate",
    "get_num_threads",
    "matrix_stats",
    "norm2",
    "num_threads",
    "read_matrix_market",
    "scale",
    "set_num_threads",
    "solve",
    "solve_bicgstab",
    "solve_bicgstab_l",
    "solve_tfqmr",
    "spmv",
    "spmv_dense_oracle",
    "write_matrix_market",
]
