"""Preconditioned transpose-free Krylov solvers: BiCGSTAB, BiCGSTAB(l), TFQMR.

All vector work goes through :mod:`zkrylov.kernels`, :mod:`zkrylov.sparse`
and :mod:`zkrylov.precond`, so every flop is charged to a
:class:`~zkrylov.kernels.FlopCounter` and results inherit the kernels'
thread-count independence.

The preconditioner acts on search directions only. The recurrences carry the
unpreconditioned residual ``b - A x``, so ``tol`` means the same thing for
every preconditioner. When the recursive residual passes the test, the true
residual is recomputed; if it does not pass as well, the method restarts from
the current iterate with the remaining iteration budget.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels, precond, sparse
from .core import CsrMatrix, check_vector

__all__ = [
    "BREAKDOWN_EPS",
    "METHODS",
    "SolveReport",
    "SolverConfig",
    "solve",
    "solve_bicgstab",
    "solve_bicgstab_l",
    "solve_tfqmr",
]

METHODS = ("bicgstab", "bicgstab_l", "tfqmr")

# |scalar| <= BREAKDOWN_EPS * ||shadow|| * ||r_start|| counts as a vanished scalar
BREAKDOWN_EPS = 1e-30


@dataclass(frozen=True)
class SolverConfig:
    method: str = "bicgstab"
    tol: float = 1e-9
    max_iter: int = 1000
    l: int = 8
    precond: str = "jacobi"
    x0: object = None
    block_size: int = kernels.DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if int(self.l) < 1:
            raise ValueError(f"l must be >= 1, got {self.l}")
        if self.precond not in precond.KINDS:
            raise ValueError(f"unknown preconditioner {self.precond!r}; choose from {precond.KINDS}")
        kernels.ReductionPlan(self.block_size)

    @property
    def label(self):
        """Display name, ``P-`` prefixed when Jacobi preconditioned."""
        prefix = "P-" if self.precond == "jacobi" else ""
        if self.method == "bicgstab_l":
            return f"{prefix}BiCGSTAB({self.l})"
        return prefix + {"bicgstab": "BiCGSTAB", "tfqmr": "TFQMR"}[self.method]


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``residual_history[0]`` is the initial relative residual and each later
    entry is the relative recursive residual after one iteration (one outer
    cycle for BiCGSTAB(l), one pair of half-steps for TFQMR, where the
    quasi-residual bound ``tau * sqrt(m + 1)`` stands in for the residual).
    ``restarts`` counts how often the recurrences were restarted from the
    true residual because ``b - A x`` did not confirm convergence.
    """

    method: str
    converged: bool
    iterations: int
    matvecs: int
    residual_history: list
    final_true_relres: float
    elapsed: float
    total_flops: int
    stop_reason: str
    flops_by_op: dict = field(default_factory=dict)
    quasi_residuals: list = None
    restarts: int = 0

    @property
    def final_relres(self):
        return self.residual_history[-1]


class _Breakdown(Exception):
    def __init__(self, name):
        super().__init__(name)
        self.name = name


class _Context:
    """Matrix, preconditioner and flop counter shared by one solve."""

    def __init__(self, A, M, plan, counter):
        self.A = A
        self.M = M
        self.plan = plan
        self.counter = counter
        self.n = A.n_rows

    def zeros(self):
        return np.zeros(self.n, dtype=np.complex128)

    def copy(self, src):
        out = np.empty(self.n, dtype=np.complex128)
        kernels.assign(out, src, counter=self.counter)
        return out

    def matvec(self, x, out):
        sparse.spmv(self.A, x, out, counter=self.counter)

    def precondition(self, r, out):
        precond.apply(self.M, r, out, counter=self.counter)

    def dot(self, x, y):
        return kernels.dot(x, y, self.plan, counter=self.counter)

    def norm(self, x):
        return kernels.norm2(x, self.plan, counter=self.counter)

    def axpy(self, alpha, x, y):
        kernels.axpy(alpha, x, y, counter=self.counter)

    def scale(self, alpha, x):
        kernels.scale(alpha, x, counter=self.counter)

    def residual(self, b, x, out):
        """``out <- b - A x``."""
        self.matvec(x, out)
        self.scale(-1.0, out)
        self.axpy(1.0, b, out)


def _check_scalar(value, scale, name):
    if not np.isfinite(value) or abs(value) <= BREAKDOWN_EPS * scale:
        raise _Breakdown(name)


def _bicgstab_run(ctx, x, r, bnorm, tol, max_steps, history, cfg):
    """Preconditioned BiCGSTAB from residual ``r``; updates ``x`` in place."""
    rhat = ctx.copy(r)
    rhat_norm = rnorm = ctx.norm(rhat)
    scale = rhat_norm * rnorm
    p = ctx.zeros()
    v = ctx.zeros()
    phat = ctx.zeros()
    shat = ctx.zeros()
    t = ctx.zeros()
    rho_old = alpha = omega = 1.0

    for step in range(1, max_steps + 1):
        rho = ctx.dot(rhat, r)
        _check_scalar(rho, scale, "rho")
        if step == 1:
            kernels.assign(p, r, counter=ctx.counter)
        else:
            beta = (rho / rho_old) * (alpha / omega)
            ctx.axpy(-omega, v, p)
            ctx.scale(beta, p)
            ctx.axpy(1.0, r, p)
        ctx.precondition(p, phat)
        ctx.matvec(phat, v)
        sigma = ctx.dot(rhat, v)
        _check_scalar(sigma, scale, "sigma")
        alpha = rho / sigma

        ctx.axpy(-alpha, v, r)  # r now holds s
        snorm = ctx.norm(r)
        if snorm <= tol * bnorm:
            ctx.axpy(alpha, phat, x)
            history.append(snorm / bnorm)
            return step, "converged"

        ctx.precondition(r, shat)
        ctx.matvec(shat, t)
        tt = ctx.dot(t, t).real
        _check_scalar(tt, snorm * snorm, "omega")
        omega = ctx.dot(t, r) / tt
        ctx.axpy(alpha, phat, x)
        ctx.axpy(omega, shat, x)
        ctx.axpy(-omega, t, r)
        rnorm = ctx.norm(r)
        history.append(rnorm / bnorm)
        if rnorm <= tol * bnorm:
            return step, "converged"
        _check_scalar(omega, 1.0, "omega")
        rho_old = rho
    return max_steps, "max_iter"


def _bicgstab_l_run(ctx, x, r, bnorm, tol, max_steps, history, cfg):
    """BiCGSTAB(l) with modified Gram-Schmidt minimal-residual steps.

    Runs on the right-preconditioned operator ``A M^{-1}`` for a correction
    ``y`` and finishes with ``x += M^{-1} y``, so ``rr[0]`` is always the
    unpreconditioned residual of the current iterate.
    """
    ell = int(cfg.l)
    tmp = ctx.zeros()

    def op(src, dst):
        ctx.precondition(src, tmp)
        ctx.matvec(tmp, dst)

    y = ctx.zeros()
    rr = [ctx.copy(r)] + [ctx.zeros() for _ in range(ell)]
    uu = [ctx.zeros() for _ in range(ell + 1)]
    rhat = ctx.copy(r)
    rhat_norm = ctx.norm(rhat)
    scale = rhat_norm * rhat_norm
    rho0, alpha, omega = 1.0, 0.0, 1.0

    def finish(status, steps):
        ctx.precondition(y, tmp)
        ctx.axpy(1.0, tmp, x)
        return steps, status

    try:
        for cycle in range(1, max_steps + 1):
            rho0 = -omega * rho0
            for j in range(ell):
                rho1 = ctx.dot(rhat, rr[j])
                _check_scalar(rho1, scale, "rho")
                beta = alpha * rho1 / rho0
                rho0 = rho1
                for i in range(j + 1):
                    ctx.scale(-beta, uu[i])
                    ctx.axpy(1.0, rr[i], uu[i])
                op(uu[j], uu[j + 1])
                gamma = ctx.dot(rhat, uu[j + 1])
                _check_scalar(gamma, scale, "gamma")
                alpha = rho0 / gamma
                for i in range(j + 1):
                    ctx.axpy(-alpha, uu[i + 1], rr[i])
                op(rr[j], rr[j + 1])
                ctx.axpy(alpha, uu[0], y)
                rnorm = ctx.norm(rr[0])
                if rnorm <= tol * bnorm:
                    history.append(rnorm / bnorm)
                    return finish("converged", cycle)

            # minimal-residual polynomial: MGS on r_1..r_l, then back substitution
            tau = np.zeros((ell + 1, ell + 1), dtype=np.complex128)
            sigma = np.zeros(ell + 1)
            gp = np.zeros(ell + 1, dtype=np.complex128)
            for j in range(1, ell + 1):
                for i in range(1, j):
                    tau[i, j] = ctx.dot(rr[i], rr[j]) / sigma[i]
                    ctx.axpy(-tau[i, j], rr[i], rr[j])
                sigma[j] = ctx.dot(rr[j], rr[j]).real
                _check_scalar(sigma[j], 0.0, "sigma")
                gp[j] = ctx.dot(rr[j], rr[0]) / sigma[j]

            g = np.zeros(ell + 1, dtype=np.complex128)
            g[ell] = gp[ell]
            omega = g[ell]
            for j in range(ell - 1, 0, -1):
                g[j] = gp[j] - sum(tau[j, i] * g[i] for i in range(j + 1, ell + 1))
            gpp = np.zeros(ell + 1, dtype=np.complex128)
            for j in range(1, ell):
                gpp[j] = g[j + 1] + sum(tau[j, i] * g[i + 1] for i in range(j + 1, ell))

            ctx.axpy(g[1], rr[0], y)
            ctx.axpy(-gp[ell], rr[ell], rr[0])
            ctx.axpy(-g[ell], uu[ell], uu[0])
            for j in range(1, ell):
                ctx.axpy(-g[j], uu[j], uu[0])
                ctx.axpy(gpp[j], rr[j], y)
                ctx.axpy(-gp[j], rr[j], rr[0])

            rnorm = ctx.norm(rr[0])
            history.append(rnorm / bnorm)
            if rnorm <= tol * bnorm:
                return finish("converged", cycle)
            _check_scalar(omega, 1.0, "omega")
    except _Breakdown:
        # keep the progress made so far before reporting
        finish("breakdown", None)
        raise
    return finish("max_iter", max_steps)


def _tfqmr_run(ctx, x, r, bnorm, tol, max_steps, history, cfg, quasi=None):
    """Freund's TFQMR, right-preconditioned; ``d`` accumulates ``M^{-1}`` directions."""
    rhat = ctx.copy(r)
    w = ctx.copy(r)
    y1 = ctx.copy(r)
    y2 = ctx.zeros()
    z1 = ctx.zeros()
    z2 = ctx.zeros()
    u1 = ctx.zeros()
    u2 = ctx.zeros()
    d = ctx.zeros()
    tau = ctx.norm(r)
    scale = tau * tau
    theta = 0.0
    eta = 0.0
    rho = ctx.dot(rhat, r)
    ctx.precondition(y1, z1)
    ctx.matvec(z1, u1)
    v = ctx.copy(u1)

    for k in range(1, max_steps + 1):
        sigma = ctx.dot(rhat, v)
        _check_scalar(sigma, scale, "sigma")
        alpha = rho / sigma
        for half in (1, 2):
            if half == 1:
                z, u = z1, u1
            else:
                kernels.assign(y2, y1, counter=ctx.counter)
                ctx.axpy(-alpha, v, y2)
                ctx.precondition(y2, z2)
                ctx.matvec(z2, u2)
                z, u = z2, u2
            ctx.axpy(-alpha, u, w)
            ctx.scale(theta * theta * eta / alpha, d)
            ctx.axpy(1.0, z, d)
            theta = ctx.norm(w) / tau
            c = 1.0 / math.sqrt(1.0 + theta * theta)
            tau = tau * theta * c
            eta = c * c * alpha
            ctx.axpy(eta, d, x)
            m = 2 * k - 2 + half
            if quasi is not None:
                quasi.append(tau / bnorm)
            bound = tau * math.sqrt(m + 1)
            if bound <= tol * bnorm:
                history.append(bound / bnorm)
                return k, "converged"

        rho_new = ctx.dot(rhat, w)
        _check_scalar(rho_new, scale, "rho")
        beta = rho_new / rho
        rho = rho_new
        kernels.assign(y1, w, counter=ctx.counter)
        ctx.axpy(beta, y2, y1)
        ctx.precondition(y1, z1)
        # v <- u1_new + beta * (u2 + beta * v)
        ctx.scale(beta, v)
        ctx.axpy(1.0, u2, v)
        ctx.scale(beta, v)
        ctx.matvec(z1, u1)
        ctx.axpy(1.0, u1, v)
        history.append(bound / bnorm)
    return max_steps, "max_iter"


_RUNS = {
    "bicgstab": _bicgstab_run,
    "bicgstab_l": _bicgstab_l_run,
    "tfqmr": _tfqmr_run,
}


def _validate(A, b):
    if not isinstance(A, CsrMatrix):
        raise TypeError("A must be a CsrMatrix (see zkrylov.core.as_csr)")
    if A.n_rows != A.n_cols:
        raise ValueError(f"matrix must be square, got {A.shape}")
    return check_vector(b, "b", A.n_rows)


def solve(A, b, cfg=None, M=None):
    """Solve ``A x = b`` with the method named in ``cfg``.

    Returns ``(x, report)``. Non-convergence and breakdown are reported in
    ``report.stop_reason`` (``"max_iter"`` or ``"breakdown:<scalar>"``), not
    raised. ``M`` overrides the preconditioner built from ``cfg.precond``.
    """
    cfg = SolverConfig() if cfg is None else cfg
    b = _validate(A, b)
    counter = kernels.FlopCounter()
    plan = kernels.ReductionPlan(cfg.block_size)
    start = time.perf_counter()

    bnorm = kernels.norm2(b, plan, counter=counter)
    if bnorm == 0.0:
        raise ValueError("zero right-hand side")
    if M is None:
        M = precond.build_preconditioner(A, cfg.precond)
    ctx = _Context(A, M, plan, counter)
    run = _RUNS[cfg.method]
    quasi = [] if cfg.method == "tfqmr" else None
    kwargs = {"quasi": quasi} if quasi is not None else {}

    r = ctx.zeros()
    if cfg.x0 is None:
        x = ctx.zeros()
        kernels.assign(r, b, counter=counter)
    else:
        x = check_vector(cfg.x0, "x0", A.n_rows).copy()
        ctx.residual(b, x, r)

    relres = ctx.norm(r) / bnorm
    history = [relres]
    iterations = 0
    runs = 0
    status = "max_iter"
    while relres > cfg.tol and iterations < cfg.max_iter:
        runs += 1
        done = len(history)
        try:
            steps, status = run(ctx, x, r, bnorm, cfg.tol, cfg.max_iter - iterations,
                                history, cfg, **kwargs)
        except _Breakdown as exc:
            # the interrupted iteration is not counted
            steps, status = len(history) - done, f"breakdown:{exc.name}"
        iterations += steps
        # recursive residuals drift; only b - A x decides convergence
        ctx.residual(b, x, r)
        relres = ctx.norm(r) / bnorm
        if status.startswith("breakdown"):
            break
    if relres <= cfg.tol:
        status = "converged"
    elif status == "converged":
        status = "max_iter"

    elapsed = time.perf_counter() - start
    report = SolveReport(
        method=cfg.method,
        converged=status == "converged",
        iterations=iterations,
        matvecs=counter.calls["spmv"],
        residual_history=history,
        final_true_relres=relres,
        elapsed=elapsed,
        total_flops=counter.total,
        stop_reason=status,
        flops_by_op=dict(counter.flops),
        quasi_residuals=quasi,
        restarts=max(runs - 1, 0),
    )
    return x, report


def _with_method(cfg, method):
    cfg = SolverConfig() if cfg is None else cfg
    if cfg.method == method:
        return cfg
    return SolverConfig(method=method, tol=cfg.tol, max_iter=cfg.max_iter, l=cfg.l,
                        precond=cfg.precond, x0=cfg.x0, block_size=cfg.block_size)


def solve_bicgstab(A, b, cfg=None):
    return solve(A, b, _with_method(cfg, "bicgstab"))


def solve_bicgstab_l(A, b, cfg=None):
    return solve(A, b, _with_method(cfg, "bicgstab_l"))


def solve_tfqmr(A, b, cfg=None):
    return solve(A, b, _with_method(cfg, "tfqmr"))
