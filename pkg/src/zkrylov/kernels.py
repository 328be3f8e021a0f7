"""BLAS-1 kernels in complex double precision.

Every kernel works in place on ``complex128`` arrays and parallelises over the
index range with numba. The reductions (:func:`dot`, :func:`norm2`) run in two
phases over a fixed block partition of the index range:

1. each block sums its own contiguous slice in ascending index order;
2. the per-block partials are summed in ascending block order.

The summation tree depends only on the block size, never on the number of
worker threads, so results are bit-identical for any thread count.

Flop accounting uses fixed per-element weights: assign 1, scale 6, axpy 8,
ewproduct 6, dot 8, norm 5, and 8 per stored nonzero for SpMV.
"""

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import _parallel  # noqa: F401  (sets the thread ceiling before numba loads)
from .core import check_out_vector
from numba import njit, prange

__all__ = [
    "DEFAULT_BLOCK_SIZE",
    "FLOP_WEIGHTS",
    "FlopCounter",
    "KernelReport",
    "ReductionPlan",
    "assign",
    "axpy",
    "dot",
    "dot_sequential",
    "ewproduct",
    "flop_count",
    "norm2",
    "norm2_sequential",
    "scale",
]

DEFAULT_BLOCK_SIZE = 256

FLOP_WEIGHTS = {
    "assign": 1,
    "scale": 6,
    "axpy": 8,
    "ewproduct": 6,
    "dot": 8,
    "norm": 5,
    "spmv": 8,
}


def flop_count(op_name, size):
    """Flops charged for ``op_name`` on ``size`` elements (nonzeros for spmv)."""
    try:
        weight = FLOP_WEIGHTS[op_name]
    except KeyError:
        raise ValueError(f"unknown kernel {op_name!r}") from None
    return weight * int(size)


class FlopCounter:
    """Accumulates flops and call counts per kernel."""

    def __init__(self):
        self.flops = Counter()
        self.calls = Counter()

    def add(self, op_name, size):
        self.flops[op_name] += flop_count(op_name, size)
        self.calls[op_name] += 1

    @property
    def total(self):
        return sum(self.flops.values())


@dataclass(frozen=True)
class KernelReport:
    op_name: str
    h: int
    elapsed: float
    flops: int
    gflops: float

    @classmethod
    def from_timing(cls, op_name, h, elapsed):
        flops = flop_count(op_name, h)
        gflops = flops / elapsed / 1e9 if elapsed > 0 else math.inf
        return cls(op_name, int(h), float(elapsed), flops, gflops)


@dataclass(frozen=True)
class ReductionPlan:
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if int(self.block_size) < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")

    def n_blocks(self, h):
        return -(-int(h) // int(self.block_size))


DEFAULT_PLAN = ReductionPlan()


@njit(parallel=True, cache=True)
def _assign(dst, src):
    for i in prange(dst.shape[0]):
        dst[i] = src[i]


@njit(parallel=True, cache=True)
def _scale(alpha, x):
    for i in prange(x.shape[0]):
        x[i] = alpha * x[i]


@njit(parallel=True, cache=True)
def _axpy(alpha, x, y):
    for i in prange(x.shape[0]):
        y[i] = alpha * x[i] + y[i]


@njit(parallel=True, cache=True)
def _ewproduct(x, y):
    for i in prange(x.shape[0]):
        y[i] = x[i] * y[i]


@njit(parallel=True, cache=True)
def _block_dot(x, y, block_size):
    h = x.shape[0]
    n_blocks = (h + block_size - 1) // block_size
    partial = np.zeros(n_blocks, dtype=np.complex128)
    for b in prange(n_blocks):
        lo = b * block_size
        hi = min(lo + block_size, h)
        acc = 0j
        for i in range(lo, hi):
            acc += np.conj(x[i]) * y[i]
        partial[b] = acc
    total = 0j
    for b in range(n_blocks):
        total += partial[b]
    return total


@njit(parallel=True, cache=True)
def _block_sumsq(x, block_size):
    h = x.shape[0]
    n_blocks = (h + block_size - 1) // block_size
    partial = np.zeros(n_blocks, dtype=np.float64)
    for b in prange(n_blocks):
        lo = b * block_size
        hi = min(lo + block_size, h)
        acc = 0.0
        for i in range(lo, hi):
            acc += x[i].real * x[i].real + x[i].imag * x[i].imag
        partial[b] = acc
    total = 0.0
    for b in range(n_blocks):
        total += partial[b]
    return total


def _same_length(x, y):
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: {x.shape[0]} != {y.shape[0]}")


def _as_input(x, name):
    if isinstance(x, np.ndarray) and x.dtype == np.complex128 and x.ndim == 1:
        return np.ascontiguousarray(x)
    arr = np.ascontiguousarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


def assign(dst, src, counter=None):
    """Copy ``src`` into ``dst``."""
    check_out_vector(dst, "dst")
    src = _as_input(src, "src")
    _same_length(dst, src)
    _assign(dst, src)
    if counter is not None:
        counter.add("assign", dst.shape[0])


def scale(alpha, x, counter=None):
    """``x <- alpha * x``."""
    check_out_vector(x, "x")
    _scale(complex(alpha), x)
    if counter is not None:
        counter.add("scale", x.shape[0])


def axpy(alpha, x, y, counter=None):
    """``y <- alpha * x + y``."""
    check_out_vector(y, "y")
    x = _as_input(x, "x")
    _same_length(x, y)
    _axpy(complex(alpha), x, y)
    if counter is not None:
        counter.add("axpy", y.shape[0])


def ewproduct(x, y, counter=None):
    """Element-wise product in place, ``y[i] <- x[i] * y[i]``."""
    check_out_vector(y, "y")
    x = _as_input(x, "x")
    _same_length(x, y)
    _ewproduct(x, y)
    if counter is not None:
        counter.add("ewproduct", y.shape[0])


def dot(x, y, plan=DEFAULT_PLAN, counter=None):
    """Inner product ``sum(conj(x[i]) * y[i])`` with the blockwise reduction.

    The first argument is conjugated, so ``dot(x, x)`` is real and
    non-negative up to rounding.
    """
    x = _as_input(x, "x")
    y = _as_input(y, "y")
    _same_length(x, y)
    result = complex(_block_dot(x, y, int(plan.block_size)))
    if counter is not None:
        counter.add("dot", x.shape[0])
    return result


def norm2(x, plan=DEFAULT_PLAN, counter=None):
    """Euclidean norm, reduced blockwise like :func:`dot`."""
    x = _as_input(x, "x")
    result = math.sqrt(_block_sumsq(x, int(plan.block_size)))
    if counter is not None:
        counter.add("norm", x.shape[0])
    return result


def dot_sequential(x, y):
    """Reference dot: one running sum in index order, no blocking.

    ``cumsum`` is a strict left-to-right scan, unlike ``sum`` which adds
    pairwise.
    """
    terms = np.conj(np.asarray(x, dtype=np.complex128)) * np.asarray(y, dtype=np.complex128)
    return complex(np.cumsum(terms)[-1]) if terms.size else 0j


def norm2_sequential(x):
    x = np.asarray(x, dtype=np.complex128)
    terms = x.real * x.real + x.imag * x.imag
    return math.sqrt(np.cumsum(terms)[-1]) if terms.size else 0.0
