"""Worker-thread configuration for the numba-backed kernels.

Numba fixes its thread-pool ceiling at import time from ``NUMBA_NUM_THREADS``
(defaulting to the core count). The determinism contract is tested with more
workers than a small machine has cores, so the ceiling is raised before numba
is first imported unless the user already set it.
"""

import os
import warnings
from contextlib import contextmanager

MIN_THREAD_CEILING = 8

os.environ.setdefault(
    "NUMBA_NUM_THREADS", str(max(MIN_THREAD_CEILING, os.cpu_count() or 1))
)

warnings.filterwarnings("ignore", message=r"The TBB threading layer requires")

import numba  # noqa: E402


def max_threads():
    """Upper bound accepted by :func:`set_num_threads`."""
    return numba.config.NUMBA_NUM_THREADS


def get_num_threads():
    return numba.get_num_threads()


def set_num_threads(n):
    """Set the number of workers used by kernels and SpMV on this thread."""
    n = int(n)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    if n > max_threads():
        raise ValueError(
            f"thread count {n} exceeds the pool size {max_threads()}; "
            "raise NUMBA_NUM_THREADS before importing zkrylov"
        )
    numba.set_num_threads(n)


@contextmanager
def num_threads(n):
    """Temporarily run kernels with ``n`` workers."""
    previous = get_num_threads()
    set_num_threads(n)
    try:
        yield
    finally:
        numba.set_num_threads(previous)
