"""Finite-difference Helmholtz systems on structured grids.

Discretises ``-laplace(u) - k^2 (1 + i*eta) u = g`` on the cube
``[0, L]^dim`` with homogeneous Dirichlet boundaries, keeping interior nodes
only. Nodes are numbered lexicographically with the x index fastest. The
right-hand side is a discrete point source at the centre node.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import csr_from_coo

__all__ = [
    "HelmholtzSpec",
    "analytic_eigenvalues",
    "frequency_for_ppw",
    "generate",
    "load_spec",
    "parse_spec",
    "point_source",
    "stencil_nnz",
]

MIN_POINTS_PER_WAVELENGTH = 10


@dataclass(frozen=True)
class HelmholtzSpec:
    dim: int = 2
    n_per_axis: int = 50
    domain_length: float = 1.0
    frequency: float = 0.0
    velocity: float = 340.0
    absorption: float = 0.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if int(self.n_per_axis) < 1:
            raise ValueError(f"n_per_axis must be >= 1, got {self.n_per_axis}")
        if not self.domain_length > 0:
            raise ValueError(f"domain_length must be > 0, got {self.domain_length}")
        if self.frequency < 0:
            raise ValueError(f"frequency must be >= 0, got {self.frequency}")
        if not self.velocity > 0:
            raise ValueError(f"velocity must be > 0, got {self.velocity}")
        if self.absorption < 0:
            raise ValueError(f"absorption must be >= 0, got {self.absorption}")

    @property
    def wavenumber(self):
        return 2.0 * math.pi * self.frequency / self.velocity

    @property
    def mesh_size(self):
        return self.domain_length / (self.n_per_axis + 1)

    @property
    def n_unknowns(self):
        return self.n_per_axis**self.dim

    @property
    def points_per_wavelength(self):
        k = self.wavenumber
        return math.inf if k == 0 else (2.0 * math.pi / k) / self.mesh_size

    @property
    def label(self):
        return f"helmholtz{self.dim}d-n{self.n_per_axis}-f{self.frequency:g}"


def frequency_for_ppw(dim, n_per_axis, ppw, domain_length=1.0, velocity=340.0):
    """Frequency giving ``ppw`` grid points per wavelength."""
    h = domain_length / (n_per_axis + 1)
    return velocity / (ppw * h)


def stencil_nnz(dim, n):
    """Stored entries of the (2*dim+1)-point stencil on an n^dim interior grid."""
    return (2 * dim + 1) * n**dim - 2 * dim * n ** (dim - 1)


def point_source(n_unknowns, index=None, value=1.0):
    """Vector that is ``value`` at ``index`` (default: the middle row) and 0 elsewhere."""
    b = np.zeros(n_unknowns, dtype=np.complex128)
    b[n_unknowns // 2 if index is None else index] = value
    return b


def generate(spec):
    """Assemble ``(A, b)`` for ``spec``.

    ``A`` is complex symmetric; it is non-Hermitian when ``absorption > 0``.
    """
    n, dim, h = int(spec.n_per_axis), spec.dim, spec.mesh_size
    if spec.points_per_wavelength < MIN_POINTS_PER_WAVELENGTH:
        warnings.warn(
            f"{spec.points_per_wavelength:.2f} points per wavelength "
            f"(< {MIN_POINTS_PER_WAVELENGTH}); expect pollution error",
            RuntimeWarning,
            stacklevel=2,
        )
    N = n**dim
    inv_h2 = 1.0 / (h * h)
    shift = spec.wavenumber**2 * complex(1.0, spec.absorption)

    idx = np.arange(N, dtype=np.int64)
    rows = [idx]
    cols = [idx]
    vals = [np.full(N, 2 * dim * inv_h2 - shift, dtype=np.complex128)]
    for axis in range(dim):
        stride = n**axis
        coord = (idx // stride) % n
        has_next = idx[coord < n - 1]
        for a, c in ((has_next, has_next + stride), (has_next + stride, has_next)):
            rows.append(a)
            cols.append(c)
            vals.append(np.full(a.size, -inv_h2, dtype=np.complex128))
    A = csr_from_coo(N, N, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))

    centre = sum((n // 2) * n**axis for axis in range(dim))
    b = point_source(N, centre, 1.0 / h**dim)
    return A, b


def analytic_eigenvalues(spec):
    """Exact eigenvalues of the generated operator, ascending.

    Sum over axes of ``(2 - 2 cos(m pi / (n + 1))) / h^2`` minus ``k^2``.
    """
    if spec.absorption != 0:
        raise ValueError("closed-form eigenvalues require absorption == 0")
    n, h = int(spec.n_per_axis), spec.mesh_size
    axis = (2.0 - 2.0 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1))) / (h * h)
    total = np.zeros(1)
    for _ in range(spec.dim):
        total = np.add.outer(total, axis).ravel()
    return np.sort(total - spec.wavenumber**2)


_KEYS = {
    "dim": ("dim", int),
    "n": ("n_per_axis", int),
    "n_per_axis": ("n_per_axis", int),
    "length": ("domain_length", float),
    "l": ("domain_length", float),
    "frequency": ("frequency", float),
    "f": ("frequency", float),
    "velocity": ("velocity", float),
    "c": ("velocity", float),
    "absorption": ("absorption", float),
    "eta": ("absorption", float),
}


def _from_pairs(pairs):
    kwargs = {}
    for key, raw in pairs:
        key = key.strip().lower()
        if key not in _KEYS:
            raise ValueError(f"unknown Helmholtz key {key!r}; valid keys: {', '.join(sorted(_KEYS))}")
        name, conv = _KEYS[key]
        try:
            kwargs[name] = conv(raw.strip())
        except ValueError:
            raise ValueError(f"bad value for {key}: {raw.strip()!r}") from None
    return HelmholtzSpec(**kwargs)


def parse_spec(text):
    """Parse ``"dim=3,n=20,f=500,c=340,eta=0"`` into a :class:`HelmholtzSpec`."""
    pairs = []
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item.strip()!r}")
        pairs.append(item.split("=", 1))
    return _from_pairs(pairs)


def load_spec(path):
    """Read a key-value file (``key = value`` per line, ``#`` comments)."""
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else (":" if ":" in line else None)
            if sep is None:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            pairs.append(line.split(sep, 1))
    return _from_pairs(pairs)

