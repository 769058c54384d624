"""Orthonormal Neumann cosine / Dirichlet sine bases on [0, 1].

Cosine basis: ``w_0 = 1``, ``w_k = sqrt(2) cos(pi k x)``.
Sine basis:   ``s_k = sqrt(2) sin(pi k x)``, ``k >= 1``.

Grid transforms use the closed uniform grid ``x_j = j/(M-1)`` with trapezoid
weights, which integrates trigonometric polynomials of degree below
``2(M-1)`` exactly.  Smooth functions that are not periodic-extendable (for
example anything with non-vanishing endpoint values in a sine projection)
only converge at second order under that rule, so projections of general
nonlinear functions go through Gauss-Legendre quadrature instead
(:func:`gauss_legendre`, :func:`project_function`).
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientResolution

SQRT2 = np.sqrt(2.0)

__all__ = [
    "Basis",
    "CoeffVector",
    "GridField",
    "uniform_grid",
    "trapezoid_weights",
    "gauss_legendre",
    "cosine_matrix",
    "sine_matrix",
    "grid_cosine_matrix",
    "grid_sine_matrix",
    "cosine_analyze",
    "sine_analyze",
    "synthesize",
    "project_T",
    "derivative_inner_products",
    "project_function",
    "differentiate",
]


class Basis(enum.Enum):
    COSINE = "cosine"
    SINE = "sine"


@dataclass
class CoeffVector:
    """Spectral coefficients ``coeffs[i]`` of mode ``k = kmin + i``."""

    basis: Basis
    coeffs: np.ndarray
    kmin: int | None = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.kmin is None:
            self.kmin = 0 if self.basis is Basis.COSINE else 1
        if self.basis is Basis.SINE and self.kmin < 1:
            raise ValueError("sine coefficients start at k=1")

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.kmin, self.kmin + len(self.coeffs))

    @property
    def N(self) -> int:
        return self.kmin + len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k - self.kmin]


@dataclass
class GridField:
    """Samples of a function on the closed uniform grid ``x_j = j/(M-1)``."""

    values: np.ndarray
    M: int = field(init=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) < 2:
            raise ValueError("GridField needs a 1-d array with at least 2 samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("GridField values must be finite")
        self.M = len(self.values)

    @classmethod
    def from_function(cls, func, M: int) -> "GridField":
        return cls(np.broadcast_to(func(uniform_grid(M)), (M,)))

    @property
    def x(self) -> np.ndarray:
        return uniform_grid(self.M)

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.M)


@functools.lru_cache(maxsize=64)
def _uniform_grid(M: int) -> np.ndarray:
    x = np.arange(M) / (M - 1)
    x.flags.writeable = False
    return x


def uniform_grid(M: int) -> np.ndarray:
    return _uniform_grid(int(M))


@functools.lru_cache(maxsize=64)
def _trapezoid_weights(M: int) -> np.ndarray:
    w = np.full(M, 1.0 / (M - 1))
    w[0] = w[-1] = 0.5 / (M - 1)
    w.flags.writeable = False
    return w


def trapezoid_weights(M: int) -> np.ndarray:
    return _trapezoid_weights(int(M))


@functools.lru_cache(maxsize=64)
def _gauss_legendre(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    nodes, weights = 0.5 * (t + 1.0), 0.5 * w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]``."""
    return _gauss_legendre(int(n))


def _sinpi_frac(num, den):
    """``sin(pi * num / den)`` for integers, exact at multiples of ``pi``."""
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    n = np.mod(num, 2 * den)
    sign = np.where(n >= den, -1.0, 1.0)
    n = np.where(n >= den, n - den, n)
    n = np.minimum(n, den - n)
    return sign * np.sin(np.pi * n / den)


def _cospi_frac(num, den):
    num = np.asarray(num, dtype=np.int64)
    return _sinpi_frac(den - 2 * np.mod(num, 2 * den), 2 * den)


def cosine_matrix(x, N: int, kmin: int = 0) -> np.ndarray:
    """Matrix ``B[j, i] = w_{kmin+i}(x_j)`` for ``i`` up to mode ``N``."""
    x = np.asarray(x, dtype=float)
    k = np.arange(kmin, N + 1)
    B = SQRT2 * np.cos(np.pi * np.outer(x, k))
    if kmin == 0:
        B[:, 0] = 1.0
    return B


def sine_matrix(x, N: int) -> np.ndarray:
    """Matrix ``B[j, i] = s_{i+1}(x_j)``."""
    x = np.asarray(x, dtype=float)
    k = np.arange(1, N + 1)
    return SQRT2 * np.sin(np.pi * np.outer(x, k))


@functools.lru_cache(maxsize=64)
def _grid_cosine_matrix(M: int, N: int, kmin: int) -> np.ndarray:
    j = np.arange(M)[:, None]
    k = np.arange(kmin, N + 1)[None, :]
    B = SQRT2 * _cospi_frac(j * k, M - 1)
    if kmin == 0:
        B[:, 0] = 1.0
    B.flags.writeable = False
    return B


def grid_cosine_matrix(M: int, N: int, kmin: int = 0) -> np.ndarray:
    """Cosine basis on the uniform grid, with endpoint values exactly ``+-sqrt(2)``."""
    return _grid_cosine_matrix(int(M), int(N), int(kmin))


@functools.lru_cache(maxsize=64)
def _grid_sine_matrix(M: int, N: int) -> np.ndarray:
    j = np.arange(M)[:, None]
    k = np.arange(1, N + 1)[None, :]
    B = SQRT2 * _sinpi_frac(j * k, M - 1)
    B.flags.writeable = False
    return B


def grid_sine_matrix(M: int, N: int) -> np.ndarray:
    """Sine basis on the uniform grid; vanishes exactly at ``x = 0`` and ``x = 1``."""
    return _grid_sine_matrix(int(M), int(N))


def _check_resolution(M: int, N: int):
    if M < 2 * N + 1:
        raise InsufficientResolution(f"grid of {M} points cannot resolve {N} modes (need M >= {2 * N + 1})")


def cosine_analyze(field: GridField, N: int) -> CoeffVector:
    """Cosine coefficients ``(f, w_k)``, ``k = 0..N``, by trapezoid quadrature."""
    _check_resolution(field.M, N)
    B = grid_cosine_matrix(field.M, N)
    return CoeffVector(Basis.COSINE, B.T @ (field.weights * field.values), kmin=0)


def sine_analyze(field: GridField, N: int) -> CoeffVector:
    """Sine coefficients ``(f, s_k)``, ``k = 1..N``, by trapezoid quadrature."""
    _check_resolution(field.M, N)
    B = grid_sine_matrix(field.M, N)
    return CoeffVector(Basis.SINE, B.T @ (field.weights * field.values), kmin=1)


def synthesize(coeffs: CoeffVector, M: int) -> GridField:
    """Evaluate the finite series on the uniform grid of ``M`` points."""
    if coeffs.basis is Basis.COSINE:
        B = grid_cosine_matrix(M, coeffs.N, coeffs.kmin)
    else:
        B = grid_sine_matrix(M, coeffs.N)[:, coeffs.kmin - 1 :]
    return GridField(B @ coeffs.coeffs)


def project_T(coeffs: CoeffVector, R: int) -> CoeffVector:
    """Zero every mode ``k <= R`` and keep ``k >= R+1``."""
    out = coeffs.coeffs.copy()
    out[coeffs.k <= R] = 0.0
    return CoeffVector(coeffs.basis, out, kmin=coeffs.kmin)


def derivative_inner_products(field: GridField, N: int) -> np.ndarray:
    """Pairings ``(f, w_k')`` for ``k = 1..N``.

    Uses ``w_k' = -pi k s_k``, so this is the sine transform scaled by ``-pi k``.
    """
    k = np.arange(1, N + 1)
    return -np.pi * k * sine_analyze(field, N).coeffs


def project_function(func, N: int, basis: Basis, n_quad: int | None = None) -> CoeffVector:
    """Project a vectorised callable with Gauss-Legendre quadrature."""
    n_quad = n_quad or max(8 * N + 64, 257)
    nodes, weights = gauss_legendre(n_quad)
    fx = np.broadcast_to(np.asarray(func(nodes), dtype=float), nodes.shape)
    if basis is Basis.COSINE:
        return CoeffVector(basis, cosine_matrix(nodes, N).T @ (weights * fx), kmin=0)
    return CoeffVector(basis, sine_matrix(nodes, N).T @ (weights * fx), kmin=1)


def differentiate(coeffs: CoeffVector) -> CoeffVector:
    """Exact derivative of a finite series.

    ``w_k' = -pi k s_k`` and ``s_k' = pi k w_k``; the constant mode drops out.
    """
    k = coeffs.k
    if coeffs.basis is Basis.COSINE:
        keep = k >= 1
        return CoeffVector(Basis.SINE, -np.pi * k[keep] * coeffs.coeffs[keep], kmin=max(coeffs.kmin, 1))
    return CoeffVector(Basis.COSINE, np.pi * k * coeffs.coeffs, kmin=coeffs.kmin)
