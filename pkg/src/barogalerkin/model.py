"""Physical parameters, constitutive laws and admissibility of initial data.

The pressure law is ``p(rho) = a * rho**gamma``.  In terms of the specific
volume ``xi = 1/rho`` this reads ``a * xi**(-gamma)``, and the potential
``G`` with ``G'(s) s**2 = p(s)`` is ``a * s**(gamma - 1) / (gamma - 1)``.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ConfigError, VacuumApproach
from .spectral import GridField, gauss_legendre

__all__ = [
    "ModelParams",
    "InitialData",
    "Violation",
    "pressure",
    "big_G",
    "stationary_xi",
    "validate_initial_data",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical and discretisation constants.

    Parameters
    ----------
    a : float
        Pressure coefficient.
    gamma : float
        Adiabatic exponent, must exceed 1.
    mu : float
        Viscosity.
    P : float
        External pressure (assumption A1 requires ``P > 0``).
    R : int
        Number of undamped velocity modes; modes ``k <= R`` carry no viscosity.
    N : int
        Galerkin truncation, ``N > R``.
    oversample : int
        Oversampling factor for the nonlinear pressure term.
    M : int, optional
        Quadrature/grid size. Defaults to ``oversample * N + 1``.
    xi_floor : float
        Specific volume below which the run is aborted as a vacuum approach.
    tol_ode : float
        Local error tolerance of the time integrators.
    """

    a: float = 1.0
    gamma: float = 5.0
    mu: float = 0.1
    P: float = 1.0
    R: int = 2
    N: int = 32
    oversample: int = 4
    M: int | None = None
    xi_floor: float = 1e-8
    tol_ode: float = 1e-10

    def __post_init__(self):
        if self.M is None:
            object.__setattr__(self, "M", int(self.oversample) * int(self.N) + 1)
        for name in ("R", "N", "oversample", "M"):
            value = getattr(self, name)
            if int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not self.P > 0:
            raise ConfigError(f"assumption A1 violated: external pressure P must be positive (P={self.P})")
        if not self.a > 0:
            raise ConfigError(f"pressure coefficient a must be positive (a={self.a})")
        if not self.gamma > 1:
            raise ConfigError(f"adiabatic exponent gamma must exceed 1 (gamma={self.gamma})")
        if not self.mu > 0:
            raise ConfigError(f"viscosity mu must be positive (mu={self.mu})")
        if self.R < 0:
            raise ConfigError(f"R must be non-negative (R={self.R})")
        if self.N <= self.R:
            raise ConfigError(f"need N > R so that damped modes exist (N={self.N}, R={self.R})")
        if self.oversample < 2:
            raise ConfigError(f"oversample must be at least 2 (oversample={self.oversample})")
        if self.M < self.oversample * self.N + 1 or self.M < 2 * self.N + 1:
            raise ConfigError(
                f"M={self.M} too small: need M >= oversample*N+1 = {self.oversample * self.N + 1}"
            )
        if not self.xi_floor > 0:
            raise ConfigError("xi_floor must be positive")
        if not self.tol_ode > 0:
            raise ConfigError("tol_ode must be positive")

    def replace(self, **changes) -> "ModelParams":
        """Copy with some fields changed; ``M`` is recomputed unless given."""
        if "M" not in changes and ("N" in changes or "oversample" in changes):
            changes["M"] = None
        return dataclasses.replace(self, **changes)

    @property
    def xi_star(self) -> float:
        return stationary_xi(self)


def pressure(xi, params: ModelParams):
    """Pressure ``a * xi**(-gamma)`` as a function of specific volume."""
    xi = np.asarray(xi, dtype=float)
    xmin = float(np.min(xi))
    if not xmin >= params.xi_floor:
        raise VacuumApproach(xmin, params.xi_floor)
    out = params.a * xi ** (-params.gamma)
    return float(out) if out.ndim == 0 else out


def big_G(s, params: ModelParams):
    """Internal-energy potential ``G(s) = a s**(gamma-1) / (gamma-1)`` at density ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("G is defined for positive densities only")
    out = params.a * s ** (params.gamma - 1.0) / (params.gamma - 1.0)
    return float(out) if out.ndim == 0 else out


def stationary_xi(params: ModelParams) -> float:
    """Equilibrium specific volume ``(a/P)**(1/gamma)`` where the pressure equals ``P``."""
    return (params.a / params.P) ** (1.0 / params.gamma)


Profile = Union[Callable[[np.ndarray], np.ndarray], GridField]


@dataclass
class InitialData:
    """Initial velocity and specific volume.

    Each profile is either a vectorised callable of ``x`` on ``[0, 1]`` or a
    :class:`GridField` sampled on the uniform closed grid.  Callables are
    projected with Gauss-Legendre quadrature, grid samples with the trapezoid
    rule.
    """

    v0: Profile
    xi0: Profile
    name: str = "custom"

    def sample(self, which: str, x: np.ndarray) -> np.ndarray:
        prof = getattr(self, which)
        if isinstance(prof, GridField):
            if prof.M != len(x) or not np.allclose(prof.x, x):
                return np.interp(x, prof.x, prof.values)
            return prof.values
        return np.broadcast_to(np.asarray(prof(x), dtype=float), np.shape(x)).copy()


@dataclass(frozen=True)
class Violation:
    assumption: str
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.assumption}: {self.message}"


def _integral(init: InitialData, which: str, func, n_quad: int) -> float:
    prof = getattr(init, which)
    if isinstance(prof, GridField):
        return float(np.sum(prof.weights * func(prof.values)))
    nodes, weights = gauss_legendre(n_quad)
    return float(np.sum(weights * func(init.sample(which, nodes))))


def validate_initial_data(init: InitialData, params: ModelParams, tol: float = 1e-8) -> list[Violation]:
    """Check assumption A2 for ``init``.

    Returns a list of :class:`Violation`; the unit-mass condition is reported
    with ``severity="warning"`` because mass normalisation is a convention.
    """
    out: list[Violation] = []
    n_quad = max(params.M, 257)
    mean_v = _integral(init, "v0", lambda v: v, n_quad)
    if abs(mean_v) > tol:
        out.append(Violation("A2 mean velocity", f"integral of v0 is {mean_v:.3e}, expected 0"))

    probe = np.linspace(0.0, 1.0, max(params.M, 257))
    xi_probe = init.sample("xi0", probe)
    if isinstance(init.xi0, GridField):
        xi_probe = init.xi0.values
    if not np.all(np.isfinite(xi_probe)) or np.min(xi_probe) <= 0:
        out.append(Violation("A2 positivity", f"min xi0 = {np.min(xi_probe):.3e} is not positive"))
        return out
    end_gap = abs(float(xi_probe[0]) - float(xi_probe[-1]))
    if end_gap > tol * max(1.0, abs(float(xi_probe[0]))):
        out.append(Violation("A2 endpoint equality", f"xi0(0) - xi0(1) = {end_gap:.3e}"))

    mass = _integral(init, "xi0", lambda xi: 1.0 / xi, n_quad)
    if abs(mass - 1.0) > tol:
        out.append(
            Violation("A2 unit mass", f"integral of 1/xi0 is {mass:.12g}, expected 1", severity="warning")
        )
    return out


def check_initial_data(init: InitialData, params: ModelParams, tol: float = 1e-8) -> None:
    """Raise :class:`InvalidInitialData` on hard violations, warn on the rest."""
    from .errors import InvalidInitialData

    violations = validate_initial_data(init, params, tol)
    hard = [v for v in violations if v.severity == "error"]
    for v in violations:
        if v.severity != "error":
            warnings.warn(str(v), stacklevel=3)
    if hard:
        raise InvalidInitialData(hard)
