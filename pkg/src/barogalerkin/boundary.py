"""Free-boundary ODE for the common endpoint value of the specific volume.

At ``x = 0`` and ``x = 1`` the boundary condition reduces to the scalar ODE
``mu * pi_t = a * pi**(-gamma) - P``.  Its solution relaxes monotonically to
``xi* = (a/P)**(1/gamma)``, so ``pi(t)`` stays between ``pi(0)`` and ``xi*``.
The relaxation rate ``gamma * a * xi***(-gamma-1) / mu`` grows without bound
as ``mu -> 0``; the integrator below therefore sub-steps with its own
embedded Dormand-Prince 5(4) controller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StiffnessFailure, VacuumApproach
from .model import ModelParams, stationary_xi

__all__ = [
    "BoundaryState",
    "boundary_rhs",
    "pi_second_derivative",
    "relaxation_rate",
    "advance_pi",
    "pi_bounds",
]


@dataclass(frozen=True)
class BoundaryState:
    pi: float
    t: float = 0.0
    # suggested next sub-step, carried between calls
    h_hint: float | None = None
    substeps: int = 0


def boundary_rhs(pi: float, params: ModelParams) -> float:
    """Time derivative ``pi_t = (a pi**-gamma - P) / mu``."""
    if not pi >= params.xi_floor:
        raise VacuumApproach(pi, params.xi_floor)
    return (params.a * pi ** (-params.gamma) - params.P) / params.mu


def pi_second_derivative(pi: float, params: ModelParams) -> float:
    """``pi_tt`` obtained by differentiating the boundary ODE along its flow."""
    pi_t = boundary_rhs(pi, params)
    return -params.gamma * params.a * pi ** (-params.gamma - 1.0) * pi_t / params.mu


def relaxation_rate(params: ModelParams) -> float:
    """Linear relaxation rate of the boundary ODE at its equilibrium."""
    xs = stationary_xi(params)
    return params.gamma * params.a * xs ** (-params.gamma - 1.0) / params.mu


def pi_bounds(pi0: float, params: ModelParams) -> tuple[float, float]:
    """Bracket ``(min(pi0, xi*), max(pi0, xi*))`` that contains the whole orbit."""
    if not pi0 > 0:
        raise ValueError("pi0 must be positive")
    xs = stationary_xi(params)
    return (min(pi0, xs), max(pi0, xs))


# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = _A[6] + (0.0,)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))

_MAX_SUBSTEPS = 2_000_000


def _dp_step(pi, h, params):
    k = []
    for i in range(7):
        y = pi + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(boundary_rhs(y, params))
    new = pi + h * sum(b * kj for b, kj in zip(_B5, k))
    err = h * sum(e * kj for e, kj in zip(_E, k))
    return new, err


def advance_pi(state: BoundaryState, dt: float, params: ModelParams) -> BoundaryState:
    """Advance the boundary ODE by ``dt`` with adaptive sub-steps.

    Every sub-step keeps its local error below ``tol_ode * (1 + |pi|)`` and
    may not cross the equilibrium ``xi*`` by more than that tolerance; small
    crossings are clamped onto ``xi*``, larger ones are rejected and retried.

    Raises
    ------
    StiffnessFailure
        If the sub-step size collapses or the sub-step budget is exhausted.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    xs = stationary_xi(params)
    pi, t = float(state.pi), float(state.t)
    t_end = t + dt
    rate0 = boundary_rhs(pi, params)
    if rate0 == 0.0 or pi == xs:
        return BoundaryState(pi, t_end, state.h_hint, state.substeps)

    lam = params.gamma * params.a * min(pi, xs) ** (-params.gamma - 1.0) / params.mu
    h = state.h_hint if state.h_hint else min(dt, 0.5 / lam)
    n = state.substeps
    tol = params.tol_ode
    h_min = 1e-14 * max(1.0, abs(t_end))
    while t < t_end:
        h = min(h, t_end - t)
        last = h >= t_end - t
        try:
            new, err = _dp_step(pi, h, params)
        except VacuumApproach:
            new, err = np.nan, np.inf
        scale = tol * (1.0 + abs(pi))
        ratio = abs(err) / scale if np.isfinite(err) else np.inf
        crossed = (new - xs) * (pi - xs) < 0
        if crossed and abs(new - xs) <= scale:
            new, crossed = xs, False
        if ratio <= 1.0 and not crossed and np.isfinite(new):
            pi = new
            t = t_end if last else t + h
            n += 1
            fac = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** (-0.2)))
            if not last:
                h = h * fac
            else:
                h = max(h, h * fac) if fac > 1 else h * fac
            if pi == xs:
                t = t_end
        else:
            fac = 0.5 if not np.isfinite(ratio) or crossed else max(0.1, 0.9 * ratio ** (-0.2))
            h *= fac
            if h < h_min:
                raise StiffnessFailure(f"boundary sub-step underflow at t={t:.6g} (h={h:.3e})")
        if n - state.substeps > _MAX_SUBSTEPS:
            raise StiffnessFailure(f"boundary ODE needed more than {_MAX_SUBSTEPS} sub-steps")
    return BoundaryState(pi, t_end, h, n)
