"""Independent reference computations for the fast Galerkin paths.

:func:`dense_rhs` re-evaluates every projection of the Galerkin right-hand
side by Richardson-extrapolated trapezoid sums on a refined uniform grid, with the basis
functions evaluated directly from ``sin``/``cos`` rather than through the
cached matrices of the fast path.  :func:`linearized_prediction` gives the
closed-form mode dynamics around the equilibrium, and
:func:`twin_run_divergence` measures how far two nearby trajectories drift
apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import expm

from .galerkin import GalerkinState, assemble_rhs, get_system, initial_state, run
from .model import ModelParams, stationary_xi

__all__ = [
    "dense_rhs",
    "aliasing_residual",
    "LinearizedPrediction",
    "linearized_prediction",
    "TwinRunResult",
    "twin_run_divergence",
    "strain_sup",
    "l2_distance",
]


RICHARDSON_LEVELS = 4


def _integrate(values, dx, method):
    """Composite trapezoid, optionally Richardson-extrapolated over the finest levels.

    Only the ``RICHARDSON_LEVELS`` finest nested grids enter the
    extrapolation; a full Romberg table would also mix in very coarse grids
    on which periodic integrands are no longer integrated exactly.
    """
    if method == "trapezoid":
        return trapezoid(values, dx=dx, axis=-1)
    if method != "richardson":
        raise ValueError(f"unknown quadrature method {method!r}")
    table = [trapezoid(values[..., :: 2**j], dx=dx * 2**j, axis=-1) for j in range(RICHARDSON_LEVELS)]
    for level in range(1, RICHARDSON_LEVELS):
        f = 4.0**level
        table = [(f * table[j] - table[j + 1]) / (f - 1.0) for j in range(len(table) - 1)]
    return table[0]


def dense_rhs(state: GalerkinState, refinement: int = 8, method: str = "richardson"):
    """Reference ``(dalpha, dgtilde, dpi)`` by high-resolution quadrature.

    The grid has ``2**m + 1`` points with ``2**m >= refinement * (M - 1)``.
    The truncation operator is applied as defined, ignoring any mutation
    carried by ``state``.

    Parameters
    ----------
    refinement : int
        Grid refinement over the fast path's node count; at least 4.
    method : {"richardson", "trapezoid"}
        ``"trapezoid"`` skips the extrapolation (second order); it exists to
        check convergence rates.
    """
    if refinement < 4:
        raise ValueError("refinement must be at least 4")
    p = state.params
    m = math.ceil(math.log2(refinement * (p.M - 1)))
    n = 2**m
    x = np.linspace(0.0, 1.0, n + 1)
    dx = 1.0 / n
    k = np.arange(1, p.N + 1)[:, None]
    sin_kx = np.sqrt(2.0) * np.sin(np.pi * k * x)
    cos_kx = np.sqrt(2.0) * np.cos(np.pi * k * x)

    pi = state.pi
    dpi = (p.a * pi ** (-p.gamma) - p.P) / p.mu
    ddpi = -p.gamma * p.a * pi ** (-p.gamma - 1.0) * dpi / p.mu

    xi = pi + state.gtilde @ sin_kx
    get_system(p).check_xi(xi, state.t)
    excess = p.a * xi ** (-p.gamma) - p.P
    dw = -np.pi * k * sin_kx
    b = _integrate(excess * dw, dx, method)
    c = _integrate(x * cos_kx, dx, method)
    visc = np.where(k[:, 0] > p.R, p.mu * np.pi**2 * k[:, 0] ** 2, 0.0)
    dalpha = -ddpi * c + b - visc * state.alpha

    # xi_t = v_x, projected onto s_k after removing the boundary motion
    v_x = dpi + state.alpha @ (-np.pi * k * sin_kx)
    dgtilde = _integrate((v_x - dpi) * sin_kx, dx, method)
    return dalpha, dgtilde, dpi


def aliasing_residual(state: GalerkinState, refinement: int = 8) -> float:
    """Largest gap between the fast velocity right-hand side and :func:`dense_rhs`."""
    fast, _, _ = assemble_rhs(state)
    ref, _, _ = dense_rhs(state, refinement)
    return float(np.max(np.abs(fast.coeffs - ref)))


@dataclass(frozen=True)
class LinearizedPrediction:
    """Small-amplitude dynamics of mode ``k`` around the equilibrium.

    ``gt'' + delta gt' + omega^2 gt = 0``: ``omega`` is the undamped
    frequency, ``delta`` the energy decay rate (amplitudes decay at
    ``delta / 2``).
    """

    k: int
    omega: float
    delta: float
    stiffness: float

    @property
    def amplitude_decay_rate(self) -> float:
        return 0.5 * self.delta

    @property
    def damped_frequency(self) -> float:
        disc = self.omega**2 - 0.25 * self.delta**2
        return math.sqrt(disc) if disc > 0 else 0.0

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    def matrix(self) -> np.ndarray:
        """Generator of ``(alpha_k, gt_k)``."""
        return np.array([[-self.delta, self.stiffness * np.pi * self.k], [-np.pi * self.k, 0.0]])

    def evolve(self, alpha0: float, gtilde0: float, t) -> np.ndarray:
        """Exact linear solution ``[(alpha_k, gt_k)]`` at the times ``t``."""
        A = self.matrix()
        y0 = np.array([alpha0, gtilde0])
        return np.array([expm(A * ti) @ y0 for ti in np.atleast_1d(t)])


def linearized_prediction(k: int, params: ModelParams) -> LinearizedPrediction:
    """Closed-form frequency and damping of mode ``k``."""
    if k < 1:
        raise ValueError("mode index must be >= 1")
    xs = stationary_xi(params)
    stiff = params.a * params.gamma * xs ** (-params.gamma - 1.0)
    omega = np.pi * k * math.sqrt(stiff)
    delta = params.mu * (np.pi * k) ** 2 if k > params.R else 0.0
    return LinearizedPrediction(int(k), float(omega), float(delta), float(stiff))


def l2_distance(a: GalerkinState, b: GalerkinState) -> tuple[float, float]:
    """L2 norms of the velocity and specific-volume differences (Parseval)."""
    system = get_system(a.params)
    dpt = a.pi_t - b.pi_t
    da = a.alpha - b.alpha
    dpi = a.pi - b.pi
    dg = a.gtilde - b.gtilde
    w2 = dpt * dpt / 12.0 + 2.0 * dpt * float(np.dot(system.c, da)) + float(np.dot(da, da))
    p2 = dpi * dpi + 2.0 * dpi * float(np.dot(system.sigma, dg)) + float(np.dot(dg, dg))
    return math.sqrt(max(w2, 0.0)), math.sqrt(max(p2, 0.0))


def strain_sup(state: GalerkinState, M: int | None = None) -> float:
    """``max |xi_t| = max |v_x|`` on the uniform grid."""
    from .spectral import grid_sine_matrix

    M = M or state.params.M
    k = np.arange(1, state.params.N + 1)
    vx = state.pi_t + grid_sine_matrix(M, state.params.N) @ (-np.pi * k * state.alpha)
    return float(np.max(np.abs(vx)))


@dataclass
class TwinRunResult:
    times: np.ndarray
    omega: np.ndarray
    psi: np.ndarray
    K: float
    runs: tuple

    @property
    def distance(self) -> np.ndarray:
        return np.hypot(self.omega, self.psi)

    @property
    def max_distance(self) -> float:
        return float(np.max(self.distance))


def growth_factor(runs, params: ModelParams) -> float:
    """Gronwall factor bounding the growth of the difference of two solutions.

    With ``q`` ranging over the pressure stiffness ``a gamma xi^(-gamma-1)``
    on the observed range of ``xi``, the weighted norm
    ``||omega||^2 + q ||psi||^2`` grows at most like
    ``exp(int C ||xi_t||_inf / q_min)`` with ``C = a gamma (gamma+1) xi_-^(-gamma-2)``;
    converting back to the plain L2 norm costs ``max(1, q_max) / min(1, q_min)``.
    """
    p = params
    xi_plus = max(float(np.max(tr.column("xi_max"))) for tr in runs)
    xi_minus = min(float(np.min(tr.column("xi_min"))) for tr in runs)
    q_min = p.a * p.gamma * xi_plus ** (-p.gamma - 1.0)
    q_max = p.a * p.gamma * xi_minus ** (-p.gamma - 1.0)
    C = p.a * p.gamma * (p.gamma + 1.0) * xi_minus ** (-p.gamma - 2.0)
    times = runs[0].times
    strain = np.max([[strain_sup(s) for s in tr.states] for tr in runs], axis=0)
    integral = float(trapezoid(strain, times)) if len(times) > 1 else 0.0
    return math.sqrt(max(1.0, q_max) / min(1.0, q_min) * math.exp(C * integral / q_min))


def twin_run_divergence(init_a, init_b, params: ModelParams, t_end: float, dt: float | None = None, n_out: int = 201):
    """Run two trajectories with identical fixed-step numerics and compare them.

    Returns a :class:`TwinRunResult` with the velocity (``omega``) and
    specific volume (``psi``) L2 distances at every output time and the
    growth factor ``K(t_end)``.
    """
    sa = init_a if isinstance(init_a, GalerkinState) else initial_state(init_a, params)
    sb = init_b if isinstance(init_b, GalerkinState) else initial_state(init_b, params)
    if dt is None:
        system = get_system(params)
        dt = 0.5 * min(system.stable_step_estimate(sa), system.stable_step_estimate(sb))
        dt = t_end / math.ceil(t_end / dt)
    times = np.linspace(0.0, t_end, n_out)
    ta = run(sa, params, t_end, output_times=times, dt=dt)
    tb = run(sb, params, t_end, output_times=times, dt=dt)
    dist = np.array([l2_distance(a, b) for a, b in zip(ta.states, tb.states)])
    K = growth_factor((ta, tb), params)
    return TwinRunResult(ta.times, dist[:, 0], dist[:, 1], K, (ta, tb))
