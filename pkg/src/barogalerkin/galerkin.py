"""Galerkin system for the Lagrangian free-boundary problem.

The approximate solution is

    v_N(x, t)  = pi_t (x - 1/2) + sum_k alpha_k(t) w_k(x)
    xi_N(x, t) = pi(t)          + sum_k gt_k(t)    s_k(x)

with ``k = 1..N``.  ``gt_k`` are orthonormal sine coefficients; they relate
to an expansion of ``xi_N - pi`` in the derivatives ``w_k'`` through
``gt_k = -pi k beta_k``.  Testing the momentum equation against ``w_k`` and
using ``xi_t = v_x`` gives

    alpha_k' = -pi_tt c_k + b_k - [k > R] mu pi^2 k^2 alpha_k
    gt_k'    = -pi k alpha_k

where ``c_k = (x, w_k)`` and ``b_k = (a xi_N^-gamma - P, w_k')``.  The
boundary value ``pi`` follows its own ODE (:mod:`barogalerkin.boundary`).

Time stepping is an integrating-factor (Lawson) form of the classical
four-stage Runge-Kutta method: the diagonal viscous decay is integrated
exactly and the remaining terms explicitly.  A fifth evaluation at the new
point yields an embedded third-order solution for step-size control.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .boundary import BoundaryState, advance_pi, boundary_rhs, pi_second_derivative
from .errors import StepSizeUnderflow, VacuumApproach
from .model import InitialData, ModelParams, check_initial_data
from .spectral import (
    SQRT2,
    Basis,
    CoeffVector,
    GridField,
    cosine_analyze,
    cosine_matrix,
    gauss_legendre,
    grid_cosine_matrix,
    grid_sine_matrix,
    project_function,
    sine_analyze,
    sine_matrix,
)

__all__ = [
    "GalerkinState",
    "GalerkinSystem",
    "Trajectory",
    "get_system",
    "reconstruct_v",
    "reconstruct_xi",
    "initial_state",
    "assemble_rhs",
    "step",
    "run",
    "MUTATIONS",
]

# seeded defects used to check that the verification suite has teeth
MUTATIONS = frozenset({"flip_pressure", "no_truncation"})

# auxiliary integrals carried along with the coefficients
_AUX = ("dissipation_cum", "chi_cum", "boundary_work_cum")


@dataclass
class GalerkinState:
    """Coefficients of the approximate solution at time ``t``.

    ``dissipation_cum``, ``chi_cum`` and ``boundary_work_cum`` are the time
    integrals of the viscous dissipation rate, of the forcing functional
    ``chi`` and of the boundary work, integrated by the same scheme as the
    coefficients.
    """

    alpha: np.ndarray
    gtilde: np.ndarray
    pi: float
    t: float
    params: ModelParams
    dissipation_cum: float = 0.0
    chi_cum: float = 0.0
    boundary_work_cum: float = 0.0
    mutations: frozenset = frozenset()
    pi_hint: float | None = field(default=None, repr=False)
    pi_substeps: int = field(default=0, repr=False)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.gtilde = np.asarray(self.gtilde, dtype=float)
        n = self.params.N
        if self.alpha.shape != (n,) or self.gtilde.shape != (n,):
            raise ValueError(f"expected {n} velocity and {n} volume coefficients")

    @property
    def pi_t(self) -> float:
        return boundary_rhs(self.pi, self.params)

    @property
    def pi_tt(self) -> float:
        return pi_second_derivative(self.pi, self.params)

    @property
    def boundary(self) -> BoundaryState:
        return BoundaryState(self.pi, self.t, self.pi_hint, self.pi_substeps)

    @property
    def alpha_coeffs(self) -> CoeffVector:
        return CoeffVector(Basis.COSINE, self.alpha, kmin=1)

    @property
    def gtilde_coeffs(self) -> CoeffVector:
        return CoeffVector(Basis.SINE, self.gtilde, kmin=1)

    def copy(self) -> "GalerkinState":
        return replace(self, alpha=self.alpha.copy(), gtilde=self.gtilde.copy())


class GalerkinSystem:
    """Precomputed operators for one parameter set.

    The pressure pairing is evaluated at ``params.M`` Gauss-Legendre nodes.
    """

    def __init__(self, params: ModelParams, mutations=frozenset()):
        mutations = frozenset(mutations)
        unknown = mutations - MUTATIONS
        if unknown:
            raise ValueError(f"unknown mutations {sorted(unknown)}")
        self.params = params
        self.mutations = mutations
        N = params.N
        self.k = np.arange(1, N + 1)
        self.nodes, self.weights = gauss_legendre(params.M)
        self.S = sine_matrix(self.nodes, N)
        self.C = cosine_matrix(self.nodes, N, kmin=1)
        # weighted transposes for the projections
        self.SWt = (self.S * self.weights[:, None]).T
        sign = (-1.0) ** self.k
        self.c = SQRT2 * (sign - 1.0) / (np.pi**2 * self.k**2)
        self.sigma = SQRT2 * (1.0 - sign) / (np.pi * self.k)
        c_quad = self.C.T @ (self.weights * self.nodes)
        if np.max(np.abs(c_quad - self.c)) > 1e-10:
            raise RuntimeError("closed-form (x, w_k) disagrees with quadrature; basis misconfigured")
        damped = np.ones(N, bool) if "no_truncation" in mutations else self.k > params.R
        self.damped = damped
        self.delta = np.where(damped, params.mu * np.pi**2 * self.k**2, 0.0)
        self.low = self.k <= params.R
        self.pressure_sign = -1.0 if "flip_pressure" in mutations else 1.0
        self.n_state = 2 * N + len(_AUX)
        self.linear = np.concatenate([-self.delta, np.zeros(N + len(_AUX))])

    # ----------------------------------------------------------------- fields
    def xi_nodes(self, gtilde, pi):
        return pi + self.S @ gtilde

    def check_xi(self, xi, t=None):
        m = float(np.min(xi))
        if not m >= self.params.xi_floor:
            raise VacuumApproach(m, self.params.xi_floor, t)

    def pressure_pairing(self, gtilde, pi, t=None):
        """``b_k = (a xi^-gamma - P, w_k')`` and the pressure excess at the nodes."""
        p = self.params
        xi = self.xi_nodes(gtilde, pi)
        self.check_xi(xi, t)
        excess = p.a * xi ** (-p.gamma) - p.P
        b = -np.pi * self.k * (self.SWt @ excess)
        return self.pressure_sign * b, excess

    def forcing_norm(self, alpha):
        """L2 norm of ``mu (1 - T) v_xx``."""
        k = self.k[self.low]
        return self.params.mu * math.sqrt(float(np.sum((np.pi * k) ** 4 * alpha[self.low] ** 2)))

    def nonlinear(self, Y, pi, pi_t, pi_tt, t=None):
        """Right-hand side without the diagonal viscous term."""
        p = self.params
        N = p.N
        alpha, gtilde = Y[:N], Y[N : 2 * N]
        b, excess = self.pressure_pairing(gtilde, pi, t)
        out = np.empty(self.n_state)
        dalpha = -pi_tt * self.c + b
        out[:N] = dalpha
        out[N : 2 * N] = -np.pi * self.k * alpha
        out[2 * N] = float(np.dot(self.delta, alpha * alpha))
        fn = self.forcing_norm(alpha)
        out[2 * N + 1] = 5.0 / p.mu * fn * fn + 0.25 * pi_t * pi_t
        if pi_t != 0.0:
            full = dalpha - self.delta * alpha
            xv = pi_tt / 12.0 + float(np.dot(self.c, full))
            out[2 * N + 2] = pi_t * (xv - float(np.dot(self.weights, excess)))
        else:
            out[2 * N + 2] = 0.0
        return out

    def full_rhs(self, alpha, gtilde, pi):
        pi_t = boundary_rhs(pi, self.params)
        pi_tt = pi_second_derivative(pi, self.params)
        b, _ = self.pressure_pairing(gtilde, pi)
        dalpha = -pi_tt * self.c + b - self.delta * alpha
        dgtilde = -np.pi * self.k * alpha
        return dalpha, dgtilde, pi_t

    # ------------------------------------------------------------ packing
    def pack(self, state: GalerkinState) -> np.ndarray:
        return np.concatenate([state.alpha, state.gtilde, [getattr(state, a) for a in _AUX]])

    def unpack(self, Y, pi, t, template: GalerkinState, bstate: BoundaryState) -> GalerkinState:
        N = self.params.N
        aux = {name: float(Y[2 * N + i]) for i, name in enumerate(_AUX)}
        return GalerkinState(
            Y[:N].copy(),
            Y[N : 2 * N].copy(),
            pi,
            t,
            self.params,
            mutations=self.mutations,
            pi_hint=bstate.h_hint,
            pi_substeps=bstate.substeps,
            **aux,
        )

    # ------------------------------------------------------------ stepping
    def _boundary_stage(self, bstate, h):
        p = self.params
        return advance_pi(bstate, h, p) if h > 0 else bstate

    def lawson_step(self, Y, bstate: BoundaryState, h: float, embedded: bool = True):
        """One integrating-factor RK4 step.

        Returns ``(Y_new, err, boundary_state_new)``; ``err`` is the
        difference between the fourth- and embedded third-order solutions
        (``None`` when ``embedded`` is false).
        """
        p = self.params
        t = bstate.t
        b_half = self._boundary_stage(bstate, 0.5 * h)
        b_full = self._boundary_stage(b_half, 0.5 * h)

        def derivs(bs):
            pi = bs.pi
            return pi, boundary_rhs(pi, p), pi_second_derivative(pi, p)

        d0, d1, d2 = derivs(bstate), derivs(b_half), derivs(b_full)
        E = np.exp(self.linear * h)
        E2 = np.exp(self.linear * (0.5 * h))
        k1 = self.nonlinear(Y, *d0, t)
        k2 = self.nonlinear(E2 * (Y + 0.5 * h * k1), *d1, t + 0.5 * h)
        k3 = self.nonlinear(E2 * Y + 0.5 * h * k2, *d1, t + 0.5 * h)
        k4 = self.nonlinear(E * Y + h * (E2 * k3), *d2, t + h)
        Y1 = E * Y + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
        err = None
        if embedded:
            k5 = self.nonlinear(Y1, *d2, t + h)
            err = (h / 6.0) * (k5 - k4)
        return Y1, err, b_full

    def stable_step_estimate(self, state: GalerkinState) -> float:
        """Initial step guess from the fastest acoustic frequency."""
        p = self.params
        xi = self.xi_nodes(state.gtilde, state.pi)
        xmin = max(float(np.min(xi)), p.xi_floor)
        c = math.sqrt(p.a * p.gamma * xmin ** (-p.gamma - 1.0))
        return 1.0 / (np.pi * p.N * c)


@functools.lru_cache(maxsize=32)
def get_system(params: ModelParams, mutations=frozenset()) -> GalerkinSystem:
    return GalerkinSystem(params, frozenset(mutations))


# ----------------------------------------------------------------- fields


def reconstruct_v(state: GalerkinState, M: int | None = None) -> GridField:
    """Velocity ``v_N`` on the uniform grid of ``M`` points."""
    M = M or state.params.M
    x = np.arange(M) / (M - 1)
    B = grid_cosine_matrix(M, state.params.N, kmin=1)
    return GridField(state.pi_t * (x - 0.5) + B @ state.alpha)


def reconstruct_xi(state: GalerkinState, M: int | None = None) -> GridField:
    """Specific volume ``xi_N`` on the uniform grid; equals ``pi`` at both ends."""
    M = M or state.params.M
    return GridField(state.pi + grid_sine_matrix(M, state.params.N) @ state.gtilde)


def eval_v(state: GalerkinState, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return state.pi_t * (x - 0.5) + cosine_matrix(x, state.params.N, kmin=1) @ state.alpha


def eval_xi(state: GalerkinState, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return state.pi + sine_matrix(x, state.params.N) @ state.gtilde


def initial_state(init: InitialData, params: ModelParams, mutations=frozenset(), tol: float = 1e-8) -> GalerkinState:
    """Project initial data onto the Galerkin space.

    ``pi(0) = xi0(0)``; the affine part ``(x - 1/2) pi_t(0)`` is removed from
    ``v0`` in closed form, and ``pi(0)`` from ``xi0`` likewise, before the
    remaining functions are projected.

    Raises
    ------
    InvalidInitialData
        If the mean-velocity, positivity or endpoint conditions fail.
    """
    check_initial_data(init, params, tol)
    system = get_system(params, frozenset(mutations))
    N = params.N
    if isinstance(init.xi0, GridField):
        pi0 = float(init.xi0.values[0])
        gt = sine_analyze(GridField(init.xi0.values - pi0), N).coeffs
    else:
        pi0 = float(init.sample("xi0", np.array([0.0]))[0])
        gt = project_function(lambda x: init.xi0(x) - pi0, N, Basis.SINE).coeffs
    pi_t0 = boundary_rhs(pi0, params)
    if isinstance(init.v0, GridField):
        x = init.v0.x
        a = cosine_analyze(GridField(init.v0.values - pi_t0 * (x - 0.5)), N).coeffs[1:]
    else:
        a = project_function(lambda x: init.v0(x) - pi_t0 * (x - 0.5), N, Basis.COSINE).coeffs[1:]
    return GalerkinState(a, gt, pi0, 0.0, params, mutations=frozenset(mutations))


def assemble_rhs(state: GalerkinState):
    """Time derivatives ``(dalpha, dgtilde, dpi)`` of the Galerkin system."""
    system = get_system(state.params, state.mutations)
    da, dg, dpi = system.full_rhs(state.alpha, state.gtilde, state.pi)
    return (
        CoeffVector(Basis.COSINE, da, kmin=1),
        CoeffVector(Basis.SINE, dg, kmin=1),
        dpi,
    )


def step(state: GalerkinState, dt: float) -> GalerkinState:
    """Advance ``state`` by one fixed step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    system = get_system(state.params, state.mutations)
    Y1, _, b1 = system.lawson_step(system.pack(state), state.boundary, dt, embedded=False)
    new = system.unpack(Y1, b1.pi, state.t + dt, state, b1)
    system.check_xi(system.xi_nodes(new.gtilde, new.pi), new.t)
    return new


@dataclass
class Trajectory:
    """Snapshots and diagnostics at the output times."""

    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    n_steps: int = 0
    n_rejected: int = 0

    def append(self, state, record):
        if self.states and not state.t > self.states[-1].t:
            raise ValueError("trajectory times must be strictly increasing")
        self.states.append(state)
        self.records.append(record)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def __iter__(self):
        return iter(zip(self.states, self.records))

    def __len__(self):
        return len(self.states)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def final(self) -> GalerkinState:
        return self.states[-1]


class _Controller:
    """PI step-size controller for the embedded third-order estimate."""

    order = 3
    safety = 0.9

    def __init__(self):
        self.prev = 1.0

    def accept(self, ratio):
        q = self.order + 1
        ratio = max(ratio, 1e-10)
        fac = self.safety * ratio ** (-0.7 / q) * self.prev ** (0.4 / q)
        self.prev = ratio
        return min(5.0, max(0.2, fac))

    def reject(self, ratio):
        return max(0.1, self.safety * ratio ** (-1.0 / (self.order + 1)))


def _integrate(system, state, t_target, dt, h, ctrl, traj):
    """Advance ``state`` to exactly ``t_target``; returns ``(state, h)``."""
    p = system.params
    tol = p.tol_ode
    Y = system.pack(state)
    bstate = state.boundary
    t = state.t
    nst = 2 * p.N
    vac_retries = 0
    while t < t_target:
        remaining = t_target - t
        if dt is not None:
            hh = min(dt, remaining)
            if remaining - hh < 1e-12 * max(1.0, abs(t_target)):
                hh = remaining
            Y1, _, b1 = system.lawson_step(Y, bstate, hh, embedded=False)
            system.check_xi(system.xi_nodes(Y1[p.N : nst], b1.pi), t + hh)
            t = t_target if hh == remaining else t + hh
            Y, bstate = Y1, BoundaryState(b1.pi, t, b1.h_hint, b1.substeps)
            traj.n_steps += 1
            continue

        hh = min(h, remaining)
        last = hh >= remaining
        try:
            Y1, err, b1 = system.lawson_step(Y, bstate, hh)
            system.check_xi(system.xi_nodes(Y1[p.N : nst], b1.pi), t + hh)
        except VacuumApproach:
            vac_retries += 1
            if vac_retries > 40:
                raise
            h = 0.25 * hh
            traj.n_rejected += 1
            if h < 1e-13 * max(1.0, abs(t)):
                raise
            continue
        scale = tol * (max(np.max(np.abs(Y[:nst])), np.max(np.abs(Y1[:nst]))) + 1e-6)
        ratio = float(np.max(np.abs(err[:nst]))) / scale
        if ratio <= 1.0:
            vac_retries = 0
            t = t_target if last else t + hh
            Y, bstate = Y1, BoundaryState(b1.pi, t, b1.h_hint, b1.substeps)
            traj.n_steps += 1
            fac = ctrl.accept(ratio)
            if not (last and fac > 1.0 and hh < h):
                h = hh * fac
        else:
            traj.n_rejected += 1
            h = hh * ctrl.reject(ratio)
        if h < 1e-13 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size {h:.3e} underflowed at t={t:.6g}")
    return system.unpack(Y, bstate.pi, t, state, bstate), h


def run(
    init,
    params: ModelParams,
    t_end: float,
    output_times=None,
    dt: float | None = None,
    monitors=None,
    mutations=frozenset(),
    raise_on_violation: bool = True,
) -> Trajectory:
    """Integrate from ``t = 0`` to ``t_end`` and record diagnostics.

    Parameters
    ----------
    init : InitialData or GalerkinState
        Initial data (projected with :func:`initial_state`) or a ready state.
    output_times : array_like, optional
        Times at which snapshots are recorded; ``0`` and ``t_end`` are always
        included.  Defaults to 101 equispaced times.
    dt : float, optional
        Fixed step size.  When omitted the step is adapted to ``tol_ode``.
    monitors : MonitorConfig, optional
        Runtime monitor settings; hard failures raise
        :class:`~barogalerkin.errors.MonitorViolation`.
    """
    from . import diagnostics

    if not t_end > 0:
        raise ValueError("t_end must be positive")
    monitors = monitors or diagnostics.MonitorConfig()
    if isinstance(init, GalerkinState):
        state = init.copy()
        if state.params != params:
            raise ValueError("state was built for different parameters")
        mutations = state.mutations
    else:
        state = initial_state(init, params, mutations)
    system = get_system(params, frozenset(mutations))
    if output_times is None:
        output_times = np.linspace(0.0, t_end, 101)
    times = np.unique(np.concatenate([[0.0, t_end], np.asarray(output_times, float)]))
    times = times[(times >= state.t) & (times <= t_end)]
    if times[0] > state.t:
        times = np.concatenate([[state.t], times])

    traj = Trajectory()
    tracker = diagnostics.RunTracker(state, monitors)
    rec = tracker.record(state)
    traj.append(state, rec)
    tracker.check(rec, state, traj, raise_on_violation)
    h = min(system.stable_step_estimate(state), t_end)
    ctrl = _Controller()
    for t_out in times[1:]:
        state, h = _integrate(system, state, float(t_out), dt, h, ctrl, traj)
        rec = tracker.record(state)
        traj.append(state, rec)
        tracker.check(rec, state, traj, raise_on_violation)
    traj.reports.update(tracker.finish(traj))
    return traj
