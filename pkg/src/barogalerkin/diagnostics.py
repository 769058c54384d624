"""Energy functionals, a priori bounds and runtime monitors.

Every quantity that has a closed coefficient form is computed from the
coefficients; the nonlinear potential ``G(1/xi)`` and the pressure are
integrated with the same Gauss-Legendre rule that the Galerkin right-hand
side uses, which makes the semi-discrete energy balance exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .boundary import pi_bounds
from .errors import MonitorViolation, NonMonotoneMap
from .galerkin import GalerkinState, Trajectory, eval_v, get_system, reconstruct_xi
from .model import stationary_xi
from .spectral import SQRT2, GridField, grid_cosine_matrix, grid_sine_matrix, uniform_grid

__all__ = [
    "Energy",
    "DiagnosticsRecord",
    "MonitorConfig",
    "energy",
    "energy_excess",
    "dissipation_rate",
    "forcing_f",
    "eta_functional",
    "eta_lower_bound",
    "chi_functional",
    "velocity_potential",
    "eulerian_map",
    "pressure_h1_seminorm",
    "gronwall_monitor",
    "xi_bound_monitor",
    "diagnose",
    "CSV_COLUMNS",
]

# Poincare constant used where the global estimate needs one
POINCARE = 1.0 / np.pi**2

CSV_COLUMNS = (
    "t",
    "kinetic",
    "internal",
    "pv",
    "total_energy",
    "dissipation_rate",
    "dissipation_cum",
    "energy_residual",
    "eta",
    "chi",
    "volume",
    "S",
    "pi",
    "pi_t",
    "xi_min",
    "xi_max",
    "mean_v_residual",
    "f_norm",
    "M_U",
)


class Energy(NamedTuple):
    kinetic: float
    internal: float
    pv: float
    total: float


def _system(state):
    return get_system(state.params, state.mutations)


def _v_moments(state: GalerkinState, system):
    """``(int v^2, (v, w_k))`` from the coefficients."""
    pt = state.pi_t
    proj = pt * system.c + state.alpha
    v2 = pt * pt / 12.0 + 2.0 * pt * float(np.dot(system.c, state.alpha)) + float(np.dot(state.alpha, state.alpha))
    return v2, proj


def volume(state: GalerkinState) -> float:
    """Eulerian volume ``V = int xi dx`` from the coefficients."""
    return state.pi + float(np.dot(_system(state).sigma, state.gtilde))


def _internal_parts(state: GalerkinState):
    """Internal energy split into a reference value and a small excess.

    The excess is evaluated with ``expm1``/``log1p`` so that it keeps full
    relative precision when the state is close to equilibrium.
    """
    p = state.params
    system = _system(state)
    xs = stationary_xi(p)
    dev = (state.pi - xs) + system.S @ state.gtilde
    xi = xs + dev
    system.check_xi(xi, state.t)
    coef = p.a / (p.gamma - 1.0) * xs ** (1.0 - p.gamma)
    excess = coef * math.fsum(system.weights * np.expm1((1.0 - p.gamma) * np.log1p(dev / xs)))
    ref = coef * math.fsum(system.weights)
    return ref, excess


def energy(state: GalerkinState) -> Energy:
    """Kinetic, internal and external-work parts of the first energy."""
    system = _system(state)
    v2, _ = _v_moments(state, system)
    ref, excess = _internal_parts(state)
    pv = state.params.P * volume(state)
    kin = 0.5 * v2
    internal = ref + excess
    return Energy(kin, internal, pv, kin + internal + pv)


def energy_excess(state: GalerkinState) -> float:
    """Total energy minus its equilibrium value, computed without cancellation."""
    p = state.params
    system = _system(state)
    v2, _ = _v_moments(state, system)
    _, excess = _internal_parts(state)
    dv = (state.pi - stationary_xi(p)) + float(np.dot(system.sigma, state.gtilde))
    return 0.5 * v2 + excess + p.P * dv


def dissipation_rate(state: GalerkinState) -> float:
    """``mu * ||T v_x||^2 = mu * sum_{k>R} pi^2 k^2 alpha_k^2``."""
    return float(np.dot(_system(state).delta, state.alpha**2))


def forcing_f(state: GalerkinState, M: int | None = None):
    """Forcing ``f = mu (1 - T) v_xx`` on the grid and its L2 norm."""
    M = M or state.params.M
    system = _system(state)
    k = system.k
    coef = np.where(system.low, -state.params.mu * (np.pi * k) ** 2 * state.alpha, 0.0)
    values = grid_cosine_matrix(M, state.params.N, kmin=1) @ coef
    return GridField(values), system.forcing_norm(state.alpha)


def eta_functional(state: GalerkinState) -> float:
    """Second-energy functional ``eta``.

    ``int (mu/2 xi_x^2 + 2/mu v^2 - v xi_x + 4/mu G) + 4/mu P V``.
    """
    mu = state.params.mu
    system = _system(state)
    v2, proj = _v_moments(state, system)
    kg = np.pi * system.k * state.gtilde
    xx2 = float(np.dot(kg, kg))
    vxx = float(np.dot(kg, proj))
    e = energy(state)
    return 0.5 * mu * xx2 + 2.0 / mu * v2 - vxx + 4.0 / mu * (e.internal + e.pv)


def eta_quadrature(state: GalerkinState) -> float:
    """``eta`` evaluated pointwise at the quadrature nodes (cross-check)."""
    p = state.params
    mu = p.mu
    system = _system(state)
    x, w = system.nodes, system.weights
    v = eval_v(state, x)
    xi = state.pi + system.S @ state.gtilde
    xi_x = system.C @ (np.pi * system.k * state.gtilde)
    G = p.a / (p.gamma - 1.0) * xi ** (1.0 - p.gamma)
    dens = 0.5 * mu * xi_x**2 + 2.0 / mu * v**2 - v * xi_x + 4.0 / mu * G
    return float(np.dot(w, dens)) + 4.0 / mu * p.P * float(np.dot(w, xi))


def eta_lower_bound(state: GalerkinState) -> float:
    """Cauchy lower bound ``int (mu/4 xi_x^2 + v^2/mu + 4/mu G) + 4/mu P V``."""
    mu = state.params.mu
    system = _system(state)
    v2, _ = _v_moments(state, system)
    kg = np.pi * system.k * state.gtilde
    e = energy(state)
    return 0.25 * mu * float(np.dot(kg, kg)) + v2 / mu + 4.0 / mu * (e.internal + e.pv)


def chi_functional(state: GalerkinState) -> float:
    """``chi = 5/mu ||f||^2 + pi_t^2 / 4``."""
    fn = _system(state).forcing_norm(state.alpha)
    return 5.0 / state.params.mu * fn * fn + 0.25 * state.pi_t**2


def velocity_potential(state: GalerkinState, M: int | None = None) -> GridField:
    """``U(x) = int_0^x v ds`` on the uniform grid, from the exact antiderivative."""
    M = M or state.params.M
    x = uniform_grid(M)
    k = np.arange(1, state.params.N + 1)
    S = grid_sine_matrix(M, state.params.N)
    return GridField(state.pi_t * 0.5 * (x * x - x) + S @ (state.alpha / (np.pi * k)))


def eulerian_map(state: GalerkinState, M: int | None = None):
    """Eulerian position ``r(x) = int_0^x xi`` and boundary position ``S = r(1)``.

    Raises
    ------
    NonMonotoneMap
        If ``r`` fails to increase strictly between grid points.
    """
    M = M or state.params.M
    x = uniform_grid(M)
    k = np.arange(1, state.params.N + 1)
    Cg = grid_cosine_matrix(M, state.params.N, kmin=1)
    r = state.pi * x + (SQRT2 - Cg) @ (state.gtilde / (np.pi * k))
    r[0] = 0.0
    inc = np.diff(r)
    if np.any(inc <= 0):
        j = int(np.argmin(inc))
        raise NonMonotoneMap(f"r(x) not increasing near x={x[j]:.4f} (increment {inc[j]:.3e})")
    return GridField(r), float(r[-1])


def pressure_h1_seminorm(state: GalerkinState) -> float:
    """L2 norm of ``d/dx (a xi^-gamma) = -a gamma xi^(-gamma-1) xi_x``."""
    p = state.params
    system = _system(state)
    xi = state.pi + system.S @ state.gtilde
    system.check_xi(xi, state.t)
    xi_x = system.C @ (np.pi * system.k * state.gtilde)
    dp = -p.a * p.gamma * xi ** (-p.gamma - 1.0) * xi_x
    return math.sqrt(float(np.dot(system.weights, dp * dp)))


def _global_rhs(state, rec) -> float:
    """Right-hand side bound of the global (decaying) eta inequality."""
    mu = state.params.mu
    return (
        (1.0 / mu + 1.0) * rec.f_norm**2
        + 0.25 * rec.pi_t**2
        + (2.0 / POINCARE - 4.0 / mu) * 2.0 * rec.kinetic
        + 4.0 / mu * (rec.internal + rec.pv)
    )


@dataclass
class DiagnosticsRecord:
    t: float
    kinetic: float
    internal: float
    pv: float
    total_energy: float
    dissipation_rate: float
    dissipation_cum: float
    energy_residual: float
    eta: float
    chi: float
    volume: float
    S: float
    pi: float
    pi_t: float
    xi_min: float
    xi_max: float
    mean_v_residual: float
    f_norm: float
    M_U: float
    # beyond the CSV schema
    energy_excess: float = 0.0
    boundary_work_cum: float = 0.0
    energy_balance: float = 0.0
    chi_cum: float = 0.0
    eta_lower: float = 0.0
    eta_quadrature: float = 0.0
    volume_quadrature: float = 0.0
    endpoint_gap: float = 0.0
    pressure_h1: float = 0.0
    lowmode_strain_max: float = 0.0
    global_rhs: float = 0.0

    def csv_row(self) -> list[float]:
        return [getattr(self, c) for c in CSV_COLUMNS]

    def to_dict(self) -> dict:
        return asdict(self)


def diagnose(state: GalerkinState, excess0: float | None = None) -> DiagnosticsRecord:
    """Evaluate every functional for one state.

    ``excess0`` is the initial energy excess; the energy residual is measured
    against it (zero residual is assumed for the state itself when omitted).
    """
    p = state.params
    system = _system(state)
    e = energy(state)
    exc = energy_excess(state)
    if excess0 is None:
        excess0 = exc
    xi_grid = reconstruct_xi(state)
    U = velocity_potential(state)
    _, S = eulerian_map(state)
    fn = system.forcing_norm(state.alpha)
    v_nodes = eval_v(state, system.nodes)
    xi_nodes = state.pi + system.S @ state.gtilde
    lowmode = grid_sine_matrix(p.M, p.N) @ np.where(system.low, -np.pi * system.k * state.alpha, 0.0)
    residual = exc + state.dissipation_cum - excess0
    rec = DiagnosticsRecord(
        t=state.t,
        kinetic=e.kinetic,
        internal=e.internal,
        pv=e.pv,
        total_energy=e.total,
        dissipation_rate=dissipation_rate(state),
        dissipation_cum=state.dissipation_cum,
        energy_residual=residual,
        eta=eta_functional(state),
        chi=chi_functional(state),
        volume=volume(state),
        S=S,
        pi=state.pi,
        pi_t=state.pi_t,
        xi_min=float(min(np.min(xi_grid.values), np.min(xi_nodes))),
        xi_max=float(max(np.max(xi_grid.values), np.max(xi_nodes))),
        mean_v_residual=math.fsum(system.weights * v_nodes),
        f_norm=fn,
        M_U=float(np.max(np.abs(U.values))),
        energy_excess=exc,
        boundary_work_cum=state.boundary_work_cum,
        energy_balance=residual - state.boundary_work_cum,
        chi_cum=state.chi_cum,
        eta_lower=eta_lower_bound(state),
        eta_quadrature=eta_quadrature(state),
        volume_quadrature=math.fsum(system.weights * xi_nodes),
        endpoint_gap=float(max(abs(xi_grid.values[0] - state.pi), abs(xi_grid.values[-1] - state.pi))),
        pressure_h1=pressure_h1_seminorm(state),
        lowmode_strain_max=float(np.max(np.abs(lowmode))) if p.R > 0 else 0.0,
    )
    rec.global_rhs = _global_rhs(state, rec)
    return rec


# ------------------------------------------------------------------ monitors

HARD_DEFAULT = frozenset(
    {"positivity", "mean_velocity", "endpoints", "energy_balance", "pi_bracket", "volume_consistency", "eta_nonnegative"}
)
SOFT_DEFAULT = frozenset({"energy_identity", "gronwall_local", "gronwall_global", "xi_upper_bound", "cutoff_lower_bound"})


@dataclass
class MonitorConfig:
    """Tolerances and hard/soft classification of the runtime monitors.

    ``energy_rtol`` bounds the energy balance (including boundary work)
    relative to the energy scale of the run; ``energy_identity_atol`` is the
    absolute bound for the plain identity without boundary work, which is
    only expected to hold while ``pi_t`` vanishes.
    """

    energy_rtol: float = 1e-6
    energy_identity_atol: float = 1e-8
    mean_v_atol: float = 1e-12
    endpoint_atol: float = 0.0
    bracket_atol: float | None = None
    volume_rtol: float = 1e-10
    gronwall_rtol: float = 1e-6
    hard: frozenset = HARD_DEFAULT
    soft: frozenset = SOFT_DEFAULT

    def __post_init__(self):
        self.hard = frozenset(self.hard)
        self.soft = frozenset(self.soft) - self.hard


@dataclass
class MonitorResult:
    name: str
    passed: bool
    worst: float
    t_worst: float
    hard: bool
    detail: dict = field(default_factory=dict)


class RunTracker:
    """Online monitor bookkeeping for one run."""

    def __init__(self, state0: GalerkinState, config: MonitorConfig):
        self.config = config
        self.params = state0.params
        self.excess0 = energy_excess(state0)
        self.bounds = pi_bounds(state0.pi, state0.params)
        self.worst: dict[str, tuple[float, float, bool]] = {}
        self.scale = 1.0

    def record(self, state: GalerkinState) -> DiagnosticsRecord:
        return diagnose(state, self.excess0)

    def _note(self, name, value, ok, t, traj, raise_on_violation):
        prev = self.worst.get(name)
        if prev is None or value > prev[0]:
            self.worst[name] = (value, t, ok and (prev is None or prev[2]))
        elif not ok:
            self.worst[name] = (prev[0], prev[1], False)
        if not ok and name in self.config.hard and raise_on_violation:
            raise MonitorViolation(name, value, t, traj)

    def check(self, rec: DiagnosticsRecord, state, traj, raise_on_violation=True):
        c = self.config
        p = self.params
        t = rec.t
        note = lambda n, v, ok: self._note(n, v, ok, t, traj, raise_on_violation)  # noqa: E731
        note("positivity", p.xi_floor - rec.xi_min, rec.xi_min >= p.xi_floor)
        mv = abs(rec.mean_v_residual)
        note("mean_velocity", mv, mv <= c.mean_v_atol * max(1.0, abs(rec.pi_t)))
        note("endpoints", rec.endpoint_gap, rec.endpoint_gap <= c.endpoint_atol)
        self.scale = max(self.scale, abs(rec.total_energy), rec.dissipation_cum, abs(rec.boundary_work_cum))
        eb = abs(rec.energy_balance)
        note("energy_balance", eb, eb <= c.energy_rtol * self.scale)
        ei = abs(rec.energy_residual)
        note("energy_identity", ei, ei <= c.energy_identity_atol)
        btol = c.bracket_atol if c.bracket_atol is not None else 10.0 * p.tol_ode * (1.0 + self.bounds[1])
        lo, hi = self.bounds
        gap = max(lo - rec.pi, rec.pi - hi, 0.0)
        note("pi_bracket", gap, gap <= btol)
        vg = abs(rec.volume - rec.volume_quadrature)
        note("volume_consistency", vg, vg <= c.volume_rtol * max(1.0, abs(rec.volume)))
        note("eta_nonnegative", -rec.eta_lower, rec.eta_lower >= 0 and rec.eta >= rec.eta_lower * (1 - 1e-12))

    def finish(self, traj: Trajectory) -> dict:
        results = {}
        for name, (worst, t, ok) in self.worst.items():
            results[name] = MonitorResult(name, ok, worst, t, name in self.config.hard)
        g = gronwall_monitor(traj, self.config.gronwall_rtol)
        results["gronwall_local"] = MonitorResult(
            "gronwall_local", g["local"]["passed"], -g["local"]["min_margin"], g["local"]["t_worst"], False, g["local"]
        )
        results["gronwall_global"] = MonitorResult(
            "gronwall_global",
            g["global"]["passed"],
            -g["global"].get("min_margin", 0.0),
            g["global"].get("t_worst", 0.0),
            False,
            g["global"],
        )
        xb = xi_bound_monitor(traj, self.params)
        results["xi_upper_bound"] = MonitorResult(
            "xi_upper_bound", xb["upper"]["passed"], -xb["upper"]["min_margin"], xb["upper"]["t_worst"], False, xb["upper"]
        )
        results["cutoff_lower_bound"] = MonitorResult(
            "cutoff_lower_bound", True, -xb["lower"]["xi_min"], 0.0, False, xb["lower"]
        )
        for name in ("gronwall_local", "gronwall_global", "xi_upper_bound"):
            results[name].hard = name in self.config.hard
        return {"monitors": results, "gronwall": g, "xi_bounds": xb}


def gronwall_monitor(traj: Trajectory, rtol: float = 1e-6) -> dict:
    """Check the local and global Gronwall bounds on ``eta`` along a run.

    Local form: ``eta(t) <= e^t (eta(0) + int_0^t chi)``.  Global form, only
    when ``mu <= a gamma / xi_+^(gamma+1)``:
    ``eta(t) <= eta(0) e^-t + M (1 + e^-t)`` with ``M`` the largest recorded
    right-hand side of the decaying inequality.
    """
    p = traj.states[0].params
    t = traj.times - traj.times[0]
    eta = traj.column("eta")
    chi_cum = traj.column("chi_cum") - traj.records[0].chi_cum
    local_bound = np.exp(t) * (eta[0] + chi_cum)
    scale = np.maximum(np.abs(local_bound), 1e-300)
    local_margin = (local_bound - eta) / scale
    i = int(np.argmin(local_margin))
    out = {
        "local": {
            "passed": bool(np.all(local_margin >= -rtol)),
            "min_margin": float(local_margin[i]),
            "t_worst": float(traj.times[i]),
        }
    }
    xi_plus = float(np.max(traj.column("xi_max")))
    threshold = p.a * p.gamma / xi_plus ** (p.gamma + 1.0)
    glob = {"applicable": bool(p.mu <= threshold), "mu_threshold": threshold, "xi_plus": xi_plus}
    M = float(np.max(traj.column("global_rhs")))
    bound = eta[0] * np.exp(-t) + M * (1.0 + np.exp(-t))
    margin = (bound - eta) / np.maximum(np.abs(bound), 1e-300)
    j = int(np.argmin(margin))
    glob.update(M=M, min_margin=float(margin[j]), t_worst=float(traj.times[j]))
    glob["passed"] = bool(np.all(margin >= -rtol)) if glob["applicable"] else True
    out["global"] = glob
    return out


def xi_bound_monitor(traj: Trajectory, params) -> dict:
    """Upper and lower bounds on the specific volume along a run.

    The upper envelope is ``max(xi_thr, sup(xi0 - U0/mu) + M_U/mu - t P/(4 mu))``
    with ``a xi_thr^-gamma = P/4``.  Its hypothesis
    ``||(1 - T) v_x||_inf <= P / (2 mu)`` is measured along the run.
    """
    p = params
    recs = traj.records
    t = traj.times - traj.times[0]
    xi_max = traj.column("xi_max")
    xi_min = traj.column("xi_min")
    M_U = float(np.max(traj.column("M_U")))
    s0 = traj.states[0]
    U0 = velocity_potential(s0).values
    xi0 = reconstruct_xi(s0).values
    xi_thr = (4.0 * p.a / p.P) ** (1.0 / p.gamma)
    start = float(np.max(xi0 - U0 / p.mu))
    envelope = np.maximum(xi_thr, start + M_U / p.mu - t * p.P / (4.0 * p.mu))
    margin = envelope - xi_max
    i = int(np.argmin(margin))
    strain = float(np.max(traj.column("lowmode_strain_max")))
    hypothesis = strain <= p.P / (2.0 * p.mu)
    upper = {
        "passed": bool(np.all(margin >= 0)),
        "min_margin": float(margin[i]),
        "t_worst": float(traj.times[i]),
        "hypothesis_holds": bool(hypothesis),
        "lowmode_strain_max": strain,
        "xi_threshold": xi_thr,
        "M_U": M_U,
        "T_min": max(0.0, 4.0 * p.mu / p.P * (start - xi_thr + M_U / p.mu)),
        "envelope_final": float(envelope[-1]),
        "U_endpoint_max": float(max(abs(r.mean_v_residual) for r in recs)),
    }
    lower = {"xi_min": float(np.min(xi_min)), "floor_respected": bool(np.min(xi_min) >= p.xi_floor)}
    if p.gamma <= 3:
        lower["cutoff_applies"] = False
        lower["note"] = "gamma <= 3: lower cut-off bound not available, empirical minimum only"
        warnings.warn(lower["note"], stacklevel=2)
    else:
        lower["cutoff_applies"] = True
    return {"upper": upper, "lower": lower}
