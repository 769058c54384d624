import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from barogalerkin import ModelParams, StiffnessFailure, VacuumApproach, stationary_xi
from barogalerkin.boundary import BoundaryState, advance_pi, boundary_rhs, pi_bounds, pi_second_derivative, relaxation_rate


def orbit(pi0, params, t_end, n=40):
    state, out = BoundaryState(pi0), [pi0]
    for _ in range(n):
        state = advance_pi(state, t_end / n, params)
        out.append(state.pi)
    return np.array(out), state


def test_boundary_rhs_values():
    p = ModelParams()
    assert boundary_rhs(1.0, p) == 0.0
    assert boundary_rhs(2.0, p) == pytest.approx(-9.6875, rel=1e-15)
    assert boundary_rhs(0.8, p) > 0
    with pytest.raises(VacuumApproach):
        boundary_rhs(1e-9, p)


def test_second_derivative_matches_flow():
    p = ModelParams(a=1, P=1, gamma=2, mu=1)
    assert boundary_rhs(2.0, p) == pytest.approx(-0.75)
    assert pi_second_derivative(2.0, p) == pytest.approx(0.1875, rel=1e-15)
    assert pi_second_derivative(1.0, p) == 0.0
    # finite difference of pi_t along the flow
    h = 1e-6
    sol = solve_ivp(lambda t, y: [boundary_rhs(y[0], p)], (0, 2 * h), [2.0 - h * boundary_rhs(2.0, p)], t_eval=[0, h, 2 * h], rtol=1e-13, atol=1e-15)
    rates = [boundary_rhs(y, p) for y in sol.y[0]]
    assert (rates[2] - rates[0]) / (2 * h) == pytest.approx(0.1875, rel=1e-5)


@given(st.floats(0.3, 5.0), st.floats(0.05, 2.0))
def test_second_derivative_opposes_velocity(pi, mu):
    p = ModelParams(mu=mu)
    if abs(pi - 1.0) > 1e-6:
        assert pi_second_derivative(pi, p) * boundary_rhs(pi, p) < 0


def test_pi_bounds():
    p = ModelParams()
    assert pi_bounds(1.0, p) == (1.0, 1.0)
    assert pi_bounds(0.5, p) == (0.5, 1.0)
    assert pi_bounds(3.0, p) == (1.0, 3.0)
    with pytest.raises(ValueError):
        pi_bounds(0.0, p)


def test_equilibrium_is_fixed():
    p = ModelParams(a=2.0)
    xs = stationary_xi(p)
    assert advance_pi(BoundaryState(xs), 7.3, p).pi == xs


def test_long_time_limit():
    pis, _ = orbit(2.0, ModelParams(), 50.0)
    assert abs(pis[-1] - 1.0) <= 1e-6


def test_against_reference_integrator():
    p = ModelParams(gamma=1.4, mu=0.3, tol_ode=1e-12)
    pis, _ = orbit(2.5, p, 3.0, n=6)
    ref = solve_ivp(lambda t, y: [boundary_rhs(y[0], p)], (0, 3), [2.5], t_eval=np.linspace(0, 3, 7), method="DOP853", rtol=1e-13, atol=1e-14)
    assert np.max(np.abs(pis - ref.y[0])) < 1e-9


@given(st.floats(0.3, 4.0), st.floats(0.02, 1.0), st.floats(1.2, 6.0))
def test_bracket_and_monotone(pi0, mu, gamma):
    p = ModelParams(mu=mu, gamma=gamma)
    pis, _ = orbit(pi0, p, 5.0 / relaxation_rate(p), n=25)
    lo, hi = pi_bounds(pi0, p)
    tol = p.tol_ode * (1 + hi)
    assert np.all(pis >= lo - tol) and np.all(pis <= hi + tol)
    gap = np.abs(pis - stationary_xi(p))
    assert np.all(np.diff(gap) <= tol)
    steps = np.diff(pis)
    assert np.all(steps * np.sign(stationary_xi(p) - pi0) >= -tol)


def test_stiff_regime_needs_more_substeps():
    counts = []
    for mu in (0.1, 0.01, 0.001):
        _, state = orbit(2.0, ModelParams(mu=mu), 1.0, n=4)
        counts.append(state.substeps)
    assert counts[0] < counts[1] < counts[2]


def test_substep_budget(monkeypatch):
    import barogalerkin.boundary as boundary

    monkeypatch.setattr(boundary, "_MAX_SUBSTEPS", 3)
    with pytest.raises(StiffnessFailure):
        advance_pi(BoundaryState(3.0), 10.0, ModelParams(mu=0.001))
