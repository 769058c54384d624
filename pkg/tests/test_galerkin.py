import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from barogalerkin import InitialData, ModelParams, VacuumApproach, assemble_rhs, initial_state, run, step
from barogalerkin.boundary import boundary_rhs
from barogalerkin.diagnostics import energy, volume
from barogalerkin.galerkin import GalerkinState, eval_v, eval_xi, get_system, reconstruct_v, reconstruct_xi
from barogalerkin.oracle import linearized_prediction
from barogalerkin.presets import analytic_mixed, boundary_relax, single_mode, stationary
from barogalerkin.spectral import SQRT2, gauss_legendre

P8 = ModelParams(N=8)


def unit(n, k, scale=1.0):
    e = np.zeros(n)
    e[k - 1] = scale
    return e


def zero_state(params, pi=None, **kw):
    n = params.N
    return GalerkinState(kw.get("alpha", np.zeros(n)), kw.get("gtilde", np.zeros(n)), 1.0 if pi is None else pi, 0.0, params)


def test_reconstruction_examples():
    s = zero_state(P8)
    assert np.all(reconstruct_v(s).values == 0)
    s = zero_state(P8, alpha=unit(8, 1))
    assert reconstruct_v(s).values[0] == SQRT2
    s = zero_state(P8, gtilde=unit(8, 1, 0.1))
    xi = reconstruct_xi(s)
    assert eval_xi(s, 0.5) == pytest.approx(1 + 0.1 * SQRT2, abs=1e-15)
    assert xi.values[0] == xi.values[-1] == 1.0


state_arrays = arrays(np.float64, 8, elements=st.floats(-0.05, 0.05))


@given(state_arrays, state_arrays, st.floats(0.5, 2.0))
def test_structural_identities(alpha, gtilde, pi):
    s = GalerkinState(alpha, gtilde, pi, 0.0, P8)
    nodes, weights = gauss_legendre(64)
    # mean-zero velocity
    assert abs(np.dot(weights, eval_v(s, nodes))) <= 1e-12 * (1 + abs(s.pi_t))
    # equal endpoints
    xi = reconstruct_xi(s).values
    assert xi[0] == xi[-1] == pi
    # v_x(0) = v_x(1) = pi_t
    h = 1e-5
    vx0 = (eval_v(s, [h])[0] - eval_v(s, [0.0])[0]) / h
    vx1 = (eval_v(s, [1.0])[0] - eval_v(s, [1 - h])[0]) / h
    tol = 1e-3 * (1 + abs(s.pi_t))
    assert vx0 == pytest.approx(s.pi_t, abs=tol) and vx1 == pytest.approx(s.pi_t, abs=tol)


def test_initial_state_examples():
    s = initial_state(stationary(P8), P8)
    assert np.all(s.alpha == 0) and np.all(s.gtilde == 0) and s.pi == 1.0
    s = initial_state(InitialData(lambda x: SQRT2 * np.cos(3 * np.pi * x), lambda x: np.ones_like(x)), P8)
    assert np.max(np.abs(s.alpha - unit(8, 3))) < 1e-12 and np.all(s.gtilde == 0)
    s = initial_state(single_mode(P8, k=1, amplitude=0.01, target="volume"), P8)
    assert s.pi == 1.0 and np.all(s.alpha == 0)
    assert np.max(np.abs(s.gtilde - unit(8, 1, 0.01))) < 1e-15


def test_initial_state_removes_affine_part():
    s = initial_state(boundary_relax(P8, pi0=0.8), P8)
    pi_t = boundary_rhs(0.8, P8)
    # v0 = 0, so alpha carries the projection of -(x - 1/2) pi_t
    k = np.arange(1, 9)
    expected = -pi_t * SQRT2 * ((-1.0) ** k - 1) / (np.pi**2 * k**2)
    assert np.max(np.abs(s.alpha - expected)) < 1e-12 * abs(pi_t)
    assert np.max(np.abs(reconstruct_v(s).values)) < 0.05 * abs(pi_t)


def test_stationary_rhs_vanishes():
    da, dg, dpi = assemble_rhs(initial_state(stationary(P8), P8))
    assert np.all(da.coeffs == 0) and np.all(dg.coeffs == 0) and dpi == 0


def test_kinematic_rhs_is_exact():
    rng = np.random.default_rng(1)
    s = GalerkinState(rng.normal(0, 0.01, 8), rng.normal(0, 0.01, 8), 1.1, 0.0, P8)
    _, dg, _ = assemble_rhs(s)
    assert np.array_equal(dg.coeffs, -np.pi * np.arange(1, 9) * s.alpha)


@pytest.mark.parametrize("k", [4, 6])
def test_high_mode_is_damped(k):
    eps = 1e-7
    s = zero_state(P8, alpha=unit(8, k, eps))
    da, _, _ = assemble_rhs(s)
    pred = linearized_prediction(k, P8)
    assert da[k] == pytest.approx(-pred.delta * eps, rel=1e-9)
    assert np.max(np.abs(np.delete(da.coeffs, k - 1))) < 1e-20


@pytest.mark.parametrize("k", [1, 2])
def test_low_mode_is_undamped(k):
    eps = 1e-7
    da, _, _ = assemble_rhs(zero_state(P8, alpha=unit(8, k, eps)))
    assert np.max(np.abs(da.coeffs)) < 1e-20
    # displaced volume mode: restoring force omega_k^2 / (pi k) per unit gtilde
    da, _, _ = assemble_rhs(zero_state(P8, gtilde=unit(8, k, eps)))
    pred = linearized_prediction(k, P8)
    assert da[k] == pytest.approx(pred.omega**2 / (np.pi * k) * eps, rel=1e-5)


def test_stationary_step_is_exact():
    s = initial_state(stationary(P8), P8)
    s1 = step(s, 0.3)
    assert np.all(s1.alpha == 0) and np.all(s1.gtilde == 0) and s1.pi == 1.0 and s1.t == 0.3


def test_stationary_run_is_constant():
    traj = run(stationary(P8), P8, 10.0, output_times=np.linspace(0, 10, 11))
    for name in ("total_energy", "eta", "volume", "pi", "xi_min", "xi_max"):
        col = traj.column(name)
        assert np.all(col == col[0]), name
    assert np.all(traj.column("dissipation_cum") == 0)


def fixed_step_run(s, dt, t_end):
    for _ in range(int(round(t_end / dt))):
        s = step(s, dt)
    return s


def test_fourth_order_in_time():
    p = ModelParams(N=8, tol_ode=1e-14)
    s0 = initial_state(analytic_mixed(p, amplitude=0.05, ratio=0.5), p)
    ref = fixed_step_run(s0, 0.2 / 256, 0.2)
    errs = []
    for n in (8, 16):
        s = fixed_step_run(s0, 0.2 / n, 0.2)
        errs.append(np.hypot(np.linalg.norm(s.alpha - ref.alpha), np.linalg.norm(s.gtilde - ref.gtilde)))
    assert 12 < errs[0] / errs[1] < 20


def test_kinematic_consistency_along_run():
    p = ModelParams(N=8)
    traj = run(single_mode(p, k=2, amplitude=0.01), p, 0.5, output_times=np.linspace(0, 0.5, 2001))
    alpha = np.array([s.alpha for s in traj.states])
    gt = np.array([s.gtilde for s in traj.states])
    k = np.arange(1, 9)
    from scipy.integrate import cumulative_simpson

    integral = cumulative_simpson(alpha, x=traj.times, axis=0, initial=0.0)
    assert np.max(np.abs(gt - gt[0] + np.pi * k * integral)) < 1e-9


def test_mean_velocity_and_endpoints_along_run():
    p = ModelParams(N=16)
    traj = run(boundary_relax(p, factor=1.3), p, 1.0)
    assert np.max(np.abs(traj.column("mean_v_residual"))) < 1e-12
    assert np.all(traj.column("endpoint_gap") == 0)


def test_dissipation_rate_decays():
    p = ModelParams(N=8)
    traj = run(single_mode(p, k=4, amplitude=0.01), p, 2.0)
    rate = traj.column("dissipation_rate")
    cum = traj.column("dissipation_cum")
    assert np.all(np.diff(cum) >= 0)
    assert rate[-1] < 1e-3 * rate[0]
    # cumulative dissipation bounded by the initial kinetic energy
    assert cum[-1] <= 0.5 * 0.01**2 * (1 + 1e-6)


def test_energy_non_increasing_without_retained_modes():
    p = ModelParams(N=8, R=0)
    traj = run(analytic_mixed(p, amplitude=0.02, ratio=0.6), p, 1.0)
    total = traj.column("total_energy")
    assert np.all(np.diff(total) <= 1e-14)
    assert total[-1] < total[0]


def test_vacuum_stress():
    p = ModelParams(N=8, xi_floor=0.5)
    init = InitialData(lambda x: 3 * SQRT2 * np.cos(np.pi * x), lambda x: np.ones_like(x), "compression")
    with pytest.raises(VacuumApproach):
        run(init, p, 2.0)


def test_volume_and_energy_of_run_state():
    p = ModelParams(N=8)
    s = run(single_mode(p, k=1, amplitude=0.01), p, 0.3).final
    xi = reconstruct_xi(s, 4097)
    # trapezoid is second order here, Gauss-Legendre is spectral
    assert volume(s) == pytest.approx(np.dot(xi.weights, xi.values), abs=1e-9)
    nodes, weights = gauss_legendre(65)
    assert volume(s) == pytest.approx(np.dot(weights, eval_xi(s, nodes)), abs=1e-14)
    assert energy(s).total > 0


def test_system_cache_and_mutation_guard():
    assert get_system(P8) is get_system(P8)
    with pytest.raises(ValueError):
        get_system(P8, frozenset({"bogus"}))
