import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from barogalerkin import ModelParams, assemble_rhs, initial_state, run
from barogalerkin.galerkin import GalerkinState
from barogalerkin.oracle import aliasing_residual, dense_rhs, l2_distance, linearized_prediction, twin_run_divergence
from barogalerkin.presets import single_mode, stationary

P16 = ModelParams(N=16)


def smooth_state(seed, params=P16, amplitude=0.05, ratio=0.6, pi_scale=1.0):
    rng = np.random.default_rng(seed)
    k = np.arange(1, params.N + 1)
    decay = amplitude * ratio**k
    return GalerkinState(rng.normal(0, 1, params.N) * decay, rng.normal(0, 1, params.N) * decay, pi_scale, 0.0, params)


def test_stationary_is_zero():
    s = initial_state(stationary(P16), P16)
    da, dg, dpi = dense_rhs(s)
    assert np.all(da == 0) and np.all(dg == 0) and dpi == 0


@given(st.integers(0, 10_000), st.floats(0.85, 1.2))
def test_fast_path_agrees_on_smooth_states(seed, pi):
    s = smooth_state(seed, pi_scale=pi)
    fast_a, fast_g, fast_pi = assemble_rhs(s)
    ref_a, ref_g, ref_pi = dense_rhs(s, refinement=8)
    assert np.max(np.abs(fast_a.coeffs - ref_a)) <= 1e-8
    assert np.max(np.abs(fast_g.coeffs - ref_g)) <= 1e-12
    assert fast_pi == ref_pi


def test_trapezoid_is_second_order():
    s = smooth_state(7, pi_scale=1.1)
    ref, _, _ = dense_rhs(s, refinement=32)
    errs = [np.max(np.abs(dense_rhs(s, r, method="trapezoid")[0] - ref)) for r in (4, 8, 16)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.5)), ratios
    # extrapolation removes the leading error terms
    assert np.max(np.abs(dense_rhs(s, 16)[0] - ref)) < 1e-3 * errs[-1]


def test_aliasing_grows_with_top_mode_energy():
    smooth = smooth_state(3)
    top = smooth.copy()
    top.alpha[-1] = top.gtilde[-1] = 0.05
    top.gtilde[-2] = 0.05
    assert aliasing_residual(top) > 100 * aliasing_residual(smooth)


def test_refinement_guard():
    with pytest.raises(ValueError):
        dense_rhs(smooth_state(0), refinement=2)


def test_linearized_values():
    pred = linearized_prediction(1, ModelParams())
    assert pred.omega == pytest.approx(np.pi * np.sqrt(5), rel=1e-15)
    assert pred.omega == pytest.approx(7.024815, abs=1e-6)
    assert pred.delta == 0.0
    pred = linearized_prediction(3, ModelParams(R=2, mu=0.1))
    assert pred.delta == pytest.approx(0.1 * np.pi**2 * 9, rel=1e-15)
    assert pred.amplitude_decay_rate == pred.delta / 2
    with pytest.raises(ValueError):
        linearized_prediction(0, ModelParams())


@pytest.mark.parametrize("k", [1, 3])
def test_linear_dynamics_match_tiny_amplitude_run(k):
    p = ModelParams(N=8, tol_ode=1e-12)
    pred = linearized_prediction(k, p)
    eps = 1e-6
    t = np.linspace(0, 2 * pred.period, 41)
    traj = run(single_mode(p, k=k, amplitude=eps), p, t[-1], output_times=t)
    lin = pred.evolve(eps, 0.0, traj.times)
    alpha = np.array([s.alpha[k - 1] for s in traj.states])
    gt = np.array([s.gtilde[k - 1] for s in traj.states])
    # nonlinear corrections are O(eps^2)
    assert np.max(np.abs(alpha - lin[:, 0])) < 1e-3 * eps
    assert np.max(np.abs(gt - lin[:, 1])) < 1e-3 * eps


def test_twin_runs():
    p = ModelParams(N=8)
    init = single_mode(p, k=4, amplitude=0.01)
    same = twin_run_divergence(init, init, p, 0.5, n_out=11)
    assert np.all(same.distance == 0)
    a = initial_state(init, p)
    b = a.copy()
    b.alpha[0] += 1e-8
    b.gtilde[2] -= 2e-8
    assert l2_distance(a, b) == pytest.approx((1e-8, 2e-8), rel=1e-12)
    res = twin_run_divergence(a, b, p, 0.5, n_out=11)
    assert res.omega[0] == pytest.approx(1e-8, rel=1e-12)
    assert res.max_distance <= res.K * np.hypot(1e-8, 2e-8)
