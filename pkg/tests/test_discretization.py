import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import expm, solve_discrete_lyapunov

from services.discretization import (
    discretize,
    interval_averaged_performance,
    sampled_performance,
    sampled_performance_family,
    zoh,
)
from services.lqg import ct_performance, dt_performance
from tests.conftest import random_ct_system, scalar_system
from utils.errors import LqgSystemError


def test_integrator_in_closed_form():
    q, r, w, v, delta = 2.0, 0.5, 3.0, 0.4, 0.1
    dt = discretize(scalar_system(a=0.0, q0=q, r0=r, w=w, v=v), delta, cross_term=True)
    assert dt.A[0, 0] == pytest.approx(1.0)
    assert dt.B[0, 0] == pytest.approx(delta)
    assert dt.Q[0, 0] == pytest.approx(q * delta)
    assert dt.N[0, 0] == pytest.approx(q * delta ** 2 / 2)
    assert dt.R[0, 0] == pytest.approx(q * delta ** 3 / 3 + r * delta)
    assert dt.W[0, 0] == pytest.approx(w * delta)
    assert dt.V[0, 0] == pytest.approx(v / delta)
    assert dt.delta == delta


def test_cross_term_is_dropped_by_default():
    dt = discretize(scalar_system(), 0.1)
    assert dt.N[0, 0] == 0.0
    assert dt.Q_metric[0, 0] == 1.0 and dt.R_metric[0, 0] == 1.0


def test_zoh_matches_quadrature(rng):
    A = rng.normal(size=(3, 3))
    B = rng.normal(size=(3, 2))
    delta = 0.3
    A_d, B_d = zoh(A, B, delta)
    B_expected, _ = integrate.quad_vec(lambda s: expm(A * s) @ B, 0, delta, epsabs=1e-12)
    assert np.allclose(A_d, expm(A * delta))
    assert np.allclose(B_d, B_expected, atol=1e-8)


def test_weights_match_quadrature(rng):
    system = random_ct_system(rng, 2)
    delta = 0.2
    dt = discretize(system, delta, cross_term=True)
    n, m = system.B.shape
    augmented = np.zeros((n + m, n + m))
    augmented[:n, :n] = system.A
    augmented[:n, n:] = system.B
    weights = np.block([[system.Q, np.zeros((n, m))], [np.zeros((m, n)), system.R]])
    G, _ = integrate.quad_vec(lambda s: expm(augmented.T * s) @ weights @ expm(augmented * s),
                              0, delta, epsabs=1e-12)
    W_d, _ = integrate.quad_vec(lambda s: expm(system.A * s) @ system.W @ expm(system.A.T * s),
                                0, delta, epsabs=1e-12)
    assert np.allclose(dt.Q, G[:n, :n], atol=1e-8)
    assert np.allclose(dt.N, G[:n, n:], atol=1e-8)
    assert np.allclose(dt.R, G[n:, n:], atol=1e-8)
    assert np.allclose(dt.W, W_d, atol=1e-8)


def test_fast_sampling_recovers_scalar_example():
    perf = dt_performance(discretize(scalar_system(), 1e-3)).performance
    assert perf.P_track == pytest.approx(1.5, rel=5e-3)
    assert perf.P_effort == pytest.approx(0.5, rel=5e-3)


@pytest.mark.parametrize("seed", range(50))
def test_fast_sampling_recovers_continuous_metrics(seed):
    rng = np.random.default_rng(600 + seed)
    system = random_ct_system(rng, 2)
    continuous = ct_performance(system).performance
    sampled = dt_performance(discretize(system, 1e-3, cross_term=True)).performance
    assert sampled.P_track == pytest.approx(continuous.P_track, rel=1e-2)
    assert sampled.P_effort == pytest.approx(continuous.P_effort, rel=1e-2)


def test_family_starts_at_base_period():
    system = scalar_system()
    family = sampled_performance_family(system, 0.01, 3)
    assert [n for n, _, _ in family] == [0, 1, 2, 3]
    direct = sampled_performance(system, 0.01)
    assert family[0][1:] == pytest.approx(tuple(direct))


def test_slower_sampling_does_not_improve_tracking():
    family = sampled_performance_family(scalar_system(), 0.01, 4)
    tracks = [p for _, p, _ in family]
    assert all(lo <= hi * (1 + 1e-9) for lo, hi in zip(tracks, tracks[1:]))
    assert tracks[0] == pytest.approx(1.5, rel=2e-2)


def test_slower_sampling_spends_less_effort_on_the_integrator():
    efforts = [e for _, _, e in sampled_performance_family(scalar_system(), 0.01, 4)]
    assert all(hi <= lo * (1 + 1e-9) for lo, hi in zip(efforts, efforts[1:]))
    assert efforts[-1] < efforts[0] - 1e-3


def test_held_input_effort_is_the_sample_effort():
    system = scalar_system(a=0.3, b=0.7, w=2.0)
    sampled = dt_performance(discretize(system, 0.05))
    averaged = interval_averaged_performance(system, 0.05, sampled)
    assert averaged.P_effort == pytest.approx(sampled.P_effort, rel=1e-12)


def averaged_tracking_by_quadrature(system, delta, solution):
    """Tracking error averaged over one hold interval from the joint (state, estimate) covariance."""
    A, B, C = system.A, system.B, system.C
    n, m = B.shape
    dt = discretize(system, delta)
    K, AL = solution.K, dt.A @ solution.L
    Acl = np.block([[dt.A, -dt.B @ K], [AL @ C, dt.A - dt.B @ K - AL @ C]])
    noise = np.block([[dt.W, np.zeros((n, n))], [np.zeros((n, n)), AL @ dt.V @ AL.T]])
    joint = solve_discrete_lyapunov(Acl, noise)
    T = np.block([[np.eye(n), np.zeros((n, n))], [np.zeros((m, n)), -K]])
    Z = T @ joint @ T.T

    augmented = np.zeros((n + m, n + m))
    augmented[:n, :n] = A
    augmented[:n, n:] = B

    def second_moment(t):
        Phi = expm(augmented * t)[:n, :]
        drift, _ = integrate.quad_vec(lambda s: expm(A * s) @ system.W @ expm(A.T * s), 0, t, epsabs=1e-12)
        return np.trace(system.Q0 @ (Phi @ Z @ Phi.T + drift))

    total, _ = integrate.quad_vec(second_moment, 0, delta, epsabs=1e-10)
    return float(total) / delta


@pytest.mark.parametrize("seed", range(4))
def test_interval_average_matches_quadrature(seed):
    rng = np.random.default_rng(700 + seed)
    system = random_ct_system(rng, 2)
    delta = 0.2
    solution = dt_performance(discretize(system, delta))
    averaged = interval_averaged_performance(system, delta, solution)
    assert averaged.P_track == pytest.approx(averaged_tracking_by_quadrature(system, delta, solution), rel=1e-6)


@pytest.mark.parametrize("seed", range(100))
def test_dyadic_periods_compose(seed):
    rng = np.random.default_rng(800 + seed)
    system = random_ct_system(rng, 1 + seed % 4)
    delta = float(rng.uniform(0.005, 0.05))
    one, two = discretize(system, delta), discretize(system, 2 * delta)
    assert np.allclose(two.A, one.A @ one.A, rtol=1e-8, atol=1e-10)
    assert np.allclose(two.B, one.A @ one.B + one.B, rtol=1e-8, atol=1e-10)
    assert np.allclose(two.W, one.A @ one.W @ one.A.T + one.W, rtol=1e-8, atol=1e-10)
    assert np.allclose(two.Q, one.Q + one.A.T @ one.Q @ one.A, rtol=1e-8, atol=1e-10)

    family = sampled_performance_family(system, delta, 4)
    assert [n for n, _, _ in family] == [0, 1, 2, 3, 4]
    for _, track, effort in family:
        assert np.isfinite(track) and track > 0
        assert np.isfinite(effort) and effort >= 0


@pytest.mark.parametrize("delta", [0.0, -0.1])
def test_sampling_period_must_be_positive(delta):
    with pytest.raises(LqgSystemError):
        discretize(scalar_system(), delta)
    with pytest.raises(LqgSystemError):
        sampled_performance_family(scalar_system(), delta, 2)
