import math

import numpy as np
import pytest

from services.lqg import (
    CtLqgSystem,
    DelaySpec,
    Diverged,
    DtLqgSystem,
    ScalarLqg,
    closed_loop_ct,
    closed_loop_dt,
    ct_performance,
    delayed_performance,
    dt_performance,
    intermittent_performance,
    prediction_covariance,
    scalar_closed_form,
)
from services.posets import HermitianPoset, leq
from services.riccati import solve_care, solve_dare
from tests.conftest import random_ct_system, random_psd, scalar_system
from utils.errors import LqgSystemError

TOL = 1e-7


def nondecreasing(lo, hi, tol=TOL):
    return lo <= hi + tol * (1.0 + abs(hi))


def random_dt_system(rng, n, alpha=1.0, W=None, V=None, radius=1.1):
    A = rng.normal(size=(n, n))
    A = radius * A / np.max(np.abs(np.linalg.eigvals(A)))
    Q0 = random_psd(rng, n, definite=True)
    R0 = random_psd(rng, 1, definite=True)
    return DtLqgSystem(
        A=A, B=rng.normal(size=(n, 1)), C=rng.normal(size=(1, n)),
        W=random_psd(rng, n, definite=True) if W is None else W,
        V=random_psd(rng, 1, definite=True) if V is None else V,
        Q=alpha * Q0, R=R0 / alpha, Q_metric=Q0, R_metric=R0,
    )


def random_scalar(rng):
    return ScalarLqg(
        a=float(rng.uniform(-2, 2)), b=float(rng.uniform(0.1, 2)), c=float(rng.uniform(0.1, 2)),
        q0=float(rng.uniform(0.1, 10)), r0=float(rng.uniform(0.1, 10)),
        v=float(rng.uniform(0.1, 10)), w=float(rng.uniform(0.1, 10)),
        alpha=float(10 ** rng.uniform(-4, 4)),
    )


# ----- continuous LQG -----

def test_scalar_example():
    solution = ct_performance(scalar_system())
    assert solution.P_track == pytest.approx(1.5, rel=1e-9)
    assert solution.P_effort == pytest.approx(0.5, rel=1e-9)
    assert scalar_closed_form(ScalarLqg(0, 1, 1, 1, 1, 1, 1)) == pytest.approx((1.5, 0.5))


def test_noiseless_plant_has_zero_metrics():
    solution = ct_performance(scalar_system(a=-1.0, w=0.0))
    assert solution.P_track == pytest.approx(0.0, abs=1e-12)
    assert solution.P_effort == pytest.approx(0.0, abs=1e-12)


def test_closed_form_matches_riccati_solution():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        s = random_scalar(rng)
        expected = scalar_closed_form(s)
        got = ct_performance(s.to_system()).performance
        assert got.P_track == pytest.approx(expected.P_track, rel=1e-6, abs=1e-12)
        assert got.P_effort == pytest.approx(expected.P_effort, rel=1e-6, abs=1e-12)


def test_large_alpha_limit():
    s = ScalarLqg(0, 1, 1, 1, 1, 1, 1, alpha=1e8)
    assert scalar_closed_form(s).P_track == pytest.approx(s.q0 * s.sigma_bar, rel=1e-6)
    solved = ct_performance(scalar_system(alpha=1e4))
    assert solved.P_track == pytest.approx(1.0, abs=1e-3)


def test_small_alpha_limit_on_unstable_plant():
    s = ScalarLqg(a=1.0, b=1.0, c=1.0, q0=1.0, r0=1.0, v=1.0, w=1.0, alpha=1e-8)
    limit = 2 * s.r0 * s.a * (s.c * s.sigma_bar) ** 2 / (s.b ** 2 * s.v)
    assert scalar_closed_form(s).P_effort == pytest.approx(limit, rel=1e-6)


def test_sigma_bar_solves_filter_equation():
    rng = np.random.default_rng(9)
    for _ in range(50):
        s = random_scalar(rng)
        sigma = s.sigma_bar
        assert 2 * s.a * sigma + s.w - sigma ** 2 * s.c ** 2 / s.v == pytest.approx(0.0, abs=1e-8 * (1 + s.w))


@pytest.mark.parametrize("seed", range(30))
def test_cost_identities_agree(seed):
    rng = np.random.default_rng(seed)
    solution = ct_performance(random_ct_system(rng, int(rng.integers(1, 5))))
    assert solution.cost_gap < 1e-8


@pytest.mark.parametrize("seed", range(30))
def test_metrics_match_closed_loop_covariance(seed):
    rng = np.random.default_rng(400 + seed)
    system = random_ct_system(rng, int(rng.integers(1, 5)))
    solution = ct_performance(system)
    assert closed_loop_ct(system, solution) == pytest.approx(solution.performance, rel=1e-6)


# ----- monotonicity in the weighting and the noises -----

def test_alpha_trades_tracking_for_effort():
    rng = np.random.default_rng(21)
    for _ in range(200):
        system = random_ct_system(rng, int(rng.integers(1, 5)))
        a1 = float(10 ** rng.uniform(-2, 2))
        a2 = a1 * float(10 ** rng.uniform(0.01, 1))
        low, high = ct_performance(system.with_alpha(a1)), ct_performance(system.with_alpha(a2))
        assert nondecreasing(high.P_track, low.P_track, 1e-6)
        assert nondecreasing(low.P_effort, high.P_effort, 1e-6)


@pytest.mark.parametrize("seed", range(100))
def test_filter_covariance_is_monotone_in_noise(seed):
    rng = np.random.default_rng(2200 + seed)
    n = 1 + seed % 4
    system = random_ct_system(rng, n)
    noisier = system.with_noise(V=system.V + random_psd(rng, 1), W=system.W + random_psd(rng, n))
    low = solve_care(system.A.T, system.C.T, system.W, system.V)
    high = solve_care(noisier.A.T, noisier.C.T, noisier.W, noisier.V)
    assert leq(HermitianPoset(n), low, high)


@pytest.mark.parametrize("seed", range(100))
def test_optimal_cost_is_monotone_in_noise(seed):
    rng = np.random.default_rng(2300 + seed)
    n = 1 + seed % 4
    system = random_ct_system(rng, n)
    noisier = system.with_noise(V=system.V + random_psd(rng, 1), W=system.W + random_psd(rng, n))
    assert nondecreasing(ct_performance(system).J_star, ct_performance(noisier).J_star)


@pytest.mark.parametrize("seed", range(100))
def test_scalar_metrics_are_monotone_in_noise(seed):
    s = random_scalar(np.random.default_rng(2400 + seed))
    base = scalar_closed_form(s)
    more_w = scalar_closed_form(ScalarLqg(s.a, s.b, s.c, s.q0, s.r0, s.v, s.w * 1.5, s.alpha))
    more_v = scalar_closed_form(ScalarLqg(s.a, s.b, s.c, s.q0, s.r0, s.v * 1.5, s.w, s.alpha))
    assert nondecreasing(base.P_track, more_w.P_track)
    assert nondecreasing(base.P_effort, more_w.P_effort)
    assert nondecreasing(base.P_track, more_v.P_track)


def test_inverse_reverses_loewner_order():
    rng = np.random.default_rng(25)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        A = random_psd(rng, n, definite=True)
        B = A + random_psd(rng, n)
        assert leq(HermitianPoset(n), np.linalg.inv(B), np.linalg.inv(A))


# ----- delays -----

def test_zero_delay_is_the_undelayed_controller():
    rng = np.random.default_rng(31)
    system = random_ct_system(rng, 3)
    assert delayed_performance(system, DelaySpec()) == pytest.approx(ct_performance(system).performance)


def test_delayed_integrator_value():
    perf = delayed_performance(scalar_system(), DelaySpec(d_obs=0.5, d_comp=0.5))
    assert perf.P_track == pytest.approx(2.5, rel=1e-9)
    assert perf.P_effort == pytest.approx(0.5, rel=1e-9)


@pytest.mark.parametrize("seed", range(100))
def test_delayed_scalar_matches_closed_form(seed):
    rng = np.random.default_rng(3000 + seed)
    s = random_scalar(rng)
    d = float(rng.uniform(0.0, 1.0))
    perf = delayed_performance(s.to_system(), DelaySpec(d_obs=d))

    # undelayed: P_track = q0(σ̄ + F0); the estimate covariance scales by e^{2ad}
    undelayed = scalar_closed_form(s)
    growth = math.exp(2 * s.a * d)
    sigma_d = growth * s.sigma_bar + s.w * math.expm1(2 * s.a * d) / (2 * s.a)
    estimate = growth * (undelayed.P_track - s.q0 * s.sigma_bar)
    assert perf.P_track == pytest.approx(s.q0 * sigma_d + estimate, rel=1e-6, abs=1e-12)
    assert perf.P_effort == pytest.approx(growth * undelayed.P_effort, rel=1e-6, abs=1e-12)


@pytest.mark.parametrize("seed", range(100))
def test_prediction_covariance_grows_with_delay(seed):
    rng = np.random.default_rng(3200 + seed)
    n = 1 + seed % 4
    system = random_ct_system(rng, n)
    Sigma = solve_care(system.A.T, system.C.T, system.W, system.V)
    d = float(rng.uniform(0, 0.5))
    shorter = prediction_covariance(system.A, system.W, Sigma, d)
    longer = prediction_covariance(system.A, system.W, Sigma, d + float(rng.uniform(0.01, 0.5)))
    assert leq(HermitianPoset(n), shorter, longer)


@pytest.mark.parametrize("seed", range(100))
def test_delayed_cost_grows_with_delay(seed):
    rng = np.random.default_rng(3300 + seed)
    system = random_ct_system(rng, 1 + seed % 4, alpha=float(10 ** rng.uniform(-1, 1)))
    costs = []
    for d in (0.0, 0.05, 0.2, 0.5):
        perf = delayed_performance(system, DelaySpec(d_obs=d / 2, d_comp=d / 2))
        costs.append(system.alpha * perf.P_track + perf.P_effort / system.alpha)
    assert costs[0] == pytest.approx(ct_performance(system).J_star, rel=1e-6)
    for lo, hi in zip(costs, costs[1:]):
        assert nondecreasing(lo, hi)


@pytest.mark.parametrize("seed", range(100))
def test_scalar_delay_trends(seed):
    s = random_scalar(np.random.default_rng(3400 + seed))
    system = s.to_system()
    previous = delayed_performance(system, DelaySpec())
    for d in (0.01, 0.05, 0.2):
        current = delayed_performance(system, DelaySpec(d_obs=d / 2, d_comp=d / 2))
        assert nondecreasing(previous.P_track, current.P_track)
        # the predicted estimate fades with delay on a stable plant, so less effort is spent
        if s.a < 0:
            assert nondecreasing(current.P_effort, previous.P_effort)
        else:
            assert nondecreasing(previous.P_effort, current.P_effort)
        previous = current


def test_negative_delay_is_rejected():
    with pytest.raises(LqgSystemError):
        DelaySpec(d_obs=-0.1)


# ----- discrete LQG and dropped observations -----

@pytest.mark.parametrize("seed", range(20))
def test_discrete_cost_identity_and_closed_loop(seed):
    rng = np.random.default_rng(500 + seed)
    system = random_dt_system(rng, int(rng.integers(1, 5)))
    solution = dt_performance(system)
    assert solution.cost_gap < 1e-8
    assert closed_loop_dt(system, solution) == pytest.approx(solution.performance, rel=1e-6)


def test_discrete_alpha_trades_tracking_for_effort():
    rng = np.random.default_rng(41)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        state = rng.bit_generator.state
        low = dt_performance(random_dt_system(rng, n, alpha=0.5))
        rng.bit_generator.state = state
        high = dt_performance(random_dt_system(rng, n, alpha=2.0))
        assert nondecreasing(high.P_track, low.P_track, 1e-6)
        assert nondecreasing(low.P_effort, high.P_effort, 1e-6)


def test_discrete_filter_covariance_is_monotone_in_noise():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        system = random_dt_system(rng, n)
        W, V = system.W + random_psd(rng, n), system.V + random_psd(rng, 1)
        low = solve_dare(system.A.T, system.C.T, system.W, system.V)
        high = solve_dare(system.A.T, system.C.T, W, V)
        assert leq(HermitianPoset(n), low, high)


def test_no_drops_matches_discrete_controller():
    rng = np.random.default_rng(43)
    system = random_dt_system(rng, 2)
    dropped = intermittent_performance(system, 0.0)
    assert dropped.performance == pytest.approx(dt_performance(system).performance, rel=1e-6)


def test_unstable_plant_diverges_when_too_many_observations_drop():
    system = DtLqgSystem(A=[[2.0]], B=[[1.0]], C=[[1.0]], W=[[1.0]], V=[[1.0]], Q=[[1.0]], R=[[1.0]])
    assert isinstance(intermittent_performance(system, 0.5), Diverged)
    assert not isinstance(intermittent_performance(system, 0.1), Diverged)


DROP_GRID = (0.0, 0.1, 0.2, 0.3, 0.4)


@pytest.mark.parametrize("seed", range(100))
def test_scalar_metrics_grow_with_drop_probability(seed):
    rng = np.random.default_rng(4000 + seed)
    # |a| <= 1.1 keeps the critical drop probability 1/a² above the grid
    system = DtLqgSystem(
        A=[[rng.uniform(-1.1, 1.1)]], B=[[rng.uniform(0.1, 2)]], C=[[rng.uniform(0.1, 2)]],
        W=[[rng.uniform(0.1, 10)]], V=[[rng.uniform(0.1, 10)]],
        Q=[[rng.uniform(0.1, 10)]], R=[[rng.uniform(0.1, 10)]],
    )
    results = [intermittent_performance(system, p) for p in DROP_GRID]
    for lo, hi in zip(results, results[1:]):
        assert nondecreasing(lo.P_track, hi.P_track)
        assert nondecreasing(lo.P_effort, hi.P_effort)


@pytest.mark.parametrize("seed", range(100))
def test_dropped_observation_cost_grows(seed):
    rng = np.random.default_rng(4100 + seed)
    n = 1 + seed % 4
    system = random_dt_system(rng, n, radius=0.9)
    results = [intermittent_performance(system, p) for p in DROP_GRID]
    for lo, hi in zip(results, results[1:]):
        assert leq(HermitianPoset(n), lo.Gamma, hi.Gamma)
        assert nondecreasing(lo.J_star_alt, hi.J_star_alt)


def test_drop_probability_out_of_range():
    system = DtLqgSystem(A=[[0.5]], B=[[1.0]], C=[[1.0]], W=[[1.0]], V=[[1.0]], Q=[[1.0]], R=[[1.0]])
    with pytest.raises(LqgSystemError):
        intermittent_performance(system, 1.5)


# ----- input validation -----

@pytest.mark.parametrize("kwargs", [
    dict(A=[[0.0, 1.0]]),
    dict(V=[[0.0]]),
    dict(R0=[[-1.0]]),
    dict(W=[[1.0, 0.0], [0.0, 1.0]]),
    dict(B=[[0.0]], A=[[1.0]]),
    dict(C=[[0.0]], A=[[1.0]]),
    dict(A=[[math.nan]]),
])
def test_invalid_systems_are_rejected(kwargs):
    base = dict(A=[[0.0]], B=[[1.0]], C=[[1.0]], W=[[1.0]], V=[[1.0]], Q0=[[1.0]], R0=[[1.0]])
    base.update(kwargs)
    with pytest.raises(LqgSystemError):
        CtLqgSystem(**base)


@pytest.mark.parametrize("alpha", [0.0, -1.0, math.inf])
def test_alpha_must_be_positive(alpha):
    with pytest.raises(LqgSystemError):
        scalar_system(alpha=alpha)


def test_closed_forms_need_a_scalar_plant(rng):
    with pytest.raises(LqgSystemError):
        ScalarLqg.from_system(random_ct_system(rng, 2))
    assert ScalarLqg.from_system(scalar_system(a=0.5)).a == 0.5
