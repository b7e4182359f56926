"""
Zero-order-hold discretization of continuous LQG problems.
"""

from typing import List, Tuple

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from services.lqg import CtLqgSystem, DtLqgSolution, DtLqgSystem, Performance, dt_performance
from services.riccati import finite_gramian
from utils.errors import LqgSystemError
from utils.logger import get_logger
from utils.settings import settings

logger = get_logger(__name__)


def zoh(A: np.ndarray, B: np.ndarray, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """A_d = e^{Aδ} and B_d = ∫₀^δ e^{As} B ds from one augmented exponential."""
    n, m = B.shape
    block = np.zeros((n + m, n + m))
    block[:n, :n] = A
    block[:n, n:] = B
    E = expm(block * delta)
    return E[:n, :n], E[:n, n:]


def discretize(system: CtLqgSystem, delta: float, cross_term: bool = False) -> DtLqgSystem:
    """Sampled-data equivalent of `system` with sampling period `delta`.

    The state/input weights come from integrating the running cost over one
    hold interval: with z = (x, u) and Ā = [[A, B], [0, 0]],
    ∫₀^δ e^{Āᵀs} diag(Q, R) e^{Ās} ds = [[Q_d, N_d], [N_dᵀ, R_d]].

    Args:
        system: Continuous LQG problem.
        delta: Sampling period in seconds.
        cross_term: Keep the state/input cross weight N_d in the design.

    Returns:
        The discrete problem with W_d = ∫ e^{Aτ} W e^{Aᵀτ} dτ, V_d = V/δ and the
        per-sample metric weights Q₀, R₀.
    """
    if not delta > 0:
        raise LqgSystemError(f"sampling period must be positive, got {delta}")
    A, B = system.A, system.B
    n, m = B.shape
    A_d, B_d = zoh(A, B, delta)

    augmented = np.zeros((n + m, n + m))
    augmented[:n, :n] = A
    augmented[:n, n:] = B
    weights = np.zeros((n + m, n + m))
    weights[:n, :n] = system.Q
    weights[n:, n:] = system.R
    G = finite_gramian(augmented, weights, delta)
    Q_d, N_d, R_d = G[:n, :n], G[:n, n:], G[n:, n:]
    W_d = finite_gramian(A.T, system.W, delta)

    return DtLqgSystem(
        A=A_d,
        B=B_d,
        C=system.C,
        W=W_d,
        V=system.V / delta,
        Q=Q_d,
        R=R_d,
        N=N_d if cross_term else None,
        Q_metric=system.Q0,
        R_metric=system.R0,
        delta=delta,
    )


def interval_averaged_performance(system: CtLqgSystem, delta: float, solution: DtLqgSolution) -> Performance:
    """Tracking error and control effort of a sampled controller, averaged over one hold interval.

    Between samples x(t) = e^{At}x_k + (∫₀ᵗ e^{As}B ds) u_k + ∫₀ᵗ e^{A(t-s)}dw_s with u_k held.
    The stationary sample covariance of (x_k, u_k) is [[Γ+F, -FKᵀ], [-KF, KFKᵀ]];
    the process noise entering inside the interval adds ∫₀^δ ∫₀ᵗ e^{As}We^{Aᵀs} ds dt.
    """
    if not delta > 0:
        raise LqgSystemError(f"sampling period must be positive, got {delta}")
    A, B = system.A, system.B
    n, m = B.shape
    K, F = solution.K, solution.F
    held = K @ F @ K.T
    Z = np.block([[solution.Gamma + F, -F @ K.T], [-K @ F, held]])

    augmented = np.zeros((n + m, n + m))
    augmented[:n, :n] = A
    augmented[:n, n:] = B
    weights = np.zeros((n + m, n + m))
    weights[:n, :n] = system.Q0
    G = finite_gramian(augmented, weights, delta)
    drift, _ = quad_vec(lambda t: finite_gramian(A.T, system.W, t), 0.0, delta,
                        epsrel=settings.TOL_RICCATI)

    P_track = (np.trace(G @ Z) + np.trace(system.Q0 @ drift)) / delta
    return Performance(float(P_track), float(np.trace(system.R0 @ held)))


def sampled_performance(system: CtLqgSystem, delta: float, cross_term: bool = False) -> Performance:
    """Interval-averaged performance of the optimal controller sampled every `delta` seconds."""
    return interval_averaged_performance(system, delta, dt_performance(discretize(system, delta, cross_term)))


def sampled_performance_family(system: CtLqgSystem, delta0: float,
                               n_max: int) -> List[Tuple[int, float, float]]:
    """Interval-averaged performance at the dyadic sampling periods δ = 2ⁿ δ₀, n = 0..n_max."""
    if not delta0 > 0:
        raise LqgSystemError(f"base sampling period must be positive, got {delta0}")
    rows = []
    for k in range(n_max + 1):
        perf = sampled_performance(system, delta0 * 2 ** k)
        rows.append((k, perf.P_track, perf.P_effort))
        logger.debug("delta=%g: P_track=%.6g P_effort=%.6g", delta0 * 2 ** k, perf.P_track, perf.P_effort)
    return rows
