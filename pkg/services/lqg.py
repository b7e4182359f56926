"""
Stationary LQG performance.

Continuous and discrete (predictor-form) LQG problems, their tracking error
P_track = lim E[xᵀQ₀x] and control effort P_effort = lim E[uᵀR₀u], the scalar
closed forms, observation/computation delays and randomly dropped observations.
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.linalg import expm

from services.posets import loewner_tolerance
from services.riccati import finite_gramian, solve_care, solve_dare, solve_lyap_ct, solve_lyap_dt
from utils.errors import LqgSystemError
from utils.logger import get_logger
from utils.settings import settings

logger = get_logger(__name__)

COST_IDENTITY_TOL = 1e-8


class Performance(NamedTuple):
    P_track: float
    P_effort: float


def _matrix(name: str, M, shape=None) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(M, dtype=float))
    if arr.ndim != 2:
        raise LqgSystemError(f"{name} must be a matrix, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise LqgSystemError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LqgSystemError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_psd(name: str, M: np.ndarray, definite: bool = False) -> None:
    if np.max(np.abs(M - M.T), initial=0.0) > loewner_tolerance(M):
        raise LqgSystemError(f"{name} is not symmetric")
    smallest = float(np.linalg.eigvalsh((M + M.T) / 2)[0])
    if definite and smallest <= 0:
        raise LqgSystemError(f"{name} must be positive definite (smallest eigenvalue {smallest:.3e})")
    if smallest < -loewner_tolerance(M):
        raise LqgSystemError(f"{name} must be positive semidefinite (smallest eigenvalue {smallest:.3e})")


def _pbh(A: np.ndarray, B: np.ndarray, discrete: bool) -> bool:
    """Popov-Belevitch-Hautus test on the modes that need stabilizing."""
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        unstable = abs(lam) >= 1 - 1e-12 if discrete else lam.real >= -1e-12
        if unstable:
            pencil = np.hstack([lam * np.eye(n) - A, B.astype(complex)])
            if np.linalg.matrix_rank(pencil) < n:
                return False
    return True


def _check_pairs(A, B, C, discrete: bool) -> None:
    if not _pbh(A, B, discrete):
        raise LqgSystemError("(A, B) is not stabilizable")
    if not _pbh(A.T, C.T, discrete):
        raise LqgSystemError("(A, C) is not detectable")


@dataclass(frozen=True, eq=False)
class CtLqgSystem:
    """Continuous plant dx = (Ax + Bu)dt + dw, dy = Cx dt + dv with weights Q = αQ₀, R = R₀/α."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W: np.ndarray
    V: np.ndarray
    Q0: np.ndarray
    R0: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        A = _matrix("A", self.A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise LqgSystemError(f"A must be square, got {A.shape}")
        B = _matrix("B", self.B)
        if B.shape[0] != n:
            raise LqgSystemError(f"B must have {n} rows, got {B.shape}")
        C = _matrix("C", self.C)
        if C.shape[1] != n:
            raise LqgSystemError(f"C must have {n} columns, got {C.shape}")
        m, p = B.shape[1], C.shape[0]
        W = _matrix("W", self.W, (n, n))
        V = _matrix("V", self.V, (p, p))
        Q0 = _matrix("Q0", self.Q0, (n, n))
        R0 = _matrix("R0", self.R0, (m, m))
        _check_psd("W", W)
        _check_psd("V", V, definite=True)
        _check_psd("Q0", Q0)
        _check_psd("R0", R0, definite=True)
        if not self.alpha > 0 or not math.isfinite(self.alpha):
            raise LqgSystemError(f"alpha must be a positive number, got {self.alpha}")
        _check_pairs(A, B, C, discrete=False)
        for name, value in (("A", A), ("B", B), ("C", C), ("W", W), ("V", V), ("Q0", Q0), ("R0", R0)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def Q(self) -> np.ndarray:
        return self.alpha * self.Q0

    @property
    def R(self) -> np.ndarray:
        return self.R0 / self.alpha

    @property
    def is_scalar(self) -> bool:
        return self.A.shape == (1, 1) and self.B.shape == (1, 1) and self.C.shape == (1, 1)

    def with_alpha(self, alpha: float) -> "CtLqgSystem":
        return replace(self, alpha=alpha)

    def with_noise(self, V=None, W=None) -> "CtLqgSystem":
        return replace(self, V=self.V if V is None else V, W=self.W if W is None else W)

    def scaled_noise(self, v_scale: float = 1.0, w_scale: float = 1.0) -> "CtLqgSystem":
        return replace(self, V=self.V * v_scale, W=self.W * w_scale)


@dataclass(frozen=True, eq=False)
class CtLqgSolution:
    S: np.ndarray
    Sigma: np.ndarray
    K: np.ndarray
    L: np.ndarray
    F: np.ndarray
    P_track: float
    P_effort: float
    J_star: float
    J_star_alt: float

    @property
    def cost_gap(self) -> float:
        return abs(self.J_star - self.J_star_alt) / (1.0 + abs(self.J_star))

    @property
    def performance(self) -> Performance:
        return Performance(self.P_track, self.P_effort)


def _ct_metrics(system: CtLqgSystem, K: np.ndarray, Sigma: np.ndarray):
    L = Sigma @ system.C.T @ np.linalg.inv(system.V)
    F = solve_lyap_ct(system.A - system.B @ K, L @ system.V @ L.T)
    P_track = float(np.trace(system.Q0 @ (Sigma + F)))
    P_effort = float(np.trace(system.R0 @ K @ F @ K.T))
    return L, F, P_track, P_effort


def ct_performance(system: CtLqgSystem) -> CtLqgSolution:
    """Optimal stationary LQG controller and its tracking error / control effort."""
    S = solve_care(system.A, system.B, system.Q, system.R)
    Sigma = solve_care(system.A.T, system.C.T, system.W, system.V)
    K = np.linalg.solve(system.R, system.B.T @ S)
    L, F, P_track, P_effort = _ct_metrics(system, K, Sigma)

    J_a = float(np.trace(S @ L @ system.V @ L.T + Sigma @ system.Q))
    J_b = float(np.trace(Sigma @ S @ system.B @ np.linalg.solve(system.R, system.B.T @ S) + S @ system.W))
    solution = CtLqgSolution(S, Sigma, K, L, F, P_track, P_effort, J_a, J_b)
    if solution.cost_gap > COST_IDENTITY_TOL:
        logger.warning("Continuous cost identities disagree: %.12g vs %.12g", J_a, J_b)
    return solution


@dataclass(frozen=True)
class ScalarLqg:
    """Scalar plant with the stationary filter variance available in closed form."""

    a: float
    b: float
    c: float
    q0: float
    r0: float
    v: float
    w: float
    alpha: float = 1.0

    def __post_init__(self):
        if not self.v > 0:
            raise LqgSystemError(f"v must be positive, got {self.v}")
        if self.w < 0:
            raise LqgSystemError(f"w must be nonnegative, got {self.w}")
        if self.b == 0 or self.c == 0:
            raise LqgSystemError("b and c must be nonzero")
        if self.q0 < 0 or not self.r0 > 0 or not self.alpha > 0:
            raise LqgSystemError("q0 must be nonnegative, r0 and alpha positive")

    @property
    def sigma_bar(self) -> float:
        """Positive root of 2aσ + w − σ²c²/v = 0."""
        a, c, v, w = self.a, self.c, self.v, self.w
        root = math.sqrt(a * a + c * c * w / v)
        if a < 0:
            return w / (root - a)
        return v * (a + root) / (c * c)

    def to_system(self) -> CtLqgSystem:
        return CtLqgSystem(
            A=[[self.a]], B=[[self.b]], C=[[self.c]], W=[[self.w]], V=[[self.v]],
            Q0=[[self.q0]], R0=[[self.r0]], alpha=self.alpha,
        )

    @classmethod
    def from_system(cls, system: CtLqgSystem) -> "ScalarLqg":
        if not system.is_scalar:
            raise LqgSystemError("closed forms need a scalar system")
        return cls(
            a=float(system.A[0, 0]), b=float(system.B[0, 0]), c=float(system.C[0, 0]),
            q0=float(system.Q0[0, 0]), r0=float(system.R0[0, 0]),
            v=float(system.V[0, 0]), w=float(system.W[0, 0]), alpha=system.alpha,
        )


def scalar_closed_form(s: ScalarLqg) -> Performance:
    """Closed-form tracking error and control effort of a scalar LQG loop."""
    sigma = s.sigma_bar
    gain = s.alpha * s.alpha * s.b * s.b * s.q0 / s.r0
    beta = math.sqrt(s.a * s.a + gain)
    # a + β without cancellation when a < 0
    a_plus_beta = gain / (beta - s.a) if s.a < 0 else s.a + beta
    P_track = s.q0 * (sigma + (sigma * s.c) ** 2 / (2 * s.v * beta))
    P_effort = (s.r0 * sigma ** 2 * s.c ** 2 / (2 * s.b ** 2 * s.v)) * a_plus_beta ** 2 / beta
    return Performance(P_track, P_effort)


@dataclass(frozen=True)
class DelaySpec:
    d_obs: float = 0.0
    d_comp: float = 0.0

    def __post_init__(self):
        if self.d_obs < 0 or self.d_comp < 0:
            raise LqgSystemError(f"delays must be nonnegative, got ({self.d_obs}, {self.d_comp})")

    @property
    def total(self) -> float:
        return self.d_obs + self.d_comp


def prediction_covariance(A: np.ndarray, W: np.ndarray, Sigma: np.ndarray, d: float) -> np.ndarray:
    """Error covariance after predicting a filtered estimate open loop over d seconds."""
    if d == 0:
        return Sigma
    Phi = expm(A * d)
    return Phi @ Sigma @ Phi.T + finite_gramian(A.T, W, d)


def delayed_performance(system: CtLqgSystem, delay: DelaySpec) -> Performance:
    """Performance when measurements arrive d = d_obs + d_comp seconds late.

    The controller runs the undelayed Kalman filter on the late measurements
    and predicts its estimate open loop over d. The prediction error has
    covariance Σ_d; the predicted estimate is driven by the filter innovations
    pushed through e^{Ad}, so its covariance F solves
    (A-BK)F + F(A-BK)ᵀ + e^{Ad}LVLᵀe^{Aᵀd} = 0 with L = ΣCᵀV⁻¹.
    """
    S = solve_care(system.A, system.B, system.Q, system.R)
    Sigma = solve_care(system.A.T, system.C.T, system.W, system.V)
    K = np.linalg.solve(system.R, system.B.T @ S)
    d = delay.total
    Sigma_d = prediction_covariance(system.A, system.W, Sigma, d)
    L = Sigma @ system.C.T @ np.linalg.inv(system.V)
    Phi = expm(system.A * d)
    injected = Phi @ L @ system.V @ L.T @ Phi.T
    F = solve_lyap_ct(system.A - system.B @ K, (injected + injected.T) / 2)
    P_track = float(np.trace(system.Q0 @ (Sigma_d + F)))
    P_effort = float(np.trace(system.R0 @ K @ F @ K.T))
    return Performance(P_track, P_effort)


@dataclass(frozen=True, eq=False)
class DtLqgSystem:
    """Discrete plant x⁺ = Ax + Bu + w, y = Cx + v with design weights (Q, R, N).

    `Q_metric` and `R_metric` weigh the reported tracking error and control
    effort; they default to the design weights.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    N: Optional[np.ndarray] = None
    Q_metric: Optional[np.ndarray] = None
    R_metric: Optional[np.ndarray] = None
    delta: Optional[float] = None

    def __post_init__(self):
        A = _matrix("A", self.A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise LqgSystemError(f"A must be square, got {A.shape}")
        B = _matrix("B", self.B)
        C = _matrix("C", self.C)
        if B.shape[0] != n or C.shape[1] != n:
            raise LqgSystemError(f"B {B.shape} and C {C.shape} do not fit a {n}-state plant")
        m, p = B.shape[1], C.shape[0]
        W = _matrix("W", self.W, (n, n))
        V = _matrix("V", self.V, (p, p))
        Q = _matrix("Q", self.Q, (n, n))
        R = _matrix("R", self.R, (m, m))
        N = _matrix("N", np.zeros((n, m)) if self.N is None else self.N, (n, m))
        Qm = Q if self.Q_metric is None else _matrix("Q_metric", self.Q_metric, (n, n))
        Rm = R if self.R_metric is None else _matrix("R_metric", self.R_metric, (m, m))
        _check_psd("W", W)
        _check_psd("V", V, definite=True)
        _check_psd("Q", Q)
        _check_psd("R", R, definite=True)
        _check_psd("Q_metric", Qm)
        _check_psd("R_metric", Rm)
        if self.delta is not None and not self.delta > 0:
            raise LqgSystemError(f"sampling period must be positive, got {self.delta}")
        _check_pairs(A, B, C, discrete=True)
        for name, value in (("A", A), ("B", B), ("C", C), ("W", W), ("V", V), ("Q", Q), ("R", R),
                            ("N", N), ("Q_metric", Qm), ("R_metric", Rm)):
            object.__setattr__(self, name, value)


@dataclass(frozen=True, eq=False)
class DtLqgSolution:
    P: np.ndarray
    Gamma: np.ndarray
    K: np.ndarray
    L: np.ndarray
    F: np.ndarray
    P_track: float
    P_effort: float
    J_star: float
    J_star_alt: float

    @property
    def cost_gap(self) -> float:
        return abs(self.J_star - self.J_star_alt) / (1.0 + abs(self.J_star))

    @property
    def performance(self) -> Performance:
        return Performance(self.P_track, self.P_effort)


def _dt_solution(system: DtLqgSystem, P: np.ndarray, Gamma: np.ndarray) -> DtLqgSolution:
    A, B, C = system.A, system.B, system.C
    Lam = B.T @ P @ B + system.R
    K = np.linalg.solve(Lam, B.T @ P @ A + system.N.T)
    innovation = C @ Gamma @ C.T + system.V
    L = Gamma @ C.T @ np.linalg.inv(innovation)
    M = A @ L @ innovation @ L.T @ A.T
    F = solve_lyap_dt(A - B @ K, (M + M.T) / 2)
    P_track = float(np.trace(system.Q_metric @ (Gamma + F)))
    P_effort = float(np.trace(system.R_metric @ K @ F @ K.T))
    J_a = float(np.trace(system.Q @ Gamma) + np.trace(P @ M))
    J_b = float(np.trace(P @ system.W) + np.trace(K.T @ Lam @ K @ Gamma))
    return DtLqgSolution(P, Gamma, K, L, F, P_track, P_effort, J_a, J_b)


def dt_performance(system: DtLqgSystem) -> DtLqgSolution:
    """Optimal stationary discrete LQG controller with a one-step predictor estimator."""
    P = solve_dare(system.A, system.B, system.Q, system.R, system.N)
    Gamma = solve_dare(system.A.T, system.C.T, system.W, system.V)
    solution = _dt_solution(system, P, Gamma)
    if solution.cost_gap > COST_IDENTITY_TOL:
        logger.warning("Discrete cost identities disagree: %.12g vs %.12g",
                       solution.J_star, solution.J_star_alt)
    return solution


@dataclass(frozen=True)
class Diverged:
    """The dropped-observation Riccati recursion has no bounded fixed point."""

    p_drop: float
    iterations: int
    norm: float


def intermittent_performance(system: DtLqgSystem, p_drop: float) -> Union[DtLqgSolution, Diverged]:
    """Performance when each observation is lost independently with probability `p_drop`.

    Iterates Γ ← AΓAᵀ + W − (1−p) AΓCᵀ(CΓCᵀ+V)⁻¹CΓAᵀ from Γ = 0 to its fixed point
    and evaluates the metrics with that Γ.
    """
    if not 0.0 <= p_drop <= 1.0:
        raise LqgSystemError(f"drop probability must lie in [0, 1], got {p_drop}")
    A, C, W, V = system.A, system.C, system.W, system.V
    keep = 1.0 - p_drop
    Gamma = np.zeros_like(W)
    norm = 0.0
    for k in range(1, settings.MARE_MAX_ITER + 1):
        AG = A @ Gamma
        gain = AG @ C.T @ np.linalg.inv(C @ Gamma @ C.T + V)
        following = AG @ A.T + W - keep * gain @ C @ Gamma @ A.T
        following = (following + following.T) / 2
        norm = float(np.linalg.norm(following, "fro"))
        if not math.isfinite(norm) or norm > settings.MARE_NORM_BOUND:
            logger.debug("Dropped-observation recursion diverged at p=%g after %d steps", p_drop, k)
            return Diverged(p_drop, k, norm)
        step = float(np.linalg.norm(following - Gamma, "fro"))
        Gamma = following
        if step <= settings.MARE_TOL * (1.0 + norm):
            break
    else:
        return Diverged(p_drop, settings.MARE_MAX_ITER, norm)

    P = solve_dare(system.A, system.B, system.Q, system.R, system.N)
    return _dt_solution(system, P, Gamma)


def closed_loop_ct(system: CtLqgSystem, solution: CtLqgSolution) -> Performance:
    """Metrics from the stationary covariance of the joint (state, estimate) process."""
    A, B, C = system.A, system.B, system.C
    K, L = solution.K, solution.L
    n = system.n
    Acl = np.block([[A, -B @ K], [L @ C, A - B @ K - L @ C]])
    noise = np.block([[system.W, np.zeros((n, n))], [np.zeros((n, n)), L @ system.V @ L.T]])
    X = solve_lyap_ct(Acl, noise)
    return Performance(
        float(np.trace(system.Q0 @ X[:n, :n])),
        float(np.trace(system.R0 @ K @ X[n:, n:] @ K.T)),
    )


def closed_loop_dt(system: DtLqgSystem, solution: DtLqgSolution) -> Performance:
    """Discrete counterpart of `closed_loop_ct` for the predictor-form loop."""
    A, B, C = system.A, system.B, system.C
    K, AL = solution.K, system.A @ solution.L
    n = A.shape[0]
    Acl = np.block([[A, -B @ K], [AL @ C, A - B @ K - AL @ C]])
    noise = np.block([[system.W, np.zeros((n, n))], [np.zeros((n, n)), AL @ system.V @ AL.T]])
    X = solve_lyap_dt(Acl, noise)
    return Performance(
        float(np.trace(system.Q_metric @ X[:n, :n])),
        float(np.trace(system.R_metric @ K @ X[n:, n:] @ K.T)),
    )
