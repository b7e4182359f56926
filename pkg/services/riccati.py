"""
Riccati and Lyapunov solvers.

The algebraic Riccati equations are solved with scipy's Schur-subspace solvers
and then polished with a few Newton (Kleinman / Hewer) steps. A solution is only
accepted when its residual, normalized by the size of the equation's terms, is
below `settings.TOL_RICCATI`.
"""

from typing import Optional

import numpy as np
from scipy import linalg as la

from utils.errors import LyapunovError, RiccatiError
from utils.logger import get_logger
from utils.settings import settings

logger = get_logger(__name__)


def _sym(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2


def _norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, "fro"))


def is_hurwitz(A: np.ndarray) -> bool:
    return bool(np.max(np.linalg.eigvals(A).real, initial=-np.inf) < 0)


def is_schur(A: np.ndarray) -> bool:
    return bool(np.max(np.abs(np.linalg.eigvals(A)), initial=0.0) < 1)


def care_residual(A, B, Q, R, S) -> float:
    """Relative residual of S A + Aᵀ S − S B R⁻¹ Bᵀ S + Q = 0."""
    SA = S @ A
    quad = S @ B @ np.linalg.solve(R, B.T @ S)
    res = SA + SA.T - quad + Q
    scale = 1.0 + 2 * _norm(SA) + _norm(quad) + _norm(Q)
    return _norm(res) / scale


def dare_residual(A, B, Q, R, P, N=None) -> float:
    """Relative residual of Aᵀ P A − P − (AᵀPB + N)(BᵀPB + R)⁻¹(BᵀPA + Nᵀ) + Q = 0."""
    N = np.zeros_like(B) if N is None else N
    APA = A.T @ P @ A
    G = A.T @ P @ B + N
    quad = G @ np.linalg.solve(B.T @ P @ B + R, G.T)
    res = APA - P - quad + Q
    scale = 1.0 + _norm(APA) + _norm(P) + _norm(quad) + _norm(Q)
    return _norm(res) / scale


def solve_lyap_ct(Acl: np.ndarray, Rhs: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Solve Acl F + F Aclᵀ + Rhs = 0 for a Hurwitz Acl.

    Raises:
        LyapunovError: Acl is not Hurwitz or the residual is too large.
    """
    Acl = np.atleast_2d(np.asarray(Acl, dtype=float))
    Rhs = np.atleast_2d(np.asarray(Rhs, dtype=float))
    tol = settings.TOL_RICCATI if tol is None else tol
    if not is_hurwitz(Acl):
        raise LyapunovError(f"closed-loop matrix is not Hurwitz (eigenvalues {np.linalg.eigvals(Acl)})")
    F = _sym(la.solve_continuous_lyapunov(Acl, -Rhs))
    AF = Acl @ F
    residual = _norm(AF + AF.T + Rhs) / (1.0 + 2 * _norm(AF) + _norm(Rhs))
    if residual > tol:
        raise LyapunovError(f"continuous Lyapunov residual {residual:.3e} exceeds {tol:.1e}")
    return F


def solve_lyap_dt(Acl: np.ndarray, Rhs: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Solve F = Acl F Aclᵀ + Rhs for a Schur-stable Acl."""
    Acl = np.atleast_2d(np.asarray(Acl, dtype=float))
    Rhs = np.atleast_2d(np.asarray(Rhs, dtype=float))
    tol = settings.TOL_RICCATI if tol is None else tol
    if not is_schur(Acl):
        raise LyapunovError(f"closed-loop matrix is not Schur stable (eigenvalues {np.linalg.eigvals(Acl)})")
    F = _sym(la.solve_discrete_lyapunov(Acl, Rhs))
    AFA = Acl @ F @ Acl.T
    residual = _norm(AFA - F + Rhs) / (1.0 + _norm(AFA) + _norm(F) + _norm(Rhs))
    if residual > tol:
        raise LyapunovError(f"discrete Lyapunov residual {residual:.3e} exceeds {tol:.1e}")
    return F


def solve_care(A, B, Q, R, tol: Optional[float] = None, newton_steps: Optional[int] = None) -> np.ndarray:
    """Stabilizing solution of S A + Aᵀ S − S B R⁻¹ Bᵀ S + Q = 0.

    The filter equation A Σ + Σ Aᵀ − Σ Cᵀ V⁻¹ C Σ + W = 0 is the same call with
    (Aᵀ, Cᵀ, W, V).

    Raises:
        RiccatiError: no stabilizing solution with an acceptable residual.
    """
    A, B, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R))
    tol = settings.TOL_RICCATI if tol is None else tol
    steps = settings.NEWTON_STEPS if newton_steps is None else newton_steps
    try:
        S = _sym(la.solve_continuous_are(A, B, Q, R))
    except (np.linalg.LinAlgError, ValueError) as e:
        if not np.any(Q):
            # no state weight and no stabilizing solution: the zero solution is the cost
            logger.debug("CARE has no stabilizing solution with Q = 0, using S = 0 (%s)", e)
            return np.zeros_like(A)
        raise RiccatiError(f"continuous Riccati solver failed: {e}")
    if not np.all(np.isfinite(S)):
        if not np.any(Q):
            return np.zeros_like(A)
        raise RiccatiError("continuous Riccati solver returned non-finite entries")

    for _ in range(steps):
        K = np.linalg.solve(R, B.T @ S)
        Acl = A - B @ K
        if not is_hurwitz(Acl):
            break
        try:
            refined = _sym(la.solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K)))
        except (np.linalg.LinAlgError, ValueError):
            break
        if care_residual(A, B, Q, R, refined) <= care_residual(A, B, Q, R, S):
            S = refined

    residual = care_residual(A, B, Q, R, S)
    if residual > tol and not np.any(Q):
        return np.zeros_like(A)
    if not np.all(np.isfinite(S)) or residual > tol:
        raise RiccatiError(f"continuous Riccati residual {residual:.3e} exceeds {tol:.1e}", residual=residual)
    return S


def solve_dare(A, B, Q, R, N=None, tol: Optional[float] = None,
               newton_steps: Optional[int] = None) -> np.ndarray:
    """Stabilizing solution of the discrete Riccati equation with optional cross weight N.

    The filter equation Γ = A Γ Aᵀ + W − A Γ Cᵀ (C Γ Cᵀ + V)⁻¹ C Γ Aᵀ is the same
    call with (Aᵀ, Cᵀ, W, V).
    """
    A, B, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R))
    N = np.zeros_like(B) if N is None else np.atleast_2d(np.asarray(N, dtype=float))
    tol = settings.TOL_RICCATI if tol is None else tol
    steps = settings.NEWTON_STEPS if newton_steps is None else newton_steps
    try:
        P = _sym(la.solve_discrete_are(A, B, Q, R, s=N))
    except (np.linalg.LinAlgError, ValueError) as e:
        if not np.any(Q) and not np.any(N):
            logger.debug("DARE has no stabilizing solution with Q = 0, using P = 0 (%s)", e)
            return np.zeros_like(A)
        raise RiccatiError(f"discrete Riccati solver failed: {e}")
    if not np.all(np.isfinite(P)):
        if not np.any(Q) and not np.any(N):
            return np.zeros_like(A)
        raise RiccatiError("discrete Riccati solver returned non-finite entries")

    for _ in range(steps):
        K = np.linalg.solve(B.T @ P @ B + R, B.T @ P @ A + N.T)
        Acl = A - B @ K
        if not is_schur(Acl):
            break
        stage = Q - N @ K - K.T @ N.T + K.T @ R @ K
        try:
            refined = _sym(la.solve_discrete_lyapunov(Acl.T, _sym(stage)))
        except (np.linalg.LinAlgError, ValueError):
            break
        if dare_residual(A, B, Q, R, refined, N) <= dare_residual(A, B, Q, R, P, N):
            P = refined

    residual = dare_residual(A, B, Q, R, P, N)
    if residual > tol and not np.any(Q) and not np.any(N):
        return np.zeros_like(A)
    if not np.all(np.isfinite(P)) or residual > tol:
        raise RiccatiError(f"discrete Riccati residual {residual:.3e} exceeds {tol:.1e}", residual=residual)
    return P



def finite_gramian(A: np.ndarray, Q: np.ndarray, t: float) -> np.ndarray:
    """∫₀ᵗ e^{Aᵀs} Q e^{As} ds from one block matrix exponential (Van Loan).

    The covariance integral ∫₀ᵗ e^{As} W e^{Aᵀs} ds is `finite_gramian(A.T, W, t)`.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    if t == 0:
        return np.zeros_like(Q)
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = -A.T
    block[:n, n:] = Q
    block[n:, n:] = A
    E = la.expm(block * t)
    return _sym(E[n:, n:].T @ E[:n, n:])
