"""Saddle function assembly and the canonical dual evaluations.

For dual weights ``s`` the saddle (total complementary) function is

    Xi(x, s) = 0.5 <x, G(s) x> - V*(s) - <x, tau(s)>

with the affine assemblies

    G(s)   = A + sum_k s_k Q_k
    tau(s) = f + sum_k s_k b_k.

Maximizing out x at fixed s on the cone {G(s) >= 0} gives the dual value

    D(s) = -0.5 <G(s)^+ tau(s), tau(s)> - V*(s)

(pseudo-inverse), and adding the proximal term 0.5 * rho * ||x - x_ref||^2
gives the perturbed dual

    D_rho(s) = -0.5 <(G + rho I)^{-1} t, t> - V*(s) + 0.5 * rho * <x_ref, x_ref>,
    t = rho * x_ref + tau(s),

whose gradient is L(x(s)) - grad V*(s) with x(s) = (G + rho I)^{-1} t.
All functions are pure; failures of the SPD factorization of G + rho I are
reported as :class:`InfeasiblePointError` and double as the feasibility test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg import LinAlgError as ScipyLinAlgError

from .core import CanonicalProblem

__all__ = [
    "InfeasiblePointError",
    "PerturbationState",
    "saddle_matrix",
    "saddle_linear",
    "saddle_value",
    "min_eig",
    "dual_value",
    "perturbed_dual_value",
    "perturbed_dual_grad",
    "recover_primal",
]

DEFAULT_CUTOFF = 1e-10


class InfeasiblePointError(RuntimeError):
    """Raised when a dual point lies outside the required cone."""


@dataclass(frozen=True)
class PerturbationState:
    """Proximal anchor x_ref, weight rho > 0 and cone relaxation 0 <= mu < rho."""

    x_ref: np.ndarray
    rho: float
    mu: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_ref", np.asarray(self.x_ref, dtype=float).reshape(-1))
        if not self.rho > 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0.0 <= self.mu < self.rho:
            raise ValueError(f"mu must satisfy 0 <= mu < rho, got mu={self.mu}, rho={self.rho}")


def _check_dual_dim(problem: CanonicalProblem, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape[0] != problem.m:
        raise ValueError(f"dual vector must have length {problem.m}, got {s.shape[0]}")
    return s


def saddle_matrix(problem: CanonicalProblem, s: np.ndarray) -> np.ndarray:
    """G(s) = A + sum_k s_k Q_k (symmetric n x n)."""
    s = _check_dual_dim(problem, s)
    return problem.A + np.tensordot(s, problem.quad_map.matrices, axes=1)


def saddle_linear(problem: CanonicalProblem, s: np.ndarray) -> np.ndarray:
    """tau(s) = f + sum_k s_k b_k."""
    s = _check_dual_dim(problem, s)
    return problem.f + problem.quad_map.vectors.T @ s


def saddle_value(problem: CanonicalProblem, x: np.ndarray, s: np.ndarray) -> float:
    """Xi(x, s) = 0.5 <x, G(s) x> - V*(s) - <x, tau(s)>."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != problem.n:
        raise ValueError(f"x must have length {problem.n}, got {x.shape[0]}")
    G = saddle_matrix(problem, s)
    t = saddle_linear(problem, s)
    return float(0.5 * np.dot(x, G @ x) - problem.canonical.conj_value(s) - np.dot(x, t))


def min_eig(G: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    G = np.asarray(G, dtype=float)
    try:
        return float(np.linalg.eigvalsh(G)[0])
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigendecomposition failed for a {G.shape} matrix "
            f"(finite={np.all(np.isfinite(G))}): {exc}"
        ) from exc


def _pinv_apply(G: np.ndarray, v: np.ndarray, cutoff: float) -> np.ndarray:
    """G^+ v via eigendecomposition; modes with |lam| below cutoff * max|lam|
    are zeroed (relative threshold, scale invariant)."""
    lam, U = np.linalg.eigh(G)
    lam_max = np.max(np.abs(lam)) if lam.size else 0.0
    thresh = cutoff * lam_max
    inv = np.zeros_like(lam)
    keep = np.abs(lam) > thresh
    inv[keep] = 1.0 / lam[keep]
    return U @ (inv * (U.T @ v))


def dual_value(problem: CanonicalProblem, s: np.ndarray, cutoff: float = DEFAULT_CUTOFF) -> float:
    """Canonical dual D(s) = -0.5 <G^+ tau, tau> - V*(s).

    ``cutoff`` is the relative pseudo-inverse threshold; eigenvalues smaller
    than cutoff * max|eig| in magnitude are treated as zero modes.
    """
    if not cutoff > 0.0:
        raise ValueError("cutoff must be positive")
    s = _check_dual_dim(problem, s)
    G = saddle_matrix(problem, s)
    t = saddle_linear(problem, s)
    return float(-0.5 * np.dot(_pinv_apply(G, t, cutoff), t) - problem.canonical.conj_value(s))


def _perturbed_solve(
    problem: CanonicalProblem, s: np.ndarray, p: PerturbationState
) -> tuple[np.ndarray, np.ndarray]:
    """x(s) = (G + rho I)^{-1} (rho x_ref + tau) and the shifted rhs t."""
    G = saddle_matrix(problem, s)
    t = p.rho * p.x_ref + saddle_linear(problem, s)
    H = G + p.rho * np.eye(problem.n)
    try:
        c = cho_factor(H, lower=True, check_finite=False)
    except (ScipyLinAlgError, np.linalg.LinAlgError) as exc:
        raise InfeasiblePointError(
            f"G(s) + rho I is not positive definite at rho={p.rho}"
        ) from exc
    return cho_solve(c, t, check_finite=False), t


def perturbed_dual_value(problem: CanonicalProblem, s: np.ndarray, p: PerturbationState) -> float:
    """Perturbed dual D_rho(s); requires G(s) + rho I positive definite."""
    s = _check_dual_dim(problem, s)
    if p.x_ref.shape[0] != problem.n:
        raise ValueError("x_ref dimension mismatch")
    x, t = _perturbed_solve(problem, s, p)
    return float(
        -0.5 * np.dot(x, t)
        - problem.canonical.conj_value(s)
        + 0.5 * p.rho * np.dot(p.x_ref, p.x_ref)
    )


def perturbed_dual_grad(problem: CanonicalProblem, s: np.ndarray, p: PerturbationState) -> np.ndarray:
    """grad D_rho(s) = L(x(s)) - grad V*(s)."""
    s = _check_dual_dim(problem, s)
    if p.x_ref.shape[0] != problem.n:
        raise ValueError("x_ref dimension mismatch")
    x, _ = _perturbed_solve(problem, s, p)
    return problem.quad_map.eval(x) - problem.canonical.conj_grad(s)


def recover_primal(
    problem: CanonicalProblem,
    s: np.ndarray,
    p: PerturbationState | None = None,
    cutoff: float = DEFAULT_CUTOFF,
) -> np.ndarray:
    """Primal point induced by dual weights s.

    With a perturbation state: (G + rho I)^{-1} (rho x_ref + tau).
    Without: the pseudo-inverse solution G^+ tau.
    """
    s = _check_dual_dim(problem, s)
    if p is not None:
        x, _ = _perturbed_solve(problem, s, p)
        return x
    G = saddle_matrix(problem, s)
    t = saddle_linear(problem, s)
    return _pinv_apply(G, t, cutoff)
