"""Barrier BFGS maximizer for the strictly concave perturbed dual.

The feasible set is the relaxed spectrahedron {s : G(s) + mu I >= 0}. The
maximization runs a log-det barrier continuation,

    F_beta(s) = D_rho(s) + beta * logdet(G(s) + mu I),

with BFGS ascent and Armijo backtracking inside each stage; the line search
rejects any trial whose Cholesky factorization of G + mu I fails, so every
accepted iterate is strictly feasible.  The perturbed dual is strictly
concave on the feasible set (its Hessian is bounded above by -diag(1/w)),
hence each stage has a unique maximizer.

The same machinery with rho = mu = 0 maximizes the unperturbed dual over the
interior {G(s) > 0}; that path is used by the non-degenerate fast solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .complementary import InfeasiblePointError, PerturbationState, min_eig, saddle_matrix
from .core import CanonicalProblem

__all__ = [
    "BarrierConfig",
    "InnerResult",
    "InfeasibleProblemError",
    "barrier_value",
    "barrier_grad",
    "maximize_dual",
    "restore_feasible",
    "classify",
]

_ARMIJO_C1 = 1e-4
_ARMIJO_SHRINK = 0.5
_MIN_STEP = 1e-16


class InfeasibleProblemError(RuntimeError):
    """Raised when no strictly feasible dual point can be found."""


@dataclass(frozen=True)
class BarrierConfig:
    """Continuation and stopping parameters for the inner maximization.

    ``beta_min`` stops at 1e-8: at degenerate (boundary) maximizers the
    smallest eigenvalue of G + mu I scales with beta, and below 1e-8 the
    barrier gradient of a double-precision factorization is quantized more
    coarsely than ``tol_grad`` itself, so tighter weights only add noise.
    """

    beta0: float = 1e-2
    beta_shrink: float = 0.1
    beta_min: float = 1e-8
    tol_grad: float = 1e-8
    max_inner_iters: int = 500

    def __post_init__(self) -> None:
        if not 0.0 < self.beta_shrink < 1.0:
            raise ValueError("beta_shrink must lie in (0, 1)")
        if not self.beta_min <= self.beta0:
            raise ValueError("beta_min must not exceed beta0")
        if not self.tol_grad > 0.0:
            raise ValueError("tol_grad must be positive")


@dataclass
class InnerResult:
    """Outcome of one inner maximization.

    ``grad_norm`` is the gradient norm of the final barrier stage
    (objective plus beta_min * logdet), i.e. the stationarity actually
    enforced; at boundary solutions the raw dual gradient stays O(1).
    """

    s_star: np.ndarray
    value: float
    grad_norm: float
    min_eig_G: float
    iterations: int
    status: str
    x_star: np.ndarray
    stage_values: list[float] = field(default_factory=list)


class _Eval:
    __slots__ = ("dual_value", "dual_grad", "logdet", "traces", "x", "L_mu", "Grho", "U", "_curv")

    def __init__(self, dual_value, dual_grad, logdet, traces, x, L_mu, Grho, U):
        self.dual_value = dual_value
        self.dual_grad = dual_grad
        self.logdet = logdet
        self.traces = traces
        self.x = x
        self.L_mu = L_mu
        self.Grho = Grho
        self.U = U
        self._curv = None

    def curv_diag(self, problem: CanonicalProblem) -> np.ndarray:
        """Exact diagonal of the negated dual Hessian,
        1/w_k + u_k^T (G + rho I)^{-1} u_k with u_k = Q_k x - b_k."""
        if self._curv is None:
            Z = np.linalg.solve(self.Grho, self.U.T)
            self._curv = (self.U * Z.T).sum(axis=1) + 1.0 / problem.canonical.weights
        return self._curv


def _chol(M: np.ndarray):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None


def _assemble(problem: CanonicalProblem, s, rho, mu):
    """(Gmu, Grho) as n x n arrays, or None when G + mu I is not PD.

    One GEMV assembles G; diagonal shifts are applied in place on owned
    copies.  Feasibility is the Cholesky test on G + mu I; G + rho I is then
    positive definite automatically because rho > mu.
    """
    n = problem.n
    flat = problem._base_flat + s @ problem._mats_flat
    if rho == mu:
        if mu != 0.0:
            flat[:: n + 1] += mu
        gmu = grho = flat.reshape(n, n)
    elif mu == 0.0:
        grho_flat = flat.copy()
        grho_flat[:: n + 1] += rho
        gmu, grho = flat.reshape(n, n), grho_flat.reshape(n, n)
    else:
        gmu_flat = flat.copy()
        gmu_flat[:: n + 1] += mu
        flat[:: n + 1] += rho
        gmu, grho = gmu_flat.reshape(n, n), flat.reshape(n, n)
    return gmu, grho


def _conj_value(problem: CanonicalProblem, s) -> float:
    c = problem.canonical
    return float(np.dot(s, 0.5 * s / c.weights + c.targets))


def _eval_full(problem: CanonicalProblem, s, x_ref, rho, mu) -> _Eval:
    """Dual value/gradient plus the beta-independent barrier pieces."""
    Gmu, Grho = _assemble(problem, s, rho, mu)
    L_mu = _chol(Gmu)
    if L_mu is None:
        raise InfeasiblePointError("G(s) + mu I is not positive definite")
    tau = problem.f + s @ problem.quad_map.vectors
    t = rho * x_ref + tau if rho != 0.0 else tau
    x = np.linalg.solve(Grho, t)
    dual_value = (
        -0.5 * float(np.dot(x, t))
        - _conj_value(problem, s)
        + (0.5 * rho * float(np.dot(x_ref, x_ref)) if rho != 0.0 else 0.0)
    )
    logdet = 2.0 * float(np.sum(np.log(np.diagonal(L_mu))))
    Minv = np.linalg.solve(Gmu, problem._eye)
    traces = problem._mats_flat @ Minv.reshape(-1)  # tr(M^-1 Q_k), Q_k symmetric
    Mx = problem.quad_map.matrices @ x
    z = 0.5 * (Mx @ x) - problem.quad_map.vectors @ x
    dual_grad = z - s / problem.canonical.weights - problem.canonical.targets
    U = Mx - problem.quad_map.vectors  # rows u_k = Q_k x - b_k
    return _Eval(dual_value, dual_grad, logdet, traces, x, L_mu, Grho, U)


def _eval_value(problem: CanonicalProblem, s, x_ref, rho, mu):
    """(dual value, logdet) or None when the point is infeasible."""
    Gmu, Grho = _assemble(problem, s, rho, mu)
    L_mu = _chol(Gmu)
    if L_mu is None:
        return None
    tau = problem.f + s @ problem.quad_map.vectors
    t = rho * x_ref + tau if rho != 0.0 else tau
    x = np.linalg.solve(Grho, t)
    dual_value = (
        -0.5 * float(np.dot(x, t))
        - _conj_value(problem, s)
        + (0.5 * rho * float(np.dot(x_ref, x_ref)) if rho != 0.0 else 0.0)
    )
    logdet = 2.0 * float(np.sum(np.log(np.diagonal(L_mu))))
    return dual_value, logdet


def barrier_value(
    problem: CanonicalProblem, s, p: PerturbationState, beta: float
) -> float:
    """D_rho(s) + beta * logdet(G(s) + mu I)."""
    out = _eval_value(problem, np.asarray(s, dtype=float), p.x_ref, p.rho, p.mu)
    if out is None:
        raise InfeasiblePointError("G(s) + mu I is not positive definite")
    dual, logdet = out
    return dual + beta * logdet


def barrier_grad(
    problem: CanonicalProblem, s, p: PerturbationState, beta: float
) -> np.ndarray:
    """Gradient of the barrier objective: grad D_rho + beta * tr((G+muI)^{-1} Q_k)."""
    ev = _eval_full(problem, np.asarray(s, dtype=float), p.x_ref, p.rho, p.mu)
    return ev.dual_grad + beta * ev.traces


def _boundary_cap(problem: CanonicalProblem, ev: _Eval, d: np.ndarray) -> float:
    """Largest step t with G(s + t d) + mu I >= 0 (fraction-to-boundary rule).

    Uses the Cholesky factor of G(s) + mu I: feasibility along d reduces to
    1 + t * eig(L^-1 D L^-T) >= 0 with D = sum_k d_k Q_k.
    """
    D = (d @ problem._mats_flat).reshape(problem.n, problem.n)
    Y = solve_triangular(ev.L_mu, D, lower=True, check_finite=False)
    W = solve_triangular(ev.L_mu, Y.T, lower=True, check_finite=False)
    lam_min = float(np.linalg.eigvalsh(0.5 * (W + W.T))[0])
    if lam_min >= -1e-300:
        return np.inf
    return -1.0 / lam_min


def _stage_betas(cfg: BarrierConfig) -> list[float]:
    betas = []
    b = cfg.beta0
    while b > cfg.beta_min * (1.0 + 1e-9):
        betas.append(b)
        b *= cfg.beta_shrink
    betas.append(cfg.beta_min)
    return betas


def _maximize(
    problem: CanonicalProblem,
    x_ref: np.ndarray,
    rho: float,
    mu: float,
    s0: np.ndarray,
    cfg: BarrierConfig,
) -> InnerResult:
    s = np.array(s0, dtype=float).reshape(-1)
    if s.shape[0] != problem.m:
        raise ValueError(f"s0 must have length {problem.m}")
    ev = _eval_full(problem, s, x_ref, rho, mu)  # raises if s0 infeasible
    total_iters = 0
    status = "converged"
    stage_values: list[float] = []

    betas = _stage_betas(cfg)
    final_stalled = False
    for beta in betas:
        stalled = False
        # intermediate stages only need accuracy commensurate with the
        # barrier weight; the final stage enforces the configured tolerance
        tol = cfg.tol_grad if beta == betas[-1] else max(cfg.tol_grad, 1e-2 * beta)
        g = ev.dual_grad + beta * ev.traces  # ascent gradient

        def seed_H() -> np.ndarray:
            # exact dual diagonal curvature plus a cliff estimate for the
            # barrier (a single small eigenvalue dominates tr((M^-1 Q)^2),
            # where it is ~ tr(M^-1 Q)^2)
            return np.diag(1.0 / (ev.curv_diag(problem) + beta * ev.traces**2))

        def tol_effective() -> float:
            # the barrier gradient moves by ~ curvature * ulp(s) per least
            # significant bit of s; below that resolution the gradient test
            # is pure quantization noise (binds only at boundary cliffs)
            cliff = float(np.max(beta * ev.traces**2 * (np.abs(s) + 1e-16)))
            return max(tol, 16.0 * np.finfo(float).eps * cliff)

        H = seed_H()
        it = 0
        value_blind = False
        while math.sqrt(float(np.dot(g, g))) > tol_effective() and it < cfg.max_inner_iters:
            d = H @ g
            deriv = float(np.dot(g, d))
            if deriv <= 0.0:
                H = seed_H()
                d = H @ g
                deriv = float(np.dot(g, d))
            F_cur = ev.dual_value + beta * ev.logdet
            gnorm_cur = math.sqrt(float(np.dot(g, g)))
            step = 1.0
            capped = False
            accepted = ev_new = g_new = None
            while step >= _MIN_STEP:
                cand = s + step * d
                if value_blind:
                    # near the optimum the value is quadratically flat and
                    # drowns in rounding noise; accept on gradient decrease
                    try:
                        cand_ev = _eval_full(problem, cand, x_ref, rho, mu)
                    except InfeasiblePointError:
                        cand_ev = None
                    if cand_ev is not None:
                        cand_g = cand_ev.dual_grad + beta * cand_ev.traces
                        if math.sqrt(float(np.dot(cand_g, cand_g))) < gnorm_cur:
                            accepted, ev_new, g_new = cand, cand_ev, cand_g
                            break
                        step *= _ARMIJO_SHRINK
                        continue
                else:
                    probe = _eval_value(problem, cand, x_ref, rho, mu)
                    if probe is not None:
                        F_cand = probe[0] + beta * probe[1]
                        if F_cand >= F_cur + _ARMIJO_C1 * step * deriv:
                            if F_cand - F_cur <= 1e-15 * (1.0 + abs(F_cur)):
                                value_blind = True
                                continue  # retry this trial in gradient mode
                            accepted = cand
                            break
                        step *= _ARMIJO_SHRINK
                        continue
                if not capped:
                    # trial crossed the cone boundary: jump to just inside it
                    cap = 0.999 * _boundary_cap(problem, ev, d)
                    step = cap if cap < step else step * _ARMIJO_SHRINK
                    capped = True
                else:
                    step *= _ARMIJO_SHRINK
            if accepted is None:
                stalled = True
                break
            if ev_new is None:
                ev_new = _eval_full(problem, accepted, x_ref, rho, mu)
                g_new = ev_new.dual_grad + beta * ev_new.traces
            sk = accepted - s
            yk = g - g_new  # gradient change of the minimized objective -F
            sy = float(np.dot(sk, yk))
            if sy > 1e-12 * math.sqrt(float(np.dot(sk, sk)) * float(np.dot(yk, yk))):
                Hy = H @ yk
                H += np.outer(sk, sk) * ((sy + float(np.dot(yk, Hy))) / sy**2)
                H -= (np.outer(Hy, sk) + np.outer(sk, Hy)) / sy
            s, ev, g = accepted, ev_new, g_new
            it += 1
            total_iters += 1
        stage_values.append(ev.dual_value)
        # a stalled intermediate stage is finished to working precision;
        # move on to the next barrier weight
        final_stalled = stalled
        status = "converged" if math.sqrt(float(np.dot(g, g))) <= tol_effective() else "max-iters"
    if final_stalled and status != "converged":
        status = "line-search-stall"

    return InnerResult(
        s_star=s,
        value=ev.dual_value,
        grad_norm=float(np.linalg.norm(g)),
        min_eig_G=min_eig(saddle_matrix(problem, s)),
        iterations=total_iters,
        status=status,
        x_star=ev.x,
        stage_values=stage_values,
    )


def maximize_dual(
    problem: CanonicalProblem,
    p: PerturbationState,
    s_init: np.ndarray,
    cfg: BarrierConfig | None = None,
) -> InnerResult:
    """Maximize the perturbed dual over {s : G(s) + mu I >= 0}.

    ``s_init`` must be strictly feasible; use :func:`restore_feasible` first
    when it is not.
    """
    cfg = cfg or BarrierConfig()
    if p.x_ref.shape[0] != problem.n:
        raise ValueError("x_ref dimension mismatch")
    return _maximize(problem, p.x_ref, p.rho, p.mu, np.asarray(s_init, dtype=float), cfg)


def restore_feasible(problem: CanonicalProblem, s, mu: float) -> np.ndarray:
    """Shift s to a strictly feasible point of {G(s) + mu I >= 0}.

    Targets lambda_min(G) >= -mu/2 (or a small positive margin when mu = 0),
    first along a direction e with sum_k e_k Q_k positive definite, then by
    shrinking toward s = 0 when G(0) = A is itself feasible.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape[0] != problem.m:
        raise ValueError(f"s must have length {problem.m}")
    target = -0.5 * mu if mu > 0.0 else 1e-6
    lam = min_eig(saddle_matrix(problem, s))
    if lam >= target:
        return s

    directions = [np.ones(problem.m)]
    directions += [e for e in np.eye(problem.m)]
    directions += [-e for e in np.eye(problem.m)]
    for e in directions:
        D = np.tensordot(e, problem.quad_map.matrices, axes=1)
        lam_dir = min_eig(D)
        if lam_dir <= 1e-12 * (1.0 + float(np.max(np.abs(D)))):
            continue
        t = (target - lam) / lam_dir
        for _ in range(100):
            cand = s + t * e
            if min_eig(saddle_matrix(problem, cand)) >= target:
                return cand
            t *= 1.5
        break

    lam_zero = min_eig(problem.A)
    if lam_zero > target:
        gamma = min(1.0, (target - lam) / (lam_zero - lam))
        for _ in range(100):
            cand = (1.0 - gamma) * s
            if min_eig(saddle_matrix(problem, cand)) >= target:
                return cand
            gamma = min(1.0, gamma * 1.2 + 1e-3)
    raise InfeasibleProblemError(
        f"could not find a strictly feasible dual point (mu={mu}, "
        f"lambda_min(G(s))={lam:.3e})"
    )


def classify(min_eig_G: float, delta: float = 1e-6) -> str:
    """'nondegenerate' when G is safely positive definite, else 'degenerate'."""
    if not delta > 0.0:
        raise ValueError("delta must be positive")
    return "nondegenerate" if min_eig_G > delta else "degenerate"
