"""Quadratically perturbed primal-dual outer loop and saddle certificates.

Each outer iteration t = 1, 2, ... maximizes the perturbed dual over the
relaxed cone {G(s) + mu_t I >= 0} (warm-started from the previous dual
point) and then applies the proximal primal update

    x_t = (G(s_t) + rho_t I)^{-1} (rho_t x_{t-1} + tau(s_t)).

The loop stops when the dual step ||s_t - s_{t-1}|| drops below ``eps_step``
or after ``max_outer`` iterations.  A Lyapunov monitor checks the telescoped
descent inequality

    Xi(x_t, s_t) + sum_{i<=t} (rho_i / 2) ||x_i - x_{i-1}||^2
        <= Xi(x_1, s_1) + slack

every iteration; violations indicate an insufficiently accurate inner solve
and are surfaced as warnings, never silently retried.

On top of the loop sit the certificate check with optional gradient
refinement, the non-degenerate fast path (maximize the unperturbed dual over
the interior of the cone), and the linear perturbation helper that can turn
a boundary saddle into an interior one for simple instances.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .complementary import (
    PerturbationState,
    dual_value,
    min_eig,
    recover_primal,
    saddle_linear,
    saddle_matrix,
    saddle_value,
)
from .core import CanonicalProblem
from .inner import BarrierConfig, classify, maximize_dual, restore_feasible, _maximize
from .refine import RefineConfig, local_minimize

__all__ = [
    "Schedule",
    "OuterConfig",
    "HistoryRecord",
    "SaddleResult",
    "CertificateReport",
    "saddle_solve",
    "solve_and_refine",
    "interior_solve",
    "perturb_linear",
    "certificate_report",
]

_DIVERGENCE_BOUND = 1e8
_DESCENT_SLACK = 1e-6

HISTORY_COLUMNS = (
    "iter",
    "rho",
    "mu",
    "xi",
    "primal",
    "dual",
    "step_x",
    "step_s",
    "min_eig_G",
    "canonical_residual",
)


@dataclass(frozen=True)
class Schedule:
    """Proximal weight schedule; harmonic decays as rho0 / t, t = 1, 2, ..."""

    kind: str = "constant"
    rho0: float = 0.1
    mu_ratio: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "harmonic"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.rho0 > 0.0:
            raise ValueError("rho0 must be positive")
        if not 0.0 < self.mu_ratio < 1.0:
            raise ValueError("mu_ratio must lie in (0, 1)")

    def params(self, t: int) -> tuple[float, float]:
        rho = self.rho0 / t if self.kind == "harmonic" else self.rho0
        return rho, self.mu_ratio * rho


@dataclass(frozen=True)
class OuterConfig:
    eps_step: float = 1e-6
    max_outer: int = 200
    eps_canonical: float = 1e-4
    x0: np.ndarray | None = None
    inner: BarrierConfig = field(default_factory=BarrierConfig)
    # warm-started inner solves skip the continuation and go straight to the
    # final barrier weight; the warm dual point is already near its cliff
    warm_beta0: float = 1e-8
    # far from convergence the inner maximization runs at this looser
    # gradient tolerance, tightening to inner.tol_grad as the dual steps
    # shrink (inexact proximal iterations; final accuracy is unaffected)
    inner_tol_loose: float = 1e-5

    def __post_init__(self) -> None:
        if min(self.eps_step, self.eps_canonical) <= 0.0 or self.max_outer < 1:
            raise ValueError("tolerances must be positive and max_outer >= 1")


@dataclass(frozen=True)
class HistoryRecord:
    iter: int
    rho: float
    mu: float
    xi: float
    primal: float
    dual: float
    step_x: float
    step_s: float
    min_eig_G: float
    canonical_residual: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in HISTORY_COLUMNS)


@dataclass
class SaddleResult:
    x_bar: np.ndarray
    s_bar: np.ndarray
    primal_value: float
    dual_value: float
    canonical_residual: float
    equilibrium_residual: float
    min_eig_G: float
    degeneracy: str
    outer_iters: int
    history: list[HistoryRecord]
    status: str  # converged | max-iters | diverged | boundary-detected
    certificate: str | None = None
    descent_violations: list[int] = field(default_factory=list)
    # pre-refinement point and value (equal to x_bar/primal_value otherwise)
    x_raw: np.ndarray | None = None
    primal_raw: float | None = None
    refine_iters: int = 0


@dataclass(frozen=True)
class CertificateReport:
    equilibrium_residual: float
    canonical_residual: float
    min_eig_G: float
    feasible: bool
    membership_slack: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.equilibrium_residual <= self.tol
            and self.canonical_residual <= self.tol
            and self.feasible
        )


def _initial_point(problem, config, rng) -> np.ndarray:
    if config.x0 is not None:
        x0 = np.asarray(config.x0, dtype=float).reshape(-1)
        if x0.shape[0] != problem.n:
            raise ValueError(f"x0 must have length {problem.n}")
        return x0
    return rng.uniform(-1.0, 1.0, size=problem.n)


def saddle_solve(
    problem: CanonicalProblem,
    schedule: Schedule | None = None,
    config: OuterConfig | None = None,
    s_init: np.ndarray | None = None,
    seed: int | None = None,
) -> SaddleResult:
    """Run the perturbed outer loop and return the saddle point estimate."""
    schedule = schedule or Schedule()
    config = config or OuterConfig()
    rng = np.random.default_rng(seed)
    x = _initial_point(problem, config, rng)
    if s_init is not None:
        s = np.asarray(s_init, dtype=float).reshape(-1)
    else:
        # makes Xi(x0, s0) = P(x0), a natural Lyapunov start
        s = problem.canonical.grad(problem.map_eval(x))

    history: list[HistoryRecord] = []
    violations: list[int] = []
    status = "max-iters"
    prox_sum = 0.0
    xi_first = None
    inner_cfg = config.inner
    warm_cfg = replace(config.inner, beta0=max(config.inner.beta_min, config.warm_beta0))

    last_step_s = np.inf
    for t in range(1, config.max_outer + 1):
        rho, mu = schedule.params(t)
        s_start = restore_feasible(problem, s, mu)
        tol_t = min(config.inner_tol_loose, max(inner_cfg.tol_grad, 1e-3 * last_step_s))
        inner = maximize_dual(
            problem,
            PerturbationState(x_ref=x, rho=rho, mu=mu),
            s_start,
            replace(inner_cfg, tol_grad=tol_t),
        )
        inner_cfg = warm_cfg
        s_new, x_new = inner.s_star, inner.x_star

        step_x = float(np.linalg.norm(x_new - x))
        step_s = float(np.linalg.norm(s_new - s))
        xi = saddle_value(problem, x_new, s_new)
        # telescoped Lyapunov inequality starts at the second iterate; the
        # t = 1 proximal term compares against the arbitrary initial point
        if xi_first is None:
            xi_first = xi
        else:
            prox_sum += 0.5 * rho * step_x**2
            if xi + prox_sum > xi_first + _DESCENT_SLACK:
                violations.append(t)
                warnings.warn(
                    f"descent inequality violated at outer iteration {t} "
                    f"(gap {xi + prox_sum - xi_first:.3e}); inner solve may be "
                    "insufficiently accurate",
                    RuntimeWarning,
                    stacklevel=2,
                )
        canonical_res = float(
            np.linalg.norm(problem.map_eval(x_new) - problem.canonical.conj_grad(s_new))
        )
        history.append(
            HistoryRecord(
                iter=t,
                rho=rho,
                mu=mu,
                xi=xi,
                primal=problem.objective(x_new),
                dual=dual_value(problem, s_new),
                step_x=step_x,
                step_s=step_s,
                min_eig_G=inner.min_eig_G,
                canonical_residual=canonical_res,
            )
        )
        x, s = x_new, s_new
        last_step_s = step_s
        if float(np.linalg.norm(x)) > _DIVERGENCE_BOUND:
            status = "diverged"
            break
        if step_s <= config.eps_step:
            status = "converged"
            break

    last = history[-1]
    G = saddle_matrix(problem, s)
    eq_res = float(np.linalg.norm(G @ x - saddle_linear(problem, s)))
    return SaddleResult(
        x_bar=x,
        s_bar=s,
        primal_value=last.primal,
        dual_value=last.dual,
        canonical_residual=last.canonical_residual,
        equilibrium_residual=eq_res,
        min_eig_G=last.min_eig_G,
        degeneracy=classify(last.min_eig_G),
        outer_iters=last.iter,
        history=history,
        status=status,
        descent_violations=violations,
        x_raw=x.copy(),
        primal_raw=last.primal,
    )


def solve_and_refine(
    problem: CanonicalProblem,
    schedule: Schedule | None = None,
    config: OuterConfig | None = None,
    refine: str = "auto",
    refine_config: RefineConfig | None = None,
    s_init: np.ndarray | None = None,
    seed: int | None = None,
) -> SaddleResult:
    """Outer loop plus certificate check and optional gradient refinement.

    ``refine`` is one of 'auto' (refine only when the canonical-residual
    certificate fails), 'always', or 'never'.
    """
    if refine not in ("auto", "always", "never"):
        raise ValueError(f"unknown refine mode {refine!r}")
    config = config or OuterConfig()
    result = saddle_solve(problem, schedule, config, s_init=s_init, seed=seed)
    if result.status == "diverged":
        return result

    certified = result.canonical_residual <= config.eps_canonical
    result.certificate = "global-candidate" if certified else None
    if refine == "always" or (refine == "auto" and not certified):
        rr = local_minimize(problem, result.x_bar, refine_config)
        result.x_bar = rr.x
        result.primal_value = rr.value
        result.refine_iters = rr.iterations
        result.canonical_residual = float(
            np.linalg.norm(
                problem.map_eval(rr.x) - problem.canonical.conj_grad(result.s_bar)
            )
        )
        result.equilibrium_residual = float(
            np.linalg.norm(
                saddle_matrix(problem, result.s_bar) @ rr.x
                - saddle_linear(problem, result.s_bar)
            )
        )
        if not certified:
            result.certificate = "refined-local"
    return result


def interior_solve(
    problem: CanonicalProblem,
    inner_config: BarrierConfig | None = None,
    x0: np.ndarray | None = None,
    delta: float = 1e-6,
) -> SaddleResult:
    """Fast path: maximize the unperturbed dual over the interior {G(s) > 0}.

    Returns certificate 'unique-global' when the maximizer is safely
    interior; otherwise status 'boundary-detected', in which case the caller
    should fall back to the perturbed loop.
    """
    cfg = inner_config or BarrierConfig()
    x_start = np.zeros(problem.n) if x0 is None else np.asarray(x0, dtype=float)
    s0 = problem.canonical.grad(problem.map_eval(x_start))
    s0 = restore_feasible(problem, s0, mu=0.0)
    inner = _maximize(problem, np.zeros(problem.n), 0.0, 0.0, s0, cfg)
    s = inner.s_star
    lam = inner.min_eig_G
    interior = lam > delta
    if interior:
        x = np.linalg.solve(saddle_matrix(problem, s), saddle_linear(problem, s))
        status, certificate = "converged", "unique-global"
    else:
        x = recover_primal(problem, s)
        status, certificate = "boundary-detected", None
    eq_res = float(np.linalg.norm(saddle_matrix(problem, s) @ x - saddle_linear(problem, s)))
    can_res = float(np.linalg.norm(problem.map_eval(x) - problem.canonical.conj_grad(s)))
    return SaddleResult(
        x_bar=x,
        s_bar=s,
        primal_value=problem.objective(x),
        dual_value=inner.value,
        canonical_residual=can_res,
        equilibrium_residual=eq_res,
        min_eig_G=lam,
        degeneracy=classify(lam, delta),
        outer_iters=0,
        history=[],
        status=status,
        certificate=certificate,
        x_raw=x.copy(),
        primal_raw=problem.objective(x),
    )


def perturb_linear(problem: CanonicalProblem, epsilon: float, seed: int | None = None) -> CanonicalProblem:
    """Copy of the problem with f shifted by a uniform point on the
    epsilon-sphere (seeded); epsilon = 0 returns an identical copy."""
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon == 0.0:
        return replace(problem)
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(problem.n)
    norm = float(np.linalg.norm(direction))
    while norm == 0.0:  # astronomically unlikely; retry keeps the contract exact
        direction = rng.standard_normal(problem.n)
        norm = float(np.linalg.norm(direction))
    return replace(problem, f=problem.f + (epsilon / norm) * direction)


def certificate_report(
    problem: CanonicalProblem, x, s, tol: float = 1e-6
) -> CertificateReport:
    """Saddle-point certificate at (x, s).

    Reports the equilibrium residual ||G(s) x - tau(s)||, the canonical
    residual ||L(x) - grad V*(s)||, cone feasibility of G(s), and the
    membership slack grad V*(s) - L(x) (componentwise nonnegative at a
    degenerate saddle with s on the nonnegative-orthant face).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    s = np.asarray(s, dtype=float).reshape(-1)
    G = saddle_matrix(problem, s)
    eq = float(np.linalg.norm(G @ x - saddle_linear(problem, s)))
    slack = problem.canonical.conj_grad(s) - problem.map_eval(x)
    can = float(np.linalg.norm(slack))
    lam = min_eig(G)
    return CertificateReport(
        equilibrium_residual=eq,
        canonical_residual=can,
        min_eig_G=lam,
        feasible=lam >= -tol,
        membership_slack=slack,
        tol=tol,
    )
