"""Gradient descent polish of the primal objective.

Steepest descent with Armijo backtracking; the trial step length is seeded
with a Barzilai-Borwein estimate, which speeds up the flat quartic valleys
considerably while backtracking keeps every accepted step monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CanonicalProblem

__all__ = ["RefineConfig", "RefineResult", "local_minimize"]


@dataclass(frozen=True)
class RefineConfig:
    tol_grad: float = 1e-10
    max_iters: int = 10000
    armijo_c: float = 1e-4
    shrink: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass
class RefineResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    status: str  # converged | max-iters | stalled


def local_minimize(
    problem: CanonicalProblem, x0, config: RefineConfig | None = None
) -> RefineResult:
    cfg = config or RefineConfig()
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != problem.n:
        raise ValueError(f"x0 must have length {problem.n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    value = problem.objective(x)
    if not np.isfinite(value):
        raise ValueError("objective is not finite at x0")

    g = problem.gradient(x)
    gnorm = float(np.linalg.norm(g))
    step = 1.0 / (1.0 + gnorm)
    prev_x = None
    prev_g = None
    it = 0
    while it < cfg.max_iters:
        if gnorm <= cfg.tol_grad:
            return RefineResult(x, value, gnorm, it, "converged")
        if prev_x is not None:
            dx = x - prev_x
            dg = g - prev_g
            sy = float(np.dot(dx, dg))
            if sy > 1e-300:
                step = float(np.dot(dx, dx)) / sy
        step = min(max(step, 1e-12), 1e12)
        t = step
        gg = gnorm * gnorm
        while True:
            cand = x - t * g
            cand_val = problem.objective(cand)
            if cand_val <= value - cfg.armijo_c * t * gg:
                break
            t *= cfg.shrink
            if t < 1e-18:
                return RefineResult(x, value, gnorm, it, "stalled")
        prev_x, prev_g = x, g
        x, value = cand, cand_val
        g = problem.gradient(x)
        gnorm = float(np.linalg.norm(g))
        it += 1
    return RefineResult(x, value, gnorm, it, "max-iters")
