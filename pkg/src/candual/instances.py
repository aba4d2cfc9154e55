"""Built-in problem instances and seeded generators used by tests and the CLI."""

from __future__ import annotations

import numpy as np

from .core import CanonicalProblem, LeastSquaresCanonical, QuadraticMap

__all__ = [
    "four_well_problem",
    "one_dim_problem",
    "planted_quartic",
    "random_problem",
]


def four_well_problem() -> CanonicalProblem:
    """2-D quartic 0.5((x1+x2)^2 - 1)^2 + 0.5((x1-x2)^2 - 1)^2.

    Four global minimizers at (+-1, 0) and (0, +-1), all with value 0; the
    dual maximizer sits on the boundary of the feasible cone, which makes
    this the canonical degenerate test case.  The constant offsets live in
    the penalty targets so the quadratic map stays homogeneous.
    """
    mats = np.array(
        [
            [[2.0, 2.0], [2.0, 2.0]],
            [[2.0, -2.0], [-2.0, 2.0]],
        ]
    )
    vecs = np.zeros((2, 2))
    return CanonicalProblem(
        A=np.zeros((2, 2)),
        f=np.zeros(2),
        quad_map=QuadraticMap(mats, vecs),
        canonical=LeastSquaresCanonical(targets=np.array([1.0, 1.0]), weights=np.ones(2)),
    )


def one_dim_problem(
    a: float = 0.0, f: float = 0.0, d: float = 2.0, w: float = 1.0
) -> CanonicalProblem:
    """Scalar instance P(x) = 0.5 w (0.5 x^2 - d)^2 + 0.5 a x^2 - f x."""
    return CanonicalProblem(
        A=np.array([[a]]),
        f=np.array([f]),
        quad_map=QuadraticMap(np.array([[[1.0]]]), np.zeros((1, 1))),
        canonical=LeastSquaresCanonical(targets=np.array([d]), weights=np.array([w])),
    )


def planted_quartic(n: int, m: int, seed: int) -> tuple[CanonicalProblem, np.ndarray]:
    """Quartic least squares 0.5 sum_i (x^T S_i x - d_i)^2 with a planted optimum.

    The S_i are random positive semidefinite (M^T M / n) and the targets are
    chosen as d_i = x_true^T S_i x_true, so P(x_true) = 0 is the global
    optimum (together with -x_true by symmetry).
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    rng = np.random.default_rng(seed)
    mats = np.empty((m, n, n))
    for i in range(m):
        M = rng.standard_normal((n, n))
        S = M.T @ M / n
        mats[i] = S + S.T  # doubled so that 0.5 <x, Q x> = x^T S x
    x_true = rng.uniform(-1.0, 1.0, size=n)
    targets = 0.5 * np.einsum("kij,i,j->k", mats, x_true, x_true)
    problem = CanonicalProblem(
        A=np.zeros((n, n)),
        f=np.zeros(n),
        quad_map=QuadraticMap(mats, np.zeros((m, n))),
        canonical=LeastSquaresCanonical(targets=targets, weights=np.ones(m)),
    )
    return problem, x_true


def random_problem(n: int, m: int, seed: int, base_scale: float = 1.0) -> CanonicalProblem:
    """Dense random instance for property tests; no structure guaranteed."""
    rng = np.random.default_rng(seed)
    mats = rng.standard_normal((m, n, n))
    mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
    A = rng.standard_normal((n, n)) * base_scale
    return CanonicalProblem(
        A=0.5 * (A + A.T),
        f=rng.standard_normal(n),
        quad_map=QuadraticMap(mats, rng.standard_normal((m, n))),
        canonical=LeastSquaresCanonical(
            targets=rng.standard_normal(m),
            weights=rng.uniform(0.5, 2.0, size=m),
        ),
    )
