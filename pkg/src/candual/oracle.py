"""Brute-force verification helpers: grid search and seeded multistart.

These are intentionally simple and independent of the dual solvers; tests
use them as ground truth on small or planted instances.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import CanonicalProblem
from .refine import RefineConfig, local_minimize

__all__ = ["grid_search", "grid_local_minima", "multistart"]

_MAX_GRID_DIM = 3
_MAX_RESOLUTION = 2001


def _grid_axes(bounds, n: int, resolution: int) -> list[np.ndarray]:
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape == (2,):
        bounds = np.tile(bounds, (n, 1))
    if bounds.shape != (n, 2):
        raise ValueError(f"bounds must have shape (2,) or ({n}, 2)")
    return [np.linspace(lo, hi, resolution) for lo, hi in bounds]


def _grid_points(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_search(
    problem: CanonicalProblem,
    bounds,
    resolution: int,
    polish: bool = False,
    refine_config: RefineConfig | None = None,
) -> tuple[np.ndarray, float]:
    """Exhaustive grid evaluation; returns the best point and its value.

    Limited to n <= 3 and resolution <= 2001 per axis.  With ``polish`` the
    best grid point is handed to the local minimizer.
    """
    if problem.n > _MAX_GRID_DIM:
        raise ValueError(f"grid search supports n <= {_MAX_GRID_DIM}, got n={problem.n}")
    if resolution > _MAX_RESOLUTION or resolution < 2:
        raise ValueError(f"resolution must lie in [2, {_MAX_RESOLUTION}]")
    axes = _grid_axes(bounds, problem.n, resolution)
    points = _grid_points(axes)
    values = np.empty(points.shape[0])
    chunk = 200_000
    for lo in range(0, points.shape[0], chunk):
        values[lo : lo + chunk] = problem.objective_batch(points[lo : lo + chunk])
    best = int(np.argmin(values))
    x_best, v_best = points[best], float(values[best])
    if polish:
        res = local_minimize(problem, x_best, refine_config)
        if res.value <= v_best:
            x_best, v_best = res.x, res.value
    return x_best, v_best


def grid_local_minima(
    problem: CanonicalProblem, bounds, resolution: int
) -> list[tuple[np.ndarray, float]]:
    """Grid points that beat all their axis-aligned neighbours, sorted by value.

    Useful for seeding the local minimizer from every basin of a small
    problem; same dimension limits as :func:`grid_search`.
    """
    if problem.n > _MAX_GRID_DIM:
        raise ValueError(f"grid search supports n <= {_MAX_GRID_DIM}, got n={problem.n}")
    axes = _grid_axes(bounds, problem.n, resolution)
    points = _grid_points(axes)
    shape = tuple(len(a) for a in axes)
    values = problem.objective_batch(points).reshape(shape)
    is_min = np.ones(shape, dtype=bool)
    for axis in range(values.ndim):
        lo = np.roll(values, 1, axis=axis)
        hi = np.roll(values, -1, axis=axis)
        # roll wraps around; boundary points only compete with inner neighbours
        idx_first = [slice(None)] * values.ndim
        idx_last = [slice(None)] * values.ndim
        idx_first[axis] = 0
        idx_last[axis] = -1
        lo[tuple(idx_first)] = np.inf
        hi[tuple(idx_last)] = np.inf
        is_min &= (values <= lo) & (values <= hi)
    out = [
        (points[i], float(values.ravel()[i]))
        for i in np.flatnonzero(is_min.ravel())
    ]
    out.sort(key=lambda t: t[1])
    return out


def multistart(
    problem: CanonicalProblem,
    n_starts: int,
    seed: int,
    bounds=(-2.0, 2.0),
    refine_config: RefineConfig | None = None,
) -> tuple[np.ndarray, float]:
    """Best of ``n_starts`` seeded local minimizations started in a box."""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape == (2,):
        bounds = np.tile(bounds, (problem.n, 1))
    rng = np.random.default_rng(seed)
    x_best, v_best = None, np.inf
    for _ in range(n_starts):
        x0 = rng.uniform(bounds[:, 0], bounds[:, 1])
        res = local_minimize(problem, x0, refine_config)
        if res.value < v_best:
            x_best, v_best = res.x, res.value
    return x_best, float(v_best)
