"""Problem representation for quartic-by-composition objectives.

The library minimizes functions of the form

    P(x) = V(L(x)) + 0.5 <x, A x> - <x, f>

where ``L`` maps ``x`` to a vector of quadratic forms

    L_k(x) = 0.5 <x, Q_k x> - <b_k, x>,        k = 1, ..., m,

and ``V`` is the strictly convex weighted least-squares penalty

    V(z) = sum_k 0.5 * w_k * (z_k - d_k)**2,   w_k > 0.

``V`` and its Legendre conjugate are available in closed form, which is what
the dual machinery builds on:

    V*(s)      = sum_k s_k**2 / (2 w_k) + d_k * s_k
    grad V(z)  = w * (z - d)
    grad V*(s) = s / w + d

All matrices are dense and symmetrized on construction; instances are
immutable and safe to share across concurrent solver runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "QuadraticComponent",
    "QuadraticMap",
    "LeastSquaresCanonical",
    "CanonicalProblem",
    "problem_to_dict",
    "problem_from_dict",
    "load_problem",
    "save_problem",
]

_SYM_TOL = 1e-12


def _as_symmetric(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    # Tiny asymmetry is removed silently; anything larger is a user error.
    skew = np.max(np.abs(M - M.T)) if M.size else 0.0
    scale = 1.0 + (np.max(np.abs(M)) if M.size else 0.0)
    if skew > 1e-8 * scale:
        raise ValueError(f"{name} is not symmetric (max asymmetry {skew:.3e})")
    return 0.5 * (M + M.T)


def _as_vector(v: np.ndarray, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {v.shape[0]}")
    return v


@dataclass(frozen=True)
class QuadraticComponent:
    """One quadratic form 0.5 <x, Q x> - <b, x> of the composite map."""

    matrix: np.ndarray
    vector: np.ndarray

    def __post_init__(self) -> None:
        M = _as_symmetric(self.matrix, "component matrix")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "vector", _as_vector(self.vector, M.shape[0], "component vector"))


@dataclass(frozen=True)
class QuadraticMap:
    """Stack of m quadratic forms sharing the primal dimension n.

    Stored as dense stacks ``matrices`` of shape (m, n, n) (each slice
    symmetric) and ``vectors`` of shape (m, n) so that evaluation and
    assembly are single vectorized contractions.
    """

    matrices: np.ndarray
    vectors: np.ndarray

    def __post_init__(self) -> None:
        mats = np.asarray(self.matrices, dtype=float)
        vecs = np.asarray(self.vectors, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError(f"matrices must have shape (m, n, n), got {mats.shape}")
        if mats.shape[0] < 1:
            raise ValueError("a quadratic map needs at least one component")
        if vecs.shape != mats.shape[:2]:
            raise ValueError(f"vectors must have shape {mats.shape[:2]}, got {vecs.shape}")
        mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "vectors", vecs)

    @classmethod
    def from_components(cls, components: list[QuadraticComponent]) -> "QuadraticMap":
        if not components:
            raise ValueError("a quadratic map needs at least one component")
        n = components[0].matrix.shape[0]
        for c in components:
            if c.matrix.shape[0] != n:
                raise ValueError("all components must share the same dimension")
        return cls(
            matrices=np.stack([c.matrix for c in components]),
            vectors=np.stack([c.vector for c in components]),
        )

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    @property
    def components(self) -> list[QuadraticComponent]:
        return [QuadraticComponent(M, b) for M, b in zip(self.matrices, self.vectors)]

    def eval(self, x: np.ndarray) -> np.ndarray:
        """Vector of quadratic-form values L_k(x) = 0.5 <x, Q_k x> - <b_k, x>."""
        x = _as_vector(x, self.n, "x")
        Mx = self.matrices @ x
        return 0.5 * (Mx @ x) - self.vectors @ x

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        """Evaluate the map on a batch of points, shape (p, n) -> (p, m)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ValueError(f"X must have shape (p, {self.n}), got {X.shape}")
        quad = 0.5 * np.einsum("kij,pi,pj->pk", self.matrices, X, X, optimize=True)
        return quad - X @ self.vectors.T


@dataclass(frozen=True)
class LeastSquaresCanonical:
    """Weighted least-squares penalty and its exact Legendre conjugate."""

    targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.targets, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape != d.shape:
            raise ValueError("targets and weights must have equal length")
        if d.shape[0] < 1:
            raise ValueError("need at least one component")
        if not np.all(w > 0.0):
            raise ValueError("all weights must be strictly positive")
        object.__setattr__(self, "targets", d)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.targets.shape[0]

    def value(self, z: np.ndarray) -> float:
        """V(z) = sum 0.5 w (z - d)^2."""
        z = _as_vector(z, self.m, "z")
        r = z - self.targets
        return float(0.5 * np.dot(self.weights * r, r))

    def grad(self, z: np.ndarray) -> np.ndarray:
        """grad V(z) = w * (z - d); this is the dual mapping s(z)."""
        z = _as_vector(z, self.m, "z")
        return self.weights * (z - self.targets)

    def conj_value(self, s: np.ndarray) -> float:
        """Legendre conjugate V*(s) = sum s^2/(2w) + d*s."""
        s = _as_vector(s, self.m, "s")
        return float(np.dot(s, 0.5 * s / self.weights + self.targets))

    def conj_grad(self, s: np.ndarray) -> np.ndarray:
        """grad V*(s) = s / w + d, the inverse of the dual mapping."""
        s = _as_vector(s, self.m, "s")
        return s / self.weights + self.targets

    def value_batch(self, Z: np.ndarray) -> np.ndarray:
        R = np.asarray(Z, dtype=float) - self.targets
        return 0.5 * (R * R) @ self.weights


@dataclass(frozen=True)
class CanonicalProblem:
    """Full problem instance: base quadratic (A, f) plus composite part."""

    A: np.ndarray
    f: np.ndarray
    quad_map: QuadraticMap
    canonical: LeastSquaresCanonical

    def __post_init__(self) -> None:
        A = _as_symmetric(self.A, "A")
        if A.shape[0] != self.quad_map.n:
            raise ValueError(
                f"A has dimension {A.shape[0]} but the map expects {self.quad_map.n}"
            )
        if self.quad_map.m != self.canonical.m:
            raise ValueError(
                f"map has {self.quad_map.m} components but the penalty has {self.canonical.m}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "f", _as_vector(self.f, A.shape[0], "f"))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.quad_map.m

    # flattened views cached for the solver hot loops (instances are frozen)
    @cached_property
    def _mats_flat(self) -> np.ndarray:
        return self.quad_map.matrices.reshape(self.m, self.n * self.n)

    @cached_property
    def _base_flat(self) -> np.ndarray:
        return self.A.reshape(self.n * self.n)

    @cached_property
    def _eye(self) -> np.ndarray:
        return np.eye(self.n)

    def map_eval(self, x: np.ndarray) -> np.ndarray:
        return self.quad_map.eval(x)

    def objective(self, x: np.ndarray) -> float:
        """P(x) = V(L(x)) + 0.5 <x, A x> - <f, x>."""
        x = _as_vector(x, self.n, "x")
        z = self.quad_map.eval(x)
        return self.canonical.value(z) + float(0.5 * np.dot(x, self.A @ x) - np.dot(self.f, x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """grad P(x) = (A + sum_k s_k Q_k) x - (f + sum_k s_k b_k), s = grad V(L(x))."""
        x = _as_vector(x, self.n, "x")
        s = self.canonical.grad(self.quad_map.eval(x))
        Mx = self.quad_map.matrices @ x
        return self.A @ x - self.f + Mx.T @ s - self.quad_map.vectors.T @ s

    def objective_batch(self, X: np.ndarray) -> np.ndarray:
        """Objective on a batch of points, shape (p, n) -> (p,)."""
        X = np.asarray(X, dtype=float)
        Z = self.quad_map.eval_batch(X)
        quad = 0.5 * np.einsum("ij,pi,pj->p", self.A, X, X, optimize=True)
        return self.canonical.value_batch(Z) + quad - X @ self.f


# ---------------------------------------------------------------------------
# JSON problem schema
#
# { "n", "m", "A": n x n, "f": n-array,
#   "lambda": [ {"A": n x n, "b": n-array} x m ],
#   "targets": m-array, "weights": m-array }
# ---------------------------------------------------------------------------


def problem_to_dict(problem: CanonicalProblem) -> dict:
    return {
        "n": problem.n,
        "m": problem.m,
        "A": problem.A.tolist(),
        "f": problem.f.tolist(),
        "lambda": [
            {"A": M.tolist(), "b": b.tolist()}
            for M, b in zip(problem.quad_map.matrices, problem.quad_map.vectors)
        ],
        "targets": problem.canonical.targets.tolist(),
        "weights": problem.canonical.weights.tolist(),
    }


def problem_from_dict(data: dict) -> CanonicalProblem:
    try:
        n = int(data["n"])
        m = int(data["m"])
        comps = data["lambda"]
        if len(comps) != m:
            raise ValueError(f"'lambda' lists {len(comps)} components, expected m={m}")
        quad_map = QuadraticMap(
            matrices=np.array([c["A"] for c in comps], dtype=float),
            vectors=np.array([c["b"] for c in comps], dtype=float),
        )
        if quad_map.n != n:
            raise ValueError(f"component dimension {quad_map.n} does not match n={n}")
        canonical = LeastSquaresCanonical(
            targets=np.array(data["targets"], dtype=float),
            weights=np.array(data["weights"], dtype=float),
        )
        return CanonicalProblem(
            A=np.array(data["A"], dtype=float),
            f=np.array(data["f"], dtype=float),
            quad_map=quad_map,
            canonical=canonical,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed problem document: {exc}") from exc


def load_problem(path: str | Path) -> CanonicalProblem:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid JSON in {path}: {exc}") from exc
    return problem_from_dict(data)


def save_problem(problem: CanonicalProblem, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2, sort_keys=True)
        fh.write("\n")
