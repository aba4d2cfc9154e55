"""Sensor network localization: instance model, objective encoding, fixtures.

A network instance carries M anchors at known positions, N sensors at
unknown positions, and noisy range measurements on a subset of sensor-sensor
and sensor-anchor pairs.  The squared-residual objective

    sum_{(i,j)} (||x_i - x_j||^2 - d_ij^2)^2
      + sum_{(i,k)} (||x_i - a_k||^2 - e_ik^2)^2

is encoded as a composite-quadratic problem over the stacked coordinate
vector x in R^(dim*N): each edge contributes one quadratic-map component
with weight 2 so the assembled objective matches the sum above exactly.
Edge indices are 1-based, mirroring the JSON schema.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import CanonicalProblem, LeastSquaresCanonical, QuadraticMap

__all__ = [
    "SNLInstance",
    "build_problem",
    "generate_instance",
    "perturb_distance",
    "rmsd",
    "two_branch_fixture",
    "rigid_fixture",
    "branch_positions",
    "instance_to_dict",
    "instance_from_dict",
    "load_instance",
    "save_instance",
    "write_positions_csv",
]

ANCHORS_2D = np.array(
    [[0.125, 0.125], [0.125, 0.875], [0.875, 0.125], [0.875, 0.875]]
)

# Hand-built 6-sensor network whose sensors 2, 3 and 5 admit two exact
# positions each: sensor 2 rotates about anchor 1, the pair {3, 5} reflects
# rigidly through anchor 4.
_SIX_SENSOR_TRUE = np.array(
    [
        [0.5818, 0.0968],
        [0.0791, 0.0091],
        [0.7342, 0.8470],
        [0.1936, 0.6169],
        [0.8506, 0.7257],
        [0.4301, 0.2720],
    ]
)
_SIX_SENSOR_ALT = {
    2: np.array([0.0091, 0.1709]),
    3: np.array([1.0158, 0.9030]),
    5: np.array([0.8994, 1.0243]),
}
_SIX_SENSOR_RANGE = 0.65


@dataclass(frozen=True)
class SNLInstance:
    """Localization instance; sensor/anchor indices in edges are 1-based."""

    dim: int
    anchors: np.ndarray
    n_sensors: int
    sensor_edges: tuple[tuple[int, int, float], ...]
    anchor_edges: tuple[tuple[int, int, float], ...]
    radio_range: float
    sigma: float
    true_positions: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        anchors = np.asarray(self.anchors, dtype=float)
        if anchors.ndim != 2 or anchors.shape[1] != self.dim:
            raise ValueError(f"anchors must have shape (M, {self.dim})")
        object.__setattr__(self, "anchors", anchors)
        if self.n_sensors < 1:
            raise ValueError("need at least one sensor")
        object.__setattr__(
            self, "sensor_edges", tuple((int(i), int(j), float(d)) for i, j, d in self.sensor_edges)
        )
        object.__setattr__(
            self, "anchor_edges", tuple((int(i), int(k), float(e)) for i, k, e in self.anchor_edges)
        )
        for i, j, d in self.sensor_edges:
            if not (1 <= i < j <= self.n_sensors):
                raise ValueError(f"sensor edge ({i}, {j}) out of range")
            if not d > 0.0:
                raise ValueError("all edge distances must be positive")
        for i, k, e in self.anchor_edges:
            if not (1 <= i <= self.n_sensors and 1 <= k <= anchors.shape[0]):
                raise ValueError(f"anchor edge ({i}, {k}) out of range")
            if not e > 0.0:
                raise ValueError("all edge distances must be positive")
        if self.true_positions is not None:
            tp = np.asarray(self.true_positions, dtype=float)
            if tp.shape != (self.n_sensors, self.dim):
                raise ValueError(f"true_positions must have shape ({self.n_sensors}, {self.dim})")
            object.__setattr__(self, "true_positions", tp)
            if self.sigma == 0.0:
                self._check_noiseless_consistency()

    def _check_noiseless_consistency(self) -> None:
        tp = self.true_positions
        for i, j, d in self.sensor_edges:
            true_d = float(np.linalg.norm(tp[i - 1] - tp[j - 1]))
            if abs(true_d - d) > 1e-12 * max(1.0, d):
                raise ValueError(
                    f"noiseless sensor edge ({i}, {j}) distance {d} does not match "
                    f"the ground truth {true_d}"
                )
        for i, k, e in self.anchor_edges:
            true_e = float(np.linalg.norm(tp[i - 1] - self.anchors[k - 1]))
            if abs(true_e - e) > 1e-12 * max(1.0, e):
                raise ValueError(
                    f"noiseless anchor edge ({i}, {k}) distance {e} does not match "
                    f"the ground truth {true_e}"
                )

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]

    def is_connected(self) -> bool:
        """True when every sensor reaches the anchor set through the edges."""
        adj: dict[int, set[int]] = {i: set() for i in range(self.n_sensors + 1)}
        for i, j, _ in self.sensor_edges:
            adj[i].add(j)
            adj[j].add(i)
        for i, _, _ in self.anchor_edges:
            adj[i].add(0)  # node 0 stands for the whole anchor set
            adj[0].add(i)
        seen = {0}
        stack = [0]
        while stack:
            for nbr in adj[stack.pop()]:
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        return len(seen) == self.n_sensors + 1


def build_problem(inst: SNLInstance) -> CanonicalProblem:
    """Encode the squared-residual objective as a composite-quadratic problem.

    Per sensor edge: component matrix 2 (E_i - E_j)(E_i - E_j)^T, no linear
    term, target d^2.  Per anchor edge: matrix 2 E_i E_i^T, linear term
    2 f_ik (anchor coordinates in block i), target e^2 - ||a_k||^2.  All
    weights are 2, leaving the problem-level linear term f at zero.
    """
    dim, N = inst.dim, inst.n_sensors
    n = dim * N
    m = len(inst.sensor_edges) + len(inst.anchor_edges)
    if m == 0:
        raise ValueError("instance has no edges")
    mats = np.zeros((m, n, n))
    vecs = np.zeros((m, n))
    targets = np.empty(m)
    idx = 0
    eye = np.eye(dim)
    for i, j, d in inst.sensor_edges:
        bi, bj = (i - 1) * dim, (j - 1) * dim
        mats[idx, bi : bi + dim, bi : bi + dim] = 2.0 * eye
        mats[idx, bj : bj + dim, bj : bj + dim] = 2.0 * eye
        mats[idx, bi : bi + dim, bj : bj + dim] = -2.0 * eye
        mats[idx, bj : bj + dim, bi : bi + dim] = -2.0 * eye
        targets[idx] = d * d
        idx += 1
    for i, k, e in inst.anchor_edges:
        bi = (i - 1) * dim
        a = inst.anchors[k - 1]
        mats[idx, bi : bi + dim, bi : bi + dim] = 2.0 * eye
        vecs[idx, bi : bi + dim] = 2.0 * a
        targets[idx] = e * e - float(np.dot(a, a))
        idx += 1
    return CanonicalProblem(
        A=np.zeros((n, n)),
        f=np.zeros(n),
        quad_map=QuadraticMap(mats, vecs),
        canonical=LeastSquaresCanonical(targets=targets, weights=np.full(m, 2.0)),
    )


def perturb_distance(d: float, xi: float) -> float:
    """Multiplicative noise with a hard floor: max(1 + xi, 0.1) * d."""
    if not d > 0.0:
        raise ValueError("distance must be positive")
    return max(1.0 + xi, 0.1) * d


def default_anchors(dim: int) -> np.ndarray:
    """Four fixed anchors in 2-D; the eight analogous cube corners in 3-D."""
    if dim == 2:
        return ANCHORS_2D.copy()
    return np.array(list(itertools.product([0.125, 0.875], repeat=3)))


def generate_instance(
    n_sensors: int,
    dim: int = 2,
    radio_range: float = 0.3,
    sigma: float = 0.0,
    seed: int | None = None,
) -> SNLInstance:
    """Seeded random instance: sensors uniform in the unit box, edges within
    radio range, distances perturbed with one noise draw per edge."""
    if n_sensors < 1:
        raise ValueError("n_sensors must be at least 1")
    if not radio_range > 0.0:
        raise ValueError("radio_range must be positive")
    rng = np.random.default_rng(seed)
    anchors = default_anchors(dim)
    positions = rng.uniform(0.0, 1.0, size=(n_sensors, dim))

    sensor_pairs = []
    for i in range(n_sensors):
        for j in range(i + 1, n_sensors):
            d = float(np.linalg.norm(positions[i] - positions[j]))
            if d <= radio_range:
                sensor_pairs.append((i + 1, j + 1, d))
    anchor_pairs = []
    for i in range(n_sensors):
        for k in range(anchors.shape[0]):
            e = float(np.linalg.norm(positions[i] - anchors[k]))
            if e <= radio_range:
                anchor_pairs.append((i + 1, k + 1, e))

    noise_s = rng.normal(0.0, sigma, size=len(sensor_pairs))
    noise_a = rng.normal(0.0, sigma, size=len(anchor_pairs))
    sensor_edges = tuple(
        (i, j, perturb_distance(d, xi)) for (i, j, d), xi in zip(sensor_pairs, noise_s)
    )
    anchor_edges = tuple(
        (i, k, perturb_distance(e, xi)) for (i, k, e), xi in zip(anchor_pairs, noise_a)
    )
    return SNLInstance(
        dim=dim,
        anchors=anchors,
        n_sensors=n_sensors,
        sensor_edges=sensor_edges,
        anchor_edges=anchor_edges,
        radio_range=radio_range,
        sigma=sigma,
        true_positions=positions,
    )


def rmsd(estimated: np.ndarray, truth: np.ndarray) -> float:
    """Root mean square distance between estimated and true positions."""
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {tru.shape}")
    return float(math.sqrt(np.mean(np.sum((est - tru) ** 2, axis=1))))


def branch_positions(branch: int) -> np.ndarray:
    """Exact sensor positions of the 6-sensor fixture, branch 1 or 2."""
    if branch not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    out = _SIX_SENSOR_TRUE.copy()
    if branch == 2:
        for i, pos in _SIX_SENSOR_ALT.items():
            out[i - 1] = pos
    return out


def _six_sensor_candidates() -> tuple[list, list]:
    """All edges of the 6-sensor network within its radio range, with
    distances measured at branch 1."""
    pos = _SIX_SENSOR_TRUE
    sensor, anchor = [], []
    for i in range(6):
        for j in range(i + 1, 6):
            d = float(np.linalg.norm(pos[i] - pos[j]))
            if d <= _SIX_SENSOR_RANGE:
                sensor.append((i + 1, j + 1, d))
        for k in range(4):
            e = float(np.linalg.norm(pos[i] - ANCHORS_2D[k]))
            if e <= _SIX_SENSOR_RANGE:
                anchor.append((i + 1, k + 1, e))
    return sensor, anchor


def _branch_assignments() -> list[np.ndarray]:
    """The four exact solution assignments (sensor 2 and the pair {3, 5}
    flip independently)."""
    out = []
    for flip2 in (False, True):
        for flip35 in (False, True):
            pos = _SIX_SENSOR_TRUE.copy()
            if flip2:
                pos[1] = _SIX_SENSOR_ALT[2]
            if flip35:
                pos[2] = _SIX_SENSOR_ALT[3]
                pos[4] = _SIX_SENSOR_ALT[5]
            out.append(pos)
    return out


def two_branch_fixture() -> SNLInstance:
    """6-sensor, 4-anchor network in which both solution branches are exact.

    Candidate edges within the radio range are kept only when their length
    is identical (to 1e-9) under every branch assignment, so the objective
    vanishes at branch 1, at branch 2, and at the mixed assignments where
    sensor 2 and the pair {3, 5} flip independently.
    """
    sensor_cand, anchor_cand = _six_sensor_candidates()
    assignments = _branch_assignments()
    sensor_edges = []
    for i, j, d in sensor_cand:
        lengths = [float(np.linalg.norm(p[i - 1] - p[j - 1])) for p in assignments]
        if max(lengths) - min(lengths) <= 1e-9:
            sensor_edges.append((i, j, d))
    anchor_edges = []
    for i, k, e in anchor_cand:
        lengths = [float(np.linalg.norm(p[i - 1] - ANCHORS_2D[k - 1])) for p in assignments]
        if max(lengths) - min(lengths) <= 1e-9:
            anchor_edges.append((i, k, e))
    return SNLInstance(
        dim=2,
        anchors=ANCHORS_2D.copy(),
        n_sensors=6,
        sensor_edges=tuple(sensor_edges),
        anchor_edges=tuple(anchor_edges),
        radio_range=_SIX_SENSOR_RANGE,
        sigma=0.0,
        true_positions=_SIX_SENSOR_TRUE.copy(),
    )


def rigid_fixture() -> SNLInstance:
    """Uniquely localizable companion of the 6-sensor network.

    Same true positions and radio range, but every in-range edge is kept
    (distances at branch 1), which pins all six sensors; used to exercise
    exact recovery end to end.
    """
    sensor_edges, anchor_edges = _six_sensor_candidates()
    return SNLInstance(
        dim=2,
        anchors=ANCHORS_2D.copy(),
        n_sensors=6,
        sensor_edges=tuple(sensor_edges),
        anchor_edges=tuple(anchor_edges),
        radio_range=_SIX_SENSOR_RANGE,
        sigma=0.0,
        true_positions=_SIX_SENSOR_TRUE.copy(),
    )


# ---------------------------------------------------------------------------
# JSON schema
#
# { "dim", "anchors": [[..], ..], "n_sensors",
#   "sensor_edges": [[i, j, d], ..], "anchor_edges": [[i, k, e], ..],
#   "sigma", "radio_range", "true_positions": optional }
# ---------------------------------------------------------------------------


def instance_to_dict(inst: SNLInstance) -> dict:
    out = {
        "dim": inst.dim,
        "anchors": inst.anchors.tolist(),
        "n_sensors": inst.n_sensors,
        "sensor_edges": [[i, j, d] for i, j, d in inst.sensor_edges],
        "anchor_edges": [[i, k, e] for i, k, e in inst.anchor_edges],
        "sigma": inst.sigma,
        "radio_range": inst.radio_range,
    }
    if inst.true_positions is not None:
        out["true_positions"] = inst.true_positions.tolist()
    return out


def instance_from_dict(data: dict) -> SNLInstance:
    try:
        return SNLInstance(
            dim=int(data["dim"]),
            anchors=np.array(data["anchors"], dtype=float),
            n_sensors=int(data["n_sensors"]),
            sensor_edges=tuple((int(i), int(j), float(d)) for i, j, d in data["sensor_edges"]),
            anchor_edges=tuple((int(i), int(k), float(e)) for i, k, e in data["anchor_edges"]),
            sigma=float(data["sigma"]),
            radio_range=float(data["radio_range"]),
            true_positions=(
                np.array(data["true_positions"], dtype=float)
                if data.get("true_positions") is not None
                else None
            ),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance document: {exc}") from exc


def load_instance(path: str | Path) -> SNLInstance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid JSON in {path}: {exc}") from exc
    return instance_from_dict(data)


def save_instance(inst: SNLInstance, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_positions_csv(path: str | Path, estimated: np.ndarray, truth: np.ndarray | None) -> None:
    est = np.asarray(estimated, dtype=float)
    dim = est.shape[1]
    coords = ["x", "y", "z"][:dim]
    header = ["sensor_index"] + [f"est_{c}" for c in coords]
    if truth is not None:
        header += [f"true_{c}" for c in coords] + ["error"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(est.shape[0]):
            row = [i + 1] + [repr(v) for v in est[i]]
            if truth is not None:
                row += [repr(v) for v in truth[i]]
                row.append(repr(float(np.linalg.norm(est[i] - truth[i]))))
            writer.writerow(row)
