"""Finitely supported probability measures on R^d.

A :class:`DiscreteMeasure` stores ``n`` distinct atoms in an ``(n, d)`` array
and their positive weights.  Instances are only ever produced by
:func:`validate_measure`, which merges bitwise-identical atoms and rescales
weights to unit mass; the arrays are frozen afterwards.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptySupport, NonFiniteEntry, NonPositiveWeight

# sums this close to one are left untouched, which makes validation idempotent
_NORMALIZED_SLACK = 4e-16


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"DiscreteMeasure(n={self.n}, dim={self.dim})"

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    def mean(self) -> np.ndarray:
        return barycenter(self)

    def diameter(self) -> float:
        """Largest distance between two atoms."""
        if self.n == 1:
            return 0.0
        diff = self.points[:, None, :] - self.points[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def validate_measure(points, weights=None) -> DiscreteMeasure:
    """Build a validated measure from raw atoms and weights.

    Parameters
    ----------
    points : array_like, shape (n, d) or (n,)
        Atom coordinates; a 1-D array is read as ``n`` atoms on the line.
        A :class:`DiscreteMeasure` is accepted as well, in which case its
        own weights are used when ``weights`` is None.
    weights : array_like, shape (n,)
        Positive masses.  They are divided by their exact sum.

    Raises
    ------
    EmptySupport, DimensionMismatch, NonFiniteEntry, NonPositiveWeight
    """
    if isinstance(points, DiscreteMeasure):
        if weights is None:
            weights = points.weights
        points = points.points
    if weights is None:
        raise DimensionMismatch("weights are required")

    try:
        pts = np.array(points, dtype=float)
        w = np.array(weights, dtype=float).reshape(-1)
    except ValueError as exc:  # ragged rows
        raise DimensionMismatch(str(exc)) from None

    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise DimensionMismatch(f"points must be a 2-D array, got shape {pts.shape}")
    if pts.shape[0] == 0 or w.size == 0:
        raise EmptySupport("a measure needs at least one atom")
    if pts.shape[1] == 0:
        raise DimensionMismatch("points have zero coordinates")
    if pts.shape[0] != w.size:
        raise DimensionMismatch(f"{pts.shape[0]} points but {w.size} weights")
    if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
        raise NonFiniteEntry("points and weights must be finite")
    if np.any(w <= 0):
        raise NonPositiveWeight(f"weights must be positive, got min {w.min()!r}")

    # merge atoms whose coordinates are bitwise equal, keeping first-seen order
    pts = np.ascontiguousarray(pts)
    keys = [row.tobytes() for row in pts]
    index: dict[bytes, int] = {}
    order: list[int] = []
    merged: list[list[float]] = []
    for i, key in enumerate(keys):
        k = index.get(key)
        if k is None:
            index[key] = len(order)
            order.append(i)
            merged.append([w[i]])
        else:
            merged[k].append(w[i])
    pts = pts[order].copy()
    w = np.array([math.fsum(ws) for ws in merged])

    total = math.fsum(w)
    if abs(total - 1.0) > _NORMALIZED_SLACK:
        w = w / total
    return DiscreteMeasure(_freeze(pts), _freeze(w))


def dirac(point) -> DiscreteMeasure:
    return validate_measure(np.atleast_2d(np.asarray(point, dtype=float)), [1.0])


def uniform(points) -> DiscreteMeasure:
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    return validate_measure(pts, np.full(n, 1.0 / n))


def barycenter(m: DiscreteMeasure) -> np.ndarray:
    """Mean of the measure, summed coordinate-wise with ``math.fsum``."""
    terms = m.weights[:, None] * m.points
    return np.array([math.fsum(terms[:, k]) for k in range(m.dim)])


def second_moment(m: DiscreteMeasure) -> float:
    return math.fsum(m.weights * (m.points**2).sum(axis=1))


def pushforward(m: DiscreteMeasure, fn) -> DiscreteMeasure:
    """Image measure under ``fn``, applied row-wise to the atoms."""
    pts = np.array([np.atleast_1d(fn(x)) for x in m.points], dtype=float)
    return validate_measure(pts, m.weights)


def scale(m: DiscreteMeasure, factor: float) -> DiscreteMeasure:
    """Image of ``m`` under ``x -> factor * x``."""
    return validate_measure(factor * m.points, m.weights)


def merge_close_atoms(points, weights, eps: float):
    """Greedily merge atoms closer than ``eps``.

    Returns the merged measure and, for every input atom, the index of the
    output atom it went to.  Merged atoms sit at the weighted mean of their
    members, which keeps the barycenter unchanged.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    w = np.asarray(weights, dtype=float)
    labels = np.full(len(w), -1)
    groups: list[list[int]] = []
    for i in range(len(w)):
        if labels[i] >= 0:
            continue
        labels[i] = len(groups)
        members = [i]
        for j in range(i + 1, len(w)):
            if labels[j] < 0 and np.linalg.norm(pts[j] - pts[i]) <= eps:
                labels[j] = labels[i]
                members.append(j)
        groups.append(members)
    new_w = np.array([math.fsum(w[g]) for g in groups])
    new_pts = np.array([np.average(pts[g], axis=0, weights=w[g]) for g in groups])
    # bitwise-equal centers would be merged again by validation, so relabel
    measure = validate_measure(new_pts, new_w)
    lookup = {row.tobytes(): k for k, row in enumerate(measure.points)}
    remap = np.array([lookup[np.ascontiguousarray(p).tobytes()] for p in new_pts])
    return measure, remap[labels]


# ---------------------------------------------------------------------------
# file formats


def read_csv(source) -> DiscreteMeasure:
    """Read ``d + 1`` columns per row (coordinates, then weight).

    A first row that does not parse as numbers is treated as a header.
    ``source`` is a path or an open text stream.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_csv(fh)
    rows = [r for r in csv.reader(source) if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptySupport("empty CSV")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    if not rows:
        raise EmptySupport("CSV has a header but no data")
    width = len(rows[0])
    if width < 2:
        raise DimensionMismatch("each row needs at least one coordinate and a weight")
    for r in rows:
        if len(r) != width:
            raise DimensionMismatch(f"row {r!r} has {len(r)} columns, expected {width}")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise NonFiniteEntry(str(exc)) from None
    return validate_measure(data[:, :-1], data[:, -1])


def read_json(source) -> DiscreteMeasure:
    """Read ``{"dim": d, "points": [[...], ...], "weights": [...]}``."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return read_json(fh)
    payload = json.load(source)
    try:
        points, weights = payload["points"], payload["weights"]
    except (KeyError, TypeError):
        raise DimensionMismatch("JSON measure needs 'points' and 'weights'") from None
    m = validate_measure(points, weights)
    if "dim" in payload and int(payload["dim"]) != m.dim:
        raise DimensionMismatch(f"declared dim {payload['dim']} but points have dim {m.dim}")
    return m


def read_measure(path) -> DiscreteMeasure:
    """Dispatch on the file extension (``.json`` or anything else as CSV)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return read_json(path)
    return read_csv(path)


def to_csv(m: DiscreteMeasure) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{k}" for k in range(m.dim)] + ["weight"])
    for p, w in zip(m.points, m.weights):
        writer.writerow([repr(float(c)) for c in p] + [repr(float(w))])
    return buf.getvalue()
