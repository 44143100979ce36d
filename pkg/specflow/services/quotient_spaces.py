"""
Geometry of the real line / unit circle and of their quotients by a compact set K.

Points on the circle are angles in radians; distances on the circle are chordal,
|e^{ia} - e^{ib}| = 2|sin((a - b)/2)|. K is a finite union of closed intervals or arcs
(`models.CompactSet`). The quotient distance is the closed form

    d_K(x, y) = min{ d(x, y), dist(x, K) + dist(K, y) }.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from ..config import settings
from ..exceptions import AmbiguityError, DomainError, ParameterError
from ..models import TWO_PI, CompactSet

logger = logging.getLogger(__name__)


def chord(a, b):
    """Chordal distance between angles (vectorised)."""
    return 2.0 * np.abs(np.sin((np.asarray(a) - np.asarray(b)) / 2.0))


def principal_increment(a, b):
    """Signed angle in (-pi, pi] taking angle a to angle b."""
    return np.angle(np.exp(1j * (np.asarray(b) - np.asarray(a))))


def _is_circle(K: CompactSet) -> bool:
    return K.space == "circle"


def _ambient(x, y, circular: bool):
    return chord(x, y) if circular else np.abs(np.asarray(x) - np.asarray(y))


def _piece_offset(piece, x):
    """Anticlockwise offset of angle x from the start of an arc."""
    return (np.asarray(x) - piece[0]) % TWO_PI


def piece_contains(piece, x, circular: bool, tol: float = 0.0):
    a, b = piece
    if circular:
        if b - a >= TWO_PI:
            return np.ones_like(np.asarray(x, dtype=np.float64), dtype=bool)
        offset = _piece_offset(piece, x)
        inside = offset <= (b - a)
        if tol > 0:
            near = np.minimum(chord(x, a), chord(x, b)) <= tol
            inside = inside | near
        return inside
    x = np.asarray(x, dtype=np.float64)
    return (x >= a - tol) & (x <= b + tol)


def piece_distance(piece, x, circular: bool):
    """Distance from x to one interval / arc (vectorised over x)."""
    a, b = piece
    x = np.asarray(x, dtype=np.float64)
    if circular:
        if b - a >= TWO_PI:
            return np.zeros_like(x)
        outside = np.minimum(chord(x, a), chord(x, b))
        return np.where(piece_contains(piece, x, True), 0.0, outside)
    return np.maximum(np.maximum(a - x, x - b), 0.0)


def distance_to_set(x, K: CompactSet):
    """dist(x, K), vectorised over x."""
    if K.is_empty:
        raise ParameterError("Distance to an empty set is undefined")
    circular = _is_circle(K)
    distances = [piece_distance(piece, x, circular) for piece in K.pieces]
    return np.min(np.stack(distances), axis=0)


def contains(K: CompactSet, x, tol: float = 0.0):
    if K.is_empty:
        return np.zeros_like(np.asarray(x, dtype=np.float64), dtype=bool)
    circular = _is_circle(K)
    masks = [piece_contains(piece, x, circular, tol) for piece in K.pieces]
    return np.any(np.stack(masks), axis=0)


def boundary_points(K: CompactSet) -> List[float]:
    points = []
    for a, b in K.pieces:
        if _is_circle(K):
            if b - a >= TWO_PI:
                continue
            points.extend([a % TWO_PI, b % TWO_PI])
        else:
            points.extend([a, b])
    return sorted(set(points))


def quotient_distance(x, y, K: CompactSet):
    """Factor metric on X/K; 0 exactly when [x] = [y]."""
    if K.is_empty:
        raise ParameterError("Quotient by an empty set is undefined")
    circular = _is_circle(K)
    direct = _ambient(x, y, circular)
    through = distance_to_set(x, K) + distance_to_set(y, K)
    result = np.minimum(direct, through)
    return float(result) if np.ndim(result) == 0 else result


def quotient_distance_matrix(xs: np.ndarray, ys: np.ndarray, K: CompactSet) -> np.ndarray:
    circular = _is_circle(K)
    direct = _ambient(xs[:, None], ys[None, :], circular)
    through = distance_to_set(xs, K)[:, None] + distance_to_set(ys, K)[None, :]
    return np.minimum(direct, through)


def _boundary_candidates(x: float, K: CompactSet, tol: float) -> List[float]:
    boundary = boundary_points(K)
    if not boundary:
        raise DomainError("K has no boundary (full circle)")
    distances = np.asarray(_ambient(x, np.asarray(boundary), _is_circle(K)))
    best = distances.min()
    return [pt for pt, dist in zip(boundary, distances) if dist <= best + tol]


def nearest_boundary(x: float, K: CompactSet, tol: Optional[float] = None) -> float:
    """
    Boundary point of K closest to x (x outside K). Ties within tol go to the smaller
    coordinate / smaller angle in [0, 2pi).
    """
    tol = settings.TOL_BASE if tol is None else tol
    if bool(contains(K, x)):
        raise DomainError(f"Point {x} lies in K; it has no nearest boundary point")
    return min(_boundary_candidates(x, K, tol))


def project(x: float, K: CompactSet, tol: Optional[float] = None) -> Optional[float]:
    """Quotient class of x: None stands for the class of K itself."""
    tol = settings.TOL_BASE if tol is None else tol
    if float(distance_to_set(x, K)) <= tol:
        return None
    return float(x) % TWO_PI if _is_circle(K) else float(x)


def lift_simple_path(path: Sequence[Optional[float]], K: CompactSet,
                     tol: Optional[float] = None) -> np.ndarray:
    """
    Lift a sampled simple path in X/K to X.

    Entries equal to None / NaN stand for the class of K. Off K the representatives are
    returned unchanged; outside the support the lift is the constant boundary point
    nearest to the first (resp. last) sample of the support.
    """
    tol = settings.TOL_BASE if tol is None else tol
    values = np.array([math.nan if v is None else float(v) for v in path], dtype=np.float64)
    active = ~np.isnan(values)
    if active.any():
        active[active] = np.asarray(distance_to_set(values[active], K)) > tol
    indices = np.flatnonzero(active)
    if indices.size == 0:
        boundary = boundary_points(K)
        if not boundary:
            raise DomainError("Cannot lift a path into a full-circle K")
        return np.full(values.shape, boundary[0])
    first, last = int(indices[0]), int(indices[-1])
    if indices.size != last - first + 1:
        raise DomainError("Path is not simple: its support is not one contiguous index range")

    lifted = values.copy()
    if first > 0:
        lifted[:first] = _entry_point(values[first], K, tol, first)
    if last < values.size - 1:
        lifted[last + 1:] = _entry_point(values[last], K, tol, last)
    return lifted


def _entry_point(x: float, K: CompactSet, tol: float, index: int) -> float:
    candidates = _boundary_candidates(x, K, tol)
    if len(candidates) > 1:
        raise AmbiguityError(
            f"Sample {index} at {x} is equidistant from boundary points {candidates}",
            candidates=tuple(candidates),
        )
    return candidates[0]


def region_distance(A: CompactSet, B: CompactSet) -> float:
    """Infimum distance between two finite unions of intervals / arcs."""
    if A.is_empty or B.is_empty:
        return math.inf
    circular = _is_circle(A)
    best = math.inf
    for pa in A.pieces:
        for pb in B.pieces:
            if circular:
                if (bool(piece_contains(pa, pb[0], True)) or bool(piece_contains(pb, pa[0], True))):
                    return 0.0
                ends_a = np.array([pa[0], pa[1]])
                ends_b = np.array([pb[0], pb[1]])
                gap = float(chord(ends_a[:, None], ends_b[None, :]).min())
            else:
                gap = max(pb[0] - pa[1], pa[0] - pb[1], 0.0)
            best = min(best, gap)
    return best
