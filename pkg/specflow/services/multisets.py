"""
Finite-rank multisets in a based metric space and the Phi-distance between them.

d_Phi(S, T) is the infimum of Phi(d(s_1, t_1), d(s_2, t_2), ...) over paired enumerations
in which either side may use basepoint copies. For finite ranks n = rank S, m = rank T this
is an assignment problem on the (n + m) x (n + m) matrix

            T points          n basepoint slots
    S       d(s_i, t_j)       d(s_i, x0)
    m slots d(x0, t_j)        0

solved exactly: min-cost assignment on p-th powers for Phi_p (p < inf), bottleneck
assignment for Phi_inf, exhaustive search for Ky-Fan norms at small rank.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from ..exceptions import ContainmentError, ParameterError, SizeError, SpaceMismatchError, UnsupportedNormError
from ..models import TWO_PI, BasedSpace, CompactSet, Multiset, MultisetPoint, NormSpec, SpaceKind
from . import quotient_spaces as qs
from .assignment import bottleneck_assignment, hungarian, restricted_assignment, tight_edges
from .symmetric_norms import eval_norm

logger = logging.getLogger(__name__)

BASE = -1  # index of a basepoint slot in a matching


# ---------------------------------------------------------------------------------------
# metric of the underlying space
# ---------------------------------------------------------------------------------------

def distance_matrix(space: BasedSpace, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    if space.is_quotient:
        return qs.quotient_distance_matrix(xs.astype(np.float64), ys.astype(np.float64), space.essential)
    if space.is_circular:
        return qs.chord(xs[:, None], ys[None, :])
    return np.abs(xs[:, None] - ys[None, :])


def point_distance(space: BasedSpace, x, y) -> float:
    return float(distance_matrix(space, np.array([x]), np.array([y]))[0, 0])


def base_distances(space: BasedSpace, xs) -> np.ndarray:
    """d(x, x0) for each x; for quotient spaces the distance to K."""
    xs = np.asarray(xs)
    if xs.size == 0:
        return np.zeros(0)
    if space.is_quotient:
        return np.asarray(qs.distance_to_set(xs.astype(np.float64), space.essential), dtype=np.float64)
    if space.is_circular:
        return qs.chord(xs, space.basepoint)
    return np.abs(xs - space.base)


# ---------------------------------------------------------------------------------------
# construction and algebra
# ---------------------------------------------------------------------------------------

def _sort_key(space: BasedSpace, loc):
    if space.is_complex:
        return (loc.real, loc.imag)
    return (loc,)


def build_multiset(space: BasedSpace, points: Iterable, tol: Optional[float] = None) -> Multiset:
    """
    Build a multiset from locations or (location, multiplicity) pairs.

    Locations within tol of the basepoint class are absorbed into the tail; locations within
    tol of each other merge their multiplicities (the first stored location is kept).
    """
    tol = settings.TOL_BASE if tol is None else tol
    entries: List[Tuple[object, int]] = []
    for item in points:
        if isinstance(item, (tuple, list)):
            loc, mult = item
        else:
            loc, mult = item, 1
        if int(mult) < 1:
            raise ParameterError(f"Multiplicity must be positive, got {mult}")
        entries.append((space.canonical(loc), int(mult)))

    merged: List[List] = []
    for loc, mult in entries:
        if base_distances(space, np.array([loc]))[0] <= tol:
            continue
        for slot in merged:
            if point_distance(space, slot[0], loc) <= tol:
                slot[1] += mult
                break
        else:
            merged.append([loc, mult])
    merged.sort(key=lambda slot: _sort_key(space, slot[0]))
    pts = []
    for loc, mult in merged:
        if space.is_complex:
            pts.append(MultisetPoint(loc=loc.real, im=loc.imag, mult=mult))
        else:
            pts.append(MultisetPoint(loc=float(loc), mult=mult))
    return Multiset(space=space, points=tuple(pts))


def trivial(space: BasedSpace) -> Multiset:
    """O_{x0}: the multiset consisting of the basepoint tail only."""
    return Multiset(space=space, points=())


def _require_same_space(S: Multiset, T: Multiset) -> None:
    if S.space != T.space:
        raise SpaceMismatchError(f"Multisets live in different spaces: {S.space.kind.value} vs {T.space.kind.value}")


def _pairs(S: Multiset):
    return [(loc, int(mult)) for loc, mult in zip(S.locations(), S.multiplicities())]


def msum(S: Multiset, T: Multiset) -> Multiset:
    _require_same_space(S, T)
    return build_multiset(S.space, _pairs(S) + _pairs(T))


def difference(S: Multiset, T: Multiset, tol: Optional[float] = None) -> Multiset:
    """S - T, defined when T <= S pointwise (locations compared within tol)."""
    tol = settings.TOL_BASE if tol is None else tol
    _require_same_space(S, T)
    remaining = [[loc, mult] for loc, mult in _pairs(S)]
    for loc, mult in _pairs(T):
        for slot in remaining:
            if point_distance(S.space, slot[0], loc) <= tol:
                if slot[1] < mult:
                    raise ContainmentError(f"Multiplicity of {loc} in T ({mult}) exceeds S ({slot[1]})")
                slot[1] -= mult
                break
        else:
            raise ContainmentError(f"Point {loc} of T is not a point of S")
    return build_multiset(S.space, [(loc, mult) for loc, mult in remaining if mult > 0])


def same_multiset(S: Multiset, T: Multiset, tol: Optional[float] = None) -> bool:
    tol = settings.TOL_BASE if tol is None else tol
    return distance_phi(S, T, NormSpec.schatten(math.inf)) <= tol


@dataclass(frozen=True)
class Region:
    """Subset descriptor: a finite union of intervals / arcs, or the whole space."""

    pieces: CompactSet
    whole: bool = False

    @classmethod
    def everything(cls, space: BasedSpace) -> "Region":
        return cls(pieces=CompactSet(space="circle" if space.is_circular else "line"), whole=True)

    @classmethod
    def of(cls, space: str, pieces) -> "Region":
        return cls(pieces=CompactSet.build(space, pieces))

    def contains(self, xs) -> np.ndarray:
        if self.whole:
            return np.ones(np.shape(xs), dtype=bool)
        return np.asarray(qs.contains(self.pieces, np.asarray(xs, dtype=np.float64)), dtype=bool)


def intersect(S: Multiset, region: Region) -> Multiset:
    """S restricted to region; the basepoint tail is always kept."""
    if S.is_trivial:
        return S
    if S.space.is_complex:
        raise ParameterError("Regions are defined for line and circle spaces only")
    keep = region.contains(S.locations())
    points = tuple(pt for pt, flag in zip(S.points, keep) if flag)
    return Multiset(space=S.space, points=points)


def min_separation(regions: Sequence[Region]) -> float:
    """Smallest pairwise infimum distance between regions (0 when any two touch)."""
    if len(regions) < 2:
        raise ParameterError("min_separation needs at least two regions")
    best = math.inf
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            a, b = regions[i], regions[j]
            if (a.pieces.is_empty and not a.whole) or (b.pieces.is_empty and not b.whole):
                gap = math.inf
            elif a.whole or b.whole:
                gap = 0.0
            else:
                gap = qs.region_distance(a.pieces, b.pieces)
            best = min(best, gap)
    return best


# ---------------------------------------------------------------------------------------
# distance
# ---------------------------------------------------------------------------------------

@dataclass
class Matching:
    """
    Optimal pairing behind d_Phi.

    pairs holds (i, j) over the expanded enumerations of S and T; BASE (-1) marks a
    basepoint slot. costs are the matched distances in pair order.
    """

    value: float
    pairs: List[Tuple[int, int]]
    costs: np.ndarray
    spec: NormSpec
    bottleneck: Optional[float] = None
    method: str = "hungarian"
    meta: dict = field(default_factory=dict)

    @property
    def max_cost(self) -> float:
        return float(self.costs.max()) if self.costs.size else 0.0


def padded_cost(space: BasedSpace, s_pts: np.ndarray, t_pts: np.ndarray) -> np.ndarray:
    n, m = len(s_pts), len(t_pts)
    size = n + m
    cost = np.zeros((size, size))
    if n and m:
        cost[:n, :m] = distance_matrix(space, s_pts, t_pts)
    if n:
        cost[:n, m:] = base_distances(space, s_pts)[:, None]
    if m:
        cost[n:, :m] = base_distances(space, t_pts)[None, :]
    return cost


def _pairs_from_assignment(assignment: np.ndarray, cost: np.ndarray, n: int, m: int):
    pairs, costs = [], []
    for row, col in enumerate(assignment):
        i = row if row < n else BASE
        j = int(col) if col < m else BASE
        if i == BASE and j == BASE:
            continue
        pairs.append((i, j))
        costs.append(cost[row, col])
    return pairs, np.asarray(costs, dtype=np.float64)


def optimal_matching(S: Multiset, T: Multiset, spec: NormSpec, tie_break: bool = False) -> Matching:
    """
    Optimal padded assignment between S and T for the norm `spec`.

    With tie_break, among optimal assignments the one minimising the sum of squared
    displacements is returned (re-solved on the optimal-cost support).
    """
    _require_same_space(S, T)
    if not spec.is_schatten:
        if S.rank + T.rank <= settings.BRUTE_FORCE_MAX_RANK:
            return brute_force_matching(S, T, spec)
        raise UnsupportedNormError(
            f"{spec.token} distance needs exhaustive search; combined rank {S.rank + T.rank} "
            f"exceeds {settings.BRUTE_FORCE_MAX_RANK}"
        )
    s_pts, t_pts = S.expand(), T.expand()
    n, m = len(s_pts), len(t_pts)
    cost = padded_cost(S.space, s_pts, t_pts)
    if n + m == 0:
        return Matching(value=0.0, pairs=[], costs=np.zeros(0), spec=spec, bottleneck=0.0)

    if spec.is_sup:
        assignment, level = bottleneck_assignment(cost)
        if tie_break:
            allowed = cost <= level
            assignment = restricted_assignment(cost ** 2, allowed)
        pairs, costs = _pairs_from_assignment(assignment, cost, n, m)
        return Matching(value=level, pairs=pairs, costs=costs, spec=spec, bottleneck=level, method="bottleneck")

    powered = cost ** spec.p
    assignment, u, v = hungarian(powered)
    if tie_break and spec.p != 2.0:
        allowed = tight_edges(powered, u, v)
        assignment = restricted_assignment(cost ** 2, allowed)
    pairs, costs = _pairs_from_assignment(assignment, cost, n, m)
    return Matching(value=eval_norm(spec, costs), pairs=pairs, costs=costs, spec=spec)


def distance_phi(S: Multiset, T: Multiset, spec: NormSpec) -> float:
    return optimal_matching(S, T, spec).value


def bottleneck_value(S: Multiset, T: Multiset) -> float:
    _require_same_space(S, T)
    cost = padded_cost(S.space, S.expand(), T.expand())
    return bottleneck_assignment(cost)[1]


def _partial_injections(n: int, m: int):
    """Every way of matching S points to distinct T points; unmatched points go to the basepoint."""
    for k in range(min(n, m) + 1):
        for rows in combinations(range(n), k):
            for cols in permutations(range(m), k):
                yield rows, cols


def brute_force_matching(S: Multiset, T: Multiset, spec: NormSpec) -> Matching:
    """
    Exhaustive d_Phi. Equivalent to minimising over all permutations of the basepoint-padded
    enumerations: basepoint-to-basepoint pairs contribute zeros, so only the partial
    injections S -> T differ.
    """
    _require_same_space(S, T)
    if S.rank + T.rank > settings.BRUTE_FORCE_MAX_RANK:
        raise SizeError(f"Brute force limited to combined rank {settings.BRUTE_FORCE_MAX_RANK}, got {S.rank + T.rank}")
    s_pts, t_pts = S.expand(), T.expand()
    n, m = len(s_pts), len(t_pts)
    d_st = distance_matrix(S.space, s_pts, t_pts) if n and m else np.zeros((n, m))
    d_s0 = base_distances(S.space, s_pts)
    d_t0 = base_distances(S.space, t_pts)

    best_value, best_pairs, best_costs = math.inf, [], np.zeros(0)
    for rows, cols in _partial_injections(n, m):
        pairs = list(zip(rows, cols))
        costs = [d_st[i, j] for i, j in pairs]
        matched_rows, matched_cols = set(rows), set(cols)
        for i in range(n):
            if i not in matched_rows:
                pairs.append((i, BASE))
                costs.append(d_s0[i])
        for j in range(m):
            if j not in matched_cols:
                pairs.append((BASE, j))
                costs.append(d_t0[j])
        value = eval_norm(spec, costs)
        if value < best_value:
            best_value, best_pairs, best_costs = value, pairs, np.asarray(costs, dtype=np.float64)
    if not math.isfinite(best_value):
        best_value = 0.0
    return Matching(value=best_value, pairs=best_pairs, costs=best_costs, spec=spec, method="brute_force")


def brute_force_distance(S: Multiset, T: Multiset, spec: NormSpec) -> float:
    return brute_force_matching(S, T, spec).value


# ---------------------------------------------------------------------------------------
# finite-rank estimates and induced paths
# ---------------------------------------------------------------------------------------

def finite_sum_bound(space: BasedSpace, ss: Sequence, ts: Sequence) -> float:
    """Sum of d(s_i, t_i): an upper bound for d_Phi({s_i}*, {t_i}*) for every Phi."""
    if len(ss) != len(ts):
        raise ParameterError("finite_sum_bound expects equally long point lists")
    if not len(ss):
        return 0.0
    return float(np.sum(np.diag(distance_matrix(space, np.asarray(ss), np.asarray(ts)))))


def phi_estimate_lower(space: BasedSpace, s0, ss: Sequence) -> float:
    """max_i d(s0, s_i) / 2: a lower bound for d_Phi({s0, ..., s0}*, {s_1, ..., s_n}*)."""
    if not len(ss):
        return 0.0
    return float(distance_matrix(space, np.array([s0]), np.asarray(ss)).max()) / 2.0


def induced_path(space: BasedSpace, values: np.ndarray) -> List[Multiset]:
    """
    Multiset path {lambda_1(t), lambda_2(t), ...}* induced by a finite family of tracks.
    values has one row per track and one column per parameter.
    """
    values = np.atleast_2d(np.asarray(values))
    return [build_multiset(space, values[:, j]) for j in range(values.shape[1])]


def tail_uniform_norms(space: BasedSpace, values: np.ndarray, spec: NormSpec) -> np.ndarray:
    """
    sup_t Phi(d(x0, lambda_{n+1}(t)), d(x0, lambda_{n+2}(t)), ...) for n = 0 .. len(values).

    The induced path is continuous iff these tail norms tend to 0 uniformly; on a finite
    truncation the profile shows how fast they decay.
    """
    values = np.atleast_2d(np.asarray(values))
    dist = np.stack([base_distances(space, values[:, j]) for j in range(values.shape[1])], axis=1)
    tails = np.zeros(values.shape[0] + 1)
    for n in range(values.shape[0] + 1):
        tails[n] = max((eval_norm(spec, dist[n:, j]) for j in range(dist.shape[1])), default=0.0)
    return tails


def dyadic_bump_family(m_max: int, n_max: int, params: Sequence[float]) -> np.ndarray:
    """
    lambda_{m,n}(t) = g(2^m t) / 2^n with g(s) = sin(pi s) on [0, 1] and 0 elsewhere,
    truncated to 1 <= m <= m_max, 1 <= n <= n_max; rows ordered by (m, n).
    """
    t = np.asarray(params, dtype=np.float64)
    rows = []
    for m in range(1, m_max + 1):
        s = (2.0 ** m) * t
        bump = np.where((s >= 0) & (s <= 1), np.sin(np.pi * s), 0.0)
        for n in range(1, n_max + 1):
            rows.append(bump / 2.0 ** n)
    return np.array(rows)
