"""
Assignment solvers on square cost matrices.

* `hungarian` - O(n^3) shortest augmenting path Hungarian method with dual potentials
  (u_i + v_j <= c_ij, equality on the returned assignment).
* `bottleneck_assignment` - minimise the largest matched cost: binary search over the sorted
  distinct costs with a maximum bipartite matching feasibility check.
* `restricted_assignment` - minimise a secondary cost over the edges allowed by an optimal
  first-stage solve (the tie rule used by track chaining).
"""

import logging
from typing import Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

logger = logging.getLogger(__name__)


def hungarian(cost: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Min-cost perfect assignment.

    Returns (assignment, u, v): assignment[i] is the column of row i; u, v are the row
    and column potentials of an optimal dual solution.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("Cost matrix must be square (n x n)")
    n = cost.shape[0]
    if n == 0:
        empty = np.zeros(0)
        return np.zeros(0, dtype=np.int64), empty, empty

    # 1-indexed potentials; column 0 is the virtual start of each augmenting search
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)    # p[j] = row assigned to column j
    way = np.zeros(n + 1, dtype=np.int64)  # predecessor columns on the augmenting path

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            reduced = np.empty(n + 1)
            reduced[0] = np.inf
            reduced[1:] = cost[i0 - 1] - u[i0] - v[1:]
            free = ~used
            improve = free & (reduced < minv)
            minv[improve] = reduced[improve]
            way[improve] = j0
            candidates = np.where(free, minv, np.inf)
            j1 = int(np.argmin(candidates))
            delta = candidates[j1]

            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta

            j0 = j1
            if p[j0] == 0:
                break
        # flip assignments along the augmenting path
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break

    assignment = np.empty(n, dtype=np.int64)
    assignment[p[1:] - 1] = np.arange(n)
    return assignment, u[1:], v[1:]


def tight_edges(cost: np.ndarray, u: np.ndarray, v: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Edges with zero reduced cost: exactly the edges usable by some optimal assignment."""
    scale = max(1.0, float(np.max(np.abs(cost)))) if cost.size else 1.0
    return (cost - u[:, None] - v[None, :]) <= rtol * scale


def _perfect_matching(allowed: np.ndarray):
    n = allowed.shape[0]
    match = maximum_bipartite_matching(csr_matrix(allowed.astype(np.int8)), perm_type="column")
    if np.all(match >= 0) and match.size == n:
        return match
    return None


def bottleneck_assignment(cost: np.ndarray) -> Tuple[np.ndarray, float]:
    """Assignment minimising the maximum matched cost; returns (assignment, bottleneck value)."""
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0
    values = np.unique(cost)
    lo, hi = 0, values.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching(cost <= values[mid]) is not None:
            hi = mid
        else:
            lo = mid + 1
    threshold = float(values[lo])
    match = _perfect_matching(cost <= threshold)
    return match.astype(np.int64), threshold


def restricted_assignment(secondary: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    """Min-cost assignment on `secondary` using only `allowed` edges (a perfect matching must exist)."""
    masked = np.where(allowed, secondary, np.inf)
    rows, cols = linear_sum_assignment(masked)
    assignment = np.empty(secondary.shape[0], dtype=np.int64)
    assignment[rows] = cols
    return assignment
