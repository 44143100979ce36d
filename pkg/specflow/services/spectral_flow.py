"""
Flow of multiset paths on the circle and spectral flow of unitary paths.

Two independent computations:

* winding sum - close the path with canonical theta-contractions of its endpoints,
  enumerate it continuously and add up the winding numbers of the simple tracks;
* crossing count - enumerate the open path and count signed passages of the tracks'
  unwrapped phases through the angle theta.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import settings
from ..exceptions import AmbiguityError, ConsistencyError, DomainError, ParameterError, ResolutionError
from ..models import TWO_PI, BasedSpace, Multiset, NormSpec
from . import quotient_spaces as qs
from .enumeration import Track, TrackSet, enumerate_path, lift_track, split_simple, step_matchings
from .multisets import Matching, build_multiset
from .spectra import OperatorKind, SampledOperatorPath

logger = logging.getLogger(__name__)


class FlowMethod(str, Enum):
    WINDING_SUM = "winding_sum"
    CROSSING_COUNT = "crossing_count"


@dataclass
class WindingResult:
    winding: int
    residual: float
    flagged: bool = False


@dataclass
class FlowResult:
    theta_grid: np.ndarray
    flow: List[int]
    method: FlowMethod = FlowMethod.WINDING_SUM
    crossing: Optional[List[int]] = None
    diagnostics: Dict = field(default_factory=dict)

    @property
    def agrees(self) -> bool:
        return self.crossing is not None and list(self.flow) == list(self.crossing)

    def to_frame(self) -> pd.DataFrame:
        crossing = self.crossing if self.crossing is not None else [None] * len(self.flow)
        return pd.DataFrame({
            "theta": [float(t) for t in self.theta_grid],
            "sf_winding": list(self.flow),
            "sf_crossing": list(crossing),
        })


def parse_theta_grid(grid: str) -> np.ndarray:
    """'a:b:n' -> n equally spaced angles from a to b inclusive, all inside (0, 2pi)."""
    try:
        a, b, n = grid.split(":")
        thetas = np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise ParameterError(f"Theta grid must look like a:b:n, got {grid!r}")
    for theta in thetas:
        _check_theta(theta)
    return thetas


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < TWO_PI:
        raise ParameterError(f"theta must lie in (0, 2pi), got {theta}")
    return theta


def _check_circle(space: BasedSpace) -> None:
    if not space.is_circular:
        raise ParameterError(f"Flow is defined for circle spaces, got {space.kind.value}")


def endpoint_angles(samples: Sequence[Multiset]) -> np.ndarray:
    """Eigenvalue angles of the first and last sample: the only places the flow may jump."""
    return np.unique(np.concatenate([samples[0].locations(), samples[-1].locations()]))


def _check_endpoint_collision(S: Multiset, theta: float, tol: float) -> None:
    angles = S.locations()
    if angles.size and np.min(qs.chord(angles, theta)) <= tol:
        raise AmbiguityError(f"theta = {theta} coincides with an endpoint eigenvalue angle",
                             candidates=(theta,))


# ---------------------------------------------------------------------------------------
# contraction
# ---------------------------------------------------------------------------------------

def _contraction_targets(space: BasedSpace, angles: np.ndarray, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lift angles into (theta, theta + 2pi) and pick where each one retracts to without
    crossing theta: angle 2pi (= 0) on the plain circle, the nearest point of K otherwise.
    """
    lifted = theta + (angles - theta) % TWO_PI
    if not space.is_quotient:
        anchor = theta + (space.basepoint - theta) % TWO_PI
        return lifted, np.full_like(lifted, anchor)
    K = space.essential
    if bool(qs.contains(K, theta)):
        raise ParameterError(f"theta = {theta} lies in the essential set")
    ends = []
    for start, end in K.pieces:
        low = theta + (start - theta) % TWO_PI
        ends.append((low, low + (end - start)))
    targets = np.empty_like(lifted)
    for i, x in enumerate(lifted):
        best, target = math.inf, x
        for low, high in ends:
            for candidate in (low, high):
                gap = abs(x - candidate)
                if gap < best - 1e-15:
                    best, target = gap, candidate
        targets[i] = target
    return lifted, targets


def canonical_contraction(S: Multiset, theta: float, step: Optional[float] = None,
                          tol: Optional[float] = None) -> List[Multiset]:
    """
    Sampled Gamma_theta(S): from S to the trivial multiset, every angle <= theta retracting to 0
    and every angle > theta to 2pi, linearly, with ceil(max extent / step) + 1 samples.
    """
    step = settings.CONTRACTION_STEP if step is None else step
    tol = settings.TOL_BASE if tol is None else tol
    theta = _check_theta(theta)
    _check_circle(S.space)
    _check_endpoint_collision(S, theta, tol)
    if S.space.is_quotient:
        logger.warning("Contraction toward an essential set other than a point is experimental")
    angles = S.expand()
    if angles.size == 0:
        return [S, S]
    lifted, targets = _contraction_targets(S.space, angles, theta)
    extent = float(np.max(np.abs(targets - lifted)))
    count = max(2, math.ceil(extent / step) + 1)
    path = []
    for s in np.linspace(0.0, 1.0, count):
        path.append(build_multiset(S.space, list((lifted + s * (targets - lifted)) % TWO_PI)))
    path[0] = S
    return path


def close_path(samples: Sequence[Multiset], theta: float) -> Tuple[List[Multiset], int, int]:
    """
    Gamma_theta(S(t0))^-1 * S * Gamma_theta(S(tN)) as one sample list.

    Returns the closed samples with the index range [first, last] occupied by the original path.
    """
    head = canonical_contraction(samples[0], theta)[::-1]
    tail = canonical_contraction(samples[-1], theta)
    closed = head[:-1] + list(samples) + tail[1:]
    first = len(head) - 1
    return closed, first, first + len(samples) - 1


# ---------------------------------------------------------------------------------------
# winding
# ---------------------------------------------------------------------------------------

def _phase_increments(seq: np.ndarray, offset: int) -> np.ndarray:
    increments = qs.principal_increment(seq[:-1], seq[1:])
    bad = np.flatnonzero(np.abs(increments) >= math.pi - 1e-12)
    if bad.size:
        raise ResolutionError("Phase increment of pi or more; unwrapping is ambiguous",
                              index=int(offset + bad[0]))
    return increments


def _closed_sequence(track: Track, space: BasedSpace) -> Tuple[np.ndarray, int]:
    """Active values extended by the basepoint (or lifted boundary point) on each side they leave."""
    idx = np.flatnonzero(track.active)
    b, d = int(idx[0]), int(idx[-1])
    lifted = np.asarray(lift_track(track, space), dtype=np.float64)
    lo = b - 1 if b > 0 else b
    hi = d + 1 if d < len(lifted) - 1 else d
    return lifted[lo:hi + 1], lo


def _piece_of(K, x: float, tol: float) -> Optional[Tuple[float, float]]:
    for piece in K.pieces:
        if bool(qs.piece_contains(piece, x, True, tol)):
            return piece
    return None


def winding_detail(track: Track, space: BasedSpace, tol: Optional[float] = None) -> WindingResult:
    tol = settings.TOL_BASE if tol is None else tol
    _check_circle(space)
    if not track.active.any():
        return WindingResult(winding=0, residual=0.0)
    if not track.simple:
        raise DomainError(f"Track {track.track_id} is not simple; split it before computing windings")
    seq, offset = _closed_sequence(track, space)
    total = float(np.sum(_phase_increments(seq, offset))) if seq.size > 1 else 0.0
    start, end = float(seq[0]), float(seq[-1])
    flagged = False

    if float(qs.chord(start, end)) > tol:
        if not space.is_quotient:
            raise DomainError(f"Track {track.track_id} is not a loop: it starts at {start} and ends at {end}")
        piece_start = _piece_of(space.essential, start, tol)
        piece_end = _piece_of(space.essential, end, tol)
        if piece_start is None or piece_end is None:
            raise DomainError(f"Track {track.track_id} is not a loop through the essential set")
        if piece_start == piece_end:
            # close inside the arc, which never leaves K
            total += float((start - piece_start[0]) % TWO_PI - (end - piece_start[0]) % TWO_PI)
        else:
            flagged = True
            turns = total / TWO_PI
            winding = int(math.trunc(turns))
            logger.warning(f"Track {track.track_id} joins different pieces of K; winding truncated to {winding}")
            return WindingResult(winding=winding, residual=abs(turns - winding), flagged=flagged)

    turns = total / TWO_PI
    winding = int(round(turns))
    residual = abs(turns - winding)
    if residual >= settings.WINDING_RESIDUAL_MAX:
        raise ConsistencyError(f"Winding residual {residual:.3g} for track {track.track_id}")
    return WindingResult(winding=winding, residual=residual, flagged=flagged)


def winding_number(track: Track, space: BasedSpace, tol: Optional[float] = None) -> int:
    """(1/2pi) * sum of principal phase increments of a loop track, rounded."""
    return winding_detail(track, space, tol).winding


def _flow_from_tracks(ts: TrackSet) -> Tuple[int, List[int], bool]:
    simple = split_simple(ts)
    details = [winding_detail(tr, ts.space) for tr in simple.tracks]
    return sum(d.winding for d in details), [d.winding for d in details], any(d.flagged for d in details)


def _closed_matchings(samples: Sequence[Multiset], theta: float, spec: NormSpec,
                      matchings: Optional[List[Matching]]) -> Tuple[List[Multiset], List[Matching]]:
    closed, first, last = close_path(samples, theta)
    if matchings is None:
        return closed, step_matchings(closed, spec)
    head = step_matchings(closed[:first + 1], spec) if first > 0 else []
    tail = step_matchings(closed[last:], spec) if last < len(closed) - 1 else []
    return closed, head + list(matchings) + tail


def flow_detail(samples: Sequence[Multiset], params: Sequence[float], theta: float, spec: NormSpec,
                matchings: Optional[List[Matching]] = None) -> Tuple[int, List[int], bool]:
    theta = _check_theta(theta)
    if len(samples) != len(params):
        raise ParameterError(f"{len(params)} parameters for {len(samples)} samples")
    _check_circle(samples[0].space)
    closed, closed_matchings = _closed_matchings(samples, theta, spec, matchings)
    ts = enumerate_path(closed, np.arange(len(closed), dtype=np.float64), spec, matchings=closed_matchings)
    return _flow_from_tracks(ts)


def flow_mu(samples: Sequence[Multiset], params: Sequence[float], theta: float, spec: NormSpec,
            matchings: Optional[List[Matching]] = None) -> int:
    """mu(theta; S): winding sum of the path closed by canonical theta-contractions."""
    return flow_detail(samples, params, theta, spec, matchings)[0]


# ---------------------------------------------------------------------------------------
# crossings
# ---------------------------------------------------------------------------------------

def _track_crossings(track: Track, space: BasedSpace, theta: float, tol: float) -> int:
    seq, offset = _closed_sequence(track, space)
    if seq.size < 2:
        return 0
    phases = seq[0] + np.concatenate([[0.0], np.cumsum(_phase_increments(seq, offset))])
    levels = (phases - theta) / TWO_PI
    nearest = np.round(levels)
    levels = np.where(np.abs(levels - nearest) * TWO_PI <= tol, nearest, levels)
    return int(np.floor(levels[-1]) - np.floor(levels[0]))


def sf_crossings(samples: Sequence[Multiset], params: Sequence[float], theta: float,
                 spec: Optional[NormSpec] = None, tracks: Optional[TrackSet] = None,
                 tol: Optional[float] = None) -> int:
    """
    Net anticlockwise crossings of e^{i theta} by the eigenvalue tracks. A track that lands on
    theta and retreats contributes 0.
    """
    tol = settings.TOL_BASE if tol is None else tol
    theta = _check_theta(theta)
    spec = spec or NormSpec.schatten(2.0)
    _check_circle(samples[0].space)
    _check_endpoint_collision(samples[0], theta, tol)
    _check_endpoint_collision(samples[-1], theta, tol)
    ts = tracks if tracks is not None else enumerate_path(samples, params, spec)
    simple = split_simple(ts)
    return sum(_track_crossings(tr, ts.space, theta, tol) for tr in simple.tracks)


# ---------------------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------------------

def _phase_step_profile(ts: TrackSet) -> List[float]:
    """Largest |phase increment| per step over all tracks."""
    profile = np.zeros(max(ts.size - 1, 0))
    for tr in split_simple(ts).tracks:
        seq, offset = _closed_sequence(tr, ts.space)
        if seq.size > 1:
            inc = np.abs(qs.principal_increment(seq[:-1], seq[1:]))
            for k, value in enumerate(inc):
                j = offset + k
                if j < profile.size:
                    profile[j] = max(profile[j], value)
    return [float(v) for v in profile]


class FlowEvaluator:
    """
    Spectral flow over a theta grid by the winding sum and the crossing count.
    The open-path matchings are solved once per path and shared by every theta.
    """

    def __init__(self, spec: Optional[NormSpec] = None, max_workers: Optional[int] = None):
        self.spec = spec or NormSpec.schatten(2.0)
        self.max_workers = max_workers or settings.MAX_WORKERS

    def evaluate(self, samples: Sequence[Multiset], params: Sequence[float], thetas: Sequence[float]) -> FlowResult:
        spec = self.spec
        thetas = np.asarray([_check_theta(t) for t in thetas], dtype=np.float64)
        _check_circle(samples[0].space)
        matchings = step_matchings(samples, spec)
        ts = enumerate_path(samples, params, spec, matchings=matchings)

        def at_theta(theta: float):
            total, windings, flagged = flow_detail(samples, params, theta, spec, matchings=matchings)
            return total, windings, flagged, sf_crossings(samples, params, theta, spec, tracks=ts)

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            results = list(pool.map(at_theta, thetas))

        flow = [r[0] for r in results]
        crossing = [r[3] for r in results]
        disagreements = [float(t) for t, a, b in zip(thetas, flow, crossing) if a != b]
        if disagreements:
            logger.warning(f"Winding and crossing counts disagree at theta = {disagreements}")
        diagnostics = {
            "track_windings": {f"{t:.12g}": r[1] for t, r in zip(thetas, results)},
            "experimental": any(r[2] for r in results) or samples[0].space.is_quotient,
            "max_phase_step": _phase_step_profile(ts),
            "endpoint_angles": [float(a) for a in endpoint_angles(samples)],
            "disagreements": disagreements,
        }
        return FlowResult(theta_grid=thetas, flow=flow, method=FlowMethod.WINDING_SUM,
                          crossing=crossing, diagnostics=diagnostics)

    def evaluate_unitary(self, path: SampledOperatorPath, thetas: Sequence[float]) -> FlowResult:
        """sf(theta; U) = mu(theta; sigma(U)) for a sampled unitary path."""
        if path.model.kind != OperatorKind.UNITARY:
            raise ParameterError("Spectral flow needs a unitary path")
        K = path.model.essential_set
        for theta in thetas:
            if bool(qs.contains(K, _check_theta(theta))):
                raise ParameterError(f"theta = {theta} lies in the essential set")
        result = self.evaluate(path.spectra(), path.params, thetas)
        result.diagnostics["meta"] = path.meta
        return result


def flow_grid(samples: Sequence[Multiset], params: Sequence[float], thetas: Sequence[float],
              spec: Optional[NormSpec] = None) -> FlowResult:
    return FlowEvaluator(spec).evaluate(samples, params, thetas)


def sf_unitary(path: SampledOperatorPath, thetas: Sequence[float], spec: Optional[NormSpec] = None) -> FlowResult:
    return FlowEvaluator(spec).evaluate_unitary(path, thetas)
