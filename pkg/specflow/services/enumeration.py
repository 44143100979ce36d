"""
Continuous enumeration of sampled multiset paths.

Consecutive samples are paired by an optimal d_Phi assignment and matched points are
chained into tracks. A point matched to a basepoint slot ends its track there (death), a
basepoint slot matched to a point starts a new one (birth); inactive track values are the
basepoint class (its coordinate on plain spaces, NaN on quotients).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import settings
from ..exceptions import ParameterError, ResolutionError, SpaceMismatchError
from ..models import BasedSpace, Multiset, NormSpec
from . import quotient_spaces as qs
from .multisets import (
    BASE,
    Matching,
    base_distances,
    bottleneck_value,
    build_multiset,
    distance_matrix,
    distance_phi,
    optimal_matching,
    same_multiset,
)

logger = logging.getLogger(__name__)


@dataclass
class Track:
    """One sampled eigenvalue path; `active` marks the samples off the basepoint class."""
    values: np.ndarray
    active: np.ndarray
    track_id: int = 0

    @property
    def birth(self) -> Optional[int]:
        idx = np.flatnonzero(self.active)
        return int(idx[0]) if idx.size else None

    @property
    def death(self) -> Optional[int]:
        idx = np.flatnonzero(self.active)
        return int(idx[-1]) if idx.size else None

    @property
    def simple(self) -> bool:
        idx = np.flatnonzero(self.active)
        return idx.size > 0 and idx[-1] - idx[0] + 1 == idx.size

    @property
    def active_count(self) -> int:
        return int(self.active.sum())

    @classmethod
    def from_values(cls, space: BasedSpace, values: Sequence, track_id: int = 0,
                    tol: Optional[float] = None) -> "Track":
        """Build a track from raw values; entries at the basepoint class (or None/NaN) are inactive."""
        tol = settings.TOL_BASE if tol is None else tol
        raw = np.array([np.nan if v is None else v for v in values], dtype=space.dtype)
        active = ~np.isnan(raw)
        if active.any():
            active[active] = base_distances(space, raw[active]) > tol
        filled = np.where(active, raw, space.base)
        return cls(values=filled, active=active, track_id=track_id)


@dataclass
class StepReport:
    """Diagnostics of one consecutive pair (S_j, S_j+1)."""
    index: int
    distance: float
    bottleneck: float
    max_displacement: float
    births: int
    deaths: int
    adequate: bool = True


@dataclass
class TrackSet:
    params: np.ndarray
    tracks: List[Track]
    space: BasedSpace
    spec: Optional[NormSpec] = None
    steps: List[StepReport] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.params)

    def sample(self, j: int) -> Multiset:
        """The multiset {track_i(t_j)}* reconstructed from the active values at index j."""
        return build_multiset(self.space, [tr.values[j] for tr in self.tracks if tr.active[j]])

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for tr in self.tracks:
            for j, t in enumerate(self.params):
                row = {"t": float(t), "track_id": tr.track_id, "active": int(tr.active[j])}
                value = tr.values[j]
                if self.space.is_complex:
                    row["value"] = float(np.real(value))
                    row["value_im"] = float(np.imag(value))
                else:
                    row["value"] = float(value)
                rows.append(row)
        columns = ["t", "track_id", "value", "value_im", "active"] if self.space.is_complex \
            else ["t", "track_id", "value", "active"]
        return pd.DataFrame(rows, columns=columns)

    def to_dict(self) -> Dict:
        def encode(v):
            if self.space.is_complex:
                return [float(np.real(v)), float(np.imag(v))]
            return None if math.isnan(float(v)) else float(v)

        return {
            "space": self.space.model_dump(mode="json"),
            "norm": self.spec.token if self.spec else None,
            "params": [float(t) for t in self.params],
            "tracks": [
                {
                    "track_id": tr.track_id,
                    "birth": tr.birth,
                    "death": tr.death,
                    "simple": bool(tr.simple),
                    "values": [encode(v) for v in tr.values],
                    "active": [bool(a) for a in tr.active],
                }
                for tr in self.tracks
            ],
            "steps": [asdict(step) for step in self.steps],
        }


@dataclass
class ValidationReport:
    reconstruction: np.ndarray
    max_displacement: np.ndarray
    step_distances: np.ndarray
    step_power_error: np.ndarray
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class SeparationRun:
    start: int
    end: int
    radius: float
    rank: int


@dataclass
class SeparationResult:
    core: List[Multiset]
    tail: List[Multiset]
    runs: List[SeparationRun]

    def radius_at(self, j: int) -> float:
        for run in self.runs:
            if run.start <= j <= run.end:
                return run.radius
        raise ParameterError(f"Index {j} outside the separated path")


# ---------------------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------------------

def _check_path(samples: Sequence[Multiset], params: Sequence[float]) -> np.ndarray:
    if len(samples) < 2:
        raise ParameterError(f"A sampled path needs at least 2 samples, got {len(samples)}")
    if len(params) != len(samples):
        raise ParameterError(f"{len(params)} parameters for {len(samples)} samples")
    space = samples[0].space
    for j, S in enumerate(samples):
        if S.space != space:
            raise SpaceMismatchError(f"Sample {j} lives in {S.space.kind.value}, expected {space.kind.value}")
    params = np.asarray(params, dtype=np.float64)
    if np.any(np.diff(params) <= 0):
        raise ParameterError("Parameters must be strictly increasing")
    return params


def _support_gap(S: Multiset, tol: float) -> float:
    """Smallest nonzero distance between support points of S, the basepoint class included."""
    locs = S.locations()
    if locs.size == 0:
        return math.inf
    gaps = [base_distances(S.space, locs)]
    if locs.size > 1:
        dmat = distance_matrix(S.space, locs, locs)
        gaps.append(dmat[np.triu_indices(locs.size, k=1)])
    gaps = np.concatenate(gaps)
    gaps = gaps[gaps > tol]
    return float(gaps.min()) if gaps.size else math.inf


def step_distances(space: BasedSpace, a: np.ndarray, a_active: np.ndarray,
                   b: np.ndarray, b_active: np.ndarray) -> np.ndarray:
    """d(a_k, b_k) where an inactive entry stands for the basepoint class."""
    out = np.zeros(len(a))
    both = a_active & b_active
    if both.any():
        out[both] = np.diag(distance_matrix(space, a[both], b[both]))
    only_a = a_active & ~b_active
    if only_a.any():
        out[only_a] = base_distances(space, a[only_a])
    only_b = b_active & ~a_active
    if only_b.any():
        out[only_b] = base_distances(space, b[only_b])
    return out


def track_displacements(track: Track, space: BasedSpace) -> np.ndarray:
    return step_distances(space, track.values[:-1], track.active[:-1], track.values[1:], track.active[1:])


def _solve_step(S: Multiset, T: Multiset, spec: NormSpec, tie_break: bool) -> Matching:
    matching = optimal_matching(S, T, spec, tie_break=tie_break)
    if matching.bottleneck is None:
        matching.bottleneck = bottleneck_value(S, T)
    return matching


def step_matchings(samples: Sequence[Multiset], spec: NormSpec, tie_break: bool = True) -> List[Matching]:
    """Optimal matchings of every consecutive pair, solved on a worker pool and returned in order."""
    with ThreadPoolExecutor(max_workers=settings.MAX_WORKERS) as pool:
        return list(pool.map(lambda j: _solve_step(samples[j], samples[j + 1], spec, tie_break),
                             range(len(samples) - 1)))


# ---------------------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------------------

def enumerate_path(samples: Sequence[Multiset], params: Sequence[float], spec: NormSpec,
                   matchings: Optional[List[Matching]] = None) -> TrackSet:
    """
    Chain optimal step matchings into tracks.

    Among optimal assignments each step takes the one with the smallest sum of squared
    displacements (ties then go to the lowest source index). Steps whose bottleneck value
    exceeds half the smallest support gap of either endpoint are flagged as inadequately
    sampled; their tracks are best effort.
    """
    params = _check_path(samples, params)
    if not spec.is_schatten:
        raise ParameterError(f"Enumeration needs a Schatten norm, got {spec.token}")
    space = samples[0].space
    tol = settings.TOL_BASE
    if matchings is None:
        matchings = step_matchings(samples, spec)
    elif len(matchings) != len(samples) - 1:
        raise ParameterError(f"{len(matchings)} matchings for {len(samples) - 1} steps")

    expanded = [S.expand() for S in samples]
    entries: List[Dict[int, object]] = []
    current: Dict[int, int] = {}
    for i, loc in enumerate(expanded[0]):
        entries.append({0: loc})
        current[i] = len(entries) - 1

    reports = []
    for j, matching in enumerate(matchings):
        nxt: Dict[int, int] = {}
        births = deaths = 0
        for i, k in matching.pairs:
            if k == BASE:
                deaths += 1
                continue
            if i == BASE:
                entries.append({})
                tid = len(entries) - 1
                births += 1
            else:
                tid = current[i]
            entries[tid][j + 1] = expanded[j + 1][k]
            nxt[k] = tid
        current = nxt

        gap = min(_support_gap(samples[j], tol), _support_gap(samples[j + 1], tol))
        adequate = matching.bottleneck <= gap / 2.0
        if not adequate:
            logger.warning(
                f"Step {j}: bottleneck {matching.bottleneck:.3g} exceeds half the support gap "
                f"{gap:.3g}; tracks near this step are best effort"
            )
        reports.append(StepReport(
            index=j,
            distance=matching.value,
            bottleneck=matching.bottleneck,
            max_displacement=matching.max_cost,
            births=births,
            deaths=deaths,
            adequate=adequate,
        ))

    size = len(samples)
    tracks = []
    for tid, entry in enumerate(entries):
        values = np.full(size, space.base, dtype=space.dtype)
        active = np.zeros(size, dtype=bool)
        for j, loc in entry.items():
            values[j] = loc
            active[j] = True
        tracks.append(Track(values=values, active=active, track_id=tid))
    logger.debug(f"Enumerated {len(tracks)} tracks over {size} samples")
    return TrackSet(params=params, tracks=tracks, space=space, spec=spec, steps=reports)


def validate_tracks(ts: TrackSet, samples: Sequence[Multiset], spec: Optional[NormSpec] = None) -> ValidationReport:
    """Compare a TrackSet against its source samples; failures are reported, not raised."""
    spec = spec or ts.spec or NormSpec.schatten(2.0)
    if len(samples) != ts.size:
        raise ParameterError(f"TrackSet has {ts.size} samples, source has {len(samples)}")
    tol = settings.TOL_BASE
    failures = []

    reconstruction = np.array([distance_phi(ts.sample(j), samples[j], spec) for j in range(ts.size)])
    for j in np.flatnonzero(reconstruction > tol):
        failures.append(f"reconstruction distance {reconstruction[j]:.3g} at index {j}")

    disp = np.array([track_displacements(tr, ts.space) for tr in ts.tracks]).reshape(len(ts.tracks), ts.size - 1)
    step_dist = np.array([distance_phi(samples[j], samples[j + 1], spec) for j in range(ts.size - 1)])
    if spec.is_sup:
        achieved = disp.max(axis=0) if disp.size else np.zeros(ts.size - 1)
        power_error = np.abs(achieved - step_dist)
    else:
        achieved = (disp ** spec.p).sum(axis=0) if disp.size else np.zeros(ts.size - 1)
        power_error = np.abs(achieved - step_dist ** spec.p)

    return ValidationReport(
        reconstruction=reconstruction,
        max_displacement=disp.max(axis=1) if disp.size else np.zeros(len(ts.tracks)),
        step_distances=step_dist,
        step_power_error=power_error,
        failures=failures,
    )


def split_simple(ts: TrackSet) -> TrackSet:
    """Cut every track at its inactive runs so each piece has one contiguous active range."""
    pieces = []
    for tr in ts.tracks:
        idx = np.flatnonzero(tr.active)
        if idx.size == 0:
            continue
        cuts = np.flatnonzero(np.diff(idx) > 1) + 1
        for run in np.split(idx, cuts):
            active = np.zeros_like(tr.active)
            active[run] = True
            values = np.where(active, tr.values, ts.space.base).astype(ts.space.dtype)
            pieces.append(Track(values=values, active=active, track_id=len(pieces)))
    return TrackSet(params=ts.params, tracks=pieces, space=ts.space, spec=ts.spec, steps=ts.steps)


def lift_track(track: Track, space: BasedSpace) -> np.ndarray:
    """Ambient representatives of a track; on quotients inactive samples go to the entry/exit boundary point."""
    if not space.is_quotient:
        return np.asarray(track.values)
    path = np.where(track.active, track.values, np.nan)
    return qs.lift_simple_path(list(path), space.essential)


# ---------------------------------------------------------------------------------------
# finite separation
# ---------------------------------------------------------------------------------------

def _radii(S: Multiset) -> np.ndarray:
    return base_distances(S.space, S.expand())


def _shrink_radius(radii: np.ndarray, eps: float, tol: float, index: int) -> float:
    on_cut = radii[np.abs(radii - eps) < tol]
    if on_cut.size == 0:
        return eps
    below = radii[radii < eps - tol]
    lower = float(below.max()) if below.size else 0.0
    radius = (lower + float(on_cut.min())) / 2.0
    if np.any(np.abs(radii - radius) < tol) or radius < tol:
        raise ResolutionError(f"No cut radius below {eps} clears the support by {tol}", index=index)
    logger.debug(f"Cut radius shrunk from {eps} to {radius} at index {index}")
    return radius


def _cut_gap(radii_a: np.ndarray, radii_b: np.ndarray, radius: float) -> float:
    radii = np.concatenate([radii_a, radii_b])
    return float(np.abs(radii - radius).min()) if radii.size else math.inf


def _radius_clears(radii: np.ndarray, jump: float, eps: float, tol: float) -> bool:
    """True when some radius in [tol, eps] lies farther than `jump` from every radius in `radii`."""
    blocked = sorted((r - jump, r + jump) for r in radii if r + jump > tol and r - jump < eps)
    cursor = tol
    for lo, hi in blocked:
        if lo > cursor:
            return True
        cursor = max(cursor, hi)
    return cursor < eps


def finite_separation(samples: Sequence[Multiset], eps: float, spec: NormSpec,
                      tol: Optional[float] = None) -> SeparationResult:
    """
    Split each sample into a finite-rank core outside a shrunk ball B_eps0(x0) and a tail inside it.

    Runs are decided greedily: a run keeps its cut radius while every step's bottleneck value
    stays below the distance of both endpoints' supports to the cut sphere, so the core rank is
    constant along the run. A step that breaks a run starts the next one. It is a resolution
    error only when it changes the core rank and no radius up to eps clears both endpoints by
    more than its bottleneck value.
    """
    tol = settings.TOL_BASE if tol is None else tol
    if not eps > 0:
        raise ParameterError(f"Separation radius must be positive, got {eps}")
    if not samples:
        raise ParameterError("finite_separation needs at least one sample")
    space = samples[0].space
    for S in samples:
        if S.space != space:
            raise SpaceMismatchError("All samples must live in the same space")

    radii = [_radii(S) for S in samples]
    last = len(samples) - 1
    runs: List[SeparationRun] = []
    start = 0
    while start <= last:
        radius = _shrink_radius(radii[start], eps, tol, start)
        end = start
        while end < last:
            jump = bottleneck_value(samples[end], samples[end + 1])
            gap = _cut_gap(radii[end], radii[end + 1], radius)
            if gap < tol or jump >= gap:
                rank_before = int(np.sum(radii[end] > radius))
                rank_after = int(np.sum(radii[end + 1] > radius))
                both = np.concatenate([radii[end], radii[end + 1]])
                if rank_before != rank_after and not _radius_clears(both, jump, eps, tol):
                    raise ResolutionError(
                        f"Step bottleneck {jump:.3g} is too coarse for the separation gap {gap:.3g}",
                        index=end,
                    )
                break
            end += 1
        rank = int(np.sum(radii[start] > radius))
        runs.append(SeparationRun(start=start, end=end, radius=radius, rank=rank))
        start = end + 1

    core, tail = [], []
    for run in runs:
        for j in range(run.start, run.end + 1):
            S = samples[j]
            pts = S.expand()
            outside = radii[j] > run.radius
            core.append(build_multiset(space, list(pts[outside])))
            tail.append(build_multiset(space, list(pts[~outside])))
    logger.info(f"Finite separation: {len(runs)} run(s), core ranks {[run.rank for run in runs]}")
    return SeparationResult(core=core, tail=tail, runs=runs)


# ---------------------------------------------------------------------------------------
# path operations
# ---------------------------------------------------------------------------------------

def reverse_path(samples: Sequence[Multiset], params: Sequence[float]) -> Tuple[List[Multiset], np.ndarray]:
    """Inverse path t -> S(t0 + tN - t)."""
    params = np.asarray(params, dtype=np.float64)
    return list(samples)[::-1], (params[0] + params[-1] - params[::-1])


def concatenate_paths(first: Sequence[Multiset], first_params: Sequence[float],
                      second: Sequence[Multiset], second_params: Sequence[float]
                      ) -> Tuple[List[Multiset], np.ndarray]:
    """Path product: `second` is shifted to start where `first` ends; the shared sample appears once."""
    if not same_multiset(first[-1], second[0]):
        raise ParameterError("Paths are not concatenable: end of the first differs from start of the second")
    first_params = np.asarray(first_params, dtype=np.float64)
    second_params = np.asarray(second_params, dtype=np.float64)
    shifted = second_params[1:] - second_params[0] + first_params[-1]
    return list(first) + list(second[1:]), np.concatenate([first_params, shifted])
