"""
Seeded verification campaigns behind `verify`.

Every instance draws from its own generator spawned from the campaign seed, so a campaign
is reproducible instance by instance whatever the worker count; outcomes are reduced in
index order.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg as sla

from ..config import settings
from ..exceptions import ParameterError, SpecflowError
from ..models import BasedSpace, Multiset, NormSpec
from .multisets import brute_force_distance, build_multiset, difference, distance_phi, msum
from .spectra import (
    OperatorModel,
    PathRecipe,
    generate_path,
    haar_unitary,
    random_hermitian,
    random_normal,
    verify_bhatia_sinha,
    verify_hoffman_wielandt,
    verify_kato_selfadjoint,
)
from .spectral_flow import flow_grid, parse_theta_grid

logger = logging.getLogger(__name__)

NORM_CYCLE = (1.0, 2.0, math.inf)


@dataclass
class Outcome:
    slack: float
    failure: Optional[str] = None


@dataclass
class SuiteReport:
    suite: str
    count: int
    seed: int
    min_slack: float = math.inf
    max_slack: float = -math.inf
    failures: List[str] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.suite}: {status} count={self.count} failures={len(self.failures)} "
                f"min_slack={self.min_slack:.6g} max_slack={self.max_slack:.6g} elapsed={self.elapsed:.2f}s")


# ---------------------------------------------------------------------------------------
# random data
# ---------------------------------------------------------------------------------------

def random_space(rng: np.random.Generator) -> BasedSpace:
    return BasedSpace.line(0.0) if rng.random() < 0.5 else BasedSpace.circle(0.0)


def random_multiset(space: BasedSpace, rank: int, rng: np.random.Generator) -> Multiset:
    """Rank-`rank` multiset; about a quarter of the points repeat an earlier location."""
    locs: List[float] = []
    for _ in range(rank):
        if locs and rng.random() < 0.25:
            locs.append(locs[rng.integers(len(locs))])
        elif space.is_circular:
            locs.append(float(rng.uniform(0.05, 2 * math.pi - 0.05)))
        else:
            locs.append(float(rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 2.0)))
    return build_multiset(space, locs)


def difference_counterexample(N: int) -> Tuple[Multiset, Multiset, Multiset, Multiset]:
    """S = S' = T = {1/N, ..., 1}*, T' = T - {1}* on the line based at 0."""
    if N < 2:
        raise ParameterError(f"N must exceed 1, got {N}")
    space = BasedSpace.line(0.0)
    full = build_multiset(space, [k / N for k in range(1, N + 1)])
    short = build_multiset(space, [k / N for k in range(1, N)])
    return full, full, full, short


# ---------------------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------------------

METRIC_NORMS = (NormSpec.schatten(1.0), NormSpec.schatten(2.0), NormSpec.schatten(math.inf), NormSpec.kyfan(2))


def _metric_instance(index: int, rng: np.random.Generator, steps: int) -> Outcome:
    space = random_space(rng)
    S, U, T = (random_multiset(space, int(rng.integers(0, 5)), rng) for _ in range(3))
    spec = METRIC_NORMS[index % len(METRIC_NORMS)]
    d_st, d_ts = distance_phi(S, T, spec), distance_phi(T, S, spec)
    d_su, d_ut = distance_phi(S, U, spec), distance_phi(U, T, spec)
    if abs(d_st - d_ts) > settings.TOL_ORACLE:
        return Outcome(0.0, f"#{index} {spec.token}: asymmetric {d_st} vs {d_ts}")
    if distance_phi(S, S, spec) > settings.TOL_BASE:
        return Outcome(0.0, f"#{index} {spec.token}: d(S, S) > 0")
    for A, B, value in ((S, T, d_st), (S, U, d_su), (U, T, d_ut)):
        oracle = brute_force_distance(A, B, spec)
        if abs(oracle - value) > settings.TOL_ORACLE:
            return Outcome(0.0, f"#{index} {spec.token}: assignment {value} vs brute force {oracle}")
    slack = d_su + d_ut - d_st
    if slack < -settings.TOL_INEQUALITY:
        return Outcome(slack, f"#{index} {spec.token}: triangle slack {slack}")
    return Outcome(slack)


def _sum_diff_instance(index: int, rng: np.random.Generator, steps: int) -> Outcome:
    spec = NormSpec.schatten(NORM_CYCLE[index % 3])
    space = random_space(rng)
    S_inner = random_multiset(space, int(rng.integers(1, 4)), rng)
    T_inner = random_multiset(space, int(rng.integers(0, 4)), rng)
    S_rest = random_multiset(space, int(rng.integers(0, 4)), rng)
    T_rest = random_multiset(space, int(rng.integers(0, 4)), rng)
    S, T = msum(S_inner, S_rest), msum(T_inner, T_rest)

    bound = distance_phi(S_inner, T_inner, spec) + distance_phi(S_rest, T_rest, spec)
    sum_slack = bound - distance_phi(S, T, spec)
    if sum_slack < -settings.TOL_INEQUALITY:
        return Outcome(sum_slack, f"#{index} {spec.token}: sum inequality slack {sum_slack}")

    n = S_inner.rank + T_inner.rank
    lhs = distance_phi(difference(S, S_inner), difference(T, T_inner), spec)
    rhs = 3 * n * (distance_phi(S, T, spec) + distance_phi(S_inner, T_inner, spec))
    diff_slack = rhs - lhs
    if diff_slack < -settings.TOL_INEQUALITY:
        return Outcome(diff_slack, f"#{index} {spec.token}: difference inequality slack {diff_slack}")
    return Outcome(min(sum_slack, diff_slack))


def check_difference_counterexample(N: int = 16) -> Tuple[float, float]:
    """(rho_2(S - S', T - T'), rho_2(S, T) + rho_2(S', T')) for the fixed counterexample."""
    S, S_inner, T, T_inner = difference_counterexample(N)
    rho = NormSpec.schatten(2.0)
    lhs = distance_phi(difference(S, S_inner), difference(T, T_inner), rho)
    return lhs, distance_phi(S, T, rho) + distance_phi(S_inner, T_inner, rho)


def _unitary_pair(rng: np.random.Generator, d: int) -> Tuple[np.ndarray, np.ndarray]:
    U = haar_unitary(d, rng)
    if rng.random() < 0.5:
        return U, haar_unitary(d, rng)
    eps = float(rng.uniform(0.01, 0.5))
    return U, U @ sla.expm(1j * eps * random_hermitian(d, rng, scale=1.0 / math.sqrt(d)))


def _bhatia_sinha_instance(index: int, rng: np.random.Generator, steps: int) -> Outcome:
    d = int(rng.integers(2, 17))
    p = NORM_CYCLE[index % 3]
    U, V = _unitary_pair(rng, d)
    check = verify_bhatia_sinha(U, V, p, OperatorModel.unitary_identity(d))
    return Outcome(check.slack, None if check.holds else f"#{index} d={d} p={p}: {check.lhs} > {check.rhs}")


def _hoffman_wielandt_instance(index: int, rng: np.random.Generator, steps: int) -> Outcome:
    d = int(rng.integers(2, 17))
    N = random_normal(d, rng)
    if rng.random() < 0.5:
        M = random_normal(d, rng)
    else:
        # unitary conjugate of N close to N
        W = sla.expm(1j * float(rng.uniform(0.01, 0.5)) * random_hermitian(d, rng, scale=1.0 / math.sqrt(d)))
        M = W @ N @ W.conj().T
    check = verify_hoffman_wielandt(N, M)
    return Outcome(check.slack, None if check.holds else f"#{index} d={d}: {check.lhs} > {check.rhs}")


def _kato_instance(index: int, rng: np.random.Generator, steps: int) -> Outcome:
    d = int(rng.integers(2, 17))
    p = NORM_CYCLE[index % 3]
    H = random_hermitian(d, rng)
    G = H + float(rng.uniform(0.01, 1.0)) * random_hermitian(d, rng) if rng.random() < 0.5 else random_hermitian(d, rng)
    check = verify_kato_selfadjoint(H, G, p, OperatorModel.hermitian_zero(d))
    return Outcome(check.slack, None if check.holds else f"#{index} d={d} p={p}: {check.lhs} > {check.rhs}")


def _flow_agreement_instance(index: int, rng: np.random.Generator, steps: int) -> Outcome:
    d = int(rng.integers(2, 9))
    seed = int(rng.integers(0, 2 ** 31 - 1))
    path = generate_path(PathRecipe.random_loop(seed), OperatorModel.unitary_identity(d), steps)
    thetas = parse_theta_grid(settings.DEFAULT_THETA_GRID)
    try:
        result = flow_grid(path.spectra(), path.params, thetas)
    except SpecflowError as e:
        return Outcome(0.0, f"#{index} seed={seed} d={d}: {e.message}")
    expected = path.meta["expected_sf"]
    if not result.agrees:
        return Outcome(0.0, f"#{index} seed={seed}: methods disagree at {result.diagnostics['disagreements']}")
    if len(set(result.flow)) != 1:
        return Outcome(0.0, f"#{index} seed={seed}: loop flow depends on theta {sorted(set(result.flow))}")
    if result.flow[0] != expected:
        return Outcome(0.0, f"#{index} seed={seed}: flow {result.flow[0]} != trace {expected}")
    return Outcome(0.0)


SUITES: Dict[str, Callable[[int, np.random.Generator, int], Outcome]] = {
    "metric": _metric_instance,
    "sum-diff": _sum_diff_instance,
    "bhatia-sinha": _bhatia_sinha_instance,
    "hoffman-wielandt": _hoffman_wielandt_instance,
    "kato": _kato_instance,
    "flow-agreement": _flow_agreement_instance,
}


class CampaignRunner:
    """
    Runs the verification suites with one seed, instance size and worker count.
    Keeps the reports of every suite it has run.
    """

    def __init__(self, seed: Optional[int] = None, steps: int = 256, max_workers: Optional[int] = None):
        self.seed = settings.DEFAULT_SEED if seed is None else seed
        self.steps = steps
        self.max_workers = max_workers or settings.MAX_WORKERS
        self.reports: List[SuiteReport] = []

    def _run_instance(self, suite: str, children, index: int) -> Outcome:
        rng = np.random.default_rng(children[index])
        try:
            return SUITES[suite](index, rng, self.steps)
        except SpecflowError as e:
            return Outcome(0.0, f"#{index}: {type(e).__name__}: {e.message}")

    def run_suite(self, suite: str, count: int = 100) -> SuiteReport:
        if suite not in SUITES:
            raise ParameterError(f"Unknown suite {suite!r}; choose from {', '.join(SUITES)} or all")
        if count < 0:
            raise ParameterError(f"count must be nonnegative, got {count}")
        children = np.random.SeedSequence(self.seed).spawn(count)
        started = time.perf_counter()

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            outcomes = list(pool.map(lambda index: self._run_instance(suite, children, index), range(count)))

        report = SuiteReport(suite=suite, count=count, seed=self.seed)
        for outcome in outcomes:
            report.min_slack = min(report.min_slack, outcome.slack)
            report.max_slack = max(report.max_slack, outcome.slack)
            if outcome.failure:
                report.failures.append(outcome.failure)

        if suite == "sum-diff":
            lhs, naive = check_difference_counterexample(16)
            if not (abs(lhs - 1.0) <= settings.TOL_INEQUALITY and naive <= 0.25 + settings.TOL_INEQUALITY):
                report.failures.append(f"counterexample N=16: expected the naive bound to fail, got {lhs} vs {naive}")
            else:
                logger.info(f"Counterexample N=16: rho_2(S-S', T-T') = {lhs:.12g} > {naive:.12g}")

        report.elapsed = time.perf_counter() - started
        logger.info(report.summary())
        self.reports.append(report)
        return report

    def run_suites(self, suite: str, count: int = 100) -> List[SuiteReport]:
        names = list(SUITES) if suite == "all" else [suite]
        return [self.run_suite(name, count) for name in names]

    def get_statistics(self) -> Dict:
        return {
            "suites": [report.suite for report in self.reports],
            "instances": sum(report.count for report in self.reports),
            "failed_suites": [report.suite for report in self.reports if not report.passed],
            "failures": sum(len(report.failures) for report in self.reports),
        }


def run_suite(suite: str, seed: Optional[int] = None, count: int = 100, steps: int = 256) -> SuiteReport:
    return CampaignRunner(seed=seed, steps=steps).run_suite(suite, count)


def run_suites(suite: str, seed: Optional[int] = None, count: int = 100, steps: int = 256) -> List[SuiteReport]:
    return CampaignRunner(seed=seed, steps=steps).run_suites(suite, count)
