import itertools
import math

import numpy as np
import pytest

from specflow.exceptions import ContainmentError, SizeError, SpaceMismatchError, UnsupportedNormError
from specflow.models import BasedSpace, CompactSet, NormSpec
from specflow.services.campaigns import check_difference_counterexample, difference_counterexample, random_multiset
from specflow.services.multisets import (
    BASE,
    Region,
    brute_force_distance,
    build_multiset,
    difference,
    distance_phi,
    dyadic_bump_family,
    finite_sum_bound,
    induced_path,
    intersect,
    min_separation,
    msum,
    optimal_matching,
    phi_estimate_lower,
    point_distance,
    same_multiset,
    tail_uniform_norms,
    trivial,
)
from specflow.services.symmetric_norms import eval_norm

NORMS = [NormSpec.schatten(1.0), NormSpec.schatten(2.0), NormSpec.schatten(math.inf)]


class TestConstruction:
    def test_merges_and_absorbs(self, line):
        S = build_multiset(line, [0.5, 0.5 + 1e-12, 1e-12, (2.0, 3)])
        assert S.rank == 5
        assert list(S.locations()) == [0.5, 2.0]
        assert list(S.multiplicities()) == [2, 3]

    def test_angles_are_canonical(self, circle):
        S = build_multiset(circle, [-0.5])
        assert S.locations()[0] == pytest.approx(2 * math.pi - 0.5)

    def test_plane_points(self):
        plane = BasedSpace.plane(0j)
        S = build_multiset(plane, [1 + 1j, 1 + 1j, 0j])
        assert S.rank == 2
        assert S.expand()[0] == 1 + 1j

    def test_sum_and_difference(self, line):
        a, b = 0.3, 0.7
        S = build_multiset(line, [a, a, b])
        assert msum(S, trivial(line)) == S
        assert msum(build_multiset(line, [a]), build_multiset(line, [a])).multiplicities().tolist() == [2]
        assert difference(S, S).is_trivial
        assert difference(S, trivial(line)) == S
        assert difference(S, build_multiset(line, [a])) == build_multiset(line, [a, b])

    def test_difference_requires_containment(self, line):
        S = build_multiset(line, [0.3])
        with pytest.raises(ContainmentError):
            difference(S, build_multiset(line, [0.3, 0.3]))
        with pytest.raises(ContainmentError):
            difference(S, build_multiset(line, [0.31]))

    def test_rank_of_sum(self, rng, circle):
        for _ in range(20):
            S = random_multiset(circle, int(rng.integers(0, 5)), rng)
            T = random_multiset(circle, int(rng.integers(0, 5)), rng)
            assert msum(S, T).rank == S.rank + T.rank

    def test_space_mismatch(self, line, circle):
        with pytest.raises(SpaceMismatchError):
            msum(build_multiset(line, [1.0]), build_multiset(circle, [1.0]))


class TestRegions:
    def test_intersect(self, line):
        S = build_multiset(line, [(0.5, 2), 2.5, -1.0])
        assert intersect(S, Region.everything(line)) == S
        assert intersect(S, Region.of("line", [])).is_trivial
        kept = intersect(S, Region.of("line", [(0.0, 1.0)]))
        assert kept.rank == 2
        assert list(kept.locations()) == [0.5]

    def test_min_separation(self):
        assert min_separation([Region.of("line", [(0, 1)]), Region.of("line", [(2, 3)])]) == 1.0
        assert min_separation([Region.of("line", [(0, 1)]), Region.of("line", [(1, 2)])]) == 0.0

    def test_intersection_stability(self, line, rho2):
        regions = [Region.of("line", [(-2.0, -1.0)]), Region.of("line", [(1.0, 2.0)])]
        delta = min_separation(regions)
        S = build_multiset(line, [-1.5, 1.2, 1.8])
        T = build_multiset(line, [-1.45, 1.25, 1.75])
        d = distance_phi(S, T, rho2)
        assert d < delta
        for region in regions:
            assert distance_phi(intersect(S, region), intersect(T, region), rho2) <= d + 1e-9
            assert intersect(S, region).rank == intersect(T, region).rank


class TestDistance:
    def test_trivial(self, line, rho2):
        assert distance_phi(trivial(line), trivial(line), rho2) == 0.0

    def test_single_point_against_trivial(self, circle):
        S = build_multiset(circle, [1.0])
        for spec in NORMS + [NormSpec.kyfan(1), NormSpec.kyfan(3)]:
            assert brute_force_distance(S, trivial(circle), spec) == pytest.approx(point_distance(circle, 1.0, 0.0))

    def test_shift_example(self, rho2):
        S, _, _, T = difference_counterexample(4)
        assert distance_phi(S, T, rho2) <= 0.5 + 1e-12

    def test_naive_difference_inequality_fails(self):
        lhs, naive = check_difference_counterexample(16)
        assert lhs == pytest.approx(1.0, abs=1e-12)
        assert naive <= 0.25 + 1e-12

    def test_small_circle_golden(self, circle):
        S = build_multiset(circle, [0.1, 0.2])
        T = build_multiset(circle, [0.15])
        pts = [0.1, 0.2, 0.0]
        targets = [0.15, 0.0, 0.0]
        for spec in NORMS:
            expected = min(
                eval_norm(spec, [point_distance(circle, pts[i], targets[k]) for i, k in enumerate(perm)])
                for perm in itertools.permutations(range(3))
            )
            assert distance_phi(S, T, spec) == pytest.approx(expected, abs=1e-12)
            assert brute_force_distance(S, T, spec) == pytest.approx(expected, abs=1e-12)

    def test_oracle_equivalence(self, rng):
        for index in range(60):
            space = BasedSpace.line(0.0) if index % 2 else BasedSpace.circle(0.0)
            S = random_multiset(space, int(rng.integers(0, 5)), rng)
            T = random_multiset(space, int(rng.integers(0, 5)), rng)
            for spec in NORMS + [NormSpec.kyfan(2)]:
                assert abs(distance_phi(S, T, spec) - brute_force_distance(S, T, spec)) <= 1e-10

    def test_metric_axioms(self, rng):
        for index in range(40):
            space = BasedSpace.line(0.0) if index % 2 else BasedSpace.circle(0.0)
            S, U, T = (random_multiset(space, int(rng.integers(0, 4)), rng) for _ in range(3))
            for spec in NORMS:
                d = distance_phi(S, T, spec)
                assert d == distance_phi(T, S, spec) or abs(d - distance_phi(T, S, spec)) <= 1e-12
                assert distance_phi(S, S, spec) <= 1e-9
                assert (d <= 1e-9) == same_multiset(S, T)
                assert d <= distance_phi(S, U, spec) + distance_phi(U, T, spec) + 1e-9

    def test_quotient_distance(self):
        space = BasedSpace.quotient(CompactSet.build("line", [(0.0, 1.0)]))
        S = build_multiset(space, [0.5, 2.0])
        assert S.rank == 1
        assert distance_phi(S, trivial(space), NormSpec.schatten(2.0)) == pytest.approx(1.0)

    def test_matching_pairs_with_base(self, line, rho2):
        S = build_multiset(line, [5.0])
        T = build_multiset(line, [-5.0])
        matching = optimal_matching(S, T, rho2)
        assert sorted(matching.pairs) == [(BASE, 0), (0, BASE)]
        assert matching.value == pytest.approx(math.hypot(5.0, 5.0))

    def test_tie_break_prefers_small_squares(self, line):
        # for p = 1 moving both points by 1 or one point by 2 cost the same
        S = build_multiset(line, [1.0, 2.0])
        T = build_multiset(line, [2.0, 3.0])
        matching = optimal_matching(S, T, NormSpec.schatten(1.0), tie_break=True)
        assert matching.value == pytest.approx(2.0)
        assert sorted(matching.pairs) == [(0, 0), (1, 1)]

    def test_kyfan_limits(self, line):
        big = build_multiset(line, [float(k) for k in range(1, 6)])
        with pytest.raises(UnsupportedNormError):
            distance_phi(big, big, NormSpec.kyfan(2))
        with pytest.raises(SizeError):
            brute_force_distance(big, big, NormSpec.schatten(2.0))


class TestEstimates:
    def test_sum_inequality(self, rng, line):
        for index in range(30):
            spec = NORMS[index % 3]
            S, S2, T, T2 = (random_multiset(line, int(rng.integers(0, 3)), rng) for _ in range(4))
            bound = distance_phi(S, T, spec) + distance_phi(S2, T2, spec)
            assert distance_phi(msum(S, S2), msum(T, T2), spec) <= bound + 1e-9

    def test_finite_sum_bound(self, rng, circle):
        ss, ts = rng.uniform(0.1, 6.0, 3), rng.uniform(0.1, 6.0, 3)
        for spec in NORMS:
            d = distance_phi(build_multiset(circle, list(ss)), build_multiset(circle, list(ts)), spec)
            assert d <= finite_sum_bound(circle, ss, ts) + 1e-12

    def test_phi_estimate(self, rng, line):
        s0 = 1.0
        ss = rng.uniform(-2.0, 2.0, 3)
        d = distance_phi(build_multiset(line, [(s0, 3)]), build_multiset(line, list(ss)), NormSpec.schatten(math.inf))
        assert phi_estimate_lower(line, s0, ss) <= d + 1e-12

    def test_dyadic_bumps_tail_decay(self, line):
        params = np.linspace(0.0, 1.0, 65)
        values = dyadic_bump_family(3, 4, params)
        assert values.shape == (12, 65)
        tails = tail_uniform_norms(line, values, NormSpec.schatten(2.0))
        assert tails[-1] == 0.0
        assert np.all(np.diff(tails) <= 1e-12)
        path = induced_path(line, values)
        assert len(path) == 65
        assert path[0].is_trivial
