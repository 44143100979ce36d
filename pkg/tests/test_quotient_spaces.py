import math

import numpy as np
import pytest

from specflow.exceptions import AmbiguityError, DomainError, ParameterError
from specflow.models import TWO_PI, BasedSpace, CompactSet, SpaceKind
from specflow.services import quotient_spaces as qs


def _random_set(rng, space):
    """Up to three disjoint intervals / arcs."""
    count = int(rng.integers(1, 4))
    cuts = np.sort(rng.uniform(0.0, TWO_PI if space == "circle" else 4.0, 2 * count))
    return CompactSet.build(space, [(cuts[2 * k], cuts[2 * k + 1]) for k in range(count)])


class TestCompactSet:
    def test_arc_normalisation(self):
        K = CompactSet.build("circle", [(7.0, 7.5)])
        a, b = K.pieces[0]
        assert a == pytest.approx(7.0 - TWO_PI)
        assert b - a == pytest.approx(0.5)

    def test_rejects_overlaps(self):
        with pytest.raises(ParameterError):
            CompactSet.build("line", [(0.0, 1.0), (0.5, 2.0)])
        with pytest.raises(ParameterError):
            CompactSet.build("circle", [(6.0, 6.5), (0.1, 0.5)])

    def test_single_point_quotient_is_plain_space(self):
        space = BasedSpace.quotient(CompactSet.point("circle", 0.0))
        assert space.kind == SpaceKind.CIRCLE
        assert space.basepoint == 0.0

    def test_empty_quotient_rejected(self):
        with pytest.raises(ParameterError):
            BasedSpace.quotient(CompactSet(space="line"))


class TestDistances:
    def test_chord(self):
        assert float(qs.chord(0.0, math.pi)) == pytest.approx(2.0)
        assert float(qs.chord(0.1, TWO_PI + 0.1)) == pytest.approx(0.0, abs=1e-12)

    def test_distance_to_interval(self):
        K = CompactSet.build("line", [(0.0, 1.0), (3.0, 4.0)])
        assert float(qs.distance_to_set(2.0, K)) == pytest.approx(1.0)
        assert float(qs.distance_to_set(0.5, K)) == 0.0
        assert float(qs.distance_to_set(-2.0, K)) == pytest.approx(2.0)

    def test_quotient_distance_through_k(self):
        K = CompactSet.build("line", [(0.0, 1.0)])
        # |(-1) - 2| = 3, through K = 1 + 1
        assert qs.quotient_distance(-1.0, 2.0, K) == pytest.approx(2.0)
        assert qs.quotient_distance(0.2, 0.8, K) == 0.0

    def test_wraparound_arc(self):
        K = CompactSet.build("circle", [(TWO_PI - 0.2, TWO_PI + 0.2)])
        assert bool(qs.contains(K, 0.1))
        assert bool(qs.contains(K, TWO_PI - 0.1))
        assert not bool(qs.contains(K, math.pi))

    @pytest.mark.parametrize("space", ["line", "circle"])
    def test_metric_axioms(self, rng, space):
        for _ in range(200):
            K = _random_set(rng, space)
            hi = TWO_PI if space == "circle" else 5.0
            x, y, z = rng.uniform(-1.0 if space == "line" else 0.0, hi, 3)
            dxy = qs.quotient_distance(x, y, K)
            assert dxy == qs.quotient_distance(y, x, K)
            slack = qs.quotient_distance(x, z, K) + qs.quotient_distance(z, y, K) - dxy
            assert slack >= -1e-12
            ambient = float(qs.chord(x, y)) if space == "circle" else abs(x - y)
            assert dxy <= ambient + 1e-15

    def test_distance_matrix_matches_pointwise(self, rng):
        K = CompactSet.build("circle", [(0.5, 1.0), (3.0, 4.0)])
        xs, ys = rng.uniform(0, TWO_PI, 4), rng.uniform(0, TWO_PI, 3)
        mat = qs.quotient_distance_matrix(xs, ys, K)
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                assert mat[i, j] == pytest.approx(qs.quotient_distance(x, y, K))

    def test_region_distance(self):
        assert qs.region_distance(CompactSet.build("line", [(0, 1)]), CompactSet.build("line", [(2, 3)])) == 1.0
        assert qs.region_distance(CompactSet.build("line", [(0, 1)]), CompactSet.build("line", [(1, 2)])) == 0.0
        arcs = qs.region_distance(CompactSet.build("circle", [(0.0, 0.5)]), CompactSet.build("circle", [(1.0, 2.0)]))
        assert arcs == pytest.approx(float(qs.chord(0.5, 1.0)))


class TestBoundaryAndLift:
    def test_nearest_boundary_tie_goes_to_smaller(self):
        K = CompactSet.build("line", [(0.0, 1.0), (3.0, 4.0)])
        assert qs.nearest_boundary(2.0, K) == 1.0
        assert qs.nearest_boundary(2.4, K) == 3.0

    def test_nearest_boundary_on_circle(self):
        K = CompactSet.build("circle", [(0.0, math.pi / 2)])
        assert qs.nearest_boundary(math.pi, K) == pytest.approx(math.pi / 2)
        assert qs.nearest_boundary(5 * math.pi / 4, K) == pytest.approx(0.0)

    def test_nearest_boundary_inside_k(self):
        with pytest.raises(DomainError):
            qs.nearest_boundary(0.5, CompactSet.build("line", [(0.0, 1.0)]))

    def test_project(self):
        K = CompactSet.build("line", [(0.0, 1.0)])
        assert qs.project(0.5, K) is None
        assert qs.project(2.0, K) == 2.0

    def test_lift_pads_with_entry_and_exit_points(self):
        K = CompactSet.build("line", [(0.0, 1.0)])
        lifted = qs.lift_simple_path([None, 1.2, 1.5, 1.1, None], K)
        assert list(lifted) == [1.0, 1.2, 1.5, 1.1, 1.0]

    @pytest.mark.parametrize("space, pieces, path", [
        ("line", [(0.0, 1.0)], [None, 1.2, 1.5, 1.1, None]),
        ("line", [(-1.0, 0.0), (2.0, 3.0)], [0.4, 0.9, 1.3, None]),
        ("circle", [(0.0, math.pi / 2)], [None, 2.0, 3.0, 4.0, None]),
    ])
    def test_lift_projects_back(self, space, pieces, path):
        K = CompactSet.build(space, pieces)
        lifted = qs.lift_simple_path(path, K)
        assert [qs.project(x, K) for x in lifted] == path

    def test_lift_rejects_non_simple(self):
        K = CompactSet.build("line", [(0.0, 1.0)])
        with pytest.raises(DomainError):
            qs.lift_simple_path([1.5, None, 1.5], K)

    def test_lift_ambiguous_entry(self):
        K = CompactSet.build("line", [(0.0, 1.0), (3.0, 4.0)])
        with pytest.raises(AmbiguityError) as info:
            qs.lift_simple_path([None, 2.0, 2.2], K)
        assert info.value.candidates == (1.0, 3.0)
