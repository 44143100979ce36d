import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from specflow.services.assignment import bottleneck_assignment, hungarian, restricted_assignment, tight_edges


def _cost(cost, assignment):
    return float(cost[np.arange(len(assignment)), assignment].sum())


class TestHungarian:
    @pytest.mark.parametrize("n", [1, 2, 5, 9])
    def test_matches_reference_solver(self, rng, n):
        for _ in range(10):
            cost = rng.random((n, n))
            assignment, u, v = hungarian(cost)
            rows, cols = linear_sum_assignment(cost)
            assert sorted(assignment) == list(range(n))
            assert _cost(cost, assignment) == pytest.approx(cost[rows, cols].sum(), abs=1e-12)

    def test_duals_are_feasible_and_tight(self, rng):
        cost = rng.random((6, 6))
        assignment, u, v = hungarian(cost)
        assert np.all(cost - u[:, None] - v[None, :] >= -1e-12)
        assert np.allclose(cost[np.arange(6), assignment], u + v[assignment])
        assert tight_edges(cost, u, v)[np.arange(6), assignment].all()

    def test_empty(self):
        assignment, u, v = hungarian(np.zeros((0, 0)))
        assert assignment.size == 0

    def test_rejects_rectangular(self):
        with pytest.raises(ValueError):
            hungarian(np.zeros((2, 3)))


class TestBottleneck:
    def test_minimises_largest_cost(self):
        cost = np.array([[1.0, 9.0], [2.0, 3.0]])
        assignment, level = bottleneck_assignment(cost)
        assert level == 3.0
        assert list(assignment) == [0, 1]

    def test_not_worse_than_sum_optimum(self, rng):
        for _ in range(10):
            cost = rng.random((5, 5))
            _, level = bottleneck_assignment(cost)
            rows, cols = linear_sum_assignment(cost)
            assert level <= cost[rows, cols].max() + 1e-12

    def test_restricted_uses_allowed_edges(self):
        secondary = np.array([[0.0, 1.0], [1.0, 0.0]])
        allowed = np.array([[False, True], [True, False]])
        assert list(restricted_assignment(secondary, allowed)) == [1, 0]
