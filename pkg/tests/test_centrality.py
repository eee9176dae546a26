import numpy as np
import pytest

from helpers import random_feasible_profile, random_game
from katzforge import (
    AllocationProfile,
    FeasibilityError,
    fractional_linear_centrality,
    katz_series,
    katz_solve,
    walk_decomposition,
)
from oracles import brute_walk_sums, series_pq, series_pq_per_length, series_tail_bound


class TestKatzSolve:
    def test_self_loop_geometric_series(self, i1):
        # sum of 0.5^k over k >= 1
        c = katz_solve(AllocationProfile(np.array([[0.5]])))
        assert c[0] == pytest.approx(1.0, abs=1e-14)

    def test_zero_profile_zero_centrality(self, i2):
        np.testing.assert_array_equal(katz_solve(AllocationProfile.zeros(2)), np.zeros(2))

    def test_two_agent_hand_solution(self):
        c = katz_solve(AllocationProfile(np.array([[0.0, 0.5], [0.25, 0.0]])))
        np.testing.assert_allclose(c, [5 / 7, 3 / 7], atol=1e-14)

    def test_row_sum_at_one_rejected(self):
        with pytest.raises(FeasibilityError, match="row 1"):
            katz_solve(np.array([[1.0]]))

    def test_residual_bound_on_random_profiles(self):
        for seed in range(50):
            g = random_game(seed, n_max=20)
            w = random_feasible_profile(g, seed + 1000)
            a = w.weights
            c = katz_solve(w)
            residual = np.max(np.abs((np.eye(g.n) - a) @ c - a @ np.ones(g.n)))
            assert residual <= 1e-12 * g.n


class TestKatzSeries:
    def test_depth_three_partial_sum(self):
        c = katz_series(AllocationProfile(np.array([[0.5]])), depth=3)
        assert c[0] == pytest.approx(0.875, abs=1e-15)

    def test_depth_one_is_row_sums(self):
        w = AllocationProfile(np.array([[0.1, 0.2], [0.3, 0.0]]))
        np.testing.assert_allclose(katz_series(w, 1), [0.3, 0.3], atol=1e-15)

    def test_depth_must_be_positive(self, i1):
        with pytest.raises(ValueError):
            katz_series(AllocationProfile.zeros(1), 0)

    @pytest.mark.parametrize("depth", [1, 3, 10, 40, 80])
    def test_series_converges_to_solve_within_tail_bound(self, depth):
        w = AllocationProfile(np.array([[0.0, 0.5], [0.25, 0.0]]))
        b_max = 0.5
        gap = np.max(np.abs(katz_series(w, depth) - katz_solve(w)))
        assert gap <= series_tail_bound(b_max, depth) + 1e-15


class TestWalkDecomposition:
    def test_two_agent_hand_enumeration(self, i2):
        # only walk from agent 2 hitting agent 1 is the single edge 2 -> 1
        w = AllocationProfile(np.array([[0.0, 0.5], [0.25, 0.0]]))
        wd = walk_decomposition(i2, w, 0)
        assert wd.q[1] == pytest.approx(0.25, abs=1e-15)
        assert wd.p[1] == pytest.approx(0.0, abs=1e-15)
        assert wd.d[1] == pytest.approx(1.25, abs=1e-15)

    def test_isolated_focal_agent_has_zero_q(self):
        from katzforge import GameInstance, topology_from_edges

        g = GameInstance(topology_from_edges(3, [(0, 0), (1, 1), (2, 2)]), (0.5, 0.5, 0.5))
        w = AllocationProfile(np.diag([0.5, 0.5, 0.0]))
        wd = walk_decomposition(g, w, 2)
        assert wd.q[0] == 0.0 and wd.q[1] == 0.0

    def test_self_loop_walks_and_scores(self, i3):
        # walks from agent 1 avoiding agent 2: 1->1->...->1, mass 0.5/(1-0.5)=1
        w = AllocationProfile(np.array([[0.5, 0.0], [0.0, 0.0]]))
        wd = walk_decomposition(i3, w, 1)
        assert wd.p[0] == pytest.approx(1.0, abs=1e-12)
        assert wd.q[0] == pytest.approx(0.0, abs=1e-15)
        assert wd.d[0] == pytest.approx(2.0, abs=1e-12)
        assert wd.f[0] == pytest.approx(2.0, abs=1e-12)
        assert wd.f[1] == pytest.approx(4 / 3, abs=1e-12)

    def test_conventions_at_focal_agent(self, i3):
        wd = walk_decomposition(i3, AllocationProfile.zeros(2), 0)
        assert wd.q[0] == 1.0
        assert wd.d[0] == 1.0
        assert np.isnan(wd.p[0])  # undefined by the model, flagged not guessed

    def test_independent_of_own_row(self, i3):
        base = AllocationProfile(np.array([[0.0, 0.0], [0.1, 0.1]]))
        moved = AllocationProfile(np.array([[0.2, 0.3], [0.1, 0.1]]))
        a = walk_decomposition(i3, base, 0)
        b = walk_decomposition(i3, moved, 0)
        np.testing.assert_array_equal(a.q, b.q)
        np.testing.assert_array_equal(a.d, b.d)
        assert a.f[1] == b.f[1]

    def test_infeasible_profile_rejected(self, i2):
        w = AllocationProfile(np.array([[0.0, 0.9], [0.25, 0.0]]))
        with pytest.raises(FeasibilityError):
            walk_decomposition(i2, w, 0)

    def test_against_literal_enumeration_and_series(self):
        # recursive path enumeration validates the per-length series, whose
        # depth-60 accumulation then validates the linear-solve route
        for seed in range(25):
            g = random_game(seed, n_min=2, n_max=4, budget_lo=0.1, budget_hi=0.55)
            w = random_feasible_profile(g, seed + 77)
            a = w.weights
            for i in range(g.n):
                brute_avoid, brute_hit = brute_walk_sums(a, i, max_len=7)
                ser_avoid, ser_hit = series_pq_per_length(a, i, max_len=7)
                np.testing.assert_allclose(brute_avoid, ser_avoid, atol=1e-13)
                np.testing.assert_allclose(brute_hit, ser_hit, atol=1e-13)

                p60, q60 = series_pq(a, i, depth=60)
                wd = walk_decomposition(g, w, i)
                tail = series_tail_bound(0.55, 60)
                for j in range(g.n):
                    if j == i:
                        continue
                    assert abs(wd.p[j] - p60[j]) <= tail + 1e-12
                    assert abs(wd.q[j] - q60[j]) <= tail + 1e-12


class TestFractionalLinear:
    def test_matches_hand_value(self, i2):
        w = AllocationProfile(np.array([[0.0, 0.5], [0.25, 0.0]]))
        wd = walk_decomposition(i2, w, 0)
        got = fractional_linear_centrality(0, np.array([0.0, 0.5]), wd)
        assert got == pytest.approx(5 / 7, abs=1e-14)

    def test_zero_row_gives_zero(self, i2):
        wd = walk_decomposition(i2, AllocationProfile.zeros(2), 0)
        assert fractional_linear_centrality(0, np.zeros(2), wd) == 0.0

    def test_single_edge_on_complete_instance(self, i3):
        w = AllocationProfile(np.array([[0.5, 0.0], [0.0, 0.0]]))
        wd = walk_decomposition(i3, w, 1)
        got = fractional_linear_centrality(1, np.array([0.25, 0.0]), wd)
        assert got == pytest.approx(0.5, abs=1e-14)

    def test_row_outside_support_rejected(self, i2):
        wd = walk_decomposition(i2, AllocationProfile.zeros(2), 0)
        with pytest.raises(FeasibilityError, match="neighborhood"):
            fractional_linear_centrality(0, np.array([0.1, 0.1]), wd)

    def test_over_budget_row_rejected(self, i2):
        wd = walk_decomposition(i2, AllocationProfile.zeros(2), 0)
        with pytest.raises(FeasibilityError, match="budget"):
            fractional_linear_centrality(0, np.array([0.0, 0.6]), wd)


class TestCentralityIdentities:
    def test_interdependence_identity(self):
        # c_i = sum_j w_ij (1 + c_j) on random feasible profiles
        for seed in range(200):
            g = random_game(seed, n_max=20)
            w = random_feasible_profile(g, seed + 5000)
            c = katz_solve(w)
            rhs = w.weights @ (1.0 + c)
            assert np.max(np.abs(c - rhs)) <= 1e-10

    def test_denominator_positivity(self):
        for seed in range(100):
            g = random_game(seed, n_max=12)
            w = random_feasible_profile(g, seed + 9000)
            for i in range(g.n):
                wd = walk_decomposition(g, w, i)
                q = np.array(wd.q)
                q[i] = 0.0  # own row never allocates outside N_i; q_ii unused here
                if (i, i) in g.topology.adj:
                    q[i] = 1.0
                assert 1.0 - float(q @ w.weights[i]) > 0.0

    def test_fractional_linear_matches_solver_everywhere(self):
        for seed in range(100):
            g = random_game(seed, n_max=12)
            w = random_feasible_profile(g, seed + 1234)
            c = katz_solve(w)
            for i in range(g.n):
                wd = walk_decomposition(g, w, i)
                assert fractional_linear_centrality(i, w.weights[i], wd) == pytest.approx(
                    c[i], abs=1e-10
                )

    def test_monotone_in_single_weight_increase(self):
        rng = np.random.default_rng(0)
        for seed in range(50):
            g = random_game(seed, n_max=10)
            w = random_feasible_profile(g, seed + 321)
            c0 = katz_solve(w)
            candidates = [
                (i, j)
                for i, j in g.topology.adj
                if w.weights[i].sum() < g.budgets[i] - 1e-9
            ]
            if not candidates:
                continue
            i, j = candidates[int(rng.integers(len(candidates)))]
            bump = min(1e-3, g.budgets[i] - w.weights[i].sum())
            row = w.row(i)
            row[j] += bump
            c1 = katz_solve(w.with_row(i, row))
            assert np.all(c1 >= c0 - 1e-12)
