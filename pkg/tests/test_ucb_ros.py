import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_search_optimum, random_state
from rosbid.auction_env import (
    SECOND_PRICE,
    AuctionRound,
    BidGrid,
    draw_rounds,
    make_instance,
    point_mass_pmf,
    table1_instance,
    true_moments,
)
from rosbid.benchmark_lp import solve_benchmark, solve_lp
from rosbid.ucb_ros import (
    UcbRosBidder,
    confidence_radii,
    init,
    next_bid_mixture,
    optimistic_model,
    sample_index,
    update_estimators,
)

GRID = BidGrid.uniform(4)


def rng(seed=0):
    return np.random.Generator(np.random.Philox(seed))


def make_round(alloc, price, value=0.5):
    return AuctionRound(value, np.array(alloc, float), np.array(price, float), 0.0)


class TestInit:
    def test_fresh_state(self):
        s = init(GRID, 0.4, 100)
        assert (s.t, s.n_wins, s.v_hat) == (0, 0, 0.0)
        np.testing.assert_array_equal(s.x_hat, 0)
        assert math.isinf(confidence_radii(1, 0, 4, 100).rad_v)

    def test_first_bid_is_top(self):
        bidder = UcbRosBidder(GRID, 0.4, 100)
        res = bidder.step(make_round([0, 1, 1, 1], [0, 0.3, 0.3, 0.3]), rng())
        assert res.bid == 1.0

    def test_horizon_one(self):
        s = init(GRID, 0.4, 1)
        s.t = 1
        assert s.radii().rad_x == pytest.approx(math.sqrt(math.log(8) / 2))

    @pytest.mark.parametrize("rho,horizon", [(0.0, 10), (0.4, 0)])
    def test_rejects(self, rho, horizon):
        with pytest.raises(ValueError):
            init(GRID, rho, horizon)


class TestUpdate:
    def test_single_win(self):
        s = init(GRID, 0.4, 100)
        update_estimators(s, make_round([0, 1, 1, 1], [0, 0.3, 0.3, 0.3], 0.7), 1.0, True)
        np.testing.assert_allclose(s.x_hat, [0, 1, 1, 1])
        np.testing.assert_allclose(s.q_hat, [0, 0.3, 0.3, 0.3])
        assert (s.v_hat, s.n_wins) == (0.7, 1)

    def test_running_mean(self):
        s = init(GRID, 0.4, 100)
        update_estimators(s, make_round([0, 1, 1, 1], [0, 0, 0, 0]), 1.0, True)
        update_estimators(s, make_round([0, 0, 1, 1], [0, 0, 0, 0]), 1.0, True)
        np.testing.assert_allclose(s.x_hat, [0, 0.5, 1, 1])

    def test_loss_leaves_value(self):
        s = init(GRID, 0.4, 100)
        update_estimators(s, make_round([0, 1, 1, 1], [0, 0.3, 0.3, 0.3], 0.7), 1.0, True)
        update_estimators(s, make_round([0, 0, 0, 0], [0, 0, 0, 0], 0.99), 0.0, False)
        assert (s.v_hat, s.n_wins, s.t) == (0.7, 1, 2)

    def test_off_grid_bid(self):
        with pytest.raises(ValueError):
            update_estimators(init(GRID, 0.4, 10), make_round([0] * 4, [0] * 4), 0.5, False)


class TestRadii:
    def test_rad_x(self):
        assert confidence_radii(50, 10, 4, 100).rad_x == pytest.approx(0.25855, abs=1e-5)

    def test_rad_v(self):
        assert confidence_radii(300, 200, 4, 100).rad_v == pytest.approx(0.11510, abs=1e-4)

    @pytest.mark.parametrize("t,n", [(0, 0), (5, 6), (5, -1)])
    def test_domain(self, t, n):
        with pytest.raises(ValueError):
            confidence_radii(t, n, 4, 100)


class TestOptimism:
    def state(self, x_hat, q_hat, t=50, horizon=100):
        s = init(GRID, 0.4, horizon)
        s.t = t
        s.alloc_sum = np.array(x_hat, float) * t
        s.price_sum = np.array(q_hat, float) * t
        return s

    def test_clamps(self):
        m = optimistic_model(self.state([0, 0.3, 1.0, 1.0], [0, 0.01, 0.2, 0.3]))
        assert m.x_star[2] == 1.0
        assert m.q_star[1] == 0.0
        assert m.x_star[1] == pytest.approx(0.55855, abs=1e-5)
        assert m.v_star == 1.0

    def test_zero_prices_picks_argmax(self):
        s = self.state([0, 0.1, 0.2, 0.3], [0, 0, 0, 0], t=10_000_000, horizon=100)
        w = next_bid_mixture(s)
        np.testing.assert_allclose(w, [0, 0, 0, 1])

    def test_degenerate_first_loss(self):
        s = init(GRID, 0.4, 100)
        update_estimators(s, make_round([0, 0, 0, 0], [0, 0, 0, 0]), 1.0, False)
        w1, w2 = next_bid_mixture(s), next_bid_mixture(s)
        np.testing.assert_array_equal(w1, w2)
        assert w1.sum() == pytest.approx(1.0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_direction_and_monotonicity(self, seed):
        s = random_state(np.random.default_rng(seed))
        m = optimistic_model(s)
        assert np.all(m.x_star >= s.x_hat) and np.all(m.q_star <= s.q_hat)
        assert m.v_star >= s.v_hat
        assert np.all(np.diff(m.x_star) >= -1e-12) and np.all(np.diff(m.q_star) >= -1e-12)
        assert np.all((0 <= m.x_star) & (m.x_star <= 1)) and 0 <= m.v_star <= 1

    def test_closed_form_beats_grid_search(self):
        rng_ = np.random.default_rng(2024)
        for _ in range(10):
            s = random_state(rng_)
            m = optimistic_model(s)
            closed, _ = solve_lp(m.v_star * m.x_star, m.q_star, s.rho)
            assert closed >= grid_search_optimum(s, rng_, samples=100) - 2e-3


class TestSampling:
    def test_inverse_cdf(self):
        w = np.array([0.2, 0.0, 0.5, 0.3])
        assert sample_index(w, 0.0) == 0
        assert sample_index(w, 0.19) == 0
        assert sample_index(w, 0.2) == 2
        assert sample_index(w, 0.69) == 2
        assert sample_index(w, 0.7) == 3
        assert sample_index(w, 0.9999999999) == 3

    def test_never_selects_zero_weight_at_top(self):
        w = np.array([0.5, 0.5, 0.0])
        assert sample_index(w, np.nextafter(1.0, 0.0)) == 1


class TestBidder:
    def test_trajectory_reproducible(self):
        spec = make_instance(4, SECOND_PRICE, point_mass_pmf(GRID, 1 / 3), 0.4, 0.4, 300)
        runs = []
        for _ in range(2):
            bidder = UcbRosBidder(GRID, 0.4, 300)
            stream = rng(8)
            runs.append([bidder.step(r, stream) for r in draw_rounds(spec, rng(7), 300)])
        assert runs[0] == runs[1]

    def test_win_and_loss_rounds(self):
        bidder = UcbRosBidder(GRID, 0.4, 100)
        res = bidder.step(make_round([0, 1, 1, 1], [0, 0.3, 0.3, 0.3]), rng())
        assert res.won and bidder.state.n_wins == 1
        res = bidder.step(make_round([0, 0, 0, 0], [0, 0, 0, 0], 0.9), rng())
        assert not res.won and bidder.state.n_wins == 1 and bidder.state.v_hat == 0.5

    def test_estimates_stay_monotone(self):
        spec = table1_instance(2000)
        bidder = UcbRosBidder(spec.grid, spec.rho, spec.horizon)
        stream = rng(1)
        for r in draw_rounds(spec, rng(2), 2000):
            bidder.step(r, stream)
            s = bidder.state
            assert np.all(np.diff(s.x_hat) >= -1e-12) and np.all(np.diff(s.q_hat) >= -1e-12)
            assert np.all(s.q_hat <= GRID.values * s.x_hat + 1e-12) and s.q_hat[0] == 0
            assert 0 <= s.n_wins <= s.t <= s.horizon

    def test_long_run_concentrates_on_benchmark(self):
        spec = table1_instance(20_000)
        m = true_moments(spec)
        v = solve_benchmark(m, spec.rho).value
        bidder = UcbRosBidder(spec.grid, spec.rho, spec.horizon)
        stream = rng(4)
        for r in draw_rounds(spec, rng(5), spec.horizon):
            bidder.step(r, stream)
        w = bidder.mixture()
        assert float(w @ (m.v_bar * m.x_bar)) == pytest.approx(v, abs=0.02)

    def test_win_count_tracking(self):
        # |N_t - sum_s w_s . x_bar| <= 2 v_bar log T / V + V t / (2 v_bar) for all t
        spec = table1_instance(5000)
        m = true_moments(spec)
        v = solve_benchmark(m, spec.rho).value
        horizon = spec.horizon
        t = np.arange(1, horizon + 1)
        bound = 2 * m.v_bar * math.log(horizon) / v + v * t / (2 * m.v_bar)
        for seed in range(20):
            bidder = UcbRosBidder(spec.grid, spec.rho, horizon)
            stream = rng(100 + seed)
            expected = np.empty(horizon)
            wins = np.empty(horizon)
            for i, r in enumerate(draw_rounds(spec, rng(seed), horizon)):
                res = bidder.step(r, stream)
                expected[i] = bidder.last_mixture @ m.x_bar
                wins[i] = res.won
            assert np.all(np.abs(np.cumsum(wins) - np.cumsum(expected)) <= bound)
