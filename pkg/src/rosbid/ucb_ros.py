"""UCB bidding under RoS and budget constraints with unknown values.

The learner sees the full allocation and payment functions every round, so
the allocation and expected-price estimates are plain running means over all
rounds. The value estimate only averages rounds the learner won. Each round
the optimistic model (upper allocation, lower price, upper value) is plugged
into the bidding LP and the next bid is sampled from its solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .auction_env import AuctionRound, BidGrid
from .benchmark_lp import LpInstance, solve_lp

# Denominator factor under the value radius: sqrt(log(2T) / (VALUE_RADIUS_FACTOR * N)).
# 2.0 is the Hoeffding radius; 1.0 gives a wider, more conservative interval.
VALUE_RADIUS_FACTOR = 2.0


@dataclass(frozen=True)
class ConfidenceRadii:
    rad_x: float
    rad_v: float  # math.inf before the first win


def confidence_radii(t: int, n_wins: int, grid_size: int, horizon: int) -> ConfidenceRadii:
    if t < 1:
        raise ValueError(f"confidence radii need t >= 1, got {t}")
    if not 0 <= n_wins <= t:
        raise ValueError(f"n_wins must lie in [0, t], got {n_wins}")
    rad_x = math.sqrt(math.log(2 * grid_size * horizon) / (2 * t))
    if n_wins == 0:
        return ConfidenceRadii(rad_x, math.inf)
    rad_v = math.sqrt(math.log(2 * horizon) / (VALUE_RADIUS_FACTOR * n_wins))
    return ConfidenceRadii(rad_x, rad_v)


@dataclass
class EstimatorState:
    """Sample estimators after ``t`` rounds.

    Sums are kept instead of running means; ``x_hat`` etc. divide on demand,
    which equals the incremental mean update up to rounding.
    """

    grid: BidGrid
    rho: float
    horizon: int
    t: int = 0
    n_wins: int = 0
    alloc_sum: np.ndarray = field(default=None, repr=False)
    price_sum: np.ndarray = field(default=None, repr=False)
    value_sum: float = 0.0

    def __post_init__(self) -> None:
        n = len(self.grid)
        if self.alloc_sum is None:
            self.alloc_sum = np.zeros(n)
        if self.price_sum is None:
            self.price_sum = np.zeros(n)

    @property
    def x_hat(self) -> np.ndarray:
        return self.alloc_sum / self.t if self.t else np.zeros(len(self.grid))

    @property
    def q_hat(self) -> np.ndarray:
        return self.price_sum / self.t if self.t else np.zeros(len(self.grid))

    @property
    def v_hat(self) -> float:
        return self.value_sum / self.n_wins if self.n_wins else 0.0

    def radii(self) -> ConfidenceRadii:
        return confidence_radii(self.t, self.n_wins, len(self.grid), self.horizon)


def init(grid: BidGrid, rho: float, horizon: int) -> EstimatorState:
    if rho <= 0:
        raise ValueError("rho must be positive")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    return EstimatorState(grid=grid, rho=float(rho), horizon=int(horizon))


def update_estimators(
    state: EstimatorState, round_: AuctionRound, bid: float, won: bool
) -> EstimatorState:
    """Fold one round into the estimators in place and return the state.

    ``bid`` is only validated; allocation and price vectors are observed at
    every grid bid. The value enters only when the round was won.
    """
    state.grid.index(bid)
    state.alloc_sum += round_.alloc
    state.price_sum += round_.price_paid
    state.t += 1
    if won:
        state.n_wins += 1
        state.value_sum += round_.value
    return state


@dataclass(frozen=True, eq=False)
class OptimisticModel:
    x_star: np.ndarray
    q_star: np.ndarray
    v_star: float

    def lp(self, rho: float) -> LpInstance:
        return LpInstance(self.v_star * self.x_star, self.q_star, rho)


def optimistic_model(state: EstimatorState) -> OptimisticModel:
    """Most favourable point of each confidence set (closed form)."""
    rad = state.radii()
    x_star = np.minimum(state.x_hat + rad.rad_x, 1.0)
    q_star = np.maximum(state.q_hat - rad.rad_x, 0.0)
    v_star = 1.0 if math.isinf(rad.rad_v) else min(state.v_hat + rad.rad_v, 1.0)
    return OptimisticModel(x_star, q_star, v_star)


def next_bid_mixture(state: EstimatorState) -> np.ndarray:
    model = optimistic_model(state)
    _, w = solve_lp(model.v_star * model.x_star, model.q_star, state.rho)
    return np.array(w)


def sample_index(weights: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from ``weights`` with one uniform ``u`` in [0, 1)."""
    cdf = np.cumsum(weights)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    if i >= len(weights):
        i = int(np.flatnonzero(weights > 0)[-1])
    return i


@dataclass(frozen=True)
class StepResult:
    bid_index: int
    bid: float
    won: bool
    reward: float
    spend: float


class UcbRosBidder:
    """Sequential UCB-RoS bidder.

    ``step`` consumes one uniform for the bid (none in the first round, which
    always bids the top of the grid) and one more only when the allocation at
    the played bid is strictly between 0 and 1.
    """

    name = "ucb_ros"

    def __init__(self, grid: BidGrid, rho: float, horizon: int):
        self.state = init(grid, rho, horizon)
        self.last_mixture: np.ndarray | None = None

    def mixture(self) -> np.ndarray:
        if self.state.t == 0:
            w = np.zeros(len(self.state.grid))
            w[-1] = 1.0
            return w
        return next_bid_mixture(self.state)

    def step(self, round_: AuctionRound, rng: np.random.Generator) -> StepResult:
        grid = self.state.grid
        w = self.mixture()
        self.last_mixture = w
        if self.state.t == 0:
            idx = len(grid) - 1
        else:
            idx = sample_index(w, rng.random())
        alloc = float(round_.alloc[idx])
        if alloc >= 1.0:
            won = True
        elif alloc <= 0.0:
            won = False
        else:
            won = bool(rng.random() < alloc)
        bid = grid.bids[idx]
        update_estimators(self.state, round_, bid, won)
        reward = round_.value * alloc
        return StepResult(idx, bid, won, reward, float(round_.price_paid[idx]))
