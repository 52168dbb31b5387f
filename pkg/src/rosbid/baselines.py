"""Primal-dual comparison bidders.

Two Lagrangian meta-games over the bid grid:

* ``pd_exp3p1``: Exp3.P.1 primal (Auer et al., doubling over Exp3.P epochs)
  against a dual-stabilized entropic mirror-descent dual.
* ``exp_ix``: EXP-IX primal (implicit exploration) with dual weights set by a
  deterministic, time-decaying schedule on the cumulative violations.

The defaults below are conventional choices (dual cap 1/rho, dual step
1/sqrt(T), confidence 1/T); every one of them can be overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .auction_env import AuctionRound, BidGrid
from .ucb_ros import StepResult, sample_index

DS_OMD = "ds_omd"
DECAYING = "decaying_schedule"


def raw_lagrangian(value: float, alloc: float, price: float, lambdas, rho: float) -> float:
    """``v x + lam_ros (v x - q) + lam_budget (rho - q)`` at one bid."""
    lam_ros, lam_budget = lambdas
    vx = value * alloc
    return vx + lam_ros * (vx - price) + lam_budget * (rho - price)


def lagrangian_payoff(
    round_: AuctionRound, bid_index: int, lambdas, rho: float, cap: float
) -> float:
    """Lagrangian payoff at the played bid, mapped affinely onto [0, 1].

    With ``lam_ros + lam_budget <= cap`` and ``rho <= 1`` the raw payoff lies
    in ``[-cap, 1 + cap]``.
    """
    raw = raw_lagrangian(
        round_.value, float(round_.alloc[bid_index]), float(round_.price_paid[bid_index]),
        lambdas, rho,
    )
    return (raw + cap) / (1.0 + 2.0 * cap)


def _softmax(logw: np.ndarray) -> np.ndarray:
    z = np.exp(logw - logw.max())
    return z / z.sum()


class Exp3P:
    """One Exp3.P run of known length, weights kept in log space."""

    def __init__(self, n_arms: int, horizon: int, delta: float, alpha=None, gamma=None):
        k = n_arms
        self.n_arms = k
        self.horizon = horizon
        if gamma is None:
            gamma = min(0.6, 2.0 * math.sqrt(0.6 * k * math.log(k) / horizon))
        if alpha is None:
            alpha = 2.0 * math.sqrt(math.log(k * horizon / delta))
        self.gamma = gamma
        self.alpha = alpha
        self.logw = np.full(k, alpha * gamma / 3.0 * math.sqrt(horizon / k))

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.logw - self.logw.max())

    def probabilities(self) -> np.ndarray:
        return (1.0 - self.gamma) * _softmax(self.logw) + self.gamma / self.n_arms

    def update(self, arm: int, payoff: float) -> None:
        if not 0.0 <= payoff <= 1.0:
            raise ValueError(f"payoff {payoff!r} outside [0, 1]")
        p = self.probabilities()
        est = np.zeros(self.n_arms)
        est[arm] = payoff / p[arm]
        bonus = self.alpha / (p * math.sqrt(self.n_arms * self.horizon))
        self.logw += self.gamma / (3.0 * self.n_arms) * (est + bonus)


class Exp3P1:
    """Exp3.P restarted on epochs of length ``2^r`` with confidence ``delta_r``.

    ``delta_r = delta / ((r + 1)(r + 2))``; the first epoch is the smallest
    ``r`` with ``delta_r >= K T_r exp(-K T_r)``.
    """

    algo = "exp3p1"

    def __init__(self, n_arms: int, delta: float, alpha=None, gamma=None):
        self.n_arms = n_arms
        self.delta = delta
        self._alpha = alpha
        self._gamma = gamma
        r = 0
        while self._delta_r(r) < n_arms * 2**r * math.exp(-n_arms * 2**r):
            r += 1
        self.epoch = r
        self.round = 0
        self._start_epoch()

    def _delta_r(self, r: int) -> float:
        return self.delta / ((r + 1) * (r + 2))

    def _start_epoch(self) -> None:
        self.epoch_len = 2**self.epoch
        self.epoch_round = 0
        self.inner = Exp3P(
            self.n_arms, self.epoch_len, self._delta_r(self.epoch), self._alpha, self._gamma
        )

    @property
    def weights(self) -> np.ndarray:
        return self.inner.weights

    @property
    def exploration_floor(self) -> float:
        return self.inner.gamma / self.n_arms

    def probabilities(self) -> np.ndarray:
        return self.inner.probabilities()

    def update(self, arm: int, payoff: float) -> None:
        self.inner.update(arm, payoff)
        self.round += 1
        self.epoch_round += 1
        if self.epoch_round >= self.epoch_len:
            self.epoch += 1
            self._start_epoch()


class ExpIX:
    """Exponential weights with implicit-exploration loss estimates."""

    algo = "exp_ix"

    def __init__(self, n_arms: int, horizon: int, eta=None, gamma_ix=None):
        self.n_arms = n_arms
        self.eta = eta if eta is not None else math.sqrt(2.0 * math.log(n_arms) / (n_arms * horizon))
        self.gamma_ix = gamma_ix if gamma_ix is not None else self.eta / 2.0
        self.logw = np.zeros(n_arms)
        self.round = 0

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.logw - self.logw.max())

    @property
    def exploration_floor(self) -> float:
        return 0.0

    def probabilities(self) -> np.ndarray:
        return _softmax(self.logw)

    def update(self, arm: int, loss: float) -> None:
        if not 0.0 <= loss <= 1.0:
            raise ValueError(f"loss {loss!r} outside [0, 1]")
        p = self.probabilities()[arm]
        self.logw[arm] -= self.eta * loss / (p + self.gamma_ix)
        self.round += 1


class DualState:
    """Multipliers ``(lam_ros, lam_budget)`` on ``{lam >= 0, lam_ros + lam_budget <= cap}``.

    ``ds_omd`` runs entropic mirror ascent on the three-coordinate scaled
    simplex (two multipliers plus unused slack), then mixes geometrically
    toward the anchor with weight ``1 / (t + 1)``. ``decaying_schedule`` sets
    each multiplier to ``[cumulative violation]_+ / t^(3/4)``, rescaled onto
    the cap.
    """

    def __init__(self, mode: str, cap: float, lr: float, anchor=None):
        if mode not in (DS_OMD, DECAYING):
            raise ValueError(f"unknown dual mode {mode!r}")
        if cap < 0:
            raise ValueError("cap must be non-negative")
        self.mode = mode
        self.cap = float(cap)
        self.lr = float(lr)
        self.cum_violation = np.zeros(2)
        self.t = 0
        if mode == DS_OMD:
            if anchor is None:
                anchor = (cap / 3.0, cap / 3.0)
            a = np.array([anchor[0], anchor[1], cap - anchor[0] - anchor[1]], dtype=float)
            if cap > 0 and (np.any(a <= 0)):
                raise ValueError("anchor must lie strictly inside the capped simplex")
            self.anchor = a
            self._point = a.copy()
        else:
            self.anchor = np.zeros(3)
            self._point = np.array([0.0, 0.0, cap])

    @property
    def lambdas(self) -> tuple[float, float]:
        return float(self._point[0]), float(self._point[1])

    def update(self, violations) -> None:
        """Fold the realized ``(RoS, budget)`` violations of one round."""
        g = np.asarray(violations, dtype=float)
        if g.shape != (2,) or not np.all(np.isfinite(g)):
            raise ValueError("violations must be two finite numbers")
        self.t += 1
        self.cum_violation += g
        if self.cap == 0.0:
            return
        if self.mode == DS_OMD:
            z = np.log(self._point) + self.lr * np.array([g[0], g[1], 0.0])
            mix = 1.0 / (self.t + 1)
            z = (1.0 - mix) * z + mix * np.log(self.anchor)
            self._point = self.cap * _softmax(z)
        else:
            lam = np.maximum(self.cum_violation, 0.0) / self.t**0.75
            total = lam.sum()
            if total > self.cap:
                lam *= self.cap / total
            self._point = np.array([lam[0], lam[1], self.cap - lam.sum()])


def primal_update(primal, bid_index: int, payoff: float) -> None:
    """Feed a rescaled payoff; EXP-IX receives the loss ``1 - payoff``."""
    if isinstance(primal, ExpIX):
        primal.update(bid_index, 1.0 - payoff)
    else:
        primal.update(bid_index, payoff)


def dual_update(dual: DualState, realized_violations) -> None:
    dual.update(realized_violations)


@dataclass(frozen=True)
class BaselineParams:
    cap: float | None = None  # default 1 / rho
    dual_lr: float | None = None  # default 1 / sqrt(T)
    delta: float | None = None  # Exp3.P.1 confidence, default 1 / T
    eta: float | None = None  # EXP-IX
    gamma_ix: float | None = None


class PrimalDualBidder:
    """Lagrangian game between a bandit primal and a dual multiplier player."""

    def __init__(self, name: str, primal, dual: DualState, grid: BidGrid, rho: float):
        self.name = name
        self.primal = primal
        self.dual = dual
        self.grid = grid
        self.rho = float(rho)
        self.last_mixture: np.ndarray | None = None

    def mixture(self) -> np.ndarray:
        return self.primal.probabilities()

    def step(self, round_: AuctionRound, rng: np.random.Generator) -> StepResult:
        p = self.mixture()
        self.last_mixture = p
        idx = sample_index(p, rng.random())
        alloc = float(round_.alloc[idx])
        won = alloc >= 1.0 or (alloc > 0.0 and bool(rng.random() < alloc))
        reward = round_.value * alloc
        spend = float(round_.price_paid[idx])
        payoff = lagrangian_payoff(round_, idx, self.dual.lambdas, self.rho, self.dual.cap)
        if -1e-12 < payoff < 0.0 or 1.0 < payoff < 1.0 + 1e-12:
            payoff = min(max(payoff, 0.0), 1.0)  # rounding at the bounds only
        primal_update(self.primal, idx, payoff)
        self.dual.update((spend - reward, spend - self.rho))
        return StepResult(idx, self.grid.bids[idx], won, reward, spend)


def baseline_step(bidder: PrimalDualBidder, round_: AuctionRound, rng) -> StepResult:
    return bidder.step(round_, rng)


def make_pd_exp3p1(grid: BidGrid, rho: float, horizon: int, params: BaselineParams = BaselineParams()):
    cap = 1.0 / rho if params.cap is None else params.cap
    lr = 1.0 / math.sqrt(horizon) if params.dual_lr is None else params.dual_lr
    delta = 1.0 / horizon if params.delta is None else params.delta
    primal = Exp3P1(len(grid), min(delta, 0.5))
    return PrimalDualBidder("pd_exp3p1", primal, DualState(DS_OMD, cap, lr), grid, rho)


def make_exp_ix(grid: BidGrid, rho: float, horizon: int, params: BaselineParams = BaselineParams()):
    cap = 1.0 / rho if params.cap is None else params.cap
    primal = ExpIX(len(grid), horizon, params.eta, params.gamma_ix)
    return PrimalDualBidder("exp_ix", primal, DualState(DECAYING, cap, 0.0), grid, rho)
