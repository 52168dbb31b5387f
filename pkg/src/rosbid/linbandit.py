"""Constrained linear bandit with optimistic loss and constraint estimates.

Losses ``<f, x>`` and constraint costs ``<g_i, x>`` are observed with unit
Gaussian noise; ridge estimates with confidence ellipsoids of radius ``beta``
replace the unknowns. For a finite action set the doubly-optimistic choice
has a closed form: the optimistic value of ``<theta, x>`` over the ellipsoid
is ``<theta_hat, x> - beta ||x||_{V^-1}``.

Everything is loss minimization: the benchmark is the feasible action with the
smallest true loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def beta(d: int, bound: float, lam: float, delta: float) -> float:
    """Ellipsoid radius ``sqrt(d log(1 + (d B^2 / lam) / delta)) + sqrt(lam) B``."""
    if d <= 0 or lam <= 0 or delta <= 0:
        raise ValueError("d, lambda and delta must be positive")
    if bound < 0:
        raise ValueError("norm bound must be non-negative")
    if delta >= 1:
        raise ValueError("delta must be below 1")
    return math.sqrt(d * math.log(1.0 + (d * bound**2 / lam) / delta)) + math.sqrt(lam) * bound


@dataclass(frozen=True, eq=False)
class LinearInstance:
    loss: np.ndarray  # f, shape (d,)
    constraints: np.ndarray  # g, shape (m, d)
    actions: np.ndarray  # shape (K, d)
    bound: float = 1.0
    noise_sd: float = 1.0

    def __post_init__(self) -> None:
        f = np.asarray(self.loss, dtype=float)
        g = np.atleast_2d(np.asarray(self.constraints, dtype=float))
        acts = np.atleast_2d(np.asarray(self.actions, dtype=float))
        if acts.size == 0:
            raise ValueError("action set must be non-empty")
        if g.shape[1] != f.shape[0] or acts.shape[1] != f.shape[0]:
            raise ValueError("dimension mismatch between f, g and actions")
        if np.linalg.norm(f) > self.bound + 1e-12 or np.any(np.linalg.norm(g, axis=1) > self.bound + 1e-12):
            raise ValueError("parameter norms exceed the bound")
        if not np.any(np.all(acts @ g.T <= 0.0, axis=1)):
            raise ValueError("no feasible action")
        object.__setattr__(self, "loss", f)
        object.__setattr__(self, "constraints", g)
        object.__setattr__(self, "actions", acts)

    @property
    def dim(self) -> int:
        return self.loss.shape[0]

    def optimal_index(self) -> int:
        feasible = np.all(self.actions @ self.constraints.T <= 0.0, axis=1)
        losses = np.where(feasible, self.actions @ self.loss, np.inf)
        return int(np.argmin(losses))


def random_instance(
    rng: np.random.Generator,
    d: int = 2,
    n_actions: int = 10,
    m: int = 1,
    bound: float = 1.0,
    margin: float = 0.1,
) -> LinearInstance:
    """Actions on the unit sphere, ``f`` and ``g_i`` of norm ``bound``.

    Redraws until some action is feasible and every constraint value is at
    least ``margin`` away from zero; without a margin, barely-infeasible
    actions are indistinguishable from feasible ones at any practical horizon.
    """
    while True:
        acts = rng.standard_normal((n_actions, d))
        acts /= np.linalg.norm(acts, axis=1, keepdims=True)
        f = rng.standard_normal(d)
        f *= bound / np.linalg.norm(f)
        g = rng.standard_normal((m, d))
        g *= bound / np.linalg.norm(g, axis=1, keepdims=True)
        cost = acts @ g.T
        if np.any(np.all(cost < 0.0, axis=1)) and np.all(np.abs(cost) >= margin):
            return LinearInstance(f, g, acts, bound)


@dataclass
class RidgeState:
    """Ridge estimates for ``f`` and every ``g_i`` sharing one Gram matrix."""

    dim: int
    n_constraints: int
    lam: float = 1.0
    gram: np.ndarray = field(default=None, repr=False)
    gram_inverse: np.ndarray = field(default=None, repr=False)
    loss_sum: np.ndarray = field(default=None, repr=False)
    cost_sum: np.ndarray = field(default=None, repr=False)
    t: int = 0

    def __post_init__(self) -> None:
        d = self.dim
        if self.gram is None:
            self.gram = self.lam * np.eye(d)
            self.gram_inverse = np.eye(d) / self.lam
        if self.loss_sum is None:
            self.loss_sum = np.zeros(d)
            self.cost_sum = np.zeros((self.n_constraints, d))

    @property
    def f_hat(self) -> np.ndarray:
        return self.gram_inverse @ self.loss_sum

    @property
    def g_hat(self) -> np.ndarray:
        return self.cost_sum @ self.gram_inverse.T


def ridge_update(state: RidgeState, action, loss_obs: float, cost_obs) -> RidgeState:
    """Rank-one update of the Gram matrix and its inverse (Sherman-Morrison)."""
    x = np.asarray(action, dtype=float)
    ax = state.gram_inverse @ x
    state.gram_inverse = state.gram_inverse - np.outer(ax, ax) / (1.0 + x @ ax)
    state.gram = state.gram + np.outer(x, x)
    state.loss_sum = state.loss_sum + loss_obs * x
    state.cost_sum = state.cost_sum + np.outer(np.asarray(cost_obs, dtype=float), x)
    state.t += 1
    return state


@dataclass(frozen=True)
class Selection:
    index: int
    fallback: bool


def select_action(state: RidgeState, actions, radius: float) -> Selection:
    """Doubly-optimistic action over a finite set.

    Optimistically feasible: ``<g_hat_i, x> - radius ||x||_{V^-1} <= 0`` for
    every i. Among those, minimize ``<f_hat, x> - radius ||x||_{V^-1}``. When
    none qualifies, fall back to the smallest worst optimistic constraint.
    """
    acts = np.atleast_2d(np.asarray(actions, dtype=float))
    if acts.shape[0] == 0 or acts.size == 0:
        raise ValueError("empty action set")
    width = radius * np.sqrt(np.einsum("ij,jk,ik->i", acts, state.gram_inverse, acts))
    opt_cost = acts @ state.g_hat.T - width[:, None]
    feasible = np.all(opt_cost <= 0.0, axis=1)
    if not feasible.any():
        return Selection(int(np.argmin(opt_cost.max(axis=1))), True)
    opt_loss = np.where(feasible, acts @ state.f_hat - width, np.inf)
    return Selection(int(np.argmin(opt_loss)), False)


@dataclass
class LinTrace:
    action_index: np.ndarray
    loss_obs: np.ndarray
    cost_obs: np.ndarray  # (T, m)
    regret: np.ndarray  # cumulative expected regret, signed
    regret_plus: np.ndarray  # cumulative positive part of the per-round regret
    violation: np.ndarray  # cumulative <g_i, x_t>, (T, m)
    fallback: np.ndarray

    @property
    def fallback_count(self) -> int:
        return int(self.fallback.sum())


def run_linbandit(
    instance: LinearInstance,
    horizon: int,
    rng: np.random.Generator,
    lam: float = 1.0,
    delta: float | None = None,
    noiseless: bool = False,
) -> LinTrace:
    """Run the optimistic learner for ``horizon`` rounds.

    Regret is measured in expectation per round, ``<f, x_t> - <f, x_opt>``.
    It goes negative whenever an infeasible action beats the benchmark, so
    the positive part is tracked as well. Violations are the cumulative true
    costs ``sum_t <g_i, x_t>``.
    """
    d, m = instance.dim, instance.constraints.shape[0]
    delta = 1.0 / horizon if delta is None else delta
    radius = beta(d, instance.bound, lam, min(delta, 0.999999))
    state = RidgeState(d, m, lam)
    acts = instance.actions
    true_loss = acts @ instance.loss
    true_cost = acts @ instance.constraints.T
    best = true_loss[instance.optimal_index()]

    idx = np.empty(horizon, dtype=np.int64)
    losses = np.empty(horizon)
    costs = np.empty((horizon, m))
    fallback = np.zeros(horizon, dtype=bool)
    sd = 0.0 if noiseless else instance.noise_sd
    for t in range(horizon):
        sel = select_action(state, acts, radius)
        k = sel.index
        noise = rng.standard_normal(1 + m) * sd
        losses[t] = true_loss[k] + noise[0]
        costs[t] = true_cost[k] + noise[1:]
        ridge_update(state, acts[k], losses[t], costs[t])
        idx[t] = k
        fallback[t] = sel.fallback
    gap = true_loss[idx] - best
    violation = np.cumsum(true_cost[idx], axis=0)
    return LinTrace(
        idx, losses, costs, np.cumsum(gap), np.cumsum(np.maximum(gap, 0.0)), violation, fallback
    )
