"""Seeded multi-run execution and metric aggregation.

Every run is addressed by ``(algo, T, seed)`` and rebuilt from scratch from
that key, so results do not depend on the order or the process that ran them.
A seed spawns three independent Philox streams: competing bids, values and
the algorithm's own randomness. The first two are shared by all algorithms
(common random numbers), and the first ``m`` rounds of a run do not depend on
its horizon.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..auction_env import InstanceSpec, draw_rounds, true_moments
from ..baselines import make_exp_ix, make_pd_exp3p1
from ..benchmark_lp import BenchmarkSolution, solve_benchmark
from ..linbandit import random_instance, run_linbandit
from ..ucb_ros import UcbRosBidder, confidence_radii
from .config import ExperimentConfig

_STREAMS = 3


def seed_streams(seed: int) -> tuple[np.random.Generator, ...]:
    """``(competing bids, values, algorithm)`` generators for one seed."""
    children = np.random.SeedSequence(seed).spawn(_STREAMS)
    return tuple(np.random.Generator(np.random.Philox(c)) for c in children)


@dataclass(eq=False)
class RunTrace:
    """Per-round records; cumulative columns are prefix sums of the per-round ones."""

    bid: np.ndarray
    won: np.ndarray
    value_observed: np.ndarray
    reward: np.ndarray
    spend: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self.bid) + 1)

    @property
    def cum_reward(self) -> np.ndarray:
        return np.cumsum(self.reward)

    @property
    def cum_spend(self) -> np.ndarray:
        return np.cumsum(self.spend)

    @property
    def cum_value(self) -> np.ndarray:
        return np.cumsum(self.value_observed)


@dataclass(eq=False)
class RunResult:
    algo: str
    horizon: int
    seed: int
    benchmark: float
    cum_reward: float
    cum_spend: float
    cum_value: float
    budget_viol: float
    ros_viol: float
    exp_regret: float
    trace: RunTrace | None = None
    coverage: float | None = None  # ucb_ros only
    extra: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.algo, self.horizon, self.seed)

    @property
    def regret(self) -> float:
        return self.horizon * self.benchmark - self.cum_reward


def coverage_fraction(spec: InstanceSpec, batch, won: np.ndarray) -> float:
    """Fraction of rounds whose estimates all sit inside their confidence sets.

    Round ``t`` is checked after its observation is folded in, using the
    estimators from ``t`` samples and ``N_t`` wins; before the first win the
    value interval is unbounded and counts as covering.
    """
    horizon = len(batch)
    moments = true_moments(spec)
    t = np.arange(1, horizon + 1)
    x_hat = np.cumsum(batch.alloc_table[batch.b_max_index], axis=0) / t[:, None]
    q_hat = np.cumsum(batch.price_table[batch.b_max_index], axis=0) / t[:, None]
    # rad_x(t) = rad_x(1) / sqrt(t)
    rad_x = confidence_radii(1, 0, len(spec.grid), spec.horizon).rad_x / np.sqrt(t)
    ok = np.all(np.abs(x_hat - moments.x_bar) <= rad_x[:, None], axis=1)
    ok &= np.all(np.abs(q_hat - moments.q_bar) <= rad_x[:, None], axis=1)
    n_wins = np.cumsum(won)
    v_sum = np.cumsum(np.where(won, batch.values, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        v_hat = v_sum / n_wins
        rad_v = np.sqrt(math.log(2 * spec.horizon) / (2.0 * n_wins))
    ok &= (n_wins == 0) | (np.abs(v_hat - moments.v_bar) <= rad_v)
    return float(ok.mean())


def _make_bidder(algo: str, spec: InstanceSpec, config: ExperimentConfig):
    if algo == "ucb_ros":
        return UcbRosBidder(spec.grid, spec.rho, spec.horizon)
    if algo == "pd_exp3p1":
        return make_pd_exp3p1(spec.grid, spec.rho, spec.horizon, config.baselines)
    if algo == "exp_ix":
        return make_exp_ix(spec.grid, spec.rho, spec.horizon, config.baselines)
    raise ValueError(f"unknown bidding algorithm {algo!r}")


def run_bidding(
    algo: str, spec: InstanceSpec, seed: int, config: ExperimentConfig, keep_trace: bool = True
) -> RunResult:
    """One full run of a bidding algorithm on ``spec`` (its horizon included)."""
    horizon = spec.horizon
    bid_rng, value_rng, algo_rng = seed_streams(seed)
    batch = draw_rounds(spec, bid_rng, horizon, value_rng=value_rng)
    moments = true_moments(spec)
    bench = solve_benchmark(moments, spec.rho)
    expected_gain = moments.v_bar * np.asarray(moments.x_bar)
    bidder = _make_bidder(algo, spec, config)

    bid_idx = np.empty(horizon, dtype=np.int64)
    won = np.empty(horizon, dtype=bool)
    reward = np.empty(horizon)
    spend = np.empty(horizon)
    exp_reward = 0.0
    for i, round_ in enumerate(batch):
        res = bidder.step(round_, algo_rng)
        exp_reward += float(bidder.last_mixture @ expected_gain)
        bid_idx[i] = res.bid_index
        won[i] = res.won
        reward[i] = res.reward
        spend[i] = res.spend
    value_obs = np.where(won, batch.values, 0.0)

    cum_reward = float(np.sum(reward))
    cum_spend = float(np.sum(spend))
    trace = None
    if keep_trace:
        trace = RunTrace(spec.grid.values[bid_idx], won, value_obs, reward, spend)
    result = RunResult(
        algo=algo,
        horizon=horizon,
        seed=seed,
        benchmark=bench.value,
        cum_reward=cum_reward,
        cum_spend=cum_spend,
        cum_value=float(np.sum(value_obs)),
        budget_viol=cum_spend - spec.rho * horizon,
        ros_viol=float(np.sum(spend - reward)),
        exp_regret=horizon * bench.value - exp_reward,
        trace=trace,
    )
    if algo == "ucb_ros":
        result.coverage = coverage_fraction(spec, batch, won)
    return result


@dataclass(eq=False)
class LinRunResult:
    horizon: int
    seed: int
    regret: float
    regret_plus: float
    violation: float  # largest cumulative constraint value, clipped at zero
    fallback_rounds: int

    @property
    def key(self) -> tuple[str, int, int]:
        return ("lin_bandit", self.horizon, self.seed)


def run_lin(horizon: int, seed: int, config: ExperimentConfig) -> LinRunResult:
    p = config.linbandit
    # one shared instance when instance_seed is set, otherwise a fresh one per seed
    inst_seed = seed if p.instance_seed is None else p.instance_seed
    inst_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([inst_seed, 1])))
    inst = random_instance(inst_rng, p.dim, p.n_actions, p.constraints, margin=p.margin)
    _, _, algo_rng = seed_streams(seed)
    tr = run_linbandit(inst, horizon, algo_rng, lam=p.lam, delta=p.delta)
    return LinRunResult(
        horizon, seed, float(tr.regret[-1]), float(tr.regret_plus[-1]),
        float(max(tr.violation[-1].max(), 0.0)), tr.fallback_count,
    )


def run_single(config: ExperimentConfig, algo: str, horizon: int, seed: int):
    if algo == "lin_bandit":
        return run_lin(horizon, seed, config)
    return run_bidding(algo, config.instance.with_horizon(horizon), seed, config, config.trace)


def _run_key(args):
    return run_single(*args)


@dataclass(frozen=True)
class SummaryRow:
    algo: str
    T: int
    mean_regret: float
    sd_regret: float
    mean_budget_viol: float
    sd_budget_viol: float
    mean_ros_viol: float
    sd_ros_viol: float


SUMMARY_FIELDS = tuple(SummaryRow.__dataclass_fields__)


@dataclass(frozen=True)
class LinSummaryRow:
    algo: str
    T: int
    mean_regret: float
    sd_regret: float
    mean_regret_plus: float
    sd_regret_plus: float
    mean_violation: float
    sd_violation: float
    fallback_rounds: int


LIN_SUMMARY_FIELDS = tuple(LinSummaryRow.__dataclass_fields__)


def mean_sd(values) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    arr = np.asarray(values, dtype=float)
    sd = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
    return float(np.mean(arr)), sd


@dataclass(eq=False)
class ExperimentResult:
    runs: list[RunResult]
    lin_runs: list[LinRunResult]
    summary: list[SummaryRow]
    lin_summary: list[LinSummaryRow]
    benchmark: BenchmarkSolution | None


def summarize(runs: list[RunResult]) -> list[SummaryRow]:
    groups: dict[tuple[str, int], list[RunResult]] = {}
    for r in sorted(runs, key=lambda r: r.key):
        groups.setdefault((r.algo, r.horizon), []).append(r)
    rows = []
    for (algo, horizon), rs in groups.items():
        rows.append(SummaryRow(
            algo, horizon,
            *mean_sd([r.regret for r in rs]),
            *mean_sd([r.budget_viol for r in rs]),
            *mean_sd([r.ros_viol for r in rs]),
        ))
    return rows


def summarize_lin(runs: list[LinRunResult]) -> list[LinSummaryRow]:
    groups: dict[int, list[LinRunResult]] = {}
    for r in sorted(runs, key=lambda r: r.key):
        groups.setdefault(r.horizon, []).append(r)
    return [
        LinSummaryRow(
            "lin_bandit", horizon,
            *mean_sd([r.regret for r in rs]),
            *mean_sd([r.regret_plus for r in rs]),
            *mean_sd([r.violation for r in rs]),
            sum(r.fallback_rounds for r in rs),
        )
        for horizon, rs in groups.items()
    ]


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentResult:
    """Run every ``(algo, T, seed)`` triple and fold the results.

    ``threads > 1`` distributes runs over a process pool; results are sorted
    by key before aggregation, so the output is identical either way.
    """
    threads = config.threads if threads is None else threads
    keys = [(a, h, s) for a in config.algorithms for h in config.horizons for s in config.seeds]
    if threads > 1 and len(keys) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_key, [(config, *k) for k in keys], chunksize=1))
    else:
        results = [run_single(config, *k) for k in keys]
    runs = sorted((r for r in results if isinstance(r, RunResult)), key=lambda r: r.key)
    lin_runs = sorted((r for r in results if isinstance(r, LinRunResult)), key=lambda r: r.key)
    bench = None
    if any(a != "lin_bandit" for a in config.algorithms):
        bench = solve_benchmark(true_moments(config.instance), config.instance.rho)
    return ExperimentResult(runs, lin_runs, summarize(runs), summarize_lin(lin_runs), bench)
