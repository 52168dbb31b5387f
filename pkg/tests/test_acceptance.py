"""Acceptance criteria, each at its stated tolerance.

Every test records a PASS/FAIL line (shown in the terminal summary) before it
asserts. The long-horizon runs are computed once per module and shared.
"""

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import grid_search_optimum, random_state
from rosbid.auction_env import SECOND_PRICE, appendix_e_instance, make_instance, true_moments
from rosbid.benchmark_lp import (
    constraint_residuals,
    enumerate_vertices,
    max_slater_slack,
    slater_slack,
    solve_benchmark,
    solve_lp,
)
from rosbid.harness.config import parse_config
from rosbid.harness.runner import run_experiment
from rosbid.linbandit import random_instance, run_linbandit
from rosbid.ucb_ros import optimistic_model

ROOT = Path(__file__).resolve().parents[1]
SEEDS = "0-19"
THREADS = os.cpu_count() or 1
GRID_SIZE = 4


def table1_config(algorithms: str, horizons: str) -> str:
    return (
        f"[experiment]\nalgorithms = {algorithms}\nhorizons = {horizons}\nseeds = {SEEDS}\n"
        f"threads = {THREADS}\n[instance]\npreset = table1\n[output]\ntrace = false\n"
    )


@pytest.fixture(scope="module")
def ucb_runs():
    """UCB-RoS on the table1 preset at T = 1e4, 2e4 and 8e4, 20 seeds each."""
    res = run_experiment(parse_config(table1_config("ucb_ros", "10000, 20000, 80000")))
    by_t = {}
    for r in res.runs:
        by_t.setdefault(r.horizon, []).append(r)
    return by_t


def test_criterion_01_benchmark(acceptance_report):
    start = time.perf_counter()
    out = subprocess.run(
        [sys.executable, "-m", "rosbid.harness.cli", "benchmark", str(ROOT / "configs" / "table1.cfg")],
        capture_output=True, text=True, check=True,
    ).stdout
    elapsed = time.perf_counter() - start
    fields = dict(line.split(" = ", 1) for line in out.splitlines() if " = " in line)
    value = float(fields["V"])
    w = np.array([float(x) for x in fields["w*_LP"].strip("[]").split(",")])
    m = true_moments(parse_config(table1_config("ucb_ros", "1")).instance)
    r1, r2 = constraint_residuals(m.v_bar * m.x_bar, m.q_bar, 0.4, w)
    ok = abs(value - 0.4) <= 1e-9 and max(r1, r2) <= 1e-9 and abs(w.sum() - 1) <= 1e-9 and elapsed < 1.0
    acceptance_report(1, ok, f"V = {value:.12g}, w* = {w.tolist()}, {elapsed:.2f} s")
    assert ok


def test_criterion_02_lp_oracle(acceptance_report):
    rng = np.random.default_rng(20)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        gain, price = rng.random(n), rng.random(n)
        price[0] = 0.0
        rho = float(rng.random())
        value, _ = solve_lp(gain, price, rho)
        worst = max(worst, abs(value - enumerate_vertices(gain, price, rho).value))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-7 and elapsed < 10
    acceptance_report(2, ok, f"max |kernel - enumeration| = {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_03_closed_form_optimism(acceptance_report):
    rng = np.random.default_rng(32)
    start = time.perf_counter()
    worst = np.inf
    for _ in range(50):
        state = random_state(rng)
        m = optimistic_model(state)
        closed, _ = solve_lp(m.v_star * m.x_star, m.q_star, state.rho)
        worst = min(worst, closed - grid_search_optimum(state, rng))
    elapsed = time.perf_counter() - start
    ok = worst >= -2e-3 and elapsed < 60
    acceptance_report(3, ok, f"min(closed form - grid search) = {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_04_value_dominates_slack(acceptance_report):
    rng = np.random.default_rng(34)
    worst, checked = np.inf, 0
    for k in range(20):
        n = int(rng.integers(2, 7))
        spec = make_instance(
            n, SECOND_PRICE, rng.dirichlet(np.ones(n)), float(rng.uniform(0.1, 0.9)),
            float(rng.uniform(0.1, 1.0)), 10,
        )
        m = true_moments(spec)
        value = solve_benchmark(m, spec.rho).value
        gain = m.v_bar * m.x_bar
        while checked < 50 * (k + 1):
            # rejection sampling of feasible mixtures, tilted toward the zero bid
            w = rng.dirichlet(np.full(n, 0.5))
            mix = rng.random()
            w = mix * w + (1 - mix) * np.eye(n)[0]
            r1, r2 = constraint_residuals(gain, m.q_bar, spec.rho, w)
            if max(r1, r2) > 1e-9:
                continue
            worst = min(worst, value - slater_slack(m, spec.rho, w))
            checked += 1
    e = appendix_e_instance()
    me = true_moments(e)
    v_e = solve_benchmark(me, e.rho).value
    kappa_e, _ = max_slater_slack(me, e.rho)
    ok = checked == 1000 and worst >= -1e-9 and abs(v_e - 0.5) <= 1e-9 and kappa_e <= 1e-9
    acceptance_report(
        4, ok, f"min(V - kappa) = {worst:.3g} over {checked} mixtures; appendix_e V = {v_e:.12g}, max kappa = {kappa_e:.3g}"
    )
    assert ok


def test_criterion_05_sublinear_regret(ucb_runs, acceptance_report):
    mean = {t: np.mean([r.regret for r in ucb_runs[t]]) for t in (20000, 80000)}
    exp_mean = {t: np.mean([r.exp_regret for r in ucb_runs[t]]) for t in (20000, 80000)}
    ratio = mean[80000] / mean[20000]
    exp_ratio = exp_mean[80000] / exp_mean[20000]
    ok = ratio <= 3
    acceptance_report(
        5, ok,
        f"regret(8e4)/regret(2e4) = {mean[80000]:.3f}/{mean[20000]:.3f} = {ratio:.3f}; "
        f"expected-regret ratio {exp_mean[80000]:.3f}/{exp_mean[20000]:.3f} = {exp_ratio:.3f}",
    )
    assert ok


def test_criterion_06_regret_envelope(ucb_runs, acceptance_report):
    horizon = 20000
    runs = ucb_runs[horizon]
    v = runs[0].benchmark
    envelope = 10 * math.sqrt(0.4 * horizon * math.log(GRID_SIZE * horizon) / v)
    mean = float(np.mean([r.regret for r in runs]))
    ok = mean <= envelope
    acceptance_report(6, ok, f"mean regret {mean:.3f} <= envelope {envelope:.1f}")
    assert ok


def test_criterion_07_violations(ucb_runs, acceptance_report):
    horizon = 20000
    bound = 10 * math.sqrt(horizon * math.log(GRID_SIZE * horizon))
    runs = ucb_runs[horizon]
    good = sum(r.budget_viol <= bound and r.ros_viol <= bound for r in runs)
    worst_b = max(r.budget_viol for r in runs)
    worst_r = max(r.ros_viol for r in runs)
    ok = good >= 19
    acceptance_report(
        7, ok, f"{good}/20 seeds within {bound:.1f} (max budget {worst_b:.2f}, max RoS {worst_r:.2f})"
    )
    assert ok


def test_criterion_08_coverage(ucb_runs, acceptance_report):
    horizon = 10000
    cov = [r.coverage for r in ucb_runs[horizon]]
    ok = len(cov) == 20 and min(cov) >= 1 - 3 / horizon
    acceptance_report(8, ok, f"min per-run coverage {min(cov):.6f} (need >= {1 - 3 / horizon:.4f})")
    assert ok


def test_criterion_09_ordering(acceptance_report):
    start = time.perf_counter()
    res = run_experiment(parse_config(table1_config("ucb_ros, pd_exp3p1, exp_ix", "200000")))
    mean = {row.algo: row.mean_regret for row in res.summary}
    elapsed = time.perf_counter() - start
    ok = mean["ucb_ros"] < mean["pd_exp3p1"] and mean["ucb_ros"] < mean["exp_ix"]
    acceptance_report(
        9, ok,
        f"mean regret at T=2e5: ucb_ros {mean['ucb_ros']:.1f}, pd_exp3p1 {mean['pd_exp3p1']:.1f}, "
        f"exp_ix {mean['exp_ix']:.1f} ({elapsed / 60:.1f} min)",
    )
    assert ok


def test_criterion_10_linear_bandit(acceptance_report):
    horizon = 2500
    regret = {horizon: [], 4 * horizon: []}
    signed = {horizon: [], 4 * horizon: []}
    fallbacks = 0
    for seed in range(20):
        inst = random_instance(np.random.Generator(np.random.Philox(seed)), d=2, n_actions=10)
        for t in regret:
            tr = run_linbandit(inst, t, np.random.Generator(np.random.Philox(1000 + seed)))
            regret[t].append(tr.regret_plus[-1])
            signed[t].append(tr.regret[-1])
            fallbacks += tr.fallback_count
    m1, m4 = np.mean(regret[horizon]), np.mean(regret[4 * horizon])
    s1, s4 = np.mean(signed[horizon]), np.mean(signed[4 * horizon])
    ratio = m4 / m1
    ok = ratio <= 3 and fallbacks == 0
    acceptance_report(
        10, ok,
        f"regret(1e4)/regret(2500) = {m4:.2f}/{m1:.2f} = {ratio:.3f} "
        f"(signed {s4:.2f}/{s1:.2f}); fallback rounds {fallbacks}",
    )
    assert ok


def test_criterion_11_determinism(tmp_path, acceptance_report):
    text = (
        "[experiment]\nalgorithms = ucb_ros, pd_exp3p1, exp_ix, lin_bandit\nhorizons = 300, 600\n"
        "seeds = 0-3\noutput_dir = out\n[instance]\npreset = table1\n"
    )
    outputs = []
    for run, threads in enumerate(("1", "1", "4")):
        d = tmp_path / f"r{run}"
        d.mkdir()
        (d / "x.cfg").write_text(text)
        subprocess.run(
            [sys.executable, "-m", "rosbid.harness.cli", "run", str(d / "x.cfg"), "--threads", threads],
            check=True, capture_output=True,
        )
        outputs.append({p.name: p.read_bytes() for p in sorted((d / "out").iterdir())})
    names = sorted(outputs[0])
    ok = outputs[0] == outputs[1] == outputs[2] and any(n.endswith(".svg") for n in names)
    acceptance_report(11, ok, f"{len(names)} files byte-identical across reruns and thread counts 1/4")
    assert ok
