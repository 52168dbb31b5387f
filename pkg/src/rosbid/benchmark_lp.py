"""The bidding LP over the probability simplex.

    maximize    sum_b w(b) gain(b)
    subject to  sum_b w(b) (price(b) - gain(b)) <= 0      (RoS)
                sum_b w(b) price(b)             <= rho    (budget)
                w in the simplex

Both the benchmark (true moments) and the per-round optimistic problem of the
UCB bidder have this shape. The production solver is a dense two-phase
simplex with Bland's rule; :func:`enumerate_vertices` is an independent
O(|B|^3) oracle over supports of size at most three.

Both solvers treat constraint coefficients and budgets within ``ZERO_TOL`` of
zero as exactly zero. Values that small are below the resolution of the
floating-point pivoting, and snapping them keeps the two solvers consistent.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .auction_env import GroundTruthMoments

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
ZERO_TOL = 1e-12
_PIVOT_TOL = 1e-12
_COST_TOL = 1e-12


def _snap(x: float) -> float:
    return 0.0 if abs(x) <= ZERO_TOL else x


class InfeasibleLP(ValueError):
    """No mixture satisfies both constraints."""


class NotFeasible(ValueError):
    """A supplied mixture violates an LP constraint."""


@dataclass(frozen=True, eq=False)
class LpInstance:
    gain: np.ndarray
    price: np.ndarray
    rho: float

    def __post_init__(self) -> None:
        gain = np.array(self.gain, dtype=float)
        price = np.array(self.price, dtype=float)
        if gain.ndim != 1 or gain.shape != price.shape or gain.size == 0:
            raise ValueError("gain and price must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(gain)) and np.all(np.isfinite(price))):
            raise ValueError("gain and price must be finite")
        if np.any(gain < 0) or np.any(price < 0):
            raise ValueError("gain and price must be non-negative")
        if not np.isfinite(self.rho):
            raise ValueError("rho must be finite")
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "price", price)
        object.__setattr__(self, "rho", float(self.rho))


@dataclass(frozen=True, eq=False)
class BenchmarkSolution:
    value: float
    mixture: np.ndarray


def _pivot(tab: list[list[float]], obj: list[float], basis: list[int], r: int, c: int) -> None:
    row = tab[r]
    inv = 1.0 / row[c]
    for k in range(len(row)):
        row[k] *= inv
    for i, other in enumerate(tab):
        f = other[c]
        if i != r and f != 0.0:
            for k in range(len(other)):
                other[k] -= f * row[k]
    f = obj[c]
    if f != 0.0:
        for k in range(len(obj)):
            obj[k] -= f * row[k]
    basis[r] = c


def _run_simplex(
    tab: list[list[float]], obj: list[float], basis: list[int], allowed: int
) -> None:
    """Maximize with Bland's rule; ``obj`` holds reduced costs, last entry -value."""
    while True:
        # tolerances are relative to the current scale, since degenerate
        # pivots on small prices can inflate the tableau far above 1
        cost_tol = _COST_TOL * max(1.0, max(map(abs, obj)))
        enter = -1
        for j in range(allowed):
            if obj[j] > cost_tol:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best = 0.0
        for i, row in enumerate(tab):
            a = row[enter]
            if a > _PIVOT_TOL and a > _PIVOT_TOL * max(map(abs, row)):
                ratio = row[-1] / a
                if (
                    leave < 0
                    or ratio < best - 1e-15
                    or (abs(ratio - best) <= 1e-15 and basis[i] < basis[leave])
                ):
                    leave, best = i, ratio
        if leave < 0:
            raise RuntimeError("LP unbounded; impossible over the simplex")
        _pivot(tab, obj, basis, leave, enter)


def solve_lp(gain: Sequence[float], price: Sequence[float], rho: float) -> tuple[float, list[float]]:
    """Solve the bidding LP; returns ``(value, weights)``.

    Columns are ``w_0..w_{n-1}``, two slacks, and one artificial for the
    simplex row. Phase 1 drives the artificial out; phase 2 maximizes gain.
    """
    gain = [float(g) for g in gain]
    price = [float(p) for p in price]
    if rho < 0:
        raise InfeasibleLP("negative budget admits no mixture")
    n = len(gain)
    s1, s2, art = n, n + 1, n + 2
    width = n + 4  # n weights, 2 slacks, 1 artificial, rhs

    ros = [_snap(price[j] - gain[j]) for j in range(n)] + [1.0, 0.0, 0.0, 0.0]
    bud = [_snap(x) for x in price] + [0.0, 1.0, 0.0, _snap(float(rho))]
    simplex = [1.0] * n + [0.0, 0.0, 1.0, 1.0]
    tab = [ros, bud, simplex]
    basis = [s1, s2, art]
    # phase 1: maximize -artificial
    obj = [0.0] * width
    for k in range(width):
        obj[k] = simplex[k]
    obj[art] = 0.0
    _run_simplex(tab, obj, basis, art)
    if obj[-1] > FEAS_TOL:
        raise InfeasibleLP("no mixture satisfies the RoS and budget constraints")
    if art in basis:
        r = basis.index(art)
        drive_tol = _PIVOT_TOL * max(1.0, max(map(abs, tab[r])))
        for j in range(art):
            if abs(tab[r][j]) > drive_tol:
                _pivot(tab, obj, basis, r, j)
                break

    # phase 2: reduced costs of the gain objective in the current basis
    cost = gain + [0.0, 0.0, 0.0]
    obj = cost + [0.0]
    for i, b in enumerate(basis):
        cb = cost[b]
        if cb != 0.0:
            row = tab[i]
            for k in range(width):
                obj[k] -= cb * row[k]
    _run_simplex(tab, obj, basis, art)

    w = [0.0] * n
    for i, b in enumerate(basis):
        if b < n:
            w[b] = max(tab[i][-1], 0.0)
    total = sum(w)
    w = [x / total for x in w]
    value = sum(x * g for x, g in zip(w, gain))
    return value, w


def solve_lp_kernel(lp: LpInstance) -> BenchmarkSolution:
    value, w = solve_lp(lp.gain, lp.price, lp.rho)
    return BenchmarkSolution(value=value, mixture=np.array(w))


def constraint_residuals(gain, price, rho, w) -> tuple[float, float]:
    """``(RoS lhs, budget lhs - rho)``; both must be <= 0 for feasibility."""
    w = np.asarray(w, dtype=float)
    spend = float(w @ np.asarray(price, dtype=float))
    return spend - float(w @ np.asarray(gain, dtype=float)), spend - rho


def enumerate_vertices(gain, price, rho, tol: float = 1e-12) -> BenchmarkSolution:
    """Brute-force optimum over all basic feasible solutions.

    A vertex of the feasible polytope has support of size k <= 3 with k - 1 of
    the two inequality constraints tight, so it suffices to try every point
    mass, every pair with one tight constraint and every triple with both.
    """
    gain = np.asarray(gain, dtype=float)
    price = np.asarray(price, dtype=float)
    n = len(gain)
    snap = np.vectorize(_snap, otypes=[float])
    rows = [snap(price - gain), snap(price)]
    rhs = [0.0, _snap(float(rho))]
    best_value, best_w = -np.inf, None

    def consider(support, active):
        nonlocal best_value, best_w
        k = len(support)
        mat = np.ones((k, k))
        vec = np.zeros(k)
        vec[0] = 1.0
        for r, c in enumerate(active, start=1):
            mat[r] = rows[c][list(support)]
            vec[r] = rhs[c]
        try:
            sol = np.linalg.solve(mat, vec)
        except np.linalg.LinAlgError:
            return
        if np.any(sol < -tol):
            return
        w = np.zeros(n)
        w[list(support)] = np.clip(sol, 0.0, None)
        if w @ rows[0] - rhs[0] > tol or w @ rows[1] - rhs[1] > tol:
            return
        value = float(w @ gain)
        if value > best_value:
            best_value, best_w = value, w

    for j in range(n):
        consider((j,), ())
    for pair in itertools.combinations(range(n), 2):
        for c in (0, 1):
            consider(pair, (c,))
    for triple in itertools.combinations(range(n), 3):
        consider(triple, (0, 1))
    if best_w is None:
        raise InfeasibleLP("no vertex satisfies the constraints")
    return BenchmarkSolution(value=best_value, mixture=best_w)


def solve_benchmark(moments: GroundTruthMoments, rho: float) -> BenchmarkSolution:
    """Value ``V`` and optimal mixture of the expectation LP."""
    gain = moments.v_bar * np.asarray(moments.x_bar)
    sol = solve_lp_kernel(LpInstance(gain, moments.q_bar, rho))
    if sol.value < 1e-6:
        logger.warning("benchmark value V=%.3g is near zero; regret bounds scale with 1/V", sol.value)
    return sol


def slater_slack(moments: GroundTruthMoments, rho: float, w) -> float:
    """Minimum expected slack of a feasible mixture over both constraints."""
    w = np.asarray(w, dtype=float)
    gain = moments.v_bar * np.asarray(moments.x_bar)
    r_ros, r_budget = constraint_residuals(gain, moments.q_bar, rho, w)
    if r_ros > FEAS_TOL or r_budget > FEAS_TOL:
        raise NotFeasible(f"mixture violates the LP (RoS {r_ros:.3g}, budget {r_budget:.3g})")
    return min(-r_ros, -r_budget)


def max_slater_slack(moments: GroundTruthMoments, rho: float) -> tuple[float, np.ndarray]:
    """Largest Slater slack over all mixtures, with a maximizer.

    ``max_w min(a.w, rho - q.w)`` is an LP with two rows besides the simplex,
    so some optimum mixes at most two bids; on a pair the optimum is an
    endpoint or the point where both terms are equal.
    """
    q = np.asarray(moments.q_bar, dtype=float)
    a = moments.v_bar * np.asarray(moments.x_bar) - q
    s = rho - q
    n = len(q)
    best, best_w = -np.inf, None
    for i in range(n):
        k = min(a[i], s[i])
        if k > best:
            best, best_w = k, np.eye(n)[i]
    for i, j in itertools.combinations(range(n), 2):
        # w = lam e_i + (1 - lam) e_j; equalize the two slack terms
        di, dj = a[i] - s[i], a[j] - s[j]
        if di == dj:
            continue
        lam = dj / (dj - di)
        if 0.0 < lam < 1.0:
            w = np.zeros(n)
            w[i], w[j] = lam, 1.0 - lam
            k = min(float(w @ a), float(w @ s))
            if k > best:
                best, best_w = k, w
    return float(best), best_w
