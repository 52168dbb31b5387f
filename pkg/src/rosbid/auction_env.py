"""Synthetic stochastic auction instances.

Each round draws the highest competing bid ``B_max`` from a discrete pmf over
the bid grid and a value from ``Beta(10 v_bar, 10 (1 - v_bar))``. The learner's
allocation and payment at every grid bid follow from ``B_max`` alone, so the
per-round outcome vectors are rows of a small lookup table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FIRST_PRICE = "first_price"
SECOND_PRICE = "second_price"
AUCTION_TYPES = (FIRST_PRICE, SECOND_PRICE)

VALUE_CONCENTRATION = 10.0


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BidGrid:
    """Finite, strictly increasing set of bids in [0, 1] starting at 0."""

    bids: tuple[float, ...]
    values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        bids = tuple(float(b) for b in self.bids)
        if not bids:
            raise ValueError("bid grid must be non-empty")
        if bids[0] != 0.0:
            raise ValueError(f"first bid must be exactly 0, got {bids[0]!r}")
        if any(b < 0.0 or b > 1.0 for b in bids):
            raise ValueError("all bids must lie in [0, 1]")
        if any(b1 <= b0 for b0, b1 in zip(bids, bids[1:])):
            raise ValueError("bids must be strictly increasing")
        object.__setattr__(self, "bids", bids)
        object.__setattr__(self, "values", _frozen(bids))

    @classmethod
    def uniform(cls, size: int) -> "BidGrid":
        """``size`` equally spaced bids ``k / (size - 1)``."""
        if size < 2:
            raise ValueError("a uniform grid needs at least two bids")
        return cls(tuple(k / (size - 1) for k in range(size)))

    def __len__(self) -> int:
        return len(self.bids)

    def index(self, bid: float) -> int:
        try:
            return self.bids.index(float(bid))
        except ValueError:
            raise ValueError(f"bid {bid!r} is not on the grid") from None


def allocation_price(
    auction_type: str, bid: float, b_max: float, ties_win: bool = True
) -> tuple[int, float]:
    """Allocation (0/1) and payment of a single bid against the top competing bid."""
    if auction_type not in AUCTION_TYPES:
        raise ValueError(f"unknown auction type {auction_type!r}")
    won = bid >= b_max if ties_win else bid > b_max
    if not won:
        return 0, 0.0
    if auction_type == SECOND_PRICE:
        return 1, float(b_max)
    return 1, float(bid)


@dataclass(frozen=True)
class InstanceSpec:
    grid: BidGrid
    auction_type: str
    competing_pmf: tuple[float, ...]
    v_bar: float
    rho: float
    horizon: int
    ties_win: bool = True

    def __post_init__(self) -> None:
        pmf = tuple(float(p) for p in self.competing_pmf)
        object.__setattr__(self, "competing_pmf", pmf)
        if self.auction_type not in AUCTION_TYPES:
            raise ValueError(f"unknown auction type {self.auction_type!r}")
        if len(pmf) != len(self.grid):
            raise ValueError("competing_pmf must have one entry per grid bid")
        if any(p < 0.0 for p in pmf) or abs(sum(pmf) - 1.0) > 1e-12:
            raise ValueError("competing_pmf must be non-negative and sum to 1")
        if not 0.0 < self.v_bar < 1.0:
            raise ValueError("v_bar must lie in (0, 1)")
        if not self.rho > 0.0:
            raise ValueError("rho must be positive")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError("horizon must be a positive integer")

    def with_horizon(self, horizon: int) -> "InstanceSpec":
        return InstanceSpec(
            self.grid, self.auction_type, self.competing_pmf, self.v_bar,
            self.rho, horizon, self.ties_win,
        )


@dataclass(frozen=True, eq=False)
class AuctionRound:
    """One sample: value, allocation and price paid at every grid bid."""

    value: float
    alloc: np.ndarray
    price_paid: np.ndarray
    b_max_drawn: float


@dataclass(frozen=True, eq=False)
class GroundTruthMoments:
    x_bar: np.ndarray
    q_bar: np.ndarray
    v_bar: float


def outcome_tables(spec: InstanceSpec) -> tuple[np.ndarray, np.ndarray]:
    """Allocation and price-paid matrices indexed ``[b_max index, bid index]``."""
    n = len(spec.grid)
    alloc = np.zeros((n, n))
    price = np.zeros((n, n))
    for k, b_max in enumerate(spec.grid.bids):
        for j, bid in enumerate(spec.grid.bids):
            a, p = allocation_price(spec.auction_type, bid, b_max, spec.ties_win)
            alloc[k, j] = a
            price[k, j] = a * p
    alloc.setflags(write=False)
    price.setflags(write=False)
    return alloc, price


class RoundBatch:
    """A block of i.i.d. rounds stored as (competing-bid index, value) pairs.

    Indexing materializes an :class:`AuctionRound`; the alloc/price vectors are
    shared read-only rows of the outcome tables.
    """

    def __init__(self, spec: InstanceSpec, b_max_index: np.ndarray, values: np.ndarray):
        self.spec = spec
        self.b_max_index = np.asarray(b_max_index, dtype=np.int64)
        self.values = np.asarray(values, dtype=float)
        self.alloc_table, self.price_table = outcome_tables(spec)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> AuctionRound:
        k = int(self.b_max_index[i])
        return AuctionRound(
            value=float(self.values[i]),
            alloc=self.alloc_table[k],
            price_paid=self.price_table[k],
            b_max_drawn=self.spec.grid.bids[k],
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def draw_rounds(
    spec: InstanceSpec,
    rng: np.random.Generator,
    n: int,
    value_rng: np.random.Generator | None = None,
) -> RoundBatch:
    """Draw ``n`` rounds: all competing bids first, then all values.

    With a separate ``value_rng`` each stream is consumed one draw per round,
    so the first ``m`` rounds of a length-``n`` batch do not depend on ``n``.
    """
    b_max_index = rng.choice(len(spec.grid), size=n, p=np.array(spec.competing_pmf))
    a = VALUE_CONCENTRATION * spec.v_bar
    values = (value_rng or rng).beta(a, VALUE_CONCENTRATION - a, size=n)
    return RoundBatch(spec, b_max_index, values)


def sample_round(spec: InstanceSpec, rng: np.random.Generator) -> AuctionRound:
    return draw_rounds(spec, rng, 1)[0]


def true_moments(spec: InstanceSpec) -> GroundTruthMoments:
    """Exact expectations by summation over the competing-bid pmf."""
    alloc, price = outcome_tables(spec)
    pmf = np.array(spec.competing_pmf)
    return GroundTruthMoments(
        x_bar=_frozen(pmf @ alloc), q_bar=_frozen(pmf @ price), v_bar=float(spec.v_bar)
    )


# Mode at 1/3; bids 2/3 and 1 both reach the benchmark V = 0.4 with both constraints tight.
TABLE1_PMF = (0.1, 0.6, 0.3, 0.0)


def table1_instance(horizon: int = 200_000) -> InstanceSpec:
    return InstanceSpec(
        grid=BidGrid.uniform(4),
        auction_type=SECOND_PRICE,
        competing_pmf=TABLE1_PMF,
        v_bar=0.4,
        rho=0.4,
        horizon=horizon,
    )


def appendix_e_instance(horizon: int = 200_000) -> InstanceSpec:
    """Point-mass competitor at 0.5 with v_bar = 0.5: V = 0.5 but zero Slater slack."""
    return InstanceSpec(
        grid=BidGrid.uniform(5),
        auction_type=SECOND_PRICE,
        competing_pmf=(0.0, 0.0, 1.0, 0.0, 0.0),
        v_bar=0.5,
        rho=0.6,
        horizon=horizon,
    )


def point_mass_pmf(grid: BidGrid, bid: float) -> tuple[float, ...]:
    k = grid.index(bid)
    return tuple(1.0 if j == k else 0.0 for j in range(len(grid)))


def make_instance(
    bids: Sequence[float] | int,
    auction_type: str,
    competing_pmf: Sequence[float],
    v_bar: float,
    rho: float,
    horizon: int,
    ties_win: bool = True,
) -> InstanceSpec:
    grid = BidGrid.uniform(bids) if isinstance(bids, int) else BidGrid(tuple(bids))
    return InstanceSpec(grid, auction_type, tuple(competing_pmf), v_bar, rho, horizon, ties_win)
