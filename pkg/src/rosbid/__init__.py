"""Learning to bid under return-on-spend and budget constraints.

Modules: :mod:`auction_env` (synthetic instances), :mod:`benchmark_lp` (the
bidding LP), :mod:`ucb_ros` (the optimistic bidder), :mod:`baselines`
(primal-dual comparisons), :mod:`linbandit` (constrained linear bandit) and
:mod:`harness` (experiments, export, charts, CLI).
"""

__version__ = "0.1.0"
