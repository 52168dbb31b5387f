"""Command line entry point.

    rosbid run <config> [--seed-offset N] [--threads N]
    rosbid benchmark <config>
    rosbid chart <summary.csv> <metric> [-o out.svg]

Exit status: 0 on success, 1 for invalid input, 2 for I/O failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..auction_env import true_moments
from ..benchmark_lp import InfeasibleLP, max_slater_slack, slater_slack, solve_benchmark
from .chart import METRICS, render_chart
from .config import ConfigError, load_config
from .export import export_csv, read_summary_csv
from .runner import run_experiment

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def _fmt_vec(w) -> str:
    return "[" + ", ".join(format(float(x), ".6g") for x in w) + "]"


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed_offset:
        config = config.with_seed_offset(args.seed_offset)
    result = run_experiment(config, threads=args.threads)
    paths = export_csv(result, config.output_dir, trace=config.trace, stride=config.trace_stride)
    if result.summary:
        for metric in METRICS:
            p = config.output_dir / f"{metric}.svg"
            render_chart(result.summary, metric, p)
            paths.append(p)
    for row in result.summary:
        print(f"{row.algo:10s} T={row.T:<8d} regret {row.mean_regret:.4g} +- {row.sd_regret:.3g}")
    for row in result.lin_summary:
        print(f"{row.algo:10s} T={row.T:<8d} regret {row.mean_regret:.4g} +- {row.sd_regret:.3g}")
    print(f"wrote {len(paths)} files to {config.output_dir}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    config = load_config(args.config)
    spec = config.instance
    moments = true_moments(spec)
    sol = solve_benchmark(moments, spec.rho)
    kappa = slater_slack(moments, spec.rho, sol.mixture) + 0.0  # no "-0"
    best_kappa, best_w = max_slater_slack(moments, spec.rho)
    print(f"V = {sol.value:.12g}")
    print(f"w*_LP = {_fmt_vec(sol.mixture)}")
    print(f"bids = {_fmt_vec(spec.grid.bids)}")
    print(f"kappa(w*_LP) = {kappa:.6g}")
    print(f"max kappa = {best_kappa:.6g} at w = {_fmt_vec(best_w)}")
    return EXIT_OK


def cmd_chart(args) -> int:
    if args.metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {args.metric!r}")
    rows = read_summary_csv(Path(args.summary))
    if not rows:
        raise ConfigError(f"{args.summary}: summary has no rows")
    out = Path(args.output) if args.output else Path(args.summary).with_name(f"{args.metric}.svg")
    render_chart(rows, args.metric, out)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rosbid", description="Constrained autobidding experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a full experiment")
    r.add_argument("config")
    r.add_argument("--seed-offset", type=int, default=0, help="add N to every seed")
    r.add_argument("--threads", type=int, default=None, help="worker processes (default: config)")
    r.set_defaults(func=cmd_run)
    b = sub.add_parser("benchmark", help="print the benchmark LP value and Slater slack")
    b.add_argument("config")
    b.set_defaults(func=cmd_benchmark)
    c = sub.add_parser("chart", help="render a summary CSV as SVG")
    c.add_argument("summary")
    c.add_argument("metric", help="one of " + ", ".join(METRICS))
    c.add_argument("-o", "--output", default=None)
    c.set_defaults(func=cmd_chart)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, InfeasibleLP, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
