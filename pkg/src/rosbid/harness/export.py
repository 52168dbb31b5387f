"""CSV and JSON export of traces and summaries.

Numbers are written with 12 significant digits and LF line endings, so two
runs of the same experiment produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .runner import (
    LIN_SUMMARY_FIELDS,
    SUMMARY_FIELDS,
    ExperimentResult,
    LinSummaryRow,
    RunResult,
    SummaryRow,
)

TRACE_FIELDS = (
    "seed", "algo", "T", "t", "bid", "won", "value",
    "reward", "spend", "cum_reward", "cum_spend", "cum_value",
)
RUN_FIELDS = (
    "algo", "T", "seed", "benchmark", "regret", "exp_regret", "cum_reward", "cum_spend",
    "cum_value", "budget_viol", "ros_viol", "budget_viol_plus", "ros_viol_plus", "coverage",
)
LIN_RUN_FIELDS = ("algo", "T", "seed", "regret", "regret_plus", "violation", "fallback_rounds")


def fmt(x) -> str:
    if isinstance(x, (bool, int)) or x is None:
        return "" if x is None else str(int(x))
    return format(float(x), ".12g")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _open(path: Path):
    return open(path, "w", newline="", encoding="utf-8")


def write_trace_csv(runs: list[RunResult], path: Path, stride: int = 1) -> None:
    """Per-round rows for every run carrying a trace.

    With ``stride > 1`` only every ``stride``-th round and the final round are
    written; cumulative columns still cover all rounds.
    """
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(TRACE_FIELDS)
        for r in sorted(runs, key=lambda r: r.key):
            tr = r.trace
            if tr is None:
                continue
            n = len(tr.bid)
            cr, cs, cv = tr.cum_reward, tr.cum_spend, tr.cum_value
            for i in range(n):
                if stride > 1 and (i + 1) % stride and i != n - 1:
                    continue
                w.writerow((
                    r.seed, r.algo, r.horizon, i + 1, fmt(tr.bid[i]), int(tr.won[i]),
                    fmt(tr.value_observed[i]), fmt(tr.reward[i]), fmt(tr.spend[i]),
                    fmt(cr[i]), fmt(cs[i]), fmt(cv[i]),
                ))


def write_summary_csv(rows: list[SummaryRow], path: Path) -> None:
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(SUMMARY_FIELDS)
        for row in rows:
            w.writerow([row.algo, row.T] + [fmt(getattr(row, f)) for f in SUMMARY_FIELDS[2:]])


def read_summary_csv(path: Path) -> list[SummaryRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_FIELDS:
            raise ValueError(f"{path}: unexpected summary header {reader.fieldnames}")
        return [
            SummaryRow(d["algo"], int(d["T"]), *(float(d[f]) for f in SUMMARY_FIELDS[2:]))
            for d in reader
        ]


def write_runs_csv(runs: list[RunResult], path: Path) -> None:
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(RUN_FIELDS)
        for r in sorted(runs, key=lambda r: r.key):
            w.writerow((
                r.algo, r.horizon, r.seed, fmt(r.benchmark), fmt(r.regret), fmt(r.exp_regret),
                fmt(r.cum_reward), fmt(r.cum_spend), fmt(r.cum_value), fmt(r.budget_viol),
                fmt(r.ros_viol), fmt(max(r.budget_viol, 0.0)), fmt(max(r.ros_viol, 0.0)),
                fmt(r.coverage),
            ))


def write_lin_csvs(result: ExperimentResult, out: Path) -> None:
    with _open(out / "linbandit_runs.csv") as fh:
        w = _writer(fh)
        w.writerow(LIN_RUN_FIELDS)
        for r in result.lin_runs:
            w.writerow(("lin_bandit", r.horizon, r.seed, fmt(r.regret), fmt(r.regret_plus),
                        fmt(r.violation), r.fallback_rounds))
    with _open(out / "linbandit_summary.csv") as fh:
        w = _writer(fh)
        w.writerow(LIN_SUMMARY_FIELDS)
        for row in result.lin_summary:
            w.writerow([row.algo, row.T] + [fmt(getattr(row, f)) for f in LIN_SUMMARY_FIELDS[2:]])


def read_lin_summary_csv(path: Path) -> list[LinSummaryRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            LinSummaryRow(
                d["algo"], int(d["T"]),
                *(float(d[f]) for f in LIN_SUMMARY_FIELDS[2:-1]), int(d["fallback_rounds"]),
            )
            for d in csv.DictReader(fh)
        ]


def write_summary_json(result: ExperimentResult, path: Path) -> None:
    doc = {
        "summary": [
            {f: (getattr(row, f) if f in ("algo", "T") else float(fmt(getattr(row, f))))
             for f in SUMMARY_FIELDS}
            for row in result.summary
        ],
    }
    if result.benchmark is not None:
        doc["benchmark"] = {
            "V": float(fmt(result.benchmark.value)),
            "w": [float(fmt(x)) for x in result.benchmark.mixture],
        }
    with _open(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def export_csv(result: ExperimentResult, out_dir: Path | str, trace: bool = True, stride: int = 1) -> list[Path]:
    """Write all output files into ``out_dir``; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if trace:
        write_trace_csv(result.runs, out / "trace.csv", stride)
        written.append(out / "trace.csv")
    write_summary_csv(result.summary, out / "summary.csv")
    write_runs_csv(result.runs, out / "runs.csv")
    write_summary_json(result, out / "summary.json")
    written += [out / "summary.csv", out / "runs.csv", out / "summary.json"]
    if result.lin_runs:
        write_lin_csvs(result, out)
        written += [out / "linbandit_runs.csv", out / "linbandit_summary.csv"]
    return written
