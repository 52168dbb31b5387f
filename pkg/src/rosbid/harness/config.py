"""Experiment configuration files.

INI-style key/value text read with :mod:`configparser`; a key is addressed as
``section.key`` (``instance.rho``, ``baselines.cap``)::

    [experiment]
    algorithms = ucb_ros, pd_exp3p1, exp_ix
    horizons = 20000, 80000
    seeds = 0-19
    output_dir = results/table1

    [instance]
    preset = table1      # or appendix_e; explicit keys below override it
    rho = 0.4

Recognized sections: experiment, instance, baselines, linbandit, output.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..auction_env import (
    AUCTION_TYPES,
    BidGrid,
    InstanceSpec,
    appendix_e_instance,
    table1_instance,
)
from ..baselines import BaselineParams

ALGORITHMS = ("ucb_ros", "pd_exp3p1", "exp_ix", "lin_bandit")
BIDDING_ALGORITHMS = ALGORITHMS[:3]
PRESETS = {"table1": table1_instance, "appendix_e": appendix_e_instance}

_KNOWN = {
    "experiment": {"algorithms", "horizons", "seeds", "output_dir", "threads"},
    "instance": {"preset", "bids", "auction_type", "competing_pmf", "v_bar", "rho", "ties_win"},
    "baselines": {"cap", "dual_lr", "delta", "eta", "gamma_ix"},
    "linbandit": {"dim", "n_actions", "constraints", "margin", "lam", "delta", "instance_seed"},
    "output": {"trace", "trace_stride"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class LinBanditParams:
    dim: int = 2
    n_actions: int = 10
    constraints: int = 1
    margin: float = 0.1
    lam: float = 1.0
    delta: float | None = None
    instance_seed: int | None = None  # None: a new instance per seed


@dataclass(frozen=True)
class ExperimentConfig:
    instance: InstanceSpec
    algorithms: tuple[str, ...]
    horizons: tuple[int, ...]
    seeds: tuple[int, ...]
    output_dir: Path
    baselines: BaselineParams = field(default_factory=BaselineParams)
    linbandit: LinBanditParams = field(default_factory=LinBanditParams)
    trace: bool = True
    trace_stride: int = 1
    threads: int = 1
    preset: str | None = None

    def with_seed_offset(self, offset: int) -> "ExperimentConfig":
        return replace(self, seeds=tuple(s + offset for s in self.seeds))


def _floats(key: str, raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{key}: expected a list of numbers, got {raw!r}") from None


def _number(key: str, raw: str, kind=float):
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from None
    return value


def _bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _int_list(key: str, raw: str) -> tuple[int, ...]:
    """Comma/space separated integers; ``a-b`` is an inclusive range."""
    out: list[int] = []
    for tok in raw.replace(",", " ").split():
        try:
            if "-" in tok[1:]:
                lo, hi = tok.split("-", 1) if not tok.startswith("-") else (tok, tok)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(float(tok)) if "e" in tok.lower() else int(tok))
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {tok!r} as an integer or range") from None
    return tuple(out)


def _instance(sec) -> tuple[InstanceSpec, str | None]:
    preset = sec.get("preset") if sec is not None else None
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"instance.preset: unknown preset {preset!r} (choose from {sorted(PRESETS)})")
        base = PRESETS[preset](1)
        fields = dict(
            grid=base.grid, auction_type=base.auction_type, competing_pmf=base.competing_pmf,
            v_bar=base.v_bar, rho=base.rho, ties_win=base.ties_win,
        )
    else:
        fields = {}
    if sec is not None:
        if "bids" in sec:
            raw = sec["bids"].strip()
            try:
                fields["grid"] = BidGrid.uniform(int(raw)) if raw.isdigit() else BidGrid(_floats("instance.bids", raw))
            except ValueError as exc:
                raise ConfigError(f"instance.bids: {exc}") from None
        if "auction_type" in sec:
            kind = sec["auction_type"].strip()
            if kind not in AUCTION_TYPES:
                raise ConfigError(f"instance.auction_type: must be one of {AUCTION_TYPES}, got {kind!r}")
            fields["auction_type"] = kind
        if "competing_pmf" in sec:
            fields["competing_pmf"] = _floats("instance.competing_pmf", sec["competing_pmf"])
        for key in ("v_bar", "rho"):
            if key in sec:
                fields[key] = _number(f"instance.{key}", sec[key])
        if "ties_win" in sec:
            fields["ties_win"] = _bool("instance.ties_win", sec["ties_win"])
    missing = {"grid", "auction_type", "competing_pmf", "v_bar", "rho"} - fields.keys()
    if missing:
        names = ", ".join(f"instance.{m if m != 'grid' else 'bids'}" for m in sorted(missing))
        raise ConfigError(f"missing keys (or set instance.preset): {names}")
    try:
        spec = InstanceSpec(horizon=1, **fields)
    except ValueError as exc:
        raise ConfigError(f"instance: {exc}") from None
    return spec, preset


def parse_config(text: str, base_dir: Path | str = ".") -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for name in parser.sections():
        if name not in _KNOWN:
            raise ConfigError(f"unknown section [{name}]")
        for key in parser[name]:
            if key not in _KNOWN[name]:
                raise ConfigError(f"{name}.{key}: unknown key")
    if not parser.has_section("experiment"):
        raise ConfigError("missing section [experiment]")
    exp = parser["experiment"]
    for key in ("algorithms", "horizons", "seeds"):
        if key not in exp:
            raise ConfigError(f"experiment.{key}: required")

    algorithms = tuple(a.strip() for a in exp["algorithms"].replace(",", " ").split())
    if not algorithms:
        raise ConfigError("experiment.algorithms: must be non-empty")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(f"experiment.algorithms: unknown algorithm {a!r} (choose from {ALGORITHMS})")
    algorithms = tuple(a for a in ALGORITHMS if a in algorithms)
    horizons = tuple(sorted(set(_int_list("experiment.horizons", exp["horizons"]))))
    if not horizons or min(horizons) < 1:
        raise ConfigError("experiment.horizons: need at least one positive horizon")
    seeds = tuple(sorted(set(_int_list("experiment.seeds", exp["seeds"]))))
    if not seeds:
        raise ConfigError("experiment.seeds: must be non-empty")
    output_dir = Path(base_dir) / exp.get("output_dir", "results")
    threads = _number("experiment.threads", exp.get("threads", "1"), int)
    if threads < 1:
        raise ConfigError("experiment.threads: must be >= 1")

    needs_instance = any(a in BIDDING_ALGORITHMS for a in algorithms)
    if needs_instance or parser.has_section("instance"):
        spec, preset = _instance(parser["instance"] if parser.has_section("instance") else None)
    else:
        spec, preset = table1_instance(1), "table1"

    bl = {}
    if parser.has_section("baselines"):
        for key in parser["baselines"]:
            bl[key] = _number(f"baselines.{key}", parser["baselines"][key])
            if bl[key] < 0:
                raise ConfigError(f"baselines.{key}: must be non-negative")
    lb = {}
    if parser.has_section("linbandit"):
        sec = parser["linbandit"]
        for key in ("dim", "n_actions", "constraints", "instance_seed"):
            if key in sec:
                lb[key] = _number(f"linbandit.{key}", sec[key], int)
        for key in ("margin", "lam", "delta"):
            if key in sec:
                lb[key] = _number(f"linbandit.{key}", sec[key])
        for key in ("dim", "n_actions", "constraints"):
            if key in lb and lb[key] < 1:
                raise ConfigError(f"linbandit.{key}: must be >= 1")
    trace, stride = True, 1
    if parser.has_section("output"):
        sec = parser["output"]
        if "trace" in sec:
            trace = _bool("output.trace", sec["trace"])
        if "trace_stride" in sec:
            stride = _number("output.trace_stride", sec["trace_stride"], int)
            if stride < 1:
                raise ConfigError("output.trace_stride: must be >= 1")

    return ExperimentConfig(
        instance=spec,
        algorithms=algorithms,
        horizons=horizons,
        seeds=seeds,
        output_dir=output_dir,
        baselines=BaselineParams(**bl),
        linbandit=LinBanditParams(**lb),
        trace=trace,
        trace_stride=stride,
        threads=threads,
        preset=preset,
    )


def load_config(path: Path | str) -> ExperimentConfig:
    """Read a config file; a missing or unreadable file is a :class:`ConfigError`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror or exc}") from None
    return parse_config(text, base_dir=path.parent)
