"""Simulation config: an INI-style document with ``[run]``, ``[game]``, ``[network]``, ``[output]``.

An empty document yields the target-assignment defaults (5 agents, 5 targets,
10 signals of variance 0.5, 50 steps, undirected ring, self weight 0.75).
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .dynamics import BELIEF_TIMINGS, ENGINES, INIT_MODES, TIE_BREAKS

NETWORKS = ("ring", "star", "complete", "file")


class ConfigError(ValueError):
    """Invalid or unknown configuration value; the message names the field."""


@dataclass(frozen=True)
class SimConfig:
    # [run]
    engine: str = "dfp"
    t_final: int = 50
    seed: int = 0
    seeds: tuple[int, ...] = ()
    replications: int = 20
    stride: int = 1
    tie_break: str = "lowest-index"
    init: str = "uniform-prior"
    belief_timing: str = "post"
    # [game]
    source: str = "builtin:target-assignment"
    n_agents: int = 5
    n_actions: int = 5
    noise_sigma: float = 0.5
    signal_horizon: int = 10
    position_var: float = 0.1
    refine_beliefs: bool = False
    fit_potential: bool = False
    # [network]
    network: str = "ring"
    self_weight: float = 0.75
    directed: bool = False
    network_file: str = ""
    # [output]
    trace: str = "trace.csv"
    out_dir: str = "out"
    format: str = "csv"
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def replication_seeds(self) -> list[int]:
        if self.seeds:
            return list(self.seeds[: self.replications])
        return [self.seed + k for k in range(self.replications)]

    def resolved(self) -> dict:
        d = asdict(self)
        d.pop("warnings")
        d["seeds"] = list(self.seeds)
        return d


# section -> {key in file: field name}
SECTIONS = {
    "run": {
        "engine": "engine",
        "t_final": "t_final",
        "seed": "seed",
        "seeds": "seeds",
        "replications": "replications",
        "stride": "stride",
        "tie_break": "tie_break",
        "init": "init",
        "belief_timing": "belief_timing",
    },
    "game": {
        "source": "source",
        "n_agents": "n_agents",
        "n_actions": "n_actions",
        "n_targets": "n_actions",
        "noise_sigma": "noise_sigma",
        "signal_horizon": "signal_horizon",
        "position_var": "position_var",
        "refine_beliefs": "refine_beliefs",
        "fit_potential": "fit_potential",
    },
    "network": {
        "kind": "network",
        "self_weight": "self_weight",
        "directed": "directed",
        "file": "network_file",
    },
    "output": {
        "trace": "trace",
        "dir": "out_dir",
        "format": "format",
    },
}

_TYPES = {f.name: f.type for f in fields(SimConfig)}


def _convert(name: str, raw):
    kind = _TYPES[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "tuple[int, ...]":
            if isinstance(raw, (list, tuple)):
                return tuple(int(s) for s in raw)
            return tuple(int(s) for s in str(raw).replace(",", " ").split())
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind}") from None


def validate(cfg: SimConfig) -> SimConfig:
    def bad(name, msg):
        raise ConfigError(f"{name}: {msg}")

    choices = {
        "engine": ENGINES,
        "tie_break": TIE_BREAKS,
        "init": INIT_MODES,
        "belief_timing": BELIEF_TIMINGS,
        "network": NETWORKS,
        "format": ("csv", "json"),
    }
    for name, allowed in choices.items():
        if getattr(cfg, name) not in allowed:
            bad(name, f"{getattr(cfg, name)!r} not in {allowed}")
    if cfg.t_final < 1:
        bad("t_final", "must be >= 1")
    if cfg.replications < 1:
        bad("replications", "must be >= 1")
    if cfg.stride < 1:
        bad("stride", "must be >= 1")
    if cfg.n_agents < 2:
        bad("n_agents", "must be >= 2")
    if cfg.n_actions < 2:
        bad("n_actions", "must be >= 2")
    if not 0.0 < cfg.self_weight <= 1.0:
        bad("self_weight", "must be in (0, 1]")
    if cfg.noise_sigma < 0:
        bad("noise_sigma", "must be >= 0")
    if cfg.position_var < 0:
        bad("position_var", "must be >= 0")
    if cfg.signal_horizon < 1:
        bad("signal_horizon", "must be >= 1")
    if cfg.seeds:
        if len(cfg.seeds) < cfg.replications:
            bad("seeds", f"{len(cfg.seeds)} seeds for {cfg.replications} replications")
        if len(set(cfg.seeds)) != len(cfg.seeds):
            bad("seeds", "must be distinct")
    src = cfg.source
    if src.startswith("file:"):
        if not Path(src[5:]).is_file():
            bad("source", f"game file {src[5:]!r} not found")
    elif src not in ("builtin:target-assignment", "builtin:coordination"):
        bad("source", f"{src!r} is not builtin:target-assignment, builtin:coordination or file:<path>")
    if cfg.network == "file":
        if not cfg.network_file:
            bad("network_file", "network kind 'file' needs a file")
        if not Path(cfg.network_file).is_file():
            bad("network_file", f"{cfg.network_file!r} not found")
    return cfg


def parse_config(text: str) -> SimConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    values, warnings = {}, []
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"[{section}]: unknown section")
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
            name = SECTIONS[section][key]
            values[name] = _convert(name, raw)
    if values.get("engine") == "fp" and parser.has_section("network"):
        warnings.append("engine=fp ignores the [network] section")
    return validate(SimConfig(**values, warnings=tuple(warnings)))


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def apply_overrides(cfg: SimConfig, overrides: dict) -> SimConfig:
    """Command-line values win over file values; ``None`` means not given."""
    given = {k: _convert(k, v) for k, v in overrides.items() if v is not None}
    warnings = list(cfg.warnings)
    if given.get("engine", cfg.engine) == "fp" and "network" in given:
        warnings.append("engine=fp ignores the network")
    return validate(replace(cfg, **given, warnings=tuple(warnings)))
