"""Command-line entry point: ``nearplay run|replicate|validate-network|analyze-game``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import benchmark as bm
from .config import ConfigError, SimConfig, apply_overrides, load_config, validate
from .dynamics import RunConfig, attach_distance_to_ne, nearest_pure_profile, run
from .export import atomic_write, matrix_csv, write_json, write_trace
from .game import (
    CapacityError,
    Game,
    coordination_game,
    coordination_potential,
    enumerate_pure_ne,
    fit_closest_potential,
    is_epsilon_ne,
    mpd,
    psi,
)
from .network import WeightRule, load_schedule, validate_connectivity

log = logging.getLogger("nearplay")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _schedule(cfg: SimConfig, n_agents: int):
    if cfg.network == "file":
        return load_schedule(cfg.network_file, n_agents)
    return bm.make_schedule(cfg.network, n_agents, cfg.directed)


def _build_game(cfg: SimConfig):
    """Return ``(game, potential)`` for a coordination or file-backed source."""
    if cfg.source == "builtin:coordination":
        return coordination_game(cfg.n_agents, cfg.n_actions), coordination_potential(cfg.n_agents, cfg.n_actions)
    return Game.load(cfg.source[5:]), None


def cmd_run(cfg: SimConfig) -> int:
    if cfg.source == "builtin:target-assignment":
        if cfg.fit_potential:
            log.warning("fit_potential is not available for the target-assignment source")
        rep, trace, _ = bm.run_single(_benchmark_config(cfg), cfg.seed)
        log.info("final actions %s, pure NE of true game: %s", rep.final_actions, rep.ne_hit)
    else:
        game, potential = _build_game(cfg)
        if cfg.fit_potential and potential is None:
            potential = fit_closest_potential(game).potential
        rc = RunConfig(
            game=game,
            schedule=_schedule(cfg, game.n_agents),
            weight_rule=WeightRule(cfg.self_weight),
            t_final=cfg.t_final,
            seed=cfg.seed,
            tie_break=cfg.tie_break,
            init=cfg.init,
            engine=cfg.engine,
            belief_timing=cfg.belief_timing,
            stride=cfg.stride,
            potential=potential,
        )
        trace = run(rc)
        try:
            ref = nearest_pure_profile(trace[-1].freqs, enumerate_pure_ne(game))
        except CapacityError:
            ref = None
        if ref is not None:
            attach_distance_to_ne(trace, ref)
    write_trace(cfg.trace, trace, cfg.resolved(), cfg.format)
    print(json.dumps({"trace": cfg.trace, "steps": len(trace), "final_actions": list(trace[-1].actions)}))
    return EXIT_OK


def _benchmark_config(cfg: SimConfig) -> bm.BenchmarkConfig:
    if cfg.network == "file":
        raise ConfigError("network: the target-assignment benchmark supports ring, star or complete")
    return bm.BenchmarkConfig(
        n_agents=cfg.n_agents,
        n_targets=cfg.n_actions,
        position_var=cfg.position_var,
        noise_sigma=cfg.noise_sigma,
        signal_horizon=cfg.signal_horizon,
        t_final=cfg.t_final,
        network=cfg.network,
        directed=cfg.directed,
        self_weight=cfg.self_weight,
        engine=cfg.engine,
        tie_break=cfg.tie_break,
        belief_timing=cfg.belief_timing,
        refine_beliefs=cfg.refine_beliefs,
        init=cfg.init,
        stride=cfg.stride,
    )


def cmd_replicate(cfg: SimConfig) -> int:
    if cfg.source != "builtin:target-assignment":
        raise ConfigError("source: replicate runs the builtin:target-assignment experiment only")
    summary = bm.run_replications(_benchmark_config(cfg), cfg.replications, cfg.replication_seeds())
    out = Path(cfg.out_dir)
    doc = summary.to_dict()
    doc["resolved_config"] = cfg.resolved()
    seeds = summary.seeds
    reps = summary.replications
    atomic_write(out / "estimation_error.csv", matrix_csv([r.estimation_error for r in reps], seeds, cfg.resolved()))
    atomic_write(out / "dist_to_ne.csv", matrix_csv([r.dist_to_ne for r in reps], seeds, cfg.resolved()))
    write_json(out / "summary.json", doc)
    print(json.dumps({"ne_hit_count": summary.ne_hit_count, "replications": len(reps), "out_dir": str(out)}))
    return EXIT_OK


def cmd_validate_network(cfg: SimConfig, steps: int) -> int:
    schedule = _schedule(cfg, cfg.n_agents)
    report = validate_connectivity(schedule, steps, WeightRule(cfg.self_weight))
    if not report.connected_union:
        log.warning("union graph is not connected")
    if report.t_b is None:
        log.warning("no bounded communication interval within %d steps", steps)
    print(json.dumps({"network": cfg.network, "n_agents": cfg.n_agents, **report.to_dict()}))
    return EXIT_OK


def _parse_profile(text: str, game: Game) -> np.ndarray:
    path = Path(text)
    if path.is_file():
        rows = json.loads(path.read_text(encoding="utf-8"))
    else:
        rows = [[float(x) for x in part.split(",")] for part in text.split(";")]
    return np.asarray(rows, dtype=float)


def cmd_analyze(args) -> int:
    game = Game.load(args.file)
    out = {"n_agents": game.n_agents, "n_actions": game.n_actions}
    if args.mpd:
        out["mpd"] = mpd(game, Game.load(args.mpd))
    if args.psi:
        profile = _parse_profile(args.psi, game)
        out["psi"] = psi(game, profile)
        out["is_epsilon_ne"] = is_epsilon_ne(game, profile, args.eps)
    if args.fit_potential:
        fit = fit_closest_potential(game)
        out["delta"] = fit.delta
        if args.potential_out:
            write_json(args.potential_out, {"shape": list(game.shape), "values": fit.potential.values.reshape(-1).tolist()})
    if args.enumerate_ne:
        out["pure_ne"] = [list(a) for a in enumerate_pure_ne(game, args.eps)]
    print(json.dumps(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nearplay", description="Decentralized fictitious play simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def sim_flags(sp):
        sp.add_argument("--config", help="INI config file; flags override its values")
        sp.add_argument("--engine", choices=["fp", "dfp"])
        sp.add_argument("--game", dest="source", help="builtin:target-assignment, builtin:coordination or file:<path>")
        sp.add_argument("--n-agents", type=int)
        sp.add_argument("--n-actions", type=int)
        sp.add_argument("--network", choices=["ring", "star", "complete", "file"])
        sp.add_argument("--network-file")
        sp.add_argument("--directed", action="store_const", const=True, default=None)
        sp.add_argument("--self-weight", type=float)
        sp.add_argument("--t-final", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--stride", type=int)
        sp.add_argument("--tie-break", choices=["lowest-index", "random"])
        sp.add_argument("--init", choices=["uniform-random", "uniform-prior"])
        sp.add_argument("--belief-timing", choices=["post", "pre"])
        sp.add_argument("--noise-sigma", type=float)
        sp.add_argument("--refine-beliefs", action="store_const", const=True, default=None)
        sp.add_argument("--fit-potential", action="store_const", const=True, default=None)

    r = sub.add_parser("run", help="run one learning trajectory and export its trace")
    sim_flags(r)
    r.add_argument("--out", dest="trace")
    r.add_argument("--format", choices=["csv", "json"])

    rep = sub.add_parser("replicate", help="run the target-assignment replications")
    sim_flags(rep)
    rep.add_argument("--reps", dest="replications", type=int)
    rep.add_argument("--seed-base", dest="seed_base", type=int)
    rep.add_argument("--seeds", help="comma-separated seed list")
    rep.add_argument("--out-dir")

    v = sub.add_parser("validate-network", help="check connectivity and the communication interval")
    sim_flags(v)
    v.add_argument("--steps", type=int, default=100)

    _sub_analyze(sub)
    return p


def _sub_analyze(sub):
    a = sub.add_parser("analyze-game", help="mpd / psi / potential fit / pure NE of a game file")
    a.add_argument("--file", required=True)
    a.add_argument("--mpd", metavar="OTHER", help="second game file")
    a.add_argument("--psi", metavar="PROFILE", help="JSON file or 'p,p;p,p' rows")
    a.add_argument("--eps", type=float, default=0.0)
    a.add_argument("--fit-potential", action="store_true")
    a.add_argument("--potential-out")
    a.add_argument("--enumerate-ne", action="store_true")
    return a


_OVERRIDES = (
    "engine", "source", "n_agents", "n_actions", "network", "network_file", "directed", "self_weight",
    "t_final", "seed", "stride", "tie_break", "init", "belief_timing", "noise_sigma", "refine_beliefs",
    "fit_potential", "trace", "format", "replications", "seeds", "out_dir",
)


def resolve(args) -> SimConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else validate(SimConfig())
    overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
    if getattr(args, "seed_base", None) is not None:
        overrides["seed"] = args.seed_base
    return apply_overrides(cfg, overrides)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="nearplay: %(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        if args.command == "analyze-game":
            return cmd_analyze(args)
        cfg = resolve(args)
        for w in cfg.warnings:
            log.warning(w)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "replicate":
            return cmd_replicate(cfg)
        return cmd_validate_network(cfg, args.steps)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"nearplay: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError, CapacityError) as exc:
        print(f"nearplay: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
