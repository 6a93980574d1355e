"""Target-assignment experiment: agents near the origin, targets on the unit circle.

Each agent only gets paid for a target nobody else picked, and the payment is
the inverse of its believed distance to that target.  Beliefs about target
positions come from averaging noisy private signals.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dynamics import (
    RunConfig,
    TraceRecord,
    attach_distance_to_ne,
    distance_to_profile,
    estimation_errors,
    nearest_pure_profile,
    run,
)
from .game import Game, enumerate_pure_ne, psi
from .network import WeightRule, complete, ring, star

MIN_DISTANCE = 1e-6


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TargetScenario:
    agent_positions: np.ndarray  # (N, 2)
    target_positions: np.ndarray  # (K, 2)
    noise_sigma: float = 0.5
    signal_horizon: int = 10
    t_final: int = 50

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.signal_horizon < 1:
            raise ValueError("signal_horizon must be >= 1")

    @property
    def n_agents(self) -> int:
        return len(self.agent_positions)

    @property
    def n_targets(self) -> int:
        return len(self.target_positions)


@dataclass(frozen=True, eq=False)
class BeliefSet:
    estimates: np.ndarray  # (N, K, 2): agent i's estimate of target k


def circle_targets(n_targets: int) -> np.ndarray:
    angles = 2 * np.pi * np.arange(n_targets) / n_targets
    return np.column_stack([np.cos(angles), np.sin(angles)])


def sample_scenario(
    rng: np.random.Generator,
    n_agents: int = 5,
    n_targets: int = 5,
    position_var: float = 0.1,
    noise_sigma: float = 0.5,
    signal_horizon: int = 10,
    t_final: int = 50,
) -> TargetScenario:
    """Agent coordinates are i.i.d. normal with variance ``position_var`` per axis."""
    agents = rng.normal(0.0, np.sqrt(position_var), size=(n_agents, 2))
    return TargetScenario(agents, circle_targets(n_targets), noise_sigma, signal_horizon, t_final)


def draw_signals(scenario: TargetScenario, rng: np.random.Generator) -> np.ndarray:
    """Signals of shape ``(N, tau, K, 2)``; ``noise_sigma`` is the variance per coordinate."""
    n, k, tau = scenario.n_agents, scenario.n_targets, scenario.signal_horizon
    noise = rng.normal(0.0, 1.0, size=(n, tau, k, 2)) * np.sqrt(scenario.noise_sigma)
    return scenario.target_positions[None, None] + noise


def form_beliefs(scenario: TargetScenario, rng: np.random.Generator, n_signals: int | None = None) -> BeliefSet:
    """Average each agent's first ``n_signals`` signals (all of them by default)."""
    signals = draw_signals(scenario, rng)
    m = scenario.signal_horizon if n_signals is None else n_signals
    return BeliefSet(signals[:, :m].mean(axis=1))


def exact_beliefs(scenario: TargetScenario) -> BeliefSet:
    return BeliefSet(np.broadcast_to(scenario.target_positions, (scenario.n_agents,) + scenario.target_positions.shape).copy())


def believed_distances(scenario: TargetScenario, beliefs: BeliefSet) -> np.ndarray:
    d = np.linalg.norm(beliefs.estimates - scenario.agent_positions[:, None, :], axis=2)
    return np.maximum(d, MIN_DISTANCE)


def build_assignment_game(scenario: TargetScenario, beliefs: BeliefSet) -> Game:
    """``u_i(a) = 1/d_i[a_i]`` if no other agent picked ``a_i``, else 0."""
    n, k = scenario.n_agents, scenario.n_targets
    d = believed_distances(scenario, beliefs)
    idx = np.indices((k,) * n)
    u = np.zeros((n,) + (k,) * n)
    for i in range(n):
        contested = np.zeros((k,) * n, dtype=bool)
        for j in range(n):
            if j != i:
                contested |= idx[j] == idx[i]
        u[i] = np.where(contested, 0.0, 1.0 / d[i][idx[i]])
    return Game(u)


def true_game(scenario: TargetScenario) -> Game:
    return build_assignment_game(scenario, exact_beliefs(scenario))


def is_assignment(actions) -> bool:
    return len(set(actions)) == len(actions)


def metrics(trace: list[TraceRecord], scenario: TargetScenario, reference_ne) -> list[dict]:
    """Per-step mean estimation error and mean distance to ``reference_ne``."""
    if reference_ne is None:
        raise ConfigurationError("distance to equilibrium needs a reference pure NE")
    if len(reference_ne) != scenario.n_agents:
        raise ConfigurationError(f"reference NE has {len(reference_ne)} entries for {scenario.n_agents} agents")
    out = []
    for rec in trace:
        if rec.freqs is None or rec.copies is None:
            raise ConfigurationError("trace was recorded without state")
        err, _ = estimation_errors(rec.freqs, rec.copies)
        out.append(
            {"t": rec.t, "estimation_error": err, "dist_to_ne": distance_to_profile(rec.freqs, reference_ne)}
        )
    return out


@dataclass(frozen=True)
class BenchmarkConfig:
    n_agents: int = 5
    n_targets: int = 5
    position_var: float = 0.1
    noise_sigma: float = 0.5
    signal_horizon: int = 10
    t_final: int = 50
    network: str = "ring"
    directed: bool = False
    self_weight: float = 0.75
    engine: str = "dfp"
    tie_break: str = "lowest-index"
    belief_timing: str = "post"
    # beliefs fixed before play, or refined with each signal while t <= tau
    refine_beliefs: bool = False
    init: str = "uniform-prior"
    stride: int = 1


@dataclass
class Replication:
    seed: int
    initial_actions: list[int]
    final_actions: list[int]
    ne_hit: bool
    one_to_one: bool
    reference_ne: list[int]
    estimation_error: list[float]
    dist_to_ne: list[float]
    psi_true: float


@dataclass
class Summary:
    config: dict
    seeds: list[int]
    ne_hit_count: int
    mean_estimation_error: list[float]
    mean_dist_to_ne: list[float]
    replications: list[Replication] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def make_schedule(kind: str, n_agents: int, directed: bool = False):
    if kind == "ring":
        return ring(n_agents, directed)
    if kind == "star":
        return star(n_agents)
    if kind == "complete":
        return complete(n_agents)
    raise ConfigurationError(f"benchmark network must be ring, star or complete, not {kind!r}")


def replication_streams(seed: int):
    """Independent generators for geometry, signals, and the learning run."""
    geo, sig, play = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(geo), np.random.default_rng(sig), int(play.generate_state(1)[0])


def run_single(
    cfg: BenchmarkConfig, seed: int, observers=(), observer_factory=None
) -> tuple[Replication, list[TraceRecord], RunConfig]:
    """One replication.  ``observer_factory(run_config)`` may add observers that need the config."""
    geo_rng, sig_rng, run_seed = replication_streams(seed)
    scenario = sample_scenario(
        geo_rng, cfg.n_agents, cfg.n_targets, cfg.position_var, cfg.noise_sigma, cfg.signal_horizon, cfg.t_final
    )
    signals = draw_signals(scenario, sig_rng)
    tau = scenario.signal_horizon

    def game_from(m: int) -> Game:
        return build_assignment_game(scenario, BeliefSet(signals[:, :m].mean(axis=1)))

    game = game_from(tau)
    game_at = None
    if cfg.refine_beliefs:
        early = {m: game_from(m) for m in range(1, tau)}
        game_at = lambda t: early.get(t, game)  # noqa: E731
    config = RunConfig(
        game=game,
        schedule=make_schedule(cfg.network, cfg.n_agents, cfg.directed),
        weight_rule=WeightRule(cfg.self_weight),
        t_final=cfg.t_final,
        seed=run_seed,
        tie_break=cfg.tie_break,
        init=cfg.init,
        engine=cfg.engine,
        belief_timing=cfg.belief_timing,
        stride=cfg.stride,
        game_at=game_at,
    )
    observers = list(observers)
    if observer_factory is not None:
        observers.extend(observer_factory(config))
    trace = run(config, observers)
    reference = true_game(scenario)
    final = trace[-1]
    candidates = enumerate_pure_ne(reference)
    ref_ne = nearest_pure_profile(final.freqs, candidates)
    attach_distance_to_ne(trace, ref_ne)
    final_vertex = np.eye(cfg.n_targets)[list(final.actions)]
    psi_true = psi(reference, final_vertex)
    rep = Replication(
        seed=seed,
        initial_actions=list(trace[0].actions),
        final_actions=list(final.actions),
        ne_hit=bool(psi_true >= 0.0),
        one_to_one=is_assignment(final.actions),
        reference_ne=list(ref_ne),
        estimation_error=[r.estimation_error for r in trace],
        dist_to_ne=[r.dist_to_ne for r in trace],
        psi_true=psi_true,
    )
    return rep, trace, config


def _replicate_one(args) -> Replication:
    cfg, seed = args
    return run_single(cfg, seed)[0]


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("NEARPLAY_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_replications(
    base_config: BenchmarkConfig,
    n_reps: int = 20,
    seeds=None,
    workers: int | None = None,
) -> Summary:
    """Run independent replications and average their metric curves.

    ``seeds`` defaults to ``0 .. n_reps - 1``.  Results are in seed order and do
    not depend on the number of workers.
    """
    seeds = list(range(n_reps)) if seeds is None else [int(s) for s in seeds][:n_reps]
    if len(seeds) < n_reps:
        raise ConfigurationError(f"need {n_reps} seeds, got {len(seeds)}")
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError("replication seeds must be distinct")
    jobs = [(base_config, s) for s in seeds]
    n_workers = min(worker_count(workers), len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            reps = list(pool.map(_replicate_one, jobs))
    else:
        reps = [_replicate_one(j) for j in jobs]
    return Summary(
        config=asdict(base_config),
        seeds=seeds,
        ne_hit_count=sum(r.ne_hit for r in reps),
        mean_estimation_error=np.mean([r.estimation_error for r in reps], axis=0).tolist(),
        mean_dist_to_ne=np.mean([r.dist_to_ne for r in reps], axis=0).tolist(),
        replications=reps,
    )


def with_network(cfg: BenchmarkConfig, network: str) -> BenchmarkConfig:
    return replace(cfg, network=network)
