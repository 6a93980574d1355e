"""Centralized and decentralized fictitious play.

With a pure start, step ``t = 1`` plays the initial actions, so ``f_1`` is the
vertex of each agent's initial action and every local copy starts equal to it.
With ``init="uniform-prior"`` every frequency and copy starts uniform and agents
best-respond from ``t = 1``.  Otherwise agents best-respond from ``t = 2``: in decentralized play to their local
copies of the others' empirical frequencies, in centralized play to the true
frequencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .game import Game, PotentialFunction, deviation_payoffs, psi
from .network import NetworkSchedule, WeightRule, complete, weight_matrix

TIE_TOL = 1e-12
ENGINES = ("dfp", "fp")
TIE_BREAKS = ("lowest-index", "random")
BELIEF_TIMINGS = ("post", "pre")
INIT_MODES = ("uniform-random", "uniform-prior")


@dataclass
class DfpState:
    t: int
    freqs: np.ndarray  # (N, K)
    copies: np.ndarray  # (N, N, K); copies[i, j] is agent i's estimate of f_j
    last_actions: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class RunConfig:
    game: Game
    schedule: NetworkSchedule | None = None
    weight_rule: WeightRule = field(default_factory=WeightRule)
    t_final: int = 50
    seed: int = 0
    tie_break: str = "lowest-index"
    init: Sequence[int] | str = "uniform-random"
    engine: str = "dfp"
    # "post": act on copies after this step's exchange; "pre": act on last step's copies
    belief_timing: str = "post"
    stride: int = 1
    potential: PotentialFunction | None = None
    # optional per-step game, e.g. beliefs that sharpen while signals arrive
    game_at: Callable[[int], Game] | None = None

    def __post_init__(self):
        if self.t_final < 1:
            raise ValueError("t_final must be >= 1")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
        if self.belief_timing not in BELIEF_TIMINGS:
            raise ValueError(f"belief_timing must be one of {BELIEF_TIMINGS}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        n = self.game.n_agents
        if self.schedule is None:
            object.__setattr__(self, "schedule", complete(n))
        elif self.schedule.n_agents != n:
            raise ValueError(f"schedule has {self.schedule.n_agents} agents, game has {n}")
        if not isinstance(self.init, str):
            init = tuple(int(a) for a in self.init)
            if len(init) != n or not all(0 <= a < self.game.n_actions for a in init):
                raise ValueError(f"init must list {n} actions in [0, {self.game.n_actions})")
            object.__setattr__(self, "init", init)
        elif self.init not in INIT_MODES:
            raise ValueError(f"init must be a list of actions or one of {INIT_MODES}")

    def game_for(self, t: int) -> Game:
        return self.game if self.game_at is None else self.game_at(t)


@dataclass
class TraceRecord:
    t: int
    actions: tuple[int, ...]
    estimation_error: float
    max_estimation_error: float
    psi: float | None = None
    potential: float | None = None
    dist_to_ne: float | None = None
    freqs: np.ndarray | None = field(default=None, repr=False)
    copies: np.ndarray | None = field(default=None, repr=False)


def vertex(action: int, n_actions: int) -> np.ndarray:
    e = np.zeros(n_actions)
    e[action] = 1.0
    return e


def best_response(
    game: Game,
    agent: int,
    beliefs: Sequence[np.ndarray],
    tie_break: str = "lowest-index",
    rng: np.random.Generator | None = None,
) -> int:
    """A pure maximizer of expected payoff against ``beliefs`` (others in agent order)."""
    rows = list(beliefs)
    if len(rows) != game.n_agents - 1:
        raise ValueError(f"expected {game.n_agents - 1} beliefs, got {len(rows)}")
    rows.insert(agent, None)
    values = deviation_payoffs(game, agent, rows)
    ties = np.flatnonzero(values >= values.max() - TIE_TOL)
    if tie_break == "random" and len(ties) > 1:
        if rng is None:
            raise ValueError("random tie-break needs an rng")
        return int(rng.choice(ties))
    return int(ties[0])


def update_frequency(f_prev, action: int, t: int) -> np.ndarray:
    if t < 1:
        raise ValueError("t must be >= 1")
    f_prev = np.asarray(f_prev, dtype=float)
    e = vertex(action, f_prev.shape[0])
    if t == 1:
        return e
    return (t - 1) / t * f_prev + e / t


def consensus_update(
    copies_prev: np.ndarray,
    freqs_prev: np.ndarray,
    schedule: NetworkSchedule,
    weight_rule: WeightRule,
    t: int,
) -> np.ndarray:
    """One round of local averaging; the diagonal is reset to each agent's own frequency."""
    w = weight_matrix(weight_rule, schedule, t)
    out = np.einsum("il,ljk->ijk", w, copies_prev)
    n = out.shape[0]
    out[np.arange(n), np.arange(n)] = freqs_prev
    return out


def estimation_errors(freqs: np.ndarray, copies: np.ndarray) -> tuple[float, float]:
    """Mean and max over ``i != j`` of ``||copies[i, j] - freqs[j]||``."""
    n = freqs.shape[0]
    if n < 2:
        return 0.0, 0.0
    d = np.linalg.norm(copies - freqs[None, :, :], axis=2)
    off = d[~np.eye(n, dtype=bool)]
    return float(off.mean()), float(off.max())


def distance_to_profile(freqs: np.ndarray, joint_action) -> float:
    """Mean over agents of the distance from ``f_i`` to the vertex of ``joint_action[i]``."""
    target = np.eye(freqs.shape[1])[list(joint_action)]
    return float(np.linalg.norm(freqs - target, axis=1).mean())


def initial_state(config: RunConfig, rng: np.random.Generator) -> DfpState:
    game = config.game
    n, k = game.n_agents, game.n_actions
    if config.init == "uniform-prior":
        freqs = np.full((n, k), 1.0 / k)
        return DfpState(0, freqs, np.full((n, n, k), 1.0 / k), ())
    if config.init == "uniform-random":
        init = tuple(int(a) for a in rng.integers(0, k, size=n))
    else:
        init = tuple(config.init)
    freqs = np.eye(k)[list(init)]
    copies = np.broadcast_to(freqs, (n, n, k)).copy()
    return DfpState(0, freqs, copies, init)


def _others(rows: np.ndarray, i: int) -> list[np.ndarray]:
    return [rows[j] for j in range(rows.shape[0]) if j != i]


def _act(config: RunConfig, state: DfpState, beliefs: Callable[[int], np.ndarray], rng) -> tuple[int, ...]:
    t = state.t + 1
    if t == 1 and state.last_actions:
        # a pure start is played as-is at t = 1
        return tuple(state.last_actions)
    game = config.game_for(t)
    return tuple(
        best_response(game, i, _others(beliefs(i), i), config.tie_break, rng)
        for i in range(game.n_agents)
    )


def _advance(freqs: np.ndarray, actions, t: int) -> np.ndarray:
    return np.array([update_frequency(freqs[i], a, t) for i, a in enumerate(actions)])


def step_dfp(state: DfpState, config: RunConfig, rng: np.random.Generator | None = None) -> DfpState:
    """Exchange copies with current neighbors, best-respond, then update own frequency."""
    t = state.t + 1
    if t > config.t_final:
        raise ValueError(f"step {t} exceeds t_final={config.t_final}")
    if config.belief_timing == "post":
        mixed = consensus_update(state.copies, state.freqs, config.schedule, config.weight_rule, t)
        actions = _act(config, state, lambda i: mixed[i], rng)
        freqs = _advance(state.freqs, actions, t)
    else:
        # act on last step's copies, then average copies that already carry f_t
        actions = _act(config, state, lambda i: state.copies[i], rng)
        freqs = _advance(state.freqs, actions, t)
        fresh = state.copies.copy()
        n = freqs.shape[0]
        fresh[np.arange(n), np.arange(n)] = freqs
        mixed = consensus_update(fresh, freqs, config.schedule, config.weight_rule, t)
    n = freqs.shape[0]
    mixed[np.arange(n), np.arange(n)] = freqs
    return DfpState(t, freqs, mixed, actions)


def step_fp(state: DfpState, config: RunConfig, rng: np.random.Generator | None = None) -> DfpState:
    """Best-respond to the true empirical frequencies; copies mirror them exactly."""
    t = state.t + 1
    if t > config.t_final:
        raise ValueError(f"step {t} exceeds t_final={config.t_final}")
    actions = _act(config, state, lambda i: state.freqs, rng)
    freqs = _advance(state.freqs, actions, t)
    n, k = freqs.shape
    return DfpState(t, freqs, np.broadcast_to(freqs, (n, n, k)).copy(), actions)


Observer = Callable[[DfpState, TraceRecord], None]


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    init_seq, tie_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), np.random.default_rng(tie_seq)


def run(
    config: RunConfig,
    observers: Sequence[Observer] = (),
    keep_state: bool = True,
) -> list[TraceRecord]:
    """Run ``config.t_final`` steps and return one record per step.

    ``psi`` and ``potential`` are filled every ``config.stride`` steps and at the
    final step.  Observers are called after each record is built; an exception
    from an observer aborts the run with the step number attached.
    """
    init_rng, tie_rng = _streams(config.seed)
    state = initial_state(config, init_rng)
    step = step_dfp if config.engine == "dfp" else step_fp
    trace = []
    for t in range(1, config.t_final + 1):
        state = step(state, config, tie_rng)
        mean_err, max_err = estimation_errors(state.freqs, state.copies)
        rec = TraceRecord(t, state.last_actions, mean_err, max_err)
        if t % config.stride == 0 or t == config.t_final:
            rec.psi = psi(config.game_for(t), state.freqs)
            if config.potential is not None:
                rec.potential = config.potential.expected(state.freqs)
        if keep_state:
            rec.freqs = state.freqs
            rec.copies = state.copies
        for obs in observers:
            try:
                obs(state, rec)
            except Exception as exc:
                raise RuntimeError(f"observer {getattr(obs, '__name__', obs)!r} failed at t={t}: {exc}") from exc
        trace.append(rec)
    return trace


def attach_distance_to_ne(trace: list[TraceRecord], reference) -> None:
    for rec in trace:
        if rec.freqs is None:
            raise ValueError("trace was recorded without state; rerun with keep_state=True")
        rec.dist_to_ne = distance_to_profile(rec.freqs, reference)


def nearest_pure_profile(freqs: np.ndarray, candidates) -> tuple[int, ...] | None:
    best, best_d = None, math.inf
    for a in candidates:
        d = distance_to_profile(freqs, a)
        if d < best_d:
            best, best_d = tuple(a), d
    return best


class InvariantViolation(AssertionError):
    pass


def _require(cond, msg: str) -> None:
    if not cond:
        raise InvariantViolation(msg)


class InvariantChecker:
    """Observer asserting the per-step invariants of a run.

    Checks simplex membership of every frequency and copy, the running-average
    identity against the recorded actions, ``copies[i, i] == freqs[i]``,
    row-stochastic weights with support on current neighbors, ``psi <= 1e-12``
    and the one-step motion bound ``||f_{t+1} - f_t|| <= sqrt(2)/(t+1)``.
    """

    def __init__(self, config: RunConfig, tol: float = 1e-9):
        self.config = config
        self.tol = tol
        k = config.game.n_actions
        self.counts = np.zeros((config.game.n_agents, k))
        self.prev = None
        self.steps = 0
        self.__name__ = "InvariantChecker"

    def __call__(self, state: DfpState, rec: TraceRecord):
        tol, t = self.tol, state.t
        f, c = state.freqs, state.copies
        for arr in (f, c):
            _require(np.all(arr >= -tol) and np.all(arr <= 1 + tol), "entry outside [0, 1]")
            _require(np.all(np.abs(arr.sum(axis=-1) - 1.0) <= tol), "not on the simplex")
        n = f.shape[0]
        _require(np.array_equal(c[np.arange(n), np.arange(n)], f), "copies[i, i] != freqs[i]")
        self.counts[np.arange(n), list(state.last_actions)] += 1
        _require(np.max(np.abs(self.counts / t - f)) <= tol, "running-average identity violated")
        if self.config.engine == "dfp":
            w = weight_matrix(self.config.weight_rule, self.config.schedule, t)
            _require(np.all(w >= 0) and np.all(np.abs(w.sum(axis=1) - 1.0) <= 1e-12), "weights not row-stochastic")
            for i in range(n):
                support = set(np.flatnonzero(w[i]))
                allowed = set(self.config.schedule.neighbors(i, t)) | {i}
                _require(support <= allowed, f"weight support of agent {i} leaves its neighborhood")
        if rec.psi is not None:
            _require(rec.psi <= 1e-12, f"psi = {rec.psi} > 0")
        if self.prev is not None:
            motion = np.linalg.norm(f - self.prev, axis=1)
            _require(np.all(motion <= math.sqrt(2) / t + 1e-12), "one-step motion bound violated")
        self.prev = f.copy()
        self.steps += 1


def with_seed(config: RunConfig, seed: int) -> RunConfig:
    return replace(config, seed=seed)
