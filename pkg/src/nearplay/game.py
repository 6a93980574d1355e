"""Finite normal-form games over a common action space.

Utilities are stored as a dense array of shape ``(N, K, ..., K)`` so that
``payoffs[i][a]`` is agent ``i``'s payoff at joint action ``a``.  Flattening
the trailing axes in C order gives the lexicographic joint-action index with
agent 0 most significant.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

SIMPLEX_TOL = 1e-9
LP_CERT_TOL = 1e-6
ENUM_LIMIT = 10**7
LP_LIMIT = 10**4


class CapacityError(RuntimeError):
    """Raised when a game is too large for dense enumeration."""


@dataclass(frozen=True, eq=False)
class Game:
    payoffs: np.ndarray

    def __post_init__(self):
        u = np.array(self.payoffs, dtype=float)
        if u.ndim < 3:
            raise ValueError("payoffs must have shape (N, K, ..., K) with N >= 2")
        n, k = u.shape[0], u.shape[1]
        if u.shape != (n,) + (k,) * n:
            raise ValueError(f"payoffs shape {u.shape} is not (N,) + (K,)*N")
        if n < 2 or k < 2:
            raise ValueError("need N >= 2 agents and K >= 2 actions")
        if not np.all(np.isfinite(u)):
            raise ValueError("payoffs must be finite")
        u.setflags(write=False)
        object.__setattr__(self, "payoffs", u)

    @property
    def n_agents(self) -> int:
        return self.payoffs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.payoffs.shape[1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.payoffs.shape[1:]

    def utility(self, agent: int, joint_action) -> float:
        return float(self.payoffs[(agent,) + tuple(joint_action)])

    @classmethod
    def from_function(cls, n_agents: int, n_actions: int, fn) -> "Game":
        """Build a game from ``fn(agent, joint_action) -> payoff``."""
        u = np.empty((n_agents,) + (n_actions,) * n_agents)
        for a in np.ndindex(*(n_actions,) * n_agents):
            for i in range(n_agents):
                u[(i,) + a] = fn(i, a)
        return cls(u)

    @classmethod
    def from_potential(cls, phi: "PotentialFunction") -> "Game":
        """The identical-interest game in which every agent's payoff is ``phi``."""
        n = phi.values.ndim
        return cls(np.broadcast_to(phi.values, (n,) + phi.values.shape).copy())

    def to_dict(self) -> dict:
        n, k = self.n_agents, self.n_actions
        return {
            "n_agents": n,
            "n_actions": k,
            "utilities": [self.payoffs[i].reshape(-1).tolist() for i in range(n)],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Game":
        try:
            n, k = int(doc["n_agents"]), int(doc["n_actions"])
            rows = np.asarray(doc["utilities"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed game document: {exc}") from exc
        if rows.shape != (n, k**n):
            raise ValueError(f"utilities must be {n} rows of {k**n} entries, got {rows.shape}")
        return cls(rows.reshape((n,) + (k,) * n))

    @classmethod
    def load(cls, path) -> "Game":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True, eq=False)
class PotentialFunction:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def expected(self, profile) -> float:
        """Potential of a mixed profile under the product distribution."""
        return float(_contract(self.values, _as_rows(profile, self.values.ndim, self.values.shape[0])))

    def __call__(self, joint_action) -> float:
        return float(self.values[tuple(joint_action)])


@dataclass(frozen=True)
class PotentialFit:
    potential: PotentialFunction
    delta: float
    lp_delta: float = field(default=0.0, compare=False)


def coordination_game(n_agents: int = 2, n_actions: int = 2) -> Game:
    """Pairwise coordination: payoff is the fraction of others choosing the same action."""
    shape = (n_actions,) * n_agents
    idx = np.indices(shape)
    u = np.zeros((n_agents,) + shape)
    for i in range(n_agents):
        for j in range(n_agents):
            if j != i:
                u[i] += idx[i] == idx[j]
    return Game(u / (n_agents - 1))


def coordination_potential(n_agents: int = 2, n_actions: int = 2) -> PotentialFunction:
    idx = np.indices((n_actions,) * n_agents)
    phi = np.zeros((n_actions,) * n_agents)
    for i in range(n_agents):
        for j in range(i + 1, n_agents):
            phi += idx[i] == idx[j]
    return PotentialFunction(phi / (n_agents - 1))


def check_strategy(probs, n_actions: int | None = None, tol: float = SIMPLEX_TOL) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or (n_actions is not None and p.shape[0] != n_actions):
        raise ValueError(f"strategy must be a vector of length {n_actions}, got shape {p.shape}")
    if np.any(p < -tol) or np.any(p > 1 + tol) or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"not a probability vector: {p}")
    return p


def check_profile(game: Game, profile) -> np.ndarray:
    """Validate a joint strategy and return it as an ``(N, K)`` array."""
    rows = _as_rows(profile, game.n_agents, game.n_actions)
    for r in rows:
        check_strategy(r, game.n_actions)
    return rows


def _as_rows(profile, n: int, k: int) -> np.ndarray:
    try:
        rows = np.asarray(profile, dtype=float)
    except ValueError as exc:
        raise ValueError(f"profile is not an array of strategies: {exc}") from exc
    if rows.shape != (n, k):
        raise ValueError(f"profile must have shape {(n, k)}, got {rows.shape}")
    return rows


def _contract(tensor: np.ndarray, rows, skip: int | None = None) -> np.ndarray:
    # Contract every axis except ``skip`` with the matching row; last axis first
    # so earlier axis numbers stay valid.
    out = tensor
    for j in reversed(range(tensor.ndim)):
        if j != skip:
            out = np.tensordot(out, rows[j], axes=([j], [0]))
    return out


def deviation_payoffs(game: Game, agent: int, profile) -> np.ndarray:
    """Payoff of each pure action of ``agent`` against the others' mixed strategies."""
    return _contract(game.payoffs[agent], profile, skip=agent)


def expected_utility(game: Game, agent: int, profile) -> float:
    _check_agent(game, agent)
    rows = check_profile(game, profile)
    return float(_contract(game.payoffs[agent], rows))


def expected_utility_pure(game: Game, agent: int, action: int, others) -> float:
    """Payoff of pure ``action`` when the other agents play ``others`` (agent order, ``agent`` omitted)."""
    _check_agent(game, agent)
    if not 0 <= action < game.n_actions:
        raise ValueError(f"action {action} out of range")
    others = list(others)
    if len(others) != game.n_agents - 1:
        raise ValueError(f"expected {game.n_agents - 1} opponent strategies, got {len(others)}")
    rows = [check_strategy(s, game.n_actions) for s in others]
    rows.insert(agent, np.eye(game.n_actions)[action])
    return float(_contract(game.payoffs[agent], rows))


def _check_agent(game: Game, agent: int):
    if not 0 <= agent < game.n_agents:
        raise ValueError(f"agent {agent} out of range for {game.n_agents} agents")


def _same_shape(a: Game, b: Game):
    if a.payoffs.shape != b.payoffs.shape:
        raise ValueError(f"game shapes differ: {a.payoffs.shape} vs {b.payoffs.shape}")


def _axis_spread(values: np.ndarray, axis: int) -> float:
    return float(np.max(np.ptp(values, axis=axis)))


def mpd(game_a: Game, game_b: Game) -> float:
    """Maximum pairwise difference between two games of the same shape.

    For agent ``i`` the unilateral differences of both games agree up to ``c``
    exactly when ``u_i - v_i`` varies by at most ``c`` along axis ``i``, so the
    max over ``(i, a'_i, a)`` is the largest peak-to-peak along that axis.
    """
    _same_shape(game_a, game_b)
    diff = game_a.payoffs - game_b.payoffs
    return max(_axis_spread(diff[i], i) for i in range(game_a.n_agents))


def potential_gap(game: Game, phi: PotentialFunction) -> float:
    if phi.values.shape != game.shape:
        raise ValueError(f"potential shape {phi.values.shape} does not match game {game.shape}")
    return max(_axis_spread(game.payoffs[i] - phi.values, i) for i in range(game.n_agents))


def is_exact_potential(game: Game, phi: PotentialFunction, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return potential_gap(game, phi) <= tol


def psi(game: Game, profile) -> float:
    """Negated largest gain any agent can get from a pure unilateral deviation.

    Expected utility is linear in the deviator's own strategy, so the best
    deviation is always attained at a pure action.
    """
    rows = check_profile(game, profile)
    best = -np.inf
    for i in range(game.n_agents):
        v = deviation_payoffs(game, i, rows)
        best = max(best, float(v.max() - v @ rows[i]))
    return 0.0 - best


def is_epsilon_ne(game: Game, profile, eps: float) -> bool:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return psi(game, profile) >= -eps


def enumerate_pure_ne(game: Game, eps: float = 0.0) -> list[tuple[int, ...]]:
    """All pure joint actions at which no agent gains more than ``eps`` by deviating."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    size = game.n_actions**game.n_agents
    if size > ENUM_LIMIT:
        raise CapacityError(f"{size} joint actions exceeds enumeration limit {ENUM_LIMIT}")
    ok = np.ones(game.shape, dtype=bool)
    for i in range(game.n_agents):
        u = game.payoffs[i]
        ok &= u.max(axis=i, keepdims=True) - u <= eps
    return [tuple(int(x) for x in a) for a in np.argwhere(ok)]


def fit_closest_potential(game: Game) -> PotentialFit:
    """Closest exact potential game in maximum pairwise difference, by linear programming.

    Minimizes ``delta`` over potentials ``phi`` with ``phi[0,...,0] = 0`` subject to
    ``(u_i - phi)[a'_i, a_-i] - (u_i - phi)[a] <= delta`` for every agent and every
    ordered pair of distinct own actions.  The returned ``delta`` is re-evaluated
    from the returned potential and must agree with the LP optimum.
    """
    n, k = game.n_agents, game.n_actions
    size = k**n
    if size > LP_LIMIT:
        raise CapacityError(f"{size} joint actions exceeds LP limit {LP_LIMIT}")
    flat = np.arange(size).reshape(game.shape)
    rows_a, rows_b, rhs = [], [], []
    for i in range(n):
        u = game.payoffs[i]
        for x in range(k):
            for y in range(k):
                if x == y:
                    continue
                # phi[a_x] - phi[a_y] - delta <= u_i[a_x] - u_i[a_y]
                ax = np.take(flat, x, axis=i).ravel()
                ay = np.take(flat, y, axis=i).ravel()
                rows_a.append(ax)
                rows_b.append(ay)
                rhs.append((np.take(u, x, axis=i) - np.take(u, y, axis=i)).ravel())
    ax = np.concatenate(rows_a)
    ay = np.concatenate(rows_b)
    b_ub = np.concatenate(rhs)
    m = ax.shape[0]
    r = np.arange(m)
    a_ub = sparse.csr_matrix(
        (
            np.concatenate([np.ones(m), -np.ones(m), -np.ones(m)]),
            (np.concatenate([r, r, r]), np.concatenate([ax, ay, np.full(m, size)])),
        ),
        shape=(m, size + 1),
    )
    c = np.zeros(size + 1)
    c[-1] = 1.0
    bounds = [(0.0, 0.0)] + [(None, None)] * (size - 1) + [(0.0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"potential fit LP failed: {res.message}")
    phi = PotentialFunction(res.x[:size].reshape(game.shape))
    delta = potential_gap(game, phi)
    if abs(delta - res.fun) > LP_CERT_TOL:
        raise RuntimeError(f"LP optimum {res.fun} not certified: re-evaluated gap is {delta}")
    return PotentialFit(phi, delta, float(res.fun))
