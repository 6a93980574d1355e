"""Time-varying communication graphs and consensus weights."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

KINDS = ("ring", "star", "complete", "periodic", "file")


def _edge(i: int, j: int, directed: bool) -> tuple[int, int]:
    return (i, j) if directed else (min(i, j), max(i, j))


@dataclass(frozen=True)
class NetworkSchedule:
    """Edge sets cycled with period ``len(steps)``; step ``t`` uses ``steps[(t - 1) % P]``.

    Undirected edges are stored as ``(min, max)``.  With ``directed=True`` an
    edge ``(i, j)`` means ``i`` sends to ``j``, so ``i`` is a neighbor of ``j``.
    """

    n_agents: int
    steps: tuple[frozenset, ...]
    kind: str = "periodic"
    directed: bool = False

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be positive")
        if self.kind not in KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}")
        if not self.steps:
            raise ValueError("schedule needs at least one step (period >= 1)")
        norm = []
        for edges in self.steps:
            step = set()
            for i, j in edges:
                i, j = int(i), int(j)
                if i == j:
                    raise ValueError(f"self-loop at agent {i}")
                if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                    raise ValueError(f"edge ({i}, {j}) out of range for {self.n_agents} agents")
                step.add(_edge(i, j, self.directed))
            norm.append(frozenset(step))
        object.__setattr__(self, "steps", tuple(norm))

    @property
    def period(self) -> int:
        return len(self.steps)

    def edges_at(self, t: int) -> frozenset:
        if t < 1:
            raise ValueError("time steps start at 1")
        return self.steps[(t - 1) % self.period]

    def neighbors(self, agent: int, t: int) -> frozenset:
        return neighbors(self, agent, t)

    def to_dict(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "directed": self.directed,
            "period": self.period,
            "steps": [sorted(list(e) for e in s) for s in self.steps],
        }


def static(n_agents: int, edges, kind: str = "periodic", directed: bool = False) -> NetworkSchedule:
    return NetworkSchedule(n_agents, (frozenset(edges),), kind, directed)


def ring(n_agents: int, directed: bool = False) -> NetworkSchedule:
    """Ring 0-1-...-(N-1)-0; the directed variant has agent ``i`` sending to ``i + 1``."""
    if directed:
        edges = {(i, (i + 1) % n_agents) for i in range(n_agents) if n_agents > 1}
    else:
        edges = {_edge(i, (i + 1) % n_agents, False) for i in range(n_agents) if n_agents > 1}
    return static(n_agents, edges, "ring", directed)


def star(n_agents: int, center: int = 0) -> NetworkSchedule:
    return static(n_agents, {(center, j) for j in range(n_agents) if j != center}, "star")


def complete(n_agents: int) -> NetworkSchedule:
    return static(
        n_agents, {(i, j) for i in range(n_agents) for j in range(i + 1, n_agents)}, "complete"
    )


def periodic(n_agents: int, steps, directed: bool = False) -> NetworkSchedule:
    return NetworkSchedule(n_agents, tuple(frozenset(map(tuple, s)) for s in steps), "periodic", directed)


def load_schedule(path, n_agents: int | None = None) -> NetworkSchedule:
    """Read a schedule file.

    Accepts either a bare JSON list of steps (each a list of ``[i, j]`` pairs) or an
    object ``{"steps": [...], "period": P, "n_agents": N, "directed": false}``.
    With ``period`` given, only the first ``P`` steps are cycled.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, list):
        doc = {"steps": doc}
    steps = doc.get("steps")
    if not isinstance(steps, list) or not steps:
        raise ValueError(f"{path}: schedule needs a non-empty list of steps")
    period = int(doc.get("period", len(steps)))
    if not 1 <= period <= len(steps):
        raise ValueError(f"{path}: period {period} must be in [1, {len(steps)}]")
    n = doc.get("n_agents", n_agents)
    if n is None:
        n = 1 + max((max(p) for s in steps for p in s), default=0)
    if n_agents is not None and int(n) != n_agents:
        raise ValueError(f"{path}: schedule is for {n} agents, expected {n_agents}")
    return NetworkSchedule(
        int(n),
        tuple(frozenset(tuple(p) for p in s) for s in steps[:period]),
        "file",
        bool(doc.get("directed", False)),
    )


def neighbors(schedule: NetworkSchedule, agent: int, t: int) -> frozenset:
    """Agents whose copies ``agent`` can read at step ``t``."""
    if not 0 <= agent < schedule.n_agents:
        raise ValueError(f"agent {agent} out of range")
    out = set()
    for i, j in schedule.edges_at(t):
        if j == agent:
            out.add(i)
        elif i == agent and not schedule.directed:
            out.add(j)
    return frozenset(out)


@dataclass(frozen=True)
class WeightRule:
    """Keep ``self_weight`` on one's own copy, split the rest equally among current neighbors."""

    self_weight: float = 0.75

    def __post_init__(self):
        if not 0.0 < self.self_weight <= 1.0:
            raise ValueError("self_weight must be in (0, 1]")

    @property
    def neighbor_mass(self) -> float:
        return 1.0 - self.self_weight


def weight_row(rule: WeightRule, schedule: NetworkSchedule, i: int, j: int, t: int) -> np.ndarray:
    """Weights agent ``i`` puts on each agent's copy of ``j`` at step ``t``."""
    row = np.zeros(schedule.n_agents)
    nbrs = neighbors(schedule, i, t)
    if j == i or not nbrs:
        row[i] = 1.0
        return row
    row[i] = rule.self_weight
    row[sorted(nbrs)] = rule.neighbor_mass / len(nbrs)
    return row


def weight_matrix(rule: WeightRule, schedule: NetworkSchedule, t: int) -> np.ndarray:
    """Row ``i`` is the weight row agent ``i`` uses for every tracked agent ``j != i``."""
    n = schedule.n_agents
    w = np.zeros((n, n))
    for i in range(n):
        nbrs = neighbors(schedule, i, t)
        if nbrs:
            w[i, i] = rule.self_weight
            w[i, sorted(nbrs)] = rule.neighbor_mass / len(nbrs)
        else:
            w[i, i] = 1.0
    return w


@dataclass(frozen=True)
class ConnectivityReport:
    connected_union: bool
    t_b: int | None
    eta: float
    isolated_steps: int = 0

    def to_dict(self) -> dict:
        return {
            "connected_union": self.connected_union,
            "t_b": self.t_b,
            "eta": self.eta,
            "isolated_steps": self.isolated_steps,
        }


def _undirected(edges) -> set:
    return {(min(e), max(e)) for e in edges}


def validate_connectivity(
    schedule: NetworkSchedule, horizon: int, rule: WeightRule | None = None
) -> ConnectivityReport:
    """Check the union graph over one period and the bounded communication interval.

    ``t_b`` is the smallest window length ``B <= horizon`` such that every union
    edge shows up in every window of ``B`` consecutive steps.  Schedules are
    periodic, so scanning windows that start within one period is exact.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rule = rule or WeightRule()
    n, p = schedule.n_agents, schedule.period
    union = set().union(*(_undirected(s) for s in schedule.steps))
    if n == 1:
        connected = True
    else:
        rows = [i for i, _ in union] + [j for _, j in union]
        cols = [j for _, j in union] + [i for i, _ in union]
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        connected = connected_components(adj, directed=False)[0] == 1

    t_b = None
    for b in range(1, horizon + 1):
        if all(
            union <= set().union(*(_undirected(schedule.edges_at(s + d)) for d in range(b)))
            for s in range(1, p + 1)
        ):
            t_b = b
            break

    max_deg, isolated = 0, 0
    for t in range(1, p + 1):
        for i in range(n):
            d = len(neighbors(schedule, i, t))
            max_deg = max(max_deg, d)
            isolated += d == 0
    eta = rule.self_weight if max_deg == 0 else min(rule.self_weight, rule.neighbor_mass / max_deg)
    return ConnectivityReport(bool(connected), t_b, eta, isolated)
