"""Directed graph topology, shortest-path structure and edge roles.

Edges are kept in a stable, user-given order; the position of an edge in
``DirectedGraph.edges`` is its canonical index everywhere in the package
(weight vectors, trajectories, CSV output).

Walks stop as soon as they hit the destination, so the destination is never
expanded when computing reachability from the source or walk-length
structure.
"""
from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

INF = np.iinfo(np.int64).max


class GraphError(ValueError):
    """Raised when a graph description is invalid."""


class EdgeRole(str, enum.Enum):
    ALPHA = "alpha"
    ALPHA_STAR = "alpha_star"
    BETA = "beta"
    BETA_STAR = "beta_star"
    IRRELEVANT = "irrelevant"

    @property
    def is_alpha(self) -> bool:
        return self in (EdgeRole.ALPHA, EdgeRole.ALPHA_STAR)

    @property
    def is_beta(self) -> bool:
        return self in (EdgeRole.BETA, EdgeRole.BETA_STAR)


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable directed multigraph with a fixed source/destination pair.

    Parameters
    ----------
    node_count : int
    edges : sequence of (tail, head)
        Self-loops and parallel edges are allowed.
    source, destination : int
    initial_weights : sequence of float, optional
        Positive weights aligned with ``edges``; all ones when omitted.
    edge_names, node_names : mapping, optional
        Labels attached by topology generators (e.g. ``{"w1": 0}``).
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    source: int
    destination: int
    initial_weights: tuple[float, ...] | None = None
    edge_names: Mapping[str, int] = field(default_factory=dict)
    node_names: Mapping[str, int] = field(default_factory=dict)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int64)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int64)

    @cached_property
    def out_ptr(self) -> np.ndarray:
        """CSR row pointer; out-edges of ``u`` are ``out_idx[out_ptr[u]:out_ptr[u+1]]``."""
        counts = np.bincount(self.tails, minlength=self.node_count)
        ptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr

    @cached_property
    def out_idx(self) -> np.ndarray:
        # stable sort keeps canonical order among siblings
        return np.argsort(self.tails, kind="stable").astype(np.int64)

    def out_edges(self, u: int) -> np.ndarray:
        return self.out_idx[self.out_ptr[u]:self.out_ptr[u + 1]]

    def weights(self) -> np.ndarray:
        if self.initial_weights is None:
            return np.ones(self.edge_count)
        return np.array(self.initial_weights, dtype=float)

    def with_edges(self, keep: Sequence[int]) -> "DirectedGraph":
        """Subgraph on the same node set keeping the given edge indices, in order."""
        keep = list(keep)
        w = None if self.initial_weights is None else tuple(self.initial_weights[i] for i in keep)
        return DirectedGraph(
            self.node_count,
            tuple(self.edges[i] for i in keep),
            self.source,
            self.destination,
            w,
            node_names=dict(self.node_names),
        )

    def to_dict(self) -> dict:
        out = {
            "nodes": self.node_count,
            "edges": [list(e) for e in self.edges],
            "source": self.source,
            "destination": self.destination,
        }
        if self.initial_weights is not None:
            out["initial_weights"] = list(self.initial_weights)
        if self.edge_names:
            out["edge_names"] = dict(self.edge_names)
        if self.node_names:
            out["node_names"] = dict(self.node_names)
        return out


def build_graph(
    spec: Mapping | None = None,
    *,
    nodes: int | None = None,
    edges: Iterable[Sequence[int]] | None = None,
    source: int | None = None,
    destination: int | None = None,
    initial_weights: Sequence[float] | None = None,
    edge_names: Mapping[str, int] | None = None,
    node_names: Mapping[str, int] | None = None,
) -> DirectedGraph:
    """Validate an edge-list description and return a :class:`DirectedGraph`.

    ``spec`` uses the on-disk field names (``nodes``, ``edges``, ``source``,
    ``destination``, optional ``initial_weights``); keyword arguments override.
    """
    spec = dict(spec or {})
    nodes = spec.get("nodes") if nodes is None else nodes
    edges = spec.get("edges") if edges is None else edges
    source = spec.get("source") if source is None else source
    destination = spec.get("destination") if destination is None else destination
    if initial_weights is None:
        initial_weights = spec.get("initial_weights")
    edge_names = dict(spec.get("edge_names", {}) if edge_names is None else edge_names)
    node_names = dict(spec.get("node_names", {}) if node_names is None else node_names)

    if nodes is None or edges is None or source is None or destination is None:
        raise GraphError("graph needs 'nodes', 'edges', 'source' and 'destination'")
    if isinstance(nodes, bool) or not isinstance(nodes, (int, np.integer)) or nodes <= 0:
        raise GraphError(f"node count must be a positive integer, got {nodes!r}")
    nodes = int(nodes)

    edge_list = []
    for e in edges:
        if len(e) != 2:
            raise GraphError(f"edge {e!r} is not a (tail, head) pair")
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < nodes and 0 <= v < nodes):
            raise GraphError(f"edge {e!r} references a node outside [0, {nodes})")
        edge_list.append((u, v))
    for name, node in (("source", source), ("destination", destination)):
        if not 0 <= int(node) < nodes:
            raise GraphError(f"{name} {node} outside [0, {nodes})")

    weights = None
    if initial_weights is not None:
        weights = tuple(float(w) for w in initial_weights)
        if len(weights) != len(edge_list):
            raise GraphError("initial_weights must align with edges")
        if not all(np.isfinite(w) and w > 0 for w in weights):
            raise GraphError("initial weights must be positive and finite")
    for name, idx in edge_names.items():
        if not 0 <= int(idx) < len(edge_list):
            raise GraphError(f"edge name {name!r} points to missing edge {idx}")

    g = DirectedGraph(nodes, tuple(edge_list), int(source), int(destination), weights,
                      edge_names, node_names)
    if not np.isfinite(_float_dist(g)[g.source]):
        raise GraphError(f"destination {g.destination} is unreachable from source {g.source}")
    return g


def load_graph(path: str | Path) -> DirectedGraph:
    with open(path) as fh:
        return build_graph(json.load(fh))


def save_graph(g: DirectedGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(g.to_dict(), fh, indent=1)


def _bfs(start: int, adj: list[list[int]], blocked: int | None = None) -> np.ndarray:
    dist = np.full(len(adj), INF, dtype=np.int64)
    dist[start] = 0
    queue = deque([start])
    while queue:
        u = queue.popleft()
        if u == blocked and u != start:
            continue
        for v in adj[u]:
            if dist[v] == INF:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _adjacency(g: DirectedGraph, reverse: bool = False) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(g.node_count)]
    for u, v in g.edges:
        if reverse:
            adj[v].append(u)
        else:
            adj[u].append(v)
    return adj


def distances_to_destination(g: DirectedGraph) -> np.ndarray:
    """Hop distance from every node to the destination (``INF`` if unreachable)."""
    return _bfs(g.destination, _adjacency(g, reverse=True))


def distances_from_source(g: DirectedGraph) -> np.ndarray:
    """Hop distance from the source, never expanding the destination."""
    return _bfs(g.source, _adjacency(g), blocked=g.destination)


def _float_dist(g: DirectedGraph) -> np.ndarray:
    d = distances_to_destination(g).astype(float)
    d[d >= INF] = np.inf
    return d


@dataclass(frozen=True, eq=False)
class EdgeClassification:
    """Roles of all edges plus the distance structure they derive from.

    ``dist_to_dest`` uses ``numpy.inf`` for nodes that cannot reach the
    destination.
    """

    dist_to_dest: np.ndarray
    reachable_from_source: np.ndarray
    decision_points: frozenset[int]
    edge_roles: tuple[EdgeRole, ...]
    L_min: int

    @property
    def can_reach(self) -> np.ndarray:
        return np.isfinite(self.dist_to_dest)

    def roles_of(self, role: EdgeRole) -> list[int]:
        return [i for i, r in enumerate(self.edge_roles) if r is role]

    def decision_edges(self, g: DirectedGraph) -> dict[int, list[int]]:
        """Out-edges of each decision point whose head can reach the destination."""
        return {
            u: [int(e) for e in g.out_edges(u) if self.can_reach[g.heads[e]]]
            for u in sorted(self.decision_points)
        }

    def summary(self) -> dict:
        counts = {r.value: 0 for r in EdgeRole}
        for r in self.edge_roles:
            counts[r.value] += 1
        return {
            "L_min": self.L_min,
            "decision_points": sorted(self.decision_points),
            "role_counts": counts,
        }


def _reach_set(start: int, adj: list[list[int]], allowed: np.ndarray, blocked: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        if u == blocked:
            continue
        for v in adj[u]:
            if allowed[v] and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def classify_edges(g: DirectedGraph) -> EdgeClassification:
    """Assign alpha/alpha*/beta/beta*/irrelevant roles to every edge.

    An alpha-edge ``(i, j)`` out of a decision point satisfies
    ``1 + dist[j] == dist[i]``. It is alpha* when every edge reachable from
    ``j`` inside the can-reach-destination region also satisfies that
    equality, i.e. every walk leaving ``j`` is forced onto a shortest
    continuation. A beta-edge is beta* when ``i`` cannot be reached again
    from ``j``.
    """
    dist = _float_dist(g)
    can_reach = np.isfinite(dist)
    from_s = distances_from_source(g) < INF
    d = g.destination
    adj = _adjacency(g)
    tails, heads = g.tails, g.heads

    decision = set()
    for u in range(g.node_count):
        if u == d or not from_s[u]:
            continue
        viable = sum(1 for e in g.out_edges(u) if can_reach[heads[e]])
        if viable >= 2:
            decision.add(u)

    # edges inside the live region that break the shortest-step equality
    tight = np.array([can_reach[u] and can_reach[v] and dist[u] == dist[v] + 1
                      for u, v in g.edges], dtype=bool)
    slack_tails = {int(tails[e]) for e in range(g.edge_count)
                   if can_reach[tails[e]] and can_reach[heads[e]] and not tight[e]
                   and tails[e] != d}

    roles: list[EdgeRole] = []
    star_cache: dict[int, bool] = {}
    for e, (u, v) in enumerate(g.edges):
        if u not in decision or not can_reach[v]:
            roles.append(EdgeRole.IRRELEVANT)
            continue
        if tight[e]:
            if v not in star_cache:
                region = _reach_set(v, adj, can_reach, blocked=d)
                star_cache[v] = not (region & slack_tails)
            roles.append(EdgeRole.ALPHA_STAR if star_cache[v] else EdgeRole.ALPHA)
        else:
            back = u in _reach_set(v, adj, can_reach, blocked=d)
            roles.append(EdgeRole.BETA if back else EdgeRole.BETA_STAR)

    return EdgeClassification(
        dist_to_dest=dist,
        reachable_from_source=from_s,
        decision_points=frozenset(decision),
        edge_roles=tuple(roles),
        L_min=int(dist[g.source]),
    )


def shortest_dag_mask(g: DirectedGraph, c: EdgeClassification | None = None) -> np.ndarray:
    """Boolean mask over edges that survive the iterative beta-pruning."""
    c = classify_edges(g) if c is None else c
    dist = c.dist_to_dest
    alive = np.array([c.can_reach[u] and c.can_reach[v] and u != g.destination
                      for u, v in g.edges], dtype=bool)
    # decision points nearest the destination first
    for u in sorted(c.decision_points, key=lambda x: (dist[x], x)):
        for e in g.out_edges(u):
            if alive[e] and dist[g.heads[e]] + 1 != dist[u]:
                alive[e] = False
    # drop edges that can only be entered through pruned ones
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.node_count)]
    for e in np.flatnonzero(alive):
        adj[g.tails[e]].append((int(e), int(g.heads[e])))
    seen = {g.source}
    used = np.zeros(g.edge_count, dtype=bool)
    stack = [g.source]
    while stack:
        u = stack.pop()
        if u == g.destination:
            continue
        for e, v in adj[u]:
            used[e] = True
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return used


def prune_to_shortest_dag(c: EdgeClassification, g: DirectedGraph) -> DirectedGraph:
    """Subgraph made of exactly the union of shortest source-destination paths."""
    return g.with_edges(np.flatnonzero(shortest_dag_mask(g, c)))


def shortest_path_count(g: DirectedGraph) -> int:
    """Number of distinct shortest source-destination edge sequences."""
    c = classify_edges(g)
    mask = shortest_dag_mask(g, c)
    dist = c.dist_to_dest
    count = {g.destination: 1}
    order = sorted({int(u) for u in g.tails[mask]}, key=lambda x: dist[x])
    for u in order:
        count[u] = sum(count.get(int(g.heads[e]), 0) for e in g.out_edges(u) if mask[e])
    return int(count.get(g.source, 0))
