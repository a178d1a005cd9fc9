"""Generators for the standard experiment topologies.

All generators are deterministic. Edge order is part of the output contract:
first edges of competing routes come first so their indices are stable
(``edge_names`` records them).
"""
from __future__ import annotations

import numpy as np

from .graph import DirectedGraph, GraphError, build_graph

# grid25: back-edges creating 2-cycles with the forward lattice edges
GRID_BACK_EDGES = (((1, 3), (1, 2)), ((3, 1), (2, 1)), ((2, 4), (2, 3)), ((4, 2), (3, 2)))
# diagonal shortcuts (k, k) -> (k+1, k+1); k = 2 is left out
GRID_DIAGONALS = (0, 1, 3)


def _chain(edges, start, end, length, next_id):
    """Append a path of ``length`` hops from ``start`` to ``end``; return (first edge, next id)."""
    if length < 1:
        raise GraphError("segment lengths must be >= 1")
    first = len(edges)
    prev = start
    for _ in range(length - 1):
        edges.append((prev, next_id))
        prev = next_id
        next_id += 1
    edges.append((prev, end))
    return first, next_id


def _reorder(edges, firsts):
    """Move the named first edges to the front, keeping relative order otherwise."""
    order = list(firsts) + [i for i in range(len(edges)) if i not in set(firsts)]
    return [edges[i] for i in order], {i: k for k, i in enumerate(order)}


def grid25(size: int = 5) -> DirectedGraph:
    """Directed ``size`` x ``size`` grid with a few loops.

    Node ``(row, col)`` has id ``row * size + col``; source is ``(0, 0)``
    (bottom left), destination ``(size-1, size-1)`` (top right). Edges:
    right and up moves everywhere, diagonal shortcuts ``(k,k)->(k+1,k+1)``
    for ``k`` in ``GRID_DIAGONALS``, and the back-edges in
    ``GRID_BACK_EDGES``, each closing a 2-cycle. For ``size == 5`` the
    shortest route has 5 hops and there are exactly two of them, differing
    only in how they cross from ``(2,2)`` to ``(3,3)``.
    """
    if size < 2:
        raise GraphError("grid size must be >= 2")
    nid = lambda r, c: r * size + c  # noqa: E731
    edges = []
    for r in range(size):
        for c in range(size):
            if c + 1 < size:
                edges.append((nid(r, c), nid(r, c + 1)))
            if r + 1 < size:
                edges.append((nid(r, c), nid(r + 1, c)))
    if size == 5:
        for k in GRID_DIAGONALS:
            edges.append((nid(k, k), nid(k + 1, k + 1)))
        for (r1, c1), (r2, c2) in GRID_BACK_EDGES:
            edges.append((nid(r1, c1), nid(r2, c2)))
    return build_graph(nodes=size * size, edges=edges, source=0, destination=size * size - 1,
                       node_names={"s": 0, "d": size * size - 1})


def monotone_grid(size: int = 5) -> DirectedGraph:
    """Right/up lattice only; every corner-to-corner path is shortest."""
    nid = lambda r, c: r * size + c  # noqa: E731
    edges = []
    for r in range(size):
        for c in range(size):
            if c + 1 < size:
                edges.append((nid(r, c), nid(r, c + 1)))
            if r + 1 < size:
                edges.append((nid(r, c), nid(r + 1, c)))
    return build_graph(nodes=size * size, edges=edges, source=0, destination=size * size - 1)


def two_decision_points(l1: int = 7, l2: int = 3, l3: int = 3, l4: int = 18) -> DirectedGraph:
    """Source splits into an ``l1`` route to d and an ``l2`` route to relay r;
    r splits into ``l3`` and ``l4`` routes to d.

    Nodes: s=0, d=1, r=2, intermediates from 3. Edges 0..3 are the first
    edges of the four routes (names ``w1``..``w4``).
    """
    s, d, r = 0, 1, 2
    edges: list[tuple[int, int]] = []
    nxt = 3
    f1, nxt = _chain(edges, s, d, l1, nxt)
    f2, nxt = _chain(edges, s, r, l2, nxt)
    f3, nxt = _chain(edges, r, d, l3, nxt)
    f4, nxt = _chain(edges, r, d, l4, nxt)
    edges, pos = _reorder(edges, [f1, f2, f3, f4])
    names = {f"w{k + 1}": pos[f] for k, f in enumerate([f1, f2, f3, f4])}
    return build_graph(nodes=nxt, edges=edges, source=s, destination=d, edge_names=names,
                       node_names={"s": s, "d": d, "r": r})


def single_decision_tradeoff(L1: int = 10, L2: int = 11) -> DirectedGraph:
    """Two edge-disjoint routes of ``L1`` and ``L2`` hops; edges 0 and 1 start them."""
    s, d = 0, 1
    edges: list[tuple[int, int]] = []
    nxt = 2
    f1, nxt = _chain(edges, s, d, L1, nxt)
    f2, nxt = _chain(edges, s, d, L2, nxt)
    edges, pos = _reorder(edges, [f1, f2])
    return build_graph(nodes=nxt, edges=edges, source=s, destination=d,
                       edge_names={"w1": pos[f1], "w2": pos[f2]}, node_names={"s": s, "d": d})


def sequential_clocks(depth: int = 4) -> DirectedGraph:
    """Decision points 1..depth in a line, each with a direct edge to d.

    Node ``i`` (id ``i - 1``) links to d and to node ``i + 1``; the last
    node ``depth + 1`` links only to d, so exactly ``depth`` decision points
    exist. Reaching d from node ``i`` directly gives a walk of ``i`` hops.
    Edge names: ``alpha{i}`` (node i -> d) and ``beta{i}`` (node i -> i+1).
    """
    if depth < 1:
        raise GraphError("depth must be >= 1")
    d = depth + 1
    edges = []
    names = {}
    node_names = {"d": d}
    for i in range(1, depth + 1):
        u = i - 1
        node_names[f"p{i}"] = u
        names[f"alpha{i}"] = len(edges)
        edges.append((u, d))
        names[f"beta{i}"] = len(edges)
        edges.append((u, u + 1))
    node_names[f"p{depth + 1}"] = depth
    edges.append((depth, d))
    return build_graph(nodes=depth + 2, edges=edges, source=0, destination=d,
                       edge_names=names, node_names=node_names)


def complete_graph(m: int = 50) -> DirectedGraph:
    """All ``m(m-1)`` ordered pairs; source 0, destination ``m - 1``.

    Edges are listed by tail then head. Names mark one representative of
    each symmetry class: ``(1,m)``, ``(1,2)``, ``(2,m)``, ``(2,1)``, ``(2,3)``
    in one-based labels.
    """
    if m < 3:
        raise GraphError("complete graph needs m >= 3")
    edges = [(u, v) for u in range(m) for v in range(m) if u != v]
    idx = {e: k for k, e in enumerate(edges)}
    d = m - 1
    names = {"(1,m)": idx[(0, d)], "(1,2)": idx[(0, 1)], "(2,m)": idx[(1, d)],
             "(2,1)": idx[(1, 0)]}
    if m >= 4:
        names["(2,3)"] = idx[(1, 2)]
    return build_graph(nodes=m, edges=edges, source=0, destination=d, edge_names=names,
                       node_names={"s": 0, "d": d})


def two_route_loop(loop_at_source: bool = True) -> DirectedGraph:
    """Routes of 1 and 2 hops from s to d plus a 2-cycle hanging off s.

    Nodes: s=0, d=1, relay a=2, loop node x=3. Edges: 0 = s->d,
    1 = s->a, 2 = a->d, 3 = s->x, 4 = x->s.
    """
    edges = [(0, 1), (0, 2), (2, 1), (0, 3), (3, 0)]
    return build_graph(nodes=4, edges=edges, source=0, destination=1,
                       edge_names={"direct": 0, "two_hop": 1, "loop": 3},
                       node_names={"s": 0, "d": 1, "a": 2, "x": 3})


def equal_routes(length: int = 10) -> DirectedGraph:
    """Two disjoint routes of the same length; edges 0 and 1 start them."""
    return single_decision_tradeoff(length, length)


def random_graph(n_nodes: int, p: float, rng: np.random.Generator,
                 self_loops: bool = False, max_tries: int = 1000) -> DirectedGraph:
    """Erdos-Renyi style digraph with source 0, destination ``n_nodes - 1``,
    resampled until the destination is reachable."""
    for _ in range(max_tries):
        mask = rng.random((n_nodes, n_nodes)) < p
        if not self_loops:
            np.fill_diagonal(mask, False)
        edges = [(int(u), int(v)) for u, v in zip(*np.nonzero(mask))]
        try:
            return build_graph(nodes=n_nodes, edges=edges, source=0, destination=n_nodes - 1)
        except GraphError:
            continue
    raise GraphError("could not sample a graph with a source-destination path")


GENERATORS = {
    "grid25": grid25,
    "two_decision_points": two_decision_points,
    "single_decision_tradeoff": single_decision_tradeoff,
    "sequential_clocks": sequential_clocks,
    "complete_graph": complete_graph,
}
