"""Slow, obviously-correct reference implementations used as test oracles."""
from __future__ import annotations

from collections import deque

import numpy as np


def simple_paths(g, max_len=None):
    """All s->d paths (as edge-index tuples) that visit no node twice."""
    max_len = g.node_count if max_len is None else max_len
    out = []
    stack = [(g.source, (), frozenset([g.source]))]
    while stack:
        u, path, seen = stack.pop()
        if u == g.destination:
            out.append(path)
            continue
        if len(path) >= max_len:
            continue
        for e, (a, b) in enumerate(g.edges):
            if a == u and b not in seen:
                stack.append((b, path + (e,), seen | {b}))
    return out


def shortest_edge_union(g):
    paths = simple_paths(g)
    L = min(len(p) for p in paths)
    return {e for p in paths if len(p) == L for e in p}, L, sum(len(p) == L for p in paths)


def can_reach_dest(g):
    radj = [[] for _ in range(g.node_count)]
    for u, v in g.edges:
        radj[v].append(u)
    ok = np.zeros(g.node_count, dtype=bool)
    ok[g.destination] = True
    q = deque([g.destination])
    while q:
        v = q.popleft()
        for u in radj[v]:
            if not ok[u]:
                ok[u] = True
                q.append(u)
    return ok


def reference_run(g, f, multiple, n_walks, seed, max_steps=None):
    """Plain-Python run consuming random numbers exactly like the compiled kernel.

    Returns (final weights, list of walk lengths, list of reached flags).
    """
    rng = np.random.default_rng(seed)
    w = g.weights().astype(float)
    ok = can_reach_dest(g)
    max_steps = 100 * g.node_count if max_steps is None else max_steps
    out = [[e for e in range(g.edge_count) if g.edges[e][0] == u] for u in range(g.node_count)]
    lengths, reached = [], []
    for _ in range(n_walks):
        u, path, status = g.source, [], None
        while True:
            if u == g.destination:
                status = True
                break
            if len(path) >= max_steps or not out[u]:
                status = False
                break
            sib = out[u]
            if len(sib) == 1:
                e = sib[0]
            else:
                tot = 0.0
                for k in sib:
                    tot += w[k]
                x = rng.random() * tot
                e = sib[-1]
                for k in sib[:-1]:
                    x -= w[k]
                    if x < 0.0:
                        e = k
                        break
            path.append(e)
            u = g.edges[e][1]
            if not ok[u]:
                status = False
                break
        lengths.append(len(path))
        reached.append(status)
        if status:
            r = float(f(len(path)))
            for e in (path if multiple else set(path)):
                w[e] += r
    return w, lengths, reached
