"""Recursive mean-field approximation of the weight dynamics.

Mean weights are pushed forward one walk at a time. Transition
probabilities are ratios of mean weights and path lengths follow from the
transient of an absorbing Markov chain built on them. The expected
single-reward increment of edge ``e`` is

    E[f(L) ; walk uses e] = sum_l f(l) (P(L = l) - P(L = l, e avoided)),

the second pmf coming from the same chain with ``e`` removed. On graphs
where no walk can revisit a node this is the usual
``P(reach i) r_ij E[f(L_si + 1 + L_jd)]``. On cyclic graphs it stays exact
under the mean-field assumptions, whereas splitting at ``i`` would count
repeated visits.

Under the multiple-reward model the recursion is only defined on graphs
whose live part is acyclic, where both models coincide.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numba
import numpy as np

from .graph import DirectedGraph, EdgeClassification, classify_edges
from .rewards import RewardMode, RewardModel
from .walk import Trajectory, _check_checkpoints, log_checkpoints

MASS_EPS = 1e-15
TRUNCATION_WARN = 1e-6


class UnsupportedModeError(ValueError):
    """Recursive method requested for a reward mode it does not model."""


@dataclass
class MeanState:
    mean_weights: np.ndarray
    n: int = 0

    @classmethod
    def initial(cls, g: DirectedGraph, weights=None) -> "MeanState":
        w = g.weights() if weights is None else np.array(weights, dtype=float)
        return cls(w.copy(), 0)

    def normalized(self, g: DirectedGraph) -> np.ndarray:
        return _normalize(g.tails, g.node_count, self.mean_weights)


@dataclass(frozen=True)
class HopLengthPmf:
    """``probabilities[k]`` is the chance of first hitting the target after ``offset + k`` hops."""

    offset: int
    probabilities: np.ndarray
    horizon: int
    tail_mass: float = 0.0
    killed_mass: float = 0.0

    @property
    def truncated(self) -> bool:
        return self.tail_mass > TRUNCATION_WARN

    @property
    def total(self) -> float:
        return float(self.probabilities.sum())

    def as_dict(self) -> dict[int, float]:
        return {self.offset + k: float(p) for k, p in enumerate(self.probabilities) if p > 0}

    def mean(self) -> float:
        k = self.offset + np.arange(self.probabilities.size)
        return float((k * self.probabilities).sum() / self.total)


def _normalize(tails, node_count, w):
    tot = np.bincount(tails, weights=w, minlength=node_count)
    return w / tot[tails]


@numba.njit(cache=True)
def _propagate(out_ptr, out_idx, heads, p_edge, alive, start, target, horizon,
               kill_edge, pmf, mass, nxt):
    """Forward the unit mass from ``start``; returns (tail mass, killed mass).

    Mass reaching ``target`` at hop ``k`` lands in ``pmf[k]``; mass entering a
    node with ``alive == False`` or crossing ``kill_edge`` is dropped.
    """
    pmf[:] = 0.0
    mass[:] = 0.0
    mass[start] = 1.0
    killed = 0.0
    left = 1.0
    for k in range(1, horizon + 1):
        nxt[:] = 0.0
        left = 0.0
        for u in range(mass.size):
            mu = mass[u]
            if mu == 0.0:
                continue
            for t in range(out_ptr[u], out_ptr[u + 1]):
                e = out_idx[t]
                v = heads[e]
                pm = mu * p_edge[e]
                if e == kill_edge or not alive[v]:
                    killed += pm
                elif v == target:
                    pmf[k] += pm
                else:
                    nxt[v] += pm
                    left += pm
        mass[:] = nxt
        if left < MASS_EPS:
            killed += left
            left = 0.0
            break
    return left, killed


def _alive_mask(g: DirectedGraph, target: int, absorb=()) -> np.ndarray:
    """Nodes from which ``target`` is reachable without passing an absorbing node."""
    radj = [[] for _ in range(g.node_count)]
    for u, v in g.edges:
        radj[v].append(u)
    blocked = set(absorb) - {target}
    seen = np.zeros(g.node_count, dtype=np.bool_)
    seen[target] = True
    stack = [target]
    while stack:
        v = stack.pop()
        for u in radj[v]:
            if not seen[u] and u not in blocked:
                seen[u] = True
                stack.append(u)
    return seen


def default_horizon(g: DirectedGraph) -> int:
    return 20 * g.node_count


def hitting_length_pmf(g: DirectedGraph, mean_state: MeanState, source: int, target: int,
                       absorb=(), horizon: int | None = None) -> HopLengthPmf:
    """First-passage hop count from ``source`` to ``target`` under ratio-of-averages transitions.

    Nodes in ``absorb`` (other than ``target``) kill the mass that enters them,
    as do nodes that cannot reach ``target``. Mass still travelling after
    ``horizon`` hops is reported as ``tail_mass``; a warning is issued when it
    exceeds 1e-6.
    """
    horizon = default_horizon(g) if horizon is None else int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    alive = _alive_mask(g, target, absorb)
    pmf = np.zeros(horizon + 1)
    if source == target:
        pmf[0] = 1.0
        return HopLengthPmf(0, pmf[:1], horizon)
    if not alive[source]:
        return HopLengthPmf(0, np.zeros(1), horizon, 0.0, 1.0)
    p = mean_state.normalized(g)
    left, killed = _propagate(g.out_ptr, g.out_idx, g.heads, p, alive, source, target,
                              horizon, -1, pmf, np.zeros(g.node_count), np.zeros(g.node_count))
    nz = np.nonzero(pmf)[0]
    lo, hi = (nz[0], nz[-1] + 1) if nz.size else (0, 1)
    out = HopLengthPmf(int(lo), pmf[lo:hi].copy(), horizon, float(left), float(killed))
    if out.truncated:
        warnings.warn(f"horizon {horizon} leaves tail mass {left:.3g}", RuntimeWarning, stacklevel=2)
    return out


@numba.njit(cache=True)
def _general_run(out_ptr, out_idx, heads, tails, alive, src, dst, w, f_table, horizon,
                 choice_edges, n_walks, checkpoints, rec_rw, rec_spf, rec_fail, L_min):
    N = alive.size
    E = w.size
    p = np.empty(E)
    tot = np.empty(N)
    base = np.empty(horizon + 1)
    avoid = np.empty(horizon + 1)
    mass = np.empty(N)
    nxt = np.empty(N)
    delta = np.empty(choice_edges.size)
    k = 0
    for step in range(n_walks + 1):
        tot[:] = 0.0
        for e in range(E):
            tot[tails[e]] += w[e]
        for e in range(E):
            p[e] = w[e] / tot[tails[e]]
        _propagate(out_ptr, out_idx, heads, p, alive, src, dst, horizon, -1, base, mass, nxt)
        while k < checkpoints.size and checkpoints[k] == step:
            rec_rw[k, :] = p
            rec_spf[k] = base[L_min] if L_min <= horizon else 0.0
            rec_fail[k] = 1.0 - base.sum()
            k += 1
        if step == n_walks:
            break
        for c in range(choice_edges.size):
            _propagate(out_ptr, out_idx, heads, p, alive, src, dst, horizon,
                       choice_edges[c], avoid, mass, nxt)
            acc = 0.0
            for ell in range(1, horizon + 1):
                acc += f_table[ell] * (base[ell] - avoid[ell])
            delta[c] = acc if acc > 0.0 else 0.0
        for c in range(choice_edges.size):
            w[choice_edges[c]] += delta[c]


def _has_live_cycle(g: DirectedGraph, alive: np.ndarray) -> bool:
    """Cycle among nodes that can still reach the destination (Kahn's algorithm)."""
    live = [(u, v) for u, v in g.edges if alive[u] and alive[v] and u != g.destination]
    indeg = np.zeros(g.node_count, dtype=int)
    adj = [[] for _ in range(g.node_count)]
    for u, v in live:
        adj[u].append(v)
        indeg[v] += 1
    stack = [u for u in range(g.node_count) if indeg[u] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in adj[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return seen < g.node_count


def check_mode(g: DirectedGraph, m: RewardModel) -> None:
    """Raise ``UnsupportedModeError`` if the recursion does not model ``m`` on ``g``."""
    if m.mode is RewardMode.MULTIPLE and _has_live_cycle(g, _alive_mask(g, g.destination)):
        raise UnsupportedModeError(
            "recursive method needs single reward on graphs where walks can revisit nodes")


def _choice_edges(g: DirectedGraph, all_edges: bool = False) -> np.ndarray:
    # edges out of single-exit nodes never change a normalized weight, so
    # trajectories skip them; recursive_step keeps every mean weight exact
    deg = np.bincount(g.tails, minlength=g.node_count)
    keep = g.tails != g.destination
    if not all_edges:
        keep &= deg[g.tails] >= 2
    return np.nonzero(keep)[0].astype(np.int64)


def _run_general(g, c, m, w0, n_walks, cp, horizon, all_edges=False):
    check_mode(g, m)
    horizon = default_horizon(g) if horizon is None else int(horizon)
    alive = _alive_mask(g, g.destination)
    w = np.array(w0, dtype=float)
    K = cp.size
    rec_rw, rec_spf, rec_fail = np.empty((K, g.edge_count)), np.empty(K), np.empty(K)
    L_min = int(c.L_min) if np.isfinite(c.L_min) else horizon + 1
    _general_run(g.out_ptr, g.out_idx, g.heads, g.tails, alive, g.source, g.destination, w,
                 m.table(horizon), horizon, _choice_edges(g, all_edges), int(n_walks), cp,
                 rec_rw, rec_spf, rec_fail, L_min)
    return w, rec_rw, rec_spf, rec_fail


def recursive_step(g: DirectedGraph, classification: EdgeClassification | None, m: RewardModel,
                   state: MeanState, horizon: int | None = None) -> MeanState:
    """One walk of the mean recursion; returns a new state with ``n + 1``."""
    c = classify_edges(g) if classification is None else classification
    w, *_ = _run_general(g, c, m, state.mean_weights, 1, np.array([0], dtype=np.int64), horizon,
                         all_edges=True)
    return MeanState(w, state.n + 1)


# ---------------------------------------------------------------------------
# closed recursion for the two-decision-point topology


@numba.njit(cache=True)
def _two_decision_run(w, f1, f23, f24, f3, f4, n_walks, checkpoints, rec):
    k = 0
    for step in range(n_walks + 1):
        r1 = w[0] / (w[0] + w[1])
        r2 = 1.0 - r1
        r3 = w[2] / (w[2] + w[3])
        r4 = 1.0 - r3
        while k < checkpoints.size and checkpoints[k] == step:
            rec[k, 0], rec[k, 1], rec[k, 2], rec[k, 3] = r1, r2, r3, r4
            k += 1
        if step == n_walks:
            break
        w[0] += r1 * f1
        w[1] += r2 * (r3 * f23 + r4 * f24)
        w[2] += r2 * r3 * f3
        w[3] += r2 * r4 * f4


def two_decision_recursion(m: RewardModel, l1: int = 7, l2: int = 3, l3: int = 3, l4: int = 18,
                           initial=(1.0, 1.0, 1.0, 1.0), n_walks: int = 100_000,
                           checkpoints=None) -> tuple[np.ndarray, np.ndarray]:
    """Closed mean recursion for the two-decision-point graph.

    Returns ``(checkpoints, r)`` with ``r[k] = (r1, r2, r3, r4)``, the
    normalized mean weights of the four route-first edges.
    """
    cp = log_checkpoints(n_walks) if checkpoints is None else _check_checkpoints(checkpoints, n_walks)
    f = lambda L: float(m.f(L))  # noqa: E731
    rec = np.empty((cp.size, 4))
    _two_decision_run(np.array(initial, dtype=float), f(l1), f(l2 + l3), f(l2 + l4),
                      f(l2 + l3), f(l2 + l4), int(n_walks), cp, rec)
    return cp, rec


# ---------------------------------------------------------------------------
# lumped recursion for the complete graph

# edge types: A=(1,m), B=(1,j), C=(j,m), D=(j,1), E=(j,k)
EDGE_TYPES = ("(1,m)", "(1,2)", "(2,m)", "(2,1)", "(2,3)")
# (number of labelled middle nodes, removed transition) for each type's avoid-chain;
# states: 0 = source, 1 = destination, 2.. = labelled middles, last = remaining middles
_AVOID = ((0, 0, 1), (1, 0, 2), (1, 2, 1), (1, 2, 0), (2, 2, 3))


@numba.njit(cache=True)
def _lumped_matrix(m, W, ns, P):
    S = 3 + ns
    P[:S, :S] = 0.0
    A, B, C, D, E = W[0], W[1], W[2], W[3], W[4]
    lump = S - 1
    M = m - 2 - ns
    T1 = A + (m - 2) * B
    P[0, 1] = A / T1
    for y in range(2, lump):
        P[0, y] = B / T1
    P[0, lump] = M * B / T1
    T = C + D + (m - 3) * E
    for x in range(2, S):
        if x == lump and M == 0:
            continue
        P[x, 1] = C / T
        P[x, 0] = D / T
        for y in range(2, lump):
            if y != x:
                P[x, y] = E / T
        P[x, lump] = (M - (1 if x == lump else 0)) * E / T


@numba.njit(cache=True)
def _lumped_pmf(P, S, kill_from, kill_to, horizon, pmf, mass, nxt):
    pmf[:] = 0.0
    mass[:] = 0.0
    mass[0] = 1.0
    left = 1.0
    for k in range(1, horizon + 1):
        nxt[:] = 0.0
        left = 0.0
        for u in range(S):
            mu = mass[u]
            if mu == 0.0 or u == 1:
                continue
            for v in range(S):
                if P[u, v] == 0.0 or (u == kill_from and v == kill_to):
                    continue
                pm = mu * P[u, v]
                if v == 1:
                    pmf[k] += pm
                else:
                    nxt[v] += pm
                    left += pm
        mass[:S] = nxt[:S]
        if left < MASS_EPS:
            break
    return left


@numba.njit(cache=True)
def _complete_run(m, W, f_table, horizon, n_walks, checkpoints, rec, rec_spf, avoid_spec):
    P = np.zeros((6, 6))
    base = np.empty(horizon + 1)
    avoid = np.empty(horizon + 1)
    mass = np.empty(6)
    nxt = np.empty(6)
    delta = np.empty(5)
    k = 0
    for step in range(n_walks + 1):
        T1 = W[0] + (m - 2) * W[1]
        T = W[2] + W[3] + (m - 3) * W[4]
        _lumped_matrix(m, W, 0, P)
        _lumped_pmf(P, 3, -1, -1, horizon, base, mass, nxt)
        while k < checkpoints.size and checkpoints[k] == step:
            rec[k, 0] = W[0] / T1
            rec[k, 1] = W[1] / T1
            rec[k, 2] = W[2] / T
            rec[k, 3] = W[3] / T
            rec[k, 4] = W[4] / T
            rec_spf[k] = base[1]
            k += 1
        if step == n_walks:
            break
        for t in range(5):
            ns = avoid_spec[t, 0]
            _lumped_matrix(m, W, ns, P)
            _lumped_pmf(P, 3 + ns, avoid_spec[t, 1], avoid_spec[t, 2], horizon, avoid, mass, nxt)
            acc = 0.0
            for ell in range(1, horizon + 1):
                acc += f_table[ell] * (base[ell] - avoid[ell])
            delta[t] = acc if acc > 0.0 else 0.0
        for t in range(5):
            W[t] += delta[t]


def complete_graph_recursion(m_nodes: int, model: RewardModel, n_walks: int = 100_000,
                             checkpoints=None, initial_weight: float = 1.0,
                             horizon: int | None = None):
    """Mean recursion on the complete graph with uniform initial weights.

    Middle nodes are interchangeable, so each of the five edge types keeps a
    single mean weight and every path-length chain needs at most six states.
    Returns ``(checkpoints, r, spf)`` with ``r[k]`` the normalized weights of
    the types in ``EDGE_TYPES`` order.
    """
    if m_nodes < 4:
        raise ValueError("lumped recursion needs m >= 4")
    if model.mode is not RewardMode.SINGLE:
        raise UnsupportedModeError("complete-graph recursion models the single reward only")
    horizon = 20 * m_nodes if horizon is None else int(horizon)
    cp = log_checkpoints(n_walks) if checkpoints is None else _check_checkpoints(checkpoints, n_walks)
    rec = np.empty((cp.size, 5))
    spf = np.empty(cp.size)
    W = np.full(5, float(initial_weight))
    _complete_run(int(m_nodes), W, model.table(horizon), horizon, int(n_walks), cp, rec, spf,
                  np.array(_AVOID, dtype=np.int64))
    return cp, rec, spf


def _is_complete(g: DirectedGraph) -> bool:
    N = g.node_count
    return g.edge_count == N * (N - 1) and len(set(g.edges)) == g.edge_count and all(
        u != v for u, v in g.edges)


def _edge_types(g: DirectedGraph) -> np.ndarray:
    s, d = g.source, g.destination
    t = np.empty(g.edge_count, dtype=np.int64)
    for e, (u, v) in enumerate(g.edges):
        if u == s:
            t[e] = 0 if v == d else 1
        elif u == d:
            t[e] = -1
        else:
            t[e] = 2 if v == d else 3 if v == s else 4
    return t


def recursive_trajectory(g: DirectedGraph, classification: EdgeClassification | None,
                         m: RewardModel, initial=None, n_walks: int = 100_000, checkpoints=None,
                         horizon: int | None = None, lumping: str = "auto") -> Trajectory:
    """Iterate the mean recursion and record normalized mean weights at checkpoints.

    ``shortest_path_fraction`` holds the predicted probability that the next
    walk is shortest and ``failed_fraction`` the predicted failure
    probability (including mass beyond the horizon). ``lumping="auto"``
    switches to the five-type reduction for complete graphs with uniform
    initial weights; ``"never"`` forces the general chain.
    """
    c = classify_edges(g) if classification is None else classification
    cp = log_checkpoints(n_walks) if checkpoints is None else _check_checkpoints(checkpoints, n_walks)
    w0 = g.weights() if initial is None else np.asarray(
        getattr(initial, "mean_weights", initial), dtype=float)
    if w0.shape != (g.edge_count,) or np.any(~(w0 > 0)):
        raise ValueError("initial weights must be positive and aligned with edges")
    K = cp.size
    if lumping not in ("auto", "never"):
        raise ValueError("lumping must be 'auto' or 'never'")
    check_mode(g, m)
    if lumping == "auto" and g.node_count >= 4 and _is_complete(g) and np.all(w0 == w0[0]):
        _, r, spf = complete_graph_recursion(g.node_count, m, n_walks, cp, float(w0[0]), horizon)
        types = _edge_types(g)
        rw = np.where(types >= 0, r[:, np.maximum(types, 0)], 1.0 / (g.node_count - 1))
        fail = np.full(K, np.nan)
        method = "recursive_lumped"
    else:
        _, rw, spf, fail = _run_general(g, c, m, w0, n_walks, cp, horizon)
        method = "recursive"
    return Trajectory(checkpoints=cp, mean_normalized_weights=rw, clock_estimates=None,
                      shortest_path_fraction=spf, loop_fraction=None, failed_fraction=fail,
                      run_count=1, meta={"method": method, "n_walks": int(n_walks)})
