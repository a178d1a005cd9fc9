"""Weighted random walks with length-dependent reinforcement.

A run executes ``n_walks`` walks from the source, one after the other. Each
walk picks out-edges with probability proportional to their current weight
and stops at the destination; on success every traversed edge gains
``f(L)`` (once per walk under the single-reward model, once per traversal
under the multiple-reward model). Walks that enter a node from which the
destination is unreachable, hit a node with no out-edges, or exceed
``max_steps`` fail, change nothing, and still consume a time index.

Seeding: run ``i`` of an ensemble with master seed ``s`` draws from
``numpy.random.default_rng(SeedSequence(s, spawn_key=(i,)))``; see
:func:`run_seed`. Per-run results are reduced in run-index order, so the
ensemble is bit-identical for any ``n_jobs``.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np
from joblib import Parallel, delayed

from .graph import DirectedGraph, EdgeClassification, classify_edges
from .rewards import RewardMode, RewardModel

REACHED, LOST, STUCK, CAPPED = 0, 1, 2, 3


class RewardContractError(ValueError):
    """Reward applied for a walk that did not reach the destination."""


@numba.njit(cache=True)
def _walk(out_ptr, out_idx, heads, can_reach, src, dst, w, rng, max_steps,
          path, node_stamp, stamp, hits):
    steps = 0
    looped = False
    u = src
    node_stamp[u] = stamp
    hits[u] += 1
    while True:
        if u == dst:
            return steps, REACHED, looped
        if steps >= max_steps:
            return steps, CAPPED, looped
        a = out_ptr[u]
        b = out_ptr[u + 1]
        if b == a:
            return steps, STUCK, looped
        if b - a == 1:
            e = out_idx[a]
        else:
            tot = 0.0
            for k in range(a, b):
                tot += w[out_idx[k]]
            x = rng.random() * tot
            e = out_idx[b - 1]
            for k in range(a, b - 1):
                x -= w[out_idx[k]]
                if x < 0.0:
                    e = out_idx[k]
                    break
        path[steps] = e
        steps += 1
        v = heads[e]
        if node_stamp[v] == stamp:
            looped = True
        else:
            node_stamp[v] = stamp
            hits[v] += 1
        if not can_reach[v]:
            return steps, LOST, looped
        u = v


@numba.njit(cache=True)
def _record(k, w, tails, node_count, hits, rec_rw, rec_clock):
    tot = np.zeros(node_count)
    for e in range(w.shape[0]):
        tot[tails[e]] += w[e]
    for e in range(w.shape[0]):
        rec_rw[k, e] = w[e] / tot[tails[e]]
    for i in range(node_count):
        rec_clock[k, i] = hits[i]


@numba.njit(cache=True)
def _run(out_ptr, out_idx, heads, tails, can_reach, src, dst, w, f_table, multiple,
         n_walks, checkpoints, L_min, max_steps, rng,
         rec_rw, rec_clock, rec_spf, rec_loop, rec_fail):
    node_count = out_ptr.shape[0] - 1
    path = np.empty(max_steps, dtype=np.int64)
    node_stamp = np.full(node_count, -1, dtype=np.int64)
    edge_stamp = np.full(w.shape[0], -1, dtype=np.int64)
    hits = np.zeros(node_count, dtype=np.int64)
    K = checkpoints.shape[0]
    ck = 0
    while ck < K and checkpoints[ck] == 0:
        _record(ck, w, tails, node_count, hits, rec_rw, rec_clock)
        rec_spf[ck] = np.nan
        rec_loop[ck] = np.nan
        rec_fail[ck] = np.nan
        ck += 1
    win = 0
    win_short = 0
    win_loop = 0
    win_fail = 0
    capped = 0
    for n in range(1, n_walks + 1):
        steps, status, looped = _walk(out_ptr, out_idx, heads, can_reach, src, dst, w, rng,
                                      max_steps, path, node_stamp, n, hits)
        if status == REACHED:
            r = f_table[steps]
            if multiple:
                for k in range(steps):
                    w[path[k]] += r
            else:
                for k in range(steps):
                    e = path[k]
                    if edge_stamp[e] != n:
                        edge_stamp[e] = n
                        w[e] += r
            if steps == L_min:
                win_short += 1
        else:
            win_fail += 1
            if status == CAPPED:
                capped += 1
        if looped:
            win_loop += 1
        win += 1
        while ck < K and checkpoints[ck] == n:
            _record(ck, w, tails, node_count, hits, rec_rw, rec_clock)
            rec_spf[ck] = win_short / win
            rec_loop[ck] = win_loop / win
            rec_fail[ck] = win_fail / win
            win = 0
            win_short = 0
            win_loop = 0
            win_fail = 0
            ck += 1
    return capped


@dataclass
class WeightState:
    """Edge weights after ``n`` completed walks."""

    weights: np.ndarray
    n: int = 0

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=float)
        if np.any(~(self.weights > 0)):
            raise ValueError("weights must be strictly positive")

    @classmethod
    def initial(cls, g: DirectedGraph) -> "WeightState":
        return cls(g.weights(), 0)

    def normalized(self, g: DirectedGraph) -> np.ndarray:
        tot = np.bincount(g.tails, weights=self.weights, minlength=g.node_count)
        return self.weights / tot[g.tails]


@dataclass(frozen=True)
class WalkOutcome:
    path: tuple[int, ...]
    length: int
    reached: bool
    visits: dict[int, int]
    status: int = REACHED


def default_max_steps(g: DirectedGraph) -> int:
    return 100 * g.node_count


def _can_reach(g: DirectedGraph, c: EdgeClassification | None) -> np.ndarray:
    c = classify_edges(g) if c is None else c
    return np.ascontiguousarray(c.can_reach)


def run_walk(g: DirectedGraph, w: WeightState, rng: np.random.Generator,
             max_steps: int | None = None, classification: EdgeClassification | None = None
             ) -> WalkOutcome:
    """Execute one walk; ``w`` is left untouched."""
    max_steps = default_max_steps(g) if max_steps is None else int(max_steps)
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    path = np.empty(max_steps, dtype=np.int64)
    steps, status, _ = _walk(g.out_ptr, g.out_idx, g.heads, _can_reach(g, classification),
                             g.source, g.destination, w.weights, rng, max_steps, path,
                             np.full(g.node_count, -1, dtype=np.int64), 0,
                             np.zeros(g.node_count, dtype=np.int64))
    p = tuple(int(e) for e in path[:steps])
    return WalkOutcome(p, steps, status == REACHED, dict(Counter(p)), int(status))


def apply_reward(w: WeightState, o: WalkOutcome, m: RewardModel) -> WeightState:
    """Return the weights after rewarding a successful walk."""
    if not o.reached:
        raise RewardContractError("cannot reward a walk that did not reach the destination")
    new = w.weights.copy()
    r = float(m.f(o.length))
    for e, u in o.visits.items():
        new[e] += r * (u if m.mode is RewardMode.MULTIPLE else 1)
    return WeightState(new, w.n + 1)


def log_checkpoints(n_walks: int, count: int = 30) -> np.ndarray:
    """About ``count`` integer checkpoints spaced logarithmically on [1, n_walks]."""
    pts = np.unique(np.round(np.geomspace(1, n_walks, count)).astype(np.int64))
    return pts


def run_seed(master_seed: int, run_index: int) -> np.random.SeedSequence:
    """Seed of run ``run_index``; independent of how runs are scheduled."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(run_index),))


@dataclass
class Trajectory:
    """Checkpointed (ensemble-averaged) run statistics.

    Window statistics (``shortest_path_fraction``, ``loop_fraction``,
    ``failed_fraction``) are fractions over the walks executed since the
    previous checkpoint; they are NaN at a checkpoint ``n = 0``.
    """

    checkpoints: np.ndarray
    mean_normalized_weights: np.ndarray        # (K, E)
    clock_estimates: np.ndarray | None         # (K, N) mean cumulative hit counts
    shortest_path_fraction: np.ndarray         # (K,)
    loop_fraction: np.ndarray                  # (K,)
    failed_fraction: np.ndarray                # (K,)
    run_count: int = 1
    std_normalized_weights: np.ndarray | None = None
    final_normalized_weights: np.ndarray | None = None  # (R, E)
    capped_walks: int = 0
    meta: dict = field(default_factory=dict)

    def edge_series(self, e: int) -> np.ndarray:
        return self.mean_normalized_weights[:, e]

    def clock_series(self, node: int) -> np.ndarray:
        return self.clock_estimates[:, node]


def _check_checkpoints(checkpoints, n_walks: int) -> np.ndarray:
    cp = np.asarray(checkpoints, dtype=np.int64)
    if cp.ndim != 1 or cp.size == 0:
        raise ValueError("checkpoints must be a non-empty 1-d sequence")
    if np.any(np.diff(cp) < 0) or cp[0] < 0 or cp[-1] > n_walks:
        raise ValueError("checkpoints must be sorted within [0, n_walks]")
    return cp


def _single(g, can_reach, f_table, multiple, n_walks, cp, L_min, max_steps, w0, seed):
    K, E, N = cp.size, g.edge_count, g.node_count
    rec_rw = np.empty((K, E))
    rec_clock = np.empty((K, N))
    spf, loop, fail = np.empty(K), np.empty(K), np.empty(K)
    w = np.array(w0, dtype=float)
    rng = np.random.default_rng(seed)
    capped = _run(g.out_ptr, g.out_idx, g.heads, g.tails, can_reach, g.source, g.destination,
                  w, f_table, multiple, n_walks, cp, L_min, max_steps, rng,
                  rec_rw, rec_clock, spf, loop, fail)
    return rec_rw, rec_clock, spf, loop, fail, int(capped)


def _prepare(g, classification, m, initial, n_walks, checkpoints, max_steps):
    c = classify_edges(g) if classification is None else classification
    if n_walks < 1:
        raise ValueError("n_walks must be >= 1")
    cp = log_checkpoints(n_walks) if checkpoints is None else _check_checkpoints(checkpoints, n_walks)
    max_steps = default_max_steps(g) if max_steps is None else int(max_steps)
    w0 = g.weights() if initial is None else np.asarray(
        initial.weights if isinstance(initial, WeightState) else initial, dtype=float)
    if w0.shape != (g.edge_count,) or np.any(~(w0 > 0)):
        raise ValueError("initial weights must be positive and aligned with edges")
    f_table = m.table(max_steps)
    return c, cp, max_steps, w0, f_table


def simulate_run(g: DirectedGraph, classification: EdgeClassification | None, m: RewardModel,
                 initial=None, n_walks: int = 10_000, checkpoints=None, seed=0,
                 max_steps: int | None = None) -> Trajectory:
    """One reproducible run; ``seed`` is anything ``numpy.random.default_rng`` accepts."""
    c, cp, max_steps, w0, f_table = _prepare(g, classification, m, initial, n_walks,
                                             checkpoints, max_steps)
    rw, clock, spf, loop, fail, capped = _single(
        g, np.ascontiguousarray(c.can_reach), f_table, m.mode is RewardMode.MULTIPLE,
        int(n_walks), cp, c.L_min, max_steps, w0, seed)
    return Trajectory(cp, rw, clock, spf, loop, fail, 1, np.zeros_like(rw), rw[-1:].copy(),
                      capped, {"n_walks": int(n_walks)})


def simulate_ensemble(g: DirectedGraph, classification: EdgeClassification | None,
                      m: RewardModel, initial=None, n_walks: int = 10_000, checkpoints=None,
                      run_count: int = 100, master_seed: int = 0,
                      max_steps: int | None = None, n_jobs: int = 1) -> Trajectory:
    """Average ``run_count`` independent runs (see module docstring for seeding)."""
    if run_count < 1:
        raise ValueError("run_count must be >= 1")
    c, cp, max_steps, w0, f_table = _prepare(g, classification, m, initial, n_walks,
                                             checkpoints, max_steps)
    can_reach = np.ascontiguousarray(c.can_reach)
    multiple = m.mode is RewardMode.MULTIPLE
    args = (g, can_reach, f_table, multiple, int(n_walks), cp, c.L_min, max_steps, w0)
    if n_jobs == 1:
        results = (_single(*args, run_seed(master_seed, i)) for i in range(run_count))
    else:
        results = Parallel(n_jobs=n_jobs, return_as="generator")(
            delayed(_single)(*args, run_seed(master_seed, i)) for i in range(run_count))

    K, E, N = cp.size, g.edge_count, g.node_count
    s_rw, s_rw2, s_clock = np.zeros((K, E)), np.zeros((K, E)), np.zeros((K, N))
    s_spf, s_loop, s_fail = np.zeros(K), np.zeros(K), np.zeros(K)
    finals = np.empty((run_count, E))
    capped = 0
    # fixed summation order: run 0, 1, 2, ...
    for i, (rw, clock, spf, loop, fail, cap) in enumerate(results):
        s_rw += rw
        s_rw2 += rw * rw
        s_clock += clock
        s_spf += spf
        s_loop += loop
        s_fail += fail
        finals[i] = rw[-1]
        capped += cap
    mean = s_rw / run_count
    var = np.maximum(s_rw2 / run_count - mean * mean, 0.0)
    return Trajectory(cp, mean, s_clock / run_count, s_spf / run_count, s_loop / run_count,
                      s_fail / run_count, run_count, np.sqrt(var), finals, capped,
                      {"n_walks": int(n_walks), "master_seed": int(master_seed)})


TRAJECTORY_HEADER = ["n", "entity_kind", "entity_id", "value"]


def write_trajectory_csv(traj: Trajectory, path: str | Path, edges: Sequence[int] | None = None,
                         nodes: Sequence[int] | None = None, method: str | None = None) -> Path:
    """Long-format CSV: ``n, entity_kind, entity_id, value`` (+ ``method`` when given).

    entity_kind is one of ``edge_rw`` (mean normalized weight, id = edge
    index), ``node_clock`` (mean cumulative hits, id = node), ``spf``
    (window shortest-path fraction), ``loop_frac`` and ``fail_frac``
    (window fractions of walks revisiting a node / failing); the last three
    use id ``all``.
    """
    path = Path(path)
    K, E = traj.mean_normalized_weights.shape
    edges = range(E) if edges is None else edges
    if traj.clock_estimates is None:
        nodes = ()
    elif nodes is None:
        nodes = range(traj.clock_estimates.shape[1])
    header = TRAJECTORY_HEADER + (["method"] if method else [])
    tail = [method] if method else []
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for k, n in enumerate(traj.checkpoints):
            n = int(n)
            for e in edges:
                out.writerow([n, "edge_rw", int(e), repr(float(traj.mean_normalized_weights[k, e]))] + tail)
            for i in nodes:
                out.writerow([n, "node_clock", int(i), repr(float(traj.clock_estimates[k, i]))] + tail)
            for kind, arr in (("spf", traj.shortest_path_fraction),
                              ("loop_frac", traj.loop_fraction),
                              ("fail_frac", traj.failed_fraction)):
                if arr is not None and np.isfinite(arr[k]):
                    out.writerow([n, kind, "all", repr(float(arr[k]))] + tail)
    return path


def read_trajectory_csv(path: str | Path) -> dict[tuple[str, str], tuple[np.ndarray, np.ndarray]]:
    """Map ``(entity_kind, entity_id)`` to ``(n, value)`` arrays."""
    series: dict[tuple[str, str], tuple[list, list]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["entity_kind"], row["entity_id"])
            ns, vs = series.setdefault(key, ([], []))
            ns.append(int(row["n"]))
            vs.append(float(row["value"]))
    return {k: (np.array(n), np.array(v)) for k, (n, v) in series.items()}
