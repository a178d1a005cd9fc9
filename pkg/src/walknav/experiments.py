"""Scenario configs, orchestration and verdicts.

An experiment writes ``simulated.csv`` (ensemble trajectory), ``predicted.csv``
(analytical curves, same schema with a ``method`` column), ``graph.json``,
``config.json``, ``summary.json`` and a ``plot.py`` script. Verdicts are
computed from the CSV files alone, so ``evaluate`` can be re-run on a stored
output directory.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats

from . import topologies
from .graph import DirectedGraph, classify_edges, load_graph, save_graph, shortest_dag_mask
from .meanfield import UnsupportedModeError, check_mode, recursive_trajectory
from .rewards import RewardModel
from .urn import UrnSpec, decay_exponent, exploration_threshold, exponent_chain, transient_two_edge
from .walk import log_checkpoints, read_trajectory_csv, simulate_ensemble, write_trajectory_csv

SCENARIOS = ("grid25", "two_decision_points", "single_decision_tradeoff", "sequential_clocks",
             "complete_graph", "custom")
METHODS = ("simulation", "analytic")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class FitError(ValueError):
    """Log-log fit impossible on the given window."""


# scenario -> (params, reward, n_walks, run_count, checkpoints)
DEFAULTS: dict[str, dict[str, Any]] = {
    "grid25": dict(params={"size": 5}, reward={"kind": "inverse_linear", "mode": "multiple"},
                   n_walks=1_000_000, run_count=1, checkpoints=[0, 1000, 1_000_000]),
    "two_decision_points": dict(params={"l1": 7, "l2": 3, "l3": 3, "l4": 18},
                                reward={"kind": "power_law", "phi": 2.0, "mode": "single"},
                                n_walks=100_000, run_count=200),
    "single_decision_tradeoff": dict(params={"L1": 10, "L2": 11},
                                     reward={"kind": "power_law", "phi": 2.0, "mode": "multiple"},
                                     n_walks=1_000_000, run_count=200),
    "sequential_clocks": dict(params={"depth": 4}, reward={"kind": "inverse_linear", "mode": "multiple"},
                              n_walks=1_000_000, run_count=200),
    "complete_graph": dict(params={"m": 50}, reward={"kind": "inverse_linear", "mode": "single"},
                           n_walks=100_000, run_count=200),
    "custom": dict(params={}, reward={"kind": "inverse_linear", "mode": "multiple"},
                   n_walks=10_000, run_count=10),
}

# tolerance name -> default value
TOLERANCES = {
    "plateau": 0.05,          # |r_loser - w2/(w1+w2)| for n <= n*
    "slope_rel": 0.10,        # relative error of the fitted decay slope
    "transient_abs": 0.05,    # |ensemble - transient_two_edge| for n > 10 n*
    "recursive_abs": 0.05,    # |ensemble - recursive_trajectory|
    "spf_min": 0.95,          # final shortest-path fraction (two_decision_points)
    "grid_spf_min": 0.9,
    "dominance_min": 0.5,     # shortest-route share of the out-weight at every shortest-route node
    "exponent_abs": 0.07,     # clock / beta slopes vs exponent_chain
}


@dataclass
class ExperimentConfig:
    scenario: str
    params: dict = field(default_factory=dict)
    reward: dict = field(default_factory=lambda: {"kind": "inverse_linear", "mode": "multiple"})
    n_walks: int = 10_000
    run_count: int = 10
    master_seed: int | None = None
    checkpoints: list[int] | int | None = None   # explicit list, or a count of log-spaced points
    output_dir: str = "out"
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    tolerances: dict = field(default_factory=dict)
    fit_window: list[float] | None = None
    n_jobs: int = 1

    @classmethod
    def for_scenario(cls, scenario: str, **overrides) -> "ExperimentConfig":
        if scenario not in DEFAULTS:
            raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
        base = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULTS[scenario].items()}
        params = {**base.pop("params"), **overrides.pop("params", {})}
        cfg = cls(scenario=scenario, params=params, **{**base, **overrides})
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "scenario" not in d:
            raise ConfigError("config needs a scenario")
        cfg = cls(**{k: d[k] for k in d})
        cfg.validate()
        return cfg

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.dumps() + "\n")
        return path

    def reward_model(self) -> RewardModel:
        try:
            return RewardModel.from_dict(self.reward)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad reward model {self.reward}: {exc}") from exc

    def checkpoint_array(self) -> np.ndarray:
        if self.checkpoints is None:
            return log_checkpoints(self.n_walks)
        if isinstance(self.checkpoints, int):
            return log_checkpoints(self.n_walks, self.checkpoints)
        cp = np.asarray(self.checkpoints, dtype=np.int64)
        if cp.ndim != 1 or cp.size == 0 or np.any(np.diff(cp) < 0) or cp[0] < 0 or cp[-1] > self.n_walks:
            raise ConfigError("checkpoints must be sorted within [0, n_walks]")
        return cp

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, TOLERANCES[name]))

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        for name in ("n_walks", "run_count", "n_jobs"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.master_seed is not None and (not isinstance(self.master_seed, int) or self.master_seed < 0):
            raise ConfigError("master_seed must be a nonnegative integer")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        bad = set(self.tolerances) - set(TOLERANCES)
        if bad:
            raise ConfigError(f"unknown tolerances {sorted(bad)}")
        if self.fit_window is not None and (len(self.fit_window) != 2
                                            or not 0 < self.fit_window[0] < self.fit_window[1]):
            raise ConfigError("fit_window must be [n_lo, n_hi] with 0 < n_lo < n_hi")
        self.reward_model()
        self.checkpoint_array()
        _check_params(self.scenario, self.params)


_REQUIRED = {
    "grid25": ("size",),
    "two_decision_points": ("l1", "l2", "l3", "l4"),
    "single_decision_tradeoff": ("L1", "L2"),
    "sequential_clocks": ("depth",),
    "complete_graph": ("m",),
    "custom": ("graph",),
}


def _check_params(scenario: str, params: Mapping) -> None:
    need = _REQUIRED[scenario]
    missing = [k for k in need if k not in params]
    if missing:
        raise ConfigError(f"{scenario} needs parameters {missing}")
    extra = set(params) - set(need)
    if extra:
        raise ConfigError(f"{scenario} does not take parameters {sorted(extra)}")
    if scenario == "custom":
        return
    for k in need:
        v = params[k]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"{scenario} parameter {k} must be a positive integer")
    if scenario == "complete_graph" and params["m"] < 3:
        raise ConfigError("complete_graph needs m >= 3")
    if scenario == "grid25" and params["size"] < 2:
        raise ConfigError("grid size must be >= 2")


def generate_topology(scenario: str, params: Mapping | None = None) -> DirectedGraph:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    params = dict(DEFAULTS[scenario]["params"] if params is None else params)
    _check_params(scenario, params)
    if scenario == "custom":
        return load_graph(params["graph"])
    return getattr(topologies, scenario)(**params)


# ---------------------------------------------------------------------------
# slope fitting


@dataclass(frozen=True)
class SlopeFit:
    exponent: float
    stderr: float
    window: tuple[float, float]
    intercept: float = 0.0
    points: int = 0


def final_decades(n_max: float, decades: float = 2.0) -> tuple[float, float]:
    return (n_max / 10 ** decades, n_max)


def fit_loglog_slope(n, values, window: Sequence[float] | None = None) -> SlopeFit:
    """Least-squares slope of ``log(value)`` against ``log(n)`` over ``window`` (inclusive).

    The default window is the final two decades of the positive ``n``.
    """
    n = np.asarray(n, dtype=float)
    v = np.asarray(values, dtype=float)
    if n.shape != v.shape:
        raise FitError("n and values must have the same shape")
    pos = n > 0
    if window is None:
        if not pos.any():
            raise FitError("no positive n")
        window = final_decades(n[pos].max())
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise FitError("window must satisfy n_lo < n_hi")
    sel = pos & (n >= lo) & (n <= hi)
    if sel.sum() < 5:
        raise FitError(f"need >= 5 points in window [{lo:g}, {hi:g}], got {int(sel.sum())}")
    if np.any(~(v[sel] > 0)):
        raise FitError("values in the fit window must be positive")
    x, y = np.log(n[sel]), np.log(v[sel])
    if np.ptp(y) == 0:
        return SlopeFit(0.0, 0.0, (lo, hi), float(y[0]), int(sel.sum()))
    res = stats.linregress(x, y)
    return SlopeFit(float(res.slope), float(res.stderr), (lo, hi), float(res.intercept), int(sel.sum()))


# ---------------------------------------------------------------------------
# orchestration


@dataclass
class ExperimentResult:
    output_dir: Path
    summary: dict

    @property
    def passed(self) -> bool:
        return self.summary["passed"]


def _check(name: str, value: float, target: float | None, tolerance: float, passed: bool, **extra) -> dict:
    d = {"name": name, "value": _num(value), "target": _num(target), "tolerance": tolerance,
         "passed": bool(passed)}
    d.update(extra)
    return d


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _predictions(cfg: ExperimentConfig, g: DirectedGraph, c, m: RewardModel, cp: np.ndarray, out: Path):
    """Write analytical curves where the scenario has them; returns extra summary entries."""
    sc = cfg.scenario
    extra: dict[str, Any] = {}
    if sc == "single_decision_tradeoff":
        u = UrnSpec(g.weights()[:2], [m.f(cfg.params["L1"]), m.f(cfg.params["L2"])])
        r2 = transient_two_edge(u, cp)
        rows = np.column_stack([1 - r2, r2])
        _write_predicted(out, cp, {0: rows[:, 0], 1: rows[:, 1]}, "transient")
        extra["n_star"] = exploration_threshold(u)
        extra["predicted_slope"] = decay_exponent(*u.rewards)
    elif sc in ("two_decision_points", "complete_graph") or (sc == "custom" and _recursive_ok(g, m)):
        tr = recursive_trajectory(g, c, m, None, cfg.n_walks, cp)
        write_trajectory_csv(tr, out / "predicted.csv", method="recursive")
    elif sc == "sequential_clocks":
        ch = exponent_chain(m.reward_fn, cfg.params["depth"])
        first = exponent_chain(m.reward_fn, cfg.params["depth"], clock_rule="first_order")
        extra["predicted_clock_exponents"] = list(ch.clock_exponents)
        extra["predicted_beta_exponents"] = list(ch.beta_exponents)
        extra["first_order_clock_exponents"] = list(first.clock_exponents)
        extra["first_order_beta_exponents"] = list(first.beta_exponents)
    return extra


def _recursive_ok(g, m) -> bool:
    try:
        check_mode(g, m)
    except UnsupportedModeError:
        return False
    return g.edge_count <= 200


def _write_predicted(out: Path, cp, series: Mapping[int, np.ndarray], method: str) -> None:
    import csv
    with open(out / "predicted.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "entity_kind", "entity_id", "value", "method"])
        for k, n in enumerate(cp):
            for e, vals in series.items():
                w.writerow([int(n), "edge_rw", e, repr(float(vals[k])), method])


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Simulate, predict, write artifacts and evaluate tolerance checks."""
    cfg.validate()
    if "simulation" in cfg.methods and cfg.master_seed is None:
        raise ConfigError("a master seed is required for simulation")
    m = cfg.reward_model()
    g = generate_topology(cfg.scenario, cfg.params)
    if cfg.scenario in ("two_decision_points", "complete_graph") and "analytic" in cfg.methods:
        try:
            check_mode(g, m)
        except UnsupportedModeError as exc:
            raise ConfigError(str(exc)) from exc
    c = classify_edges(g)
    cp = cfg.checkpoint_array()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    save_graph(g, out / "graph.json")
    meta: dict[str, Any] = {"L_min": _num(c.L_min), "decision_points": sorted(c.decision_points)}
    if "simulation" in cfg.methods:
        traj = simulate_ensemble(g, c, m, None, cfg.n_walks, cp, cfg.run_count, cfg.master_seed,
                                 n_jobs=cfg.n_jobs)
        write_trajectory_csv(traj, out / "simulated.csv", method="simulation")
        meta["capped_walks"] = traj.capped_walks
    if "analytic" in cfg.methods:
        meta.update(_predictions(cfg, g, c, m, cp, out))
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    _write_plot_script(out)
    summary = evaluate(out)
    return ExperimentResult(out, summary)


def _load_series(path: Path):
    return read_trajectory_csv(path) if path.exists() else None


def evaluate(output_dir: str | Path) -> dict:
    """Recompute the verdicts from the files in ``output_dir``; writes ``summary.json``."""
    out = Path(output_dir)
    cfg = ExperimentConfig.load(out / "config.json")
    meta = json.loads((out / "meta.json").read_text())
    g = load_graph(out / "graph.json")
    sim = _load_series(out / "simulated.csv")
    pred = _load_series(out / "predicted.csv")
    checks: list[dict] = []
    fits: list[dict] = []
    if sim is not None:
        checks, fits = _VERDICTS.get(cfg.scenario, _no_verdicts)(cfg, meta, g, sim, pred)
    summary = {
        "scenario": cfg.scenario,
        "master_seed": cfg.master_seed,
        "run_count": cfg.run_count,
        "n_walks": cfg.n_walks,
        "checks": checks,
        "fits": fits,
        "passed": all(ch["passed"] for ch in checks),
        "meta": meta,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _no_verdicts(cfg, meta, g, sim, pred):
    return [], []


def _window(cfg, n):
    if cfg.fit_window is not None:
        return tuple(cfg.fit_window)
    return final_decades(float(np.max(n)))


def _tradeoff_verdicts(cfg, meta, g, sim, pred):
    n, y = sim[("edge_rw", "1")]
    w = g.weights()
    nstar = meta.get("n_star")
    checks, fits = [], []
    plateau = w[1] / (w[0] + w[1])
    early = (n > 0) & (n <= nstar) if nstar else np.zeros(n.size, bool)
    if early.any():
        dev = float(np.max(np.abs(y[early] - plateau)))
        checks.append(_check("plateau_deviation", dev, 0.0, cfg.tolerance("plateau"),
                             dev <= cfg.tolerance("plateau")))
    target = meta.get("predicted_slope")
    if target is not None:
        fit = fit_loglog_slope(n, y, _window(cfg, n))
        fits.append({"entity": "edge_rw:1", "fitted": fit.exponent, "stderr": fit.stderr,
                     "predicted": target, "window": list(fit.window)})
        rel = abs(fit.exponent - target) / abs(target)
        checks.append(_check("decay_slope", fit.exponent, target, cfg.tolerance("slope_rel"),
                             rel <= cfg.tolerance("slope_rel"), relative_error=rel))
    if pred is not None and nstar:
        pn, pv = pred[("edge_rw", "1")]
        late = n > 10 * nstar
        if late.any():
            dev = float(np.max(np.abs(y[late] - pv[late])))
            checks.append(_check("transient_deviation", dev, 0.0, cfg.tolerance("transient_abs"),
                                 dev <= cfg.tolerance("transient_abs")))
    return checks, fits


def _recursive_verdicts(cfg, meta, g, sim, pred):
    checks = []
    if cfg.scenario == "two_decision_points":
        n, spf = sim[("spf", "all")]
        checks.append(_check("final_shortest_path_fraction", spf[-1], cfg.tolerance("spf_min"), 0.0,
                             spf[-1] >= cfg.tolerance("spf_min")))
    if pred is not None:
        names = g.edge_names or {}
        edges = sorted(set(names.values())) or range(g.edge_count)
        worst, where = 0.0, None
        for e in edges:
            key = ("edge_rw", str(e))
            if key in sim and key in pred:
                d = np.abs(sim[key][1] - pred[key][1])
                k = int(np.argmax(d))
                if d[k] > worst:
                    worst, where = float(d[k]), {"edge": int(e), "n": int(sim[key][0][k])}
        checks.append(_check("recursive_max_error", worst, 0.0, cfg.tolerance("recursive_abs"),
                             worst <= cfg.tolerance("recursive_abs"), at=where))
    return checks, []


def _clock_verdicts(cfg, meta, g, sim, pred):
    checks, fits = [], []
    depth = cfg.params["depth"]
    tol = cfg.tolerance("exponent_abs")
    names = g.edge_names
    ec, eb = meta.get("predicted_clock_exponents"), meta.get("predicted_beta_exponents")
    for i in range(1, depth + 1):
        node = g.node_names[f"p{i}"]
        n, clock = sim[("node_clock", str(node))]
        fit = fit_loglog_slope(n, clock, _window(cfg, n))
        target = ec[i - 1] if ec else None
        fits.append({"entity": f"clock:p{i}", "fitted": fit.exponent, "stderr": fit.stderr,
                     "predicted": target, "window": list(fit.window)})
        if target is not None:
            checks.append(_check(f"clock_slope_p{i}", fit.exponent, target, tol,
                                 abs(fit.exponent - target) <= tol))
        n, r = sim[("edge_rw", str(names[f"beta{i}"]))]
        fit = fit_loglog_slope(n, r, _window(cfg, n))
        target = eb[i - 1] if eb else None
        fits.append({"entity": f"beta:{i}", "fitted": fit.exponent, "stderr": fit.stderr,
                     "predicted": target, "window": list(fit.window)})
        if target is not None:
            checks.append(_check(f"beta_slope_{i}", fit.exponent, target, tol,
                                 abs(fit.exponent - target) <= tol))
    return checks, fits


def _grid_verdicts(cfg, meta, g, sim, pred):
    n, spf = sim[("spf", "all")]
    checks = [_check("final_shortest_path_fraction", spf[-1], cfg.tolerance("grid_spf_min"), 0.0,
                     spf[-1] >= cfg.tolerance("grid_spf_min"))]
    mask = shortest_dag_mask(g)
    share = {}
    for e in np.flatnonzero(mask):
        u = int(g.tails[e])
        if u != g.destination:
            share[u] = share.get(u, 0.0) + sim[("edge_rw", str(e))][1][-1]
    worst = min(share.values())
    tol = cfg.tolerance("dominance_min")
    checks.append(_check("shortest_route_dominance", worst, tol, 0.0, worst > tol,
                         node=min(share, key=share.get)))
    return checks, []


_VERDICTS = {
    "single_decision_tradeoff": _tradeoff_verdicts,
    "two_decision_points": _recursive_verdicts,
    "complete_graph": _recursive_verdicts,
    "custom": _recursive_verdicts,
    "sequential_clocks": _clock_verdicts,
    "grid25": _grid_verdicts,
}


PLOT_SCRIPT = '''"""Plot simulated and predicted normalized weights. Needs matplotlib."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
series = defaultdict(lambda: ([], []))
for name in ("simulated.csv", "predicted.csv"):
    path = here / name
    if not path.exists():
        continue
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["entity_kind"] != "edge_rw" or int(row["n"]) <= 0:
                continue
            key = (row.get("method", name), row["entity_id"])
            series[key][0].append(int(row["n"]))
            series[key][1].append(float(row["value"]))

fig, ax = plt.subplots()
for (method, edge), (n, v) in sorted(series.items()):
    ax.plot(n, v, "-" if method == "simulation" else "--", label=f"{method} e{edge}")
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("n")
ax.set_ylabel("normalized weight")
if len(series) <= 12:
    ax.legend(fontsize="small")
fig.savefig(here / "weights.png", dpi=150)
'''


def _write_plot_script(out: Path) -> None:
    (out / "plot.py").write_text(PLOT_SCRIPT)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    params = {**cfg.params, **kw.pop("params", {})}
    new = replace(cfg, params=params, **kw)
    new.validate()
    return new
