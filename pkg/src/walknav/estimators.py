"""scikit-learn style wrappers.

The graph is the input of ``fit`` for the trajectory estimators; the fitted
trajectory is then available as ``trajectory_`` and ``transform`` returns
the mean normalized weights at the checkpoints. The two regressors map walk
counts ``n`` to normalized weights.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .experiments import fit_loglog_slope
from .graph import DirectedGraph, classify_edges
from .meanfield import recursive_trajectory
from .rewards import RewardModel
from .urn import UrnSpec, transient_two_edge
from .walk import simulate_ensemble


def _check_graph(X) -> DirectedGraph:
    if not isinstance(X, DirectedGraph):
        raise TypeError(f"expected a DirectedGraph, got {type(X).__name__}")
    return X


class _TrajectoryEstimator(BaseEstimator):
    def _model(self) -> RewardModel:
        d = {"kind": self.reward, "mode": self.mode}
        if self.reward == "power_law":
            d["phi"] = self.phi
        return RewardModel.from_dict(d)

    def transform(self, X=None):
        check_is_fitted(self, "trajectory_")
        return self.trajectory_.mean_normalized_weights

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


class WalkEnsembleSimulator(_TrajectoryEstimator):
    """Monte Carlo ensemble of reinforced walks on the graph passed to ``fit``."""

    def __init__(self, reward="inverse_linear", phi=1.0, mode="multiple", n_walks=10_000,
                 run_count=10, checkpoints=None, random_state=0, n_jobs=1):
        self.reward = reward
        self.phi = phi
        self.mode = mode
        self.n_walks = n_walks
        self.run_count = run_count
        self.checkpoints = checkpoints
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        g = _check_graph(X)
        if not isinstance(self.random_state, (int, np.integer)) or self.random_state < 0:
            raise ValueError("random_state must be a nonnegative integer master seed")
        self.classification_ = classify_edges(g)
        self.trajectory_ = simulate_ensemble(g, self.classification_, self._model(), None,
                                             self.n_walks, self.checkpoints, self.run_count,
                                             int(self.random_state), n_jobs=self.n_jobs)
        self.checkpoints_ = self.trajectory_.checkpoints
        return self


class RecursiveMeanField(_TrajectoryEstimator):
    """Deterministic mean recursion on the graph passed to ``fit``."""

    def __init__(self, reward="inverse_linear", phi=1.0, mode="single", n_walks=10_000,
                 checkpoints=None, horizon=None):
        self.reward = reward
        self.phi = phi
        self.mode = mode
        self.n_walks = n_walks
        self.checkpoints = checkpoints
        self.horizon = horizon

    def fit(self, X, y=None):
        g = _check_graph(X)
        self.classification_ = classify_edges(g)
        self.trajectory_ = recursive_trajectory(g, self.classification_, self._model(), None,
                                                self.n_walks, self.checkpoints, self.horizon)
        self.checkpoints_ = self.trajectory_.checkpoints
        return self


class TwoEdgeTransient(RegressorMixin, BaseEstimator):
    """Closed-form mean normalized weight of the losing edge as a function of ``n``."""

    def __init__(self, initial_weights=(1.0, 1.0), rewards=(1.0, 0.5)):
        self.initial_weights = initial_weights
        self.rewards = rewards

    def fit(self, X=None, y=None):
        self.urn_ = UrnSpec(self.initial_weights, self.rewards)
        transient_two_edge(self.urn_, 1.0)  # raises on invalid reward order
        return self

    def predict(self, X):
        check_is_fitted(self, "urn_")
        n = check_array(X, ensure_2d=False).reshape(-1)
        return np.asarray(transient_two_edge(self.urn_, n), dtype=float)


class LogLogSlopeRegressor(RegressorMixin, BaseEstimator):
    """Power law ``y = exp(intercept) * n ** coef`` fitted in log-log space."""

    def __init__(self, window=None):
        self.window = window

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_2d=False)
        fit = fit_loglog_slope(np.ravel(X), y, self.window)
        self.coef_ = fit.exponent
        self.intercept_ = fit.intercept
        self.stderr_ = fit.stderr
        self.window_ = fit.window
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        n = np.ravel(check_array(X, ensure_2d=False))
        return np.exp(self.intercept_) * n ** self.coef_
