"""Reinforced weighted random walks on directed graphs."""
from .graph import (DirectedGraph, EdgeClassification, EdgeRole, GraphError, build_graph,
                    classify_edges, load_graph, prune_to_shortest_dag, save_graph,
                    shortest_path_count)
from .rewards import Constant, InverseLinear, PowerLaw, RewardMode, RewardModel, Tabled
from .walk import (Trajectory, WalkOutcome, WeightState, apply_reward, run_walk, simulate_ensemble,
                   simulate_run)

__all__ = [
    "DirectedGraph", "EdgeClassification", "EdgeRole", "GraphError", "build_graph",
    "classify_edges", "load_graph", "prune_to_shortest_dag", "save_graph", "shortest_path_count",
    "Constant", "InverseLinear", "PowerLaw", "RewardMode", "RewardModel", "Tabled",
    "Trajectory", "WalkOutcome", "WeightState", "apply_reward", "run_walk", "simulate_ensemble",
    "simulate_run",
]

__version__ = "0.1.0"
