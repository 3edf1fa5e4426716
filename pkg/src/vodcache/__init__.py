"""Markov request model for recommendation-driven VoD workloads and an
edge-cache simulator comparing LRU with recommendation-aware prefetching."""
from .cachesim import SimConfig, SimReport, run_simulation
from .policies import LruPolicy, PreFetchPolicy
from .recgraph import RecommendationGraph, generate_ba_graph, generate_directed_graph
from .reqmodel import TransitionMatrix, build_transition_matrix, stationary_distribution

__version__ = "0.1.0"

__all__ = [
    "SimConfig", "SimReport", "run_simulation", "LruPolicy", "PreFetchPolicy",
    "RecommendationGraph", "generate_ba_graph", "generate_directed_graph",
    "TransitionMatrix", "build_transition_matrix", "stationary_distribution",
]
