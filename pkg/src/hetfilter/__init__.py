"""Filtering-based opinion dynamics with heterogeneous per-node thresholds."""

from .dynamics import DynamicsConfig, simulate, step, trim, witness_initial_condition
from .graph import Graph, degree, is_connected, min_degree, vertex_connectivity
from .robustness import certify_robust_halfsize, is_reachable, is_robust_exact, non_reachable_sets

__version__ = "0.1.0"
