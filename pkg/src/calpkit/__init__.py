"""Computing functions over capacitated networks: embeddings, placement costs,
rate LPs, schedules and hardness gadgets."""

from .calp import RateSolution, solve_packing_lp, solve_rcalp_colgen, solve_rcalp_mwu
from .embedding import Embedding, REmbedding, cost_C, cost_CC, validate_embedding, validate_rembedding
from .graphs import ComputationDag, DagEdge, NetworkGraph, validate_computation_dag, validate_instance, validate_network
from .oracle import BudgetExceeded, mincost_c_exact, mincost_cc_exact

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "ComputationDag", "DagEdge", "Embedding", "NetworkGraph", "REmbedding", "RateSolution",
    "cost_C", "cost_CC", "mincost_c_exact", "mincost_cc_exact", "solve_packing_lp", "solve_rcalp_colgen",
    "solve_rcalp_mwu", "validate_computation_dag", "validate_embedding", "validate_instance", "validate_network",
    "validate_rembedding",
]
