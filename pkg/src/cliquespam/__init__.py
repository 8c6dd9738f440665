"""Opinion-spammer detection on user-user co-review graphs.

Random-forest node and edge potentials, trusted-edge sparsification and
loopy belief propagation, with active-learning samplers and ranking metrics.
"""

from .data import BENIGN, SPAMMER, Dataset, Review, load_dataset
from .forest import Forest, ForestParams
from .graph import UserGraph, build_clique_graph
from .lbp import PMRF, LBPParams, brute_force_marginals, run_lbp

__version__ = "0.1.0"
