"""Joint and individual variation in multi-block data."""

__version__ = "0.1.0"

from .core import (
    JiveDecomposition,
    JiveRanks,
    estimate_jive,
    orthogonalize,
    reduce_then_estimate,
    variation_explained,
)
from .estimator import JIVE, SparseJIVE
from .exceptions import (
    DataFileError,
    DegenerateBlockError,
    InputError,
    JiveError,
    RankBoundsError,
)
from .metrics import consensus_pca, swiss_permutation_test, swiss_score
from .multiblock import Block, MultiBlockDataset, preprocess
from .rank_selection import RankSelection, effective_rank, select_ranks
from .simulation import (
    SimulationSpec,
    generate_random_model,
    generate_subtype_model,
    generate_toy,
    plant_cluster_signal,
)
from .sparse import SparsityConfig, estimate_sparse_jive, sparse_rank1

__all__ = [
    "Block",
    "DataFileError",
    "DegenerateBlockError",
    "InputError",
    "JIVE",
    "JiveDecomposition",
    "JiveError",
    "JiveRanks",
    "MultiBlockDataset",
    "RankBoundsError",
    "RankSelection",
    "SimulationSpec",
    "SparseJIVE",
    "SparsityConfig",
    "consensus_pca",
    "effective_rank",
    "estimate_jive",
    "estimate_sparse_jive",
    "generate_random_model",
    "generate_subtype_model",
    "generate_toy",
    "orthogonalize",
    "plant_cluster_signal",
    "preprocess",
    "reduce_then_estimate",
    "select_ranks",
    "sparse_rank1",
    "swiss_permutation_test",
    "swiss_score",
    "variation_explained",
]
