"""streamtree: streaming multi-label decision trees.

Trees are grown node by node, each node jointly trained to balance its
children, keep classes intact, and avoid gratuitous multi-way sends.
Ensembles of independently initialized trees vote by histogram sum.
"""

from ._backend import backend_name, kernels
from .ensemble import (
    Ensemble,
    predict_dataset,
    predict_ensemble,
    predict_ensemble_scored,
    train_ensemble,
)
from .metrics import (
    EvalReport,
    evaluate,
    inverse_propensities,
    ndcg_at_k,
    precision_at_k,
    psn_at_k,
    psp_at_k,
)
from .model_io import (
    iter_model_trees,
    load_ensemble,
    load_tree,
    read_model_manifest,
    save_ensemble,
    save_tree,
)
from .objective import (
    DirectionMask,
    NodeStats,
    ObjectiveParams,
    balancedness,
    best_direction_subset,
    compute_objective,
    purity,
)
from .regressor import LinearRegressor, OptimizerConfig
from .sparse import DataError, Dataset, Example, SparseVector, dot, parse_dataset, write_dataset
from .tree import Tree, TreeNode, TreeParams, build_tree, node_priority, tree_depth

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Dataset",
    "DirectionMask",
    "Ensemble",
    "EvalReport",
    "Example",
    "LinearRegressor",
    "NodeStats",
    "ObjectiveParams",
    "OptimizerConfig",
    "SparseVector",
    "Tree",
    "TreeNode",
    "TreeParams",
    "backend_name",
    "balancedness",
    "best_direction_subset",
    "build_tree",
    "compute_objective",
    "dot",
    "evaluate",
    "inverse_propensities",
    "iter_model_trees",
    "kernels",
    "load_ensemble",
    "load_tree",
    "ndcg_at_k",
    "node_priority",
    "parse_dataset",
    "precision_at_k",
    "predict_dataset",
    "predict_ensemble",
    "predict_ensemble_scored",
    "psn_at_k",
    "psp_at_k",
    "purity",
    "read_model_manifest",
    "save_ensemble",
    "save_tree",
    "train_ensemble",
    "tree_depth",
    "write_dataset",
]
