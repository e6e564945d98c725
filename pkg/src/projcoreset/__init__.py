"""Coresets for projective clustering.

Seeding by k-line-means++, a line-collapse coreset, deterministic CNW row
selection, their fixed-size composition, a merge-reduce tree for large
inputs and a benchmark harness.
"""

from .cnw import BarrierError, CnwConfig, cnw, rows_for
from .core import (
    Coreset,
    CoresetSource,
    Line,
    Subspace,
    SubspaceSet,
    WeightedPointSet,
    ZeroRowError,
    assign,
    brute_force_opt,
    cost,
    dist_point_to_line,
    dist_point_to_subspace,
    distance_matrix,
    f0,
    f_ell,
    opt_single_subspace,
    partition_over,
)
from .coreset import CoresetQualityParams, fixed_size_coreset, fixed_size_target, k_j_subspace_coreset
from .evaluation import EXACT_RANK, svd_error, uniform_coreset
from .io import Dataset, FormatError, load_dataset, load_dense_csv, load_idx, load_triplets
from .kernels import BACKEND
from .rng import make_rng
from .seeding import SeedingConfig, k_line_means, k_line_means_pp
from .streaming import JlConfig, Reducer, TreeConfig, chunk, jl_project, merge_reduce
from .synth import synth

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BarrierError",
    "CnwConfig",
    "Coreset",
    "CoresetQualityParams",
    "CoresetSource",
    "Dataset",
    "EXACT_RANK",
    "FormatError",
    "JlConfig",
    "Line",
    "Reducer",
    "SeedingConfig",
    "Subspace",
    "SubspaceSet",
    "TreeConfig",
    "WeightedPointSet",
    "ZeroRowError",
    "assign",
    "brute_force_opt",
    "chunk",
    "cnw",
    "cost",
    "dist_point_to_line",
    "dist_point_to_subspace",
    "distance_matrix",
    "f0",
    "f_ell",
    "fixed_size_coreset",
    "fixed_size_target",
    "jl_project",
    "k_j_subspace_coreset",
    "k_line_means",
    "k_line_means_pp",
    "load_dataset",
    "load_dense_csv",
    "load_idx",
    "load_triplets",
    "make_rng",
    "merge_reduce",
    "opt_single_subspace",
    "partition_over",
    "rows_for",
    "svd_error",
    "synth",
    "uniform_coreset",
]
