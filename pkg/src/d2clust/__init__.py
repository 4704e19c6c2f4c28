"""Clustering of discrete distributions under the Mallows distance."""

from .centroid import (CentroidState, centroid_weight_lp, init_centroid, update_centroid,
                       update_supports)
from .core import (Config, D2Error, DataObject, Distribution, GroundMetric, SolverError,
                   ValidationError, WeightedDataset, validate_dataset)
from .d2 import Assignment, assign_labels, constrained_d2_cluster, d2_cluster
from .metrics import categorical_distance, davies_bouldin, mean_squared_dispersion, mm_distance_sq
from .parallel import (HierarchyTrace, SegmentJob, SegmentResult, WorkerError, merge_level,
                       parallel_d2_cluster, propagate_labels, rollup_weights,
                       sequential_d2_cluster)
from .segmentation import binary_split_segment, build_codebook, vq_segment
from .synth import generate
from .transport import (Coupling, mallows_sq, object_distance, object_distance_sq,
                        solve_transportation)

__all__ = [
    "Assignment", "CentroidState", "Config", "Coupling", "D2Error", "DataObject",
    "Distribution", "GroundMetric", "HierarchyTrace", "SegmentJob", "SegmentResult",
    "SolverError", "ValidationError", "WeightedDataset", "WorkerError", "assign_labels",
    "binary_split_segment", "build_codebook", "categorical_distance", "centroid_weight_lp",
    "constrained_d2_cluster", "d2_cluster", "davies_bouldin", "generate", "init_centroid",
    "mallows_sq", "mean_squared_dispersion", "merge_level", "mm_distance_sq",
    "object_distance", "object_distance_sq", "parallel_d2_cluster", "propagate_labels",
    "rollup_weights", "sequential_d2_cluster", "solve_transportation", "update_centroid",
    "update_supports", "validate_dataset", "vq_segment",
]
