"""Prototype-based classification on the Grassmann manifold (GLGQ / GRLGQ)."""

from .manifold import (
    PrincipalDecomposition,
    Subspace,
    SubspaceWithFactors,
    adaptive_squared_distance,
    g_matrix_diagonal,
    geodesic_distance,
    image_contribution,
    orthonormalize_columns,
    pixel_influence,
    principal_decomposition,
    single_vector_angle,
    squared_geodesic_distance,
    subspace_from_set,
)
from .model import (
    ModelState,
    Prototype,
    SampleOutcome,
    TrainConfig,
    apply_prototype_update,
    apply_relevance_update,
    evaluate,
    find_winners,
    fit,
    init_prototypes,
    predict_set,
    predict_vector,
    prototype_gradient,
    relevance_gradient,
    sample_cost,
    train_step,
)

__all__ = [
    "PrincipalDecomposition", "Subspace", "SubspaceWithFactors",
    "adaptive_squared_distance", "g_matrix_diagonal", "geodesic_distance",
    "image_contribution", "orthonormalize_columns", "pixel_influence",
    "principal_decomposition", "single_vector_angle",
    "squared_geodesic_distance", "subspace_from_set",
    "ModelState", "Prototype", "SampleOutcome", "TrainConfig",
    "apply_prototype_update", "apply_relevance_update", "evaluate",
    "find_winners", "fit", "init_prototypes", "predict_set",
    "predict_vector", "prototype_gradient", "relevance_gradient",
    "sample_cost", "train_step",
]

__version__ = "0.1.0"
