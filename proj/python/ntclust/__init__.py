"""Clustering with jointly learned nonlinear transforms."""

from ._ntclust import (
    ConfigError,
    DataError,
    FitReport,
    FitResult,
    HyperParams,
    NumericError,
    TransformModel,
    assign,
    cluster_accuracy,
    coherence,
    conditioning,
    fit,
    knn_classify,
    load_matrix,
    load_model,
    nmi,
    save_matrix,
    save_model,
    standardize,
    synth_clusters,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FitReport",
    "FitResult",
    "HyperParams",
    "NumericError",
    "TransformModel",
    "assign",
    "cluster_accuracy",
    "coherence",
    "conditioning",
    "fit",
    "knn_classify",
    "load_matrix",
    "load_model",
    "nmi",
    "save_matrix",
    "save_model",
    "standardize",
    "synth_clusters",
]
