"""Unsupervised curation of time-stamped field-photo collections.

The pipeline: per-image deep feature vectors are reduced with PCA,
augmented with accumulated-degree-day weather exposure, projected to 2D
with t-SNE for eyeballing the cluster count, and grouped with KMeans.
A review service lets a human mark miss-clustered images, label clusters,
and merge them into final groups with precision bookkeeping.
"""

from taphos.manifest import ImageRecord, Manifest, load_manifest
from taphos.embeddings import EmbeddingMatrix, load_embeddings, save_embeddings
from taphos.weather import (
    AddVector,
    AugmentedMatrix,
    WeatherObservation,
    WeatherSeries,
    augment_features,
    build_weather_block,
    compute_add,
    daily_average,
    load_weather,
)
from taphos.pca import PcaModel, fit_pca, pca_transform
from taphos.tsne import (
    Embedding2D,
    TsneConfig,
    conditional_affinities,
    export_scatter,
    run_tsne,
    symmetrize_affinities,
)
from taphos.kmeans import ClusterModel, inertia, kmeans_assign, kmeans_fit
from taphos.evaluation import (
    EvaluationSession,
    PrecisionReport,
    apply_merge,
    compute_precision,
    export_marks,
)
from taphos.pipeline import PipelineConfig, RunArtifacts, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "ImageRecord",
    "Manifest",
    "load_manifest",
    "EmbeddingMatrix",
    "load_embeddings",
    "save_embeddings",
    "WeatherObservation",
    "WeatherSeries",
    "AddVector",
    "AugmentedMatrix",
    "load_weather",
    "daily_average",
    "compute_add",
    "build_weather_block",
    "augment_features",
    "PcaModel",
    "fit_pca",
    "pca_transform",
    "TsneConfig",
    "Embedding2D",
    "conditional_affinities",
    "symmetrize_affinities",
    "run_tsne",
    "export_scatter",
    "ClusterModel",
    "kmeans_fit",
    "kmeans_assign",
    "inertia",
    "EvaluationSession",
    "PrecisionReport",
    "apply_merge",
    "compute_precision",
    "export_marks",
    "PipelineConfig",
    "RunArtifacts",
    "run_pipeline",
]
