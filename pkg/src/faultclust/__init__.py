"""Unsupervised clustering toolkit for 3-phase voltage/current fault recordings.

Pipeline: FFT magnitude features per channel, PCA (optionally followed by
exact t-SNE), K-Means, and purity/entropy/silhouette evaluation against
expert labels, plus a synthetic fault generator and an HTTP API backing
the labeling UI.
"""

from .cluster import LloydKMeans, elbow_curve, silhouette_samples, silhouette_score
from .dimred import Embedding, ExactTsne, PrincipalComponents, reduce_for_clustering
from .evalmetrics import (
    ContingencyTable,
    MetricReport,
    aggregate_report,
    build_metric_report,
    cluster_entropy,
    cluster_purity,
    cluster_size_table,
    contingency,
    purity,
    size_dispersion,
)
from .labels import LabelRecord, VocabularyError, load_labels_csv, save_labels_csv
from .preprocess import Decomposition, decompose, detect_anomalies, normalize, zero_indicator
from .spectral import FeatureMatrix, SpectralFeaturizer, Spectrum, build_features, fft_magnitude, normalize_spectrum
from .synthgen import EVENT_TYPES, FaultSpec, generate, generate_dataset
from .waveform_store import (
    Dataset,
    DatasetMeta,
    WaveformRecord,
    dataset_from_array,
    load_dataset,
    save_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "ContingencyTable",
    "Dataset",
    "DatasetMeta",
    "Decomposition",
    "Embedding",
    "EVENT_TYPES",
    "ExactTsne",
    "FaultSpec",
    "FeatureMatrix",
    "LabelRecord",
    "LloydKMeans",
    "MetricReport",
    "PrincipalComponents",
    "SpectralFeaturizer",
    "Spectrum",
    "VocabularyError",
    "WaveformRecord",
    "aggregate_report",
    "build_features",
    "build_metric_report",
    "cluster_entropy",
    "cluster_purity",
    "cluster_size_table",
    "contingency",
    "dataset_from_array",
    "decompose",
    "detect_anomalies",
    "elbow_curve",
    "fft_magnitude",
    "generate",
    "generate_dataset",
    "load_dataset",
    "load_labels_csv",
    "normalize",
    "normalize_spectrum",
    "purity",
    "reduce_for_clustering",
    "save_dataset",
    "save_labels_csv",
    "silhouette_samples",
    "silhouette_score",
    "size_dispersion",
    "zero_indicator",
]
