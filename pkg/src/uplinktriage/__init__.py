"""Embedding-only uplink triage.

Hints (embedding plus metadata) are indexed onboard, queries are matched by
exact cosine search, a decision head picks a label and a compact JSON
telemetry record is the downlink product.
"""

from .core import (
    Embedding,
    HintRecord,
    QueryRecord,
    TaskKind,
    ValidationError,
    cloud_label_from_cover,
    format_hint,
    parse_hint_line,
    validate_and_normalize,
)
from .heads import (
    Prediction,
    centroid_predict,
    constant_baseline,
    fit_centroids,
    fit_ridge_probe,
    knn_vote,
    oracle,
    probe_predict,
    random_baseline,
)
from .index import RankedMatches, VectorIndex, build_index, cosine_similarity, group_mean_similarity, search_topk
from .telemetry import (
    QuantizationScheme,
    TelemetryRecord,
    dequantize_embedding,
    emit_telemetry,
    payload_size,
    quantize_embedding,
    uplink_cost,
)

__version__ = "0.1.0"

__all__ = [
    "build_index",
    "centroid_predict",
    "cloud_label_from_cover",
    "constant_baseline",
    "cosine_similarity",
    "dequantize_embedding",
    "Embedding",
    "emit_telemetry",
    "fit_centroids",
    "fit_ridge_probe",
    "format_hint",
    "group_mean_similarity",
    "HintRecord",
    "knn_vote",
    "oracle",
    "parse_hint_line",
    "payload_size",
    "Prediction",
    "probe_predict",
    "QuantizationScheme",
    "quantize_embedding",
    "QueryRecord",
    "random_baseline",
    "RankedMatches",
    "search_topk",
    "TaskKind",
    "TelemetryRecord",
    "uplink_cost",
    "validate_and_normalize",
    "ValidationError",
    "VectorIndex",
]
