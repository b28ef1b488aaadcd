"""Decision heads: turn retrieved evidence or hint embeddings into a task label.

Every head breaks ties the same way, by ascending label.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import Embedding, HintRecord, QueryRecord, ValidationError
from .index import RankedMatches, row_dots

HEAD_NAMES = ("retrieval", "centroid", "probe", "random", "constant", "oracle")
DEFAULT_RIDGE_LAMBDA = 1e-3


@dataclass(frozen=True)
class Prediction:
    label: str
    head: str
    confidence: float | None = None
    # per-class evidence, when the head has one (weights, cosines or probe scores)
    scores: Mapping[str, float] = field(default_factory=dict, compare=False, repr=False)

    def ranked_labels(self) -> list[str]:
        """Labels ordered by evidence, best first; just ``[label]`` for heads without scores."""
        if not self.scores:
            return [self.label]
        return sorted(self.scores, key=lambda c: (-self.scores[c], c))


def check_head(name: str) -> str:
    if name not in HEAD_NAMES:
        raise ValidationError("unknown-head", f"unknown head {name!r}; choose from {', '.join(HEAD_NAMES)}", field="head")
    return name


def _argmax_label(scores: Mapping[str, float]) -> str:
    return min(scores, key=lambda c: (-scores[c], c))


def knn_vote(matches: RankedMatches, labels: Mapping[str, str]) -> Prediction:
    """Similarity-weighted vote over the retrieved hints.

    Weights are ``max(score, 0)``. When every weight is zero the vote falls back
    to a plain count.
    """
    if not matches:
        raise ValidationError("empty-matches", "knn vote needs at least one match")
    weights: dict[str, float] = {}
    counts: Counter[str] = Counter()
    for hint_id, score in matches:
        try:
            label = labels[hint_id]
        except KeyError:
            raise ValidationError("unlabeled-id", f"no label for hint {hint_id!r}") from None
        weights[label] = weights.get(label, 0.0) + max(score, 0.0)
        counts[label] += 1
    total = sum(weights.values())
    if total <= 0.0:
        tally = {c: float(n) for c, n in counts.items()}
        total = float(len(matches))
    else:
        tally = weights
    winner = _argmax_label(tally)
    return Prediction(winner, "retrieval", tally[winner] / total, scores=dict(tally))


@dataclass(frozen=True, eq=False)
class CentroidModel:
    classes: tuple[str, ...]
    centroids: np.ndarray  # (C, dim), unit rows

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])

    def centroid(self, label: str) -> Embedding:
        return Embedding(self.centroids[self.classes.index(label)].astype(np.float32))


def _group_by_label(hints: Sequence[HintRecord]) -> dict[str, list[HintRecord]]:
    groups: dict[str, list[HintRecord]] = {}
    for h in hints:
        groups.setdefault(h.label, []).append(h)
    return groups


def fit_centroids(hints: Sequence[HintRecord]) -> CentroidModel:
    groups = _group_by_label(hints)
    if len(groups) < 2:
        raise ValidationError("single-class", f"need at least two classes, got {sorted(groups)}")
    classes = tuple(sorted(groups))
    rows = []
    for c in classes:
        mean = np.mean([h.embedding.as_float64() for h in groups[c]], axis=0)
        norm = np.linalg.norm(mean)
        if norm < 1e-12:
            raise ValidationError("zero-vector", f"centroid of class {c!r} vanishes")
        rows.append(mean / norm)
    centroids = np.array(rows)
    centroids.flags.writeable = False
    return CentroidModel(classes, centroids)


def _query_vector(q: Embedding | np.ndarray, dim: int) -> np.ndarray:
    v = q.values if isinstance(q, Embedding) else np.asarray(q)
    if v.shape[0] != dim:
        raise ValidationError("dim-mismatch", f"dimension mismatch: {v.shape[0]} vs {dim}", field="embedding")
    return v.astype(np.float64)


def centroid_predict(model: CentroidModel, q: Embedding) -> Prediction:
    sims = row_dots(model.centroids, _query_vector(q, model.dim))
    scores = {c: float(s) for c, s in zip(model.classes, sims)}
    label = _argmax_label(scores)
    return Prediction(label, "centroid", scores[label], scores=scores)


@dataclass(frozen=True, eq=False)
class RidgeProbeModel:
    classes: tuple[str, ...]
    weights: np.ndarray  # (dim, C)
    lam: float

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


def design_matrices(hints: Sequence[HintRecord]) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Stack hint embeddings into X (n, dim) and one-hot targets Y (n, C)."""
    classes = tuple(sorted({h.label for h in hints}))
    col = {c: j for j, c in enumerate(classes)}
    X = np.stack([h.embedding.as_float64() for h in hints])
    Y = np.zeros((len(hints), len(classes)))
    for i, h in enumerate(hints):
        Y[i, col[h.label]] = 1.0
    return X, Y, classes


def solve_ridge(X: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
    """W = (X^T X + lam I)^-1 X^T Y, solved with LAPACK rather than an explicit inverse."""
    A = X.T @ X + lam * np.eye(X.shape[1])
    return np.linalg.solve(A, X.T @ Y)


def fit_ridge_probe(hints: Sequence[HintRecord], lam: float = DEFAULT_RIDGE_LAMBDA) -> RidgeProbeModel:
    if not lam > 0:
        raise ValidationError("bad-lambda", f"ridge lambda must be positive, got {lam}", field="lambda")
    X, Y, classes = design_matrices(hints)
    if len(classes) < 2:
        raise ValidationError("single-class", f"need at least two classes, got {list(classes)}")
    W = solve_ridge(X, Y, lam)
    W.flags.writeable = False
    return RidgeProbeModel(classes, W, float(lam))


def probe_predict(model: RidgeProbeModel, q: Embedding) -> Prediction:
    out = row_dots(model.weights.T, _query_vector(q, model.dim))
    scores = {c: float(s) for c, s in zip(model.classes, out)}
    label = _argmax_label(scores)
    return Prediction(label, "probe", max(scores[label], 0.0), scores=scores)


def random_baseline(label_set: Sequence[str], rng) -> Prediction:
    """Uniform draw over the distinct labels. ``rng`` needs a ``randbelow(n)`` method."""
    labels = sorted(set(label_set))
    if not labels:
        raise ValidationError("empty-labels", "random baseline needs at least one label")
    return Prediction(labels[rng.randbelow(len(labels))], "random")


def majority_label(hints: Sequence[HintRecord]) -> str:
    if not hints:
        raise ValidationError("empty-hint-set", "constant baseline needs at least one hint")
    counts = Counter(h.label for h in hints)
    return min(counts, key=lambda c: (-counts[c], c))


def constant_baseline(hints: Sequence[HintRecord]) -> Prediction:
    """Retrieval-free head: always the most frequent hint label."""
    return Prediction(majority_label(hints), "constant")


def oracle(q: QueryRecord) -> Prediction:
    return Prediction(q.label, "oracle", 1.0)
