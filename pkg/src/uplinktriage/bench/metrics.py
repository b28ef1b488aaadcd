"""Per-task evaluation metrics."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..core import QueryRecord, ValidationError
from ..index import RankedMatches, VectorIndex, group_mean_similarity

Confusion = Mapping[str, Mapping[str, int]]


def confusion_counts(truth: Sequence[str], predicted: Sequence[str]) -> dict[str, Counter]:
    """``{true_label: Counter(predicted_label -> count)}``."""
    if len(truth) != len(predicted):
        raise ValueError("truth and predictions differ in length")
    out: dict[str, Counter] = {}
    for t, p in zip(truth, predicted):
        out.setdefault(t, Counter())[p] += 1
    return out


def recall_at_k(matches: RankedMatches, truth_group: str, labels: Mapping[str, str]) -> int:
    """1 if any retrieved hint carries the query's group label."""
    return int(any(labels[m.hint_id] == truth_group for m in matches))


def top1_accuracy(indicators: Iterable[int | bool]) -> float:
    vals = [1.0 if x else 0.0 for x in indicators]
    if not vals:
        raise ValidationError("empty-queries", "top-1 accuracy over zero queries")
    return sum(vals) / len(vals)


def _pair_filter(pair_id: object, tag: str):
    return lambda e: e.meta.get("pair_id") == pair_id and e.meta.get("time_tag") == tag


def time_preference_accuracy(queries: Sequence[QueryRecord], index: VectorIndex, *, aggregate: str = "mean") -> float:
    """Share of after-scene queries closer to their pair's after hints than to its before hints.

    Similarity to a group is the mean cosine over the group (``aggregate="max"``
    uses the best single hint). Equal similarities count as wrong.
    """
    if not queries:
        raise ValidationError("empty-queries", "time preference over zero queries")
    correct = 0
    for q in queries:
        pair = q.meta["pair_id"]
        after = group_mean_similarity(index, q.embedding, _pair_filter(pair, "after"), aggregate=aggregate)
        before = group_mean_similarity(index, q.embedding, _pair_filter(pair, "before"), aggregate=aggregate)
        correct += after > before
    return correct / len(queries)


def prefers(evidence: Mapping[str, float], predicted: str, truth: str, rival: str) -> bool:
    """True when the head's evidence for ``truth`` strictly beats ``rival``.

    Heads without evidence scores only emit a label, so the label decides.
    """
    if not evidence:
        return predicted == truth
    return evidence.get(truth, 0.0) > evidence.get(rival, 0.0)


def balanced_accuracy(confusion: Confusion) -> float:
    """Unweighted mean of per-class recall over the true classes."""
    if not confusion:
        raise ValidationError("empty-queries", "balanced accuracy over zero queries")
    recalls = []
    for cls in sorted(confusion):
        row = confusion[cls]
        total = sum(row.values())
        if total == 0:
            raise ValidationError("empty-class", f"class {cls!r} has no queries")
        recalls.append(row.get(cls, 0) / total)
    return float(np.mean(recalls))


def macro_f1(confusion: Confusion, labels: Iterable[str] = ()) -> float:
    """Mean per-class F1 over true, predicted and any extra ``labels``.

    A class that is never predicted correctly scores F1 = 0 (including the 0/0 case).
    """
    classes = set(labels) | set(confusion)
    for row in confusion.values():
        classes.update(row)
    if not classes:
        raise ValidationError("empty-queries", "macro-F1 over zero queries")
    f1s = []
    for c in sorted(classes):
        tp = confusion.get(c, {}).get(c, 0)
        fn = sum(confusion.get(c, {}).values()) - tp
        fp = sum(row.get(c, 0) for t, row in confusion.items() if t != c)
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(f1s))


def false_positive_rate(truth: Sequence[str], predicted: Sequence[str], negative: str = "normal") -> float | None:
    """Share of ``negative`` queries flagged as some other class; None without negatives."""
    flagged = [p != negative for t, p in zip(truth, predicted) if t == negative]
    if not flagged:
        return None
    return sum(flagged) / len(flagged)
