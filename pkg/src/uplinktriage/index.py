"""Exact in-memory cosine index over a hint set.

Brute force on purpose: at a few hundred hints a full scan is well inside the
onboard latency budget and there is no approximation to reason about.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .core import Embedding, HintRecord, ValidationError


class Match(NamedTuple):
    hint_id: str
    score: float


class RankedMatches(tuple):
    """Top-k matches, score descending, equal scores in ascending hint-id order."""

    def __new__(cls, matches: Sequence[Match | tuple[str, float]] = ()):
        return super().__new__(cls, (Match(str(i), float(s)) for i, s in matches))

    @property
    def ids(self) -> list[str]:
        return [m.hint_id for m in self]

    @property
    def scores(self) -> list[float]:
        return [m.score for m in self]

    def __repr__(self) -> str:
        return f"RankedMatches({list(self)!r})"


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise ValidationError("dim-mismatch", f"dimension mismatch: {a} vs {b}", field="embedding")


def row_dots(matrix: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-row dot products in float64.

    Deliberately not ``matrix @ v``: BLAS may sum identical rows differently,
    which would break exact ties. An elementwise product reduced along each row
    runs the same summation for every row and for a single vector.
    """
    return (matrix * v).sum(axis=-1)


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Dot product of two unit vectors, accumulated in float64 and clamped to [-1, 1]."""
    _check_dims(a.dim, b.dim)
    s = float(row_dots(a.values.astype(np.float64), b.values.astype(np.float64)))
    return min(1.0, max(-1.0, s))


@dataclass(frozen=True, eq=False)
class IndexEntry:
    hint_id: str
    embedding: Embedding
    label: str
    meta: Mapping[str, object]


class VectorIndex:
    """Immutable exact cosine index. Build with :func:`build_index`."""

    def __init__(self, entries: Sequence[IndexEntry]):
        if not entries:
            raise ValidationError("empty-hint-set", "cannot build an index from zero hints")
        dim = entries[0].embedding.dim
        seen: set[str] = set()
        for e in entries:
            _check_dims(dim, e.embedding.dim)
            if e.hint_id in seen:
                raise ValidationError("duplicate-id", f"duplicate hint id {e.hint_id!r}", field="id")
            seen.add(e.hint_id)
        self._entries = tuple(entries)
        self.dim = dim
        matrix = np.stack([e.embedding.values for e in entries]).astype(np.float64)
        matrix.flags.writeable = False
        self._matrix = matrix
        ids = [e.hint_id for e in entries]
        # rank of each id in ascending lexicographic order, used as the tie-break key
        rank = np.empty(len(ids), dtype=np.int64)
        rank[sorted(range(len(ids)), key=ids.__getitem__)] = np.arange(len(ids))
        rank.flags.writeable = False
        self._id_rank = rank
        self._labels = {e.hint_id: e.label for e in entries}
        self._pos = {e.hint_id: i for i, e in enumerate(entries)}

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[IndexEntry]:
        return iter(self._entries)

    def __getitem__(self, hint_id: str) -> IndexEntry:
        return self._entries[self._pos[hint_id]]

    @property
    def entries(self) -> tuple[IndexEntry, ...]:
        return self._entries

    @property
    def labels(self) -> Mapping[str, str]:
        return self._labels

    @property
    def matrix(self) -> np.ndarray:
        """Read-only (N, dim) float64 view of the stored embeddings."""
        return self._matrix

    def scores(self, q: Embedding) -> np.ndarray:
        _check_dims(self.dim, q.dim)
        s = row_dots(self._matrix, q.values.astype(np.float64))
        return np.clip(s, -1.0, 1.0)

    def search(self, q: Embedding, k: int) -> RankedMatches:
        return search_topk(self, q, k)


def build_index(hints: Sequence[HintRecord]) -> VectorIndex:
    return VectorIndex([IndexEntry(h.id, h.embedding, h.label, h.meta) for h in hints])


def search_topk(index: VectorIndex, q: Embedding, k: int) -> RankedMatches:
    """Exact top-k by cosine; ties resolved by ascending hint id."""
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValidationError("bad-k", f"k must be a positive integer, got {k!r}", field="k")
    scores = index.scores(q)
    n = scores.shape[0]
    if k < n:
        # everything tied with the k-th best score must compete on id
        kth = np.partition(scores, n - k)[n - k]
        cand = np.flatnonzero(scores >= kth)
    else:
        cand = np.arange(n)
    order = cand[np.lexsort((index._id_rank[cand], -scores[cand]))][:k]
    entries = index.entries
    return RankedMatches([(entries[i].hint_id, float(scores[i])) for i in order])


def group_mean_similarity(
    index: VectorIndex,
    q: Embedding,
    group_filter: Callable[[IndexEntry], bool],
    *,
    aggregate: str = "mean",
) -> float:
    """Mean (or max) cosine between ``q`` and every entry accepted by ``group_filter``."""
    if aggregate not in ("mean", "max"):
        raise ValueError(f"aggregate must be 'mean' or 'max', got {aggregate!r}")
    mask = np.fromiter((bool(group_filter(e)) for e in index.entries), dtype=bool, count=len(index))
    if not mask.any():
        raise ValidationError("empty-group", "no index entry matches the group filter")
    s = index.scores(q)[mask]
    return float(s.max()) if aggregate == "max" else float(np.mean(s))
