"""Domain types shared by the index, heads, telemetry and benchmark code.

Hints and queries travel as JSONL lines::

    {"id": "h1", "task": "cloud", "label": "clear",
     "embedding": [0.1, ...], "meta": {"site_id": "s01", "cloud_cover_percent": 4.0, "quadrant": 2}}

Every embedding is L2-normalised on the way in and stored as float32.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

CLEAR_MAX_PERCENT = 10.0
CLOUDY_MIN_PERCENT = 20.0

HAZARD_GROUPS = ("wildfire", "flood", "normal")
TIME_TAGS = ("before", "after")
BUILDING_LABELS = ("0", "1+")
QUADRANTS = (0, 1, 2, 3)

_ZERO_NORM = 1e-12
# float32 rounding of a unit vector moves its norm by ~1e-7; anything within this
# band is already normalised and is stored bit-for-bit so re-parsing round-trips.
_UNIT_TOLERANCE = 1e-6


class ValidationError(ValueError):
    """A record or argument failed validation.

    ``code`` is a short machine-readable tag (``"zero-vector"``, ``"missing-field"``...),
    ``field`` names the offending field and ``line`` is the 1-based input line when
    the record came from a file.
    """

    def __init__(self, code: str, message: str, *, field: str | None = None, line: int | None = None):
        self.code = code
        self.field = field
        self.line = line
        super().__init__(message)

    def __str__(self) -> str:
        msg = super().__str__()
        prefix = f"line {self.line}: " if self.line is not None else ""
        return f"{prefix}[{self.code}] {msg}"

    def at_line(self, line: int) -> "ValidationError":
        return ValidationError(self.code, super().__str__(), field=self.field, line=line)


class TaskKind(str, enum.Enum):
    HAZARD = "hazard"
    CHANGE = "change"
    CLOUD = "cloud"
    BUILDINGS = "buildings"

    @classmethod
    def parse(cls, text: str) -> "TaskKind":
        try:
            return cls(text)
        except ValueError:
            raise ValidationError("unknown-task", f"unknown task {text!r}", field="task") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class Embedding:
    """Unit-norm float32 vector. Build through :func:`validate_and_normalize`."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("bad-shape", "embedding must be a non-empty 1-D vector", field="embedding")
        if arr is self.values and not arr.flags.writeable:
            frozen = arr
        else:
            frozen = arr.copy()
            frozen.flags.writeable = False
        object.__setattr__(self, "values", frozen)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def as_float64(self) -> np.ndarray:
        return self.values.astype(np.float64)

    def tolist(self) -> list[float]:
        return [float(x) for x in self.values]

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        return f"Embedding(dim={self.dim})"


def validate_and_normalize(raw: Sequence[float] | np.ndarray, dim: int | None = None) -> Embedding:
    """Check ``raw`` and return its unit-norm direction.

    The norm is computed in float64 and the result rounded to float32. Raises
    :class:`ValidationError` for a length mismatch, a non-finite component or a
    (numerically) zero vector.
    """
    try:
        x = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError):
        raise ValidationError("non-numeric", "embedding must contain only numbers", field="embedding") from None
    if x.ndim != 1:
        raise ValidationError("bad-shape", "embedding must be a flat list", field="embedding")
    if dim is not None and x.shape[0] != dim:
        raise ValidationError(
            "dim-mismatch", f"embedding has {x.shape[0]} components, expected {dim}", field="embedding"
        )
    if x.shape[0] == 0:
        raise ValidationError("bad-shape", "embedding is empty", field="embedding")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise ValidationError("non-finite", f"embedding[{bad}] is not finite", field="embedding")
    norm = math.sqrt(math.fsum(x * x))
    if norm < _ZERO_NORM:
        raise ValidationError("zero-vector", "embedding has zero norm", field="embedding")
    as32 = x.astype(np.float32)
    if abs(norm - 1.0) <= _UNIT_TOLERANCE and np.array_equal(as32.astype(np.float64), x):
        return Embedding(as32)
    return Embedding((x / norm).astype(np.float32))


def cloud_label_from_cover(percent: float) -> str | None:
    """``clear`` at <=10 %, ``cloudy`` at >=20 %, ``None`` for the excluded band between."""
    if isinstance(percent, bool) or not isinstance(percent, (int, float)) or not math.isfinite(percent):
        raise ValidationError("bad-value", f"cloud cover must be a number, got {percent!r}", field="cloud_cover_percent")
    if percent < 0 or percent > 100:
        raise ValidationError("out-of-range", f"cloud cover {percent} outside [0, 100]", field="cloud_cover_percent")
    if percent <= CLEAR_MAX_PERCENT:
        return "clear"
    if percent >= CLOUDY_MIN_PERCENT:
        return "cloudy"
    return None


def building_label_from_count(count: int) -> str:
    return "0" if count == 0 else "1+"


MetaValue = str | int | float

# required meta keys per task, with the value type each must carry
_REQUIRED_META: dict[TaskKind, tuple[tuple[str, type | tuple[type, ...]], ...]] = {
    TaskKind.HAZARD: (("scene_id", str), ("group", str), ("quadrant", int)),
    TaskKind.CHANGE: (("pair_id", str), ("time_tag", str), ("quadrant", int)),
    TaskKind.CLOUD: (("site_id", str), ("cloud_cover_percent", (int, float)), ("quadrant", int)),
    TaskKind.BUILDINGS: (("aoi_id", str), ("building_count", int)),
}


def _check_meta(task: TaskKind, label: str, meta: Mapping[str, Any]) -> None:
    for key, kind in _REQUIRED_META[task]:
        if key not in meta:
            raise ValidationError("missing-field", f"{task.value} record needs meta.{key}", field=f"meta.{key}")
        value = meta[key]
        if isinstance(value, bool) or not isinstance(value, kind):
            raise ValidationError("bad-value", f"meta.{key} has wrong type: {value!r}", field=f"meta.{key}")

    if "quadrant" in meta and task is not TaskKind.BUILDINGS:
        if meta["quadrant"] not in QUADRANTS:
            raise ValidationError("bad-value", f"quadrant must be 0..3, got {meta['quadrant']}", field="meta.quadrant")

    if task is TaskKind.HAZARD:
        expected = meta["group"]
        if expected not in HAZARD_GROUPS:
            raise ValidationError("bad-value", f"unknown hazard group {expected!r}", field="meta.group")
    elif task is TaskKind.CHANGE:
        expected = meta["time_tag"]
        if expected not in TIME_TAGS:
            raise ValidationError("bad-value", f"time_tag must be before/after, got {expected!r}", field="meta.time_tag")
    elif task is TaskKind.CLOUD:
        expected = cloud_label_from_cover(float(meta["cloud_cover_percent"]))
        if expected is None:
            raise ValidationError(
                "label-inconsistent",
                f"cloud cover {meta['cloud_cover_percent']} falls between the clear and cloudy thresholds",
                field="meta.cloud_cover_percent",
            )
    else:
        count = meta["building_count"]
        if count < 0:
            raise ValidationError("bad-value", "building_count must be >= 0", field="meta.building_count")
        expected = building_label_from_count(count)

    if label != expected:
        raise ValidationError(
            "label-inconsistent", f"label {label!r} does not match meta (expected {expected!r})", field="label"
        )


_ESCAPED_ID_CHARS = frozenset('"\\')


@dataclass(frozen=True)
class HintRecord:
    id: str
    task: TaskKind
    label: str
    embedding: Embedding
    meta: Mapping[str, MetaValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError("bad-value", "id must be a non-empty string", field="id")
        if any(ord(ch) < 0x20 or ch in _ESCAPED_ID_CHARS for ch in self.id):
            # JSON would escape these in telemetry, so the id would cost more bytes than it has
            raise ValidationError("bad-id", f"id contains quote, backslash or control characters: {self.id!r}", field="id")
        if not isinstance(self.label, str) or not self.label:
            raise ValidationError("bad-value", "label must be a non-empty string", field="label")
        task = self.task if isinstance(self.task, TaskKind) else TaskKind.parse(self.task)
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))
        _check_meta(task, self.label, self.meta)

    @property
    def dim(self) -> int:
        return self.embedding.dim

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "task": self.task.value,
            "label": self.label,
            "embedding": self.embedding.tolist(),
            "meta": dict(self.meta),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HintRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.task is other.task
            and self.label == other.label
            and self.embedding == other.embedding
            and dict(self.meta) == dict(other.meta)
        )


class QueryRecord(HintRecord):
    """Same shape as a hint; ``label`` is ground truth and only read by evaluation."""


def format_hint(record: HintRecord) -> str:
    """Serialise a record as one JSONL line (no trailing newline)."""
    return json.dumps(record.to_json(), ensure_ascii=False, separators=(",", ":"))


def _record_from_obj(obj: Any, cls: type[HintRecord]) -> HintRecord:
    if not isinstance(obj, dict):
        raise ValidationError("malformed-json", "line is not a JSON object")
    for key in ("id", "task", "label", "embedding"):
        if key not in obj:
            raise ValidationError("missing-field", f"missing field {key!r}", field=key)
    meta = obj.get("meta", {})
    if not isinstance(meta, dict):
        raise ValidationError("bad-value", "meta must be an object", field="meta")
    if not isinstance(obj["id"], str):
        raise ValidationError("bad-value", "id must be a string", field="id")
    if not isinstance(obj["label"], str):
        raise ValidationError("bad-value", "label must be a string", field="label")
    if not isinstance(obj["task"], str):
        raise ValidationError("unknown-task", "task must be a string", field="task")
    raw = obj["embedding"]
    if not isinstance(raw, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        raise ValidationError("non-numeric", "embedding must be a list of numbers", field="embedding")
    task = TaskKind.parse(obj["task"])
    return cls(id=obj["id"], task=task, label=obj["label"], embedding=validate_and_normalize(raw), meta=meta)


def parse_hint_line(line: str | bytes, lineno: int | None = None, *, cls: type[HintRecord] = HintRecord) -> HintRecord:
    """Parse and validate one JSONL line. Errors carry ``lineno`` when given."""
    try:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError("malformed-json", f"invalid JSON: {exc.msg}") from None
        return _record_from_obj(obj, cls)
    except ValidationError as exc:
        raise exc.at_line(lineno) if lineno is not None else exc


def parse_query_line(line: str | bytes, lineno: int | None = None) -> QueryRecord:
    return parse_hint_line(line, lineno, cls=QueryRecord)  # type: ignore[return-value]


def iter_jsonl(path, *, cls: type[HintRecord] = HintRecord) -> Iterator[HintRecord]:
    """Yield records from a JSONL file, skipping blank lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            yield parse_hint_line(line, lineno, cls=cls)


def load_jsonl(path, *, cls: type[HintRecord] = HintRecord) -> list[HintRecord]:
    return list(iter_jsonl(path, cls=cls))


def write_jsonl(path, records: Iterable[HintRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(format_hint(rec))
            fh.write("\n")


def as_query(record: HintRecord) -> QueryRecord:
    if isinstance(record, QueryRecord):
        return record
    return QueryRecord(id=record.id, task=record.task, label=record.label, embedding=record.embedding, meta=record.meta)


def as_hint(record: HintRecord) -> HintRecord:
    if type(record) is HintRecord:
        return record
    return HintRecord(id=record.id, task=record.task, label=record.label, embedding=record.embedding, meta=record.meta)
