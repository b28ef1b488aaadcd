"""Downlink telemetry records, uplink cost model and embedding codecs."""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Embedding, QueryRecord, TaskKind, ValidationError, validate_and_normalize
from .heads import Prediction
from .index import RankedMatches

MAX_RECORD_BYTES = 1024
KEY_ORDER = ("task", "query_id", "label", "k", "matches")


class TelemetryTooLarge(ValidationError):
    pass


class QuantizationScheme(str, enum.Enum):
    FP32 = "fp32"
    FP16 = "fp16"
    INT8 = "int8"

    @property
    def width(self) -> int:
        """Bytes per component."""
        return {"fp32": 4, "fp16": 2, "int8": 1}[self.value]

    @classmethod
    def parse(cls, text: "str | QuantizationScheme") -> "QuantizationScheme":
        try:
            return cls(text)
        except ValueError:
            raise ValidationError("unknown-scheme", f"unknown quantization scheme {text!r}", field="quant") from None


@dataclass(frozen=True)
class TelemetryRecord:
    task: TaskKind
    query_id: str
    label: str
    k: int
    matches: tuple[tuple[str, float], ...]

    @classmethod
    def from_bytes(cls, data: bytes | str) -> "TelemetryRecord":
        obj = json.loads(data)
        if list(obj) != list(KEY_ORDER):
            raise ValidationError("bad-telemetry", f"unexpected keys {list(obj)}")
        return cls(
            task=TaskKind.parse(obj["task"]),
            query_id=obj["query_id"],
            label=obj["label"],
            k=int(obj["k"]),
            matches=tuple((m["id"], float(m["score"])) for m in obj["matches"]),
        )

    def to_bytes(self) -> bytes:
        return serialize_record(self.task, self.query_id, self.label, self.k, self.matches)


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def _format_score(score: float) -> str:
    text = f"{score:.4f}"
    return "0.0000" if text == "-0.0000" else text


def serialize_record(
    task: TaskKind | str, query_id: str, label: str, k: int, matches: Sequence[tuple[str, float]]
) -> bytes:
    """Canonical compact JSON: fixed key order, no whitespace, four-decimal scores."""
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValidationError("bad-k", f"telemetry k must be >= 1, got {k!r}", field="k")
    if not matches:
        raise ValidationError("empty-matches", "telemetry needs at least one match", field="matches")
    if len(matches) > k:
        raise ValidationError("bad-telemetry", f"{len(matches)} matches for k={k}", field="matches")
    task = TaskKind.parse(task) if not isinstance(task, TaskKind) else task
    body = ",".join(f'{{"id":{_json_str(i)},"score":{_format_score(s)}}}' for i, s in matches)
    text = (
        f'{{"task":{_json_str(task.value)},"query_id":{_json_str(query_id)},'
        f'"label":{_json_str(label)},"k":{k},"matches":[{body}]}}'
    )
    data = text.encode("utf-8")
    if len(data) > MAX_RECORD_BYTES:
        raise TelemetryTooLarge(
            "record-too-large", f"telemetry record is {len(data)} bytes, budget is {MAX_RECORD_BYTES}", field="matches"
        )
    return data


def emit_telemetry(q: QueryRecord, p: Prediction, matches: RankedMatches, k: int | None = None) -> bytes:
    """Telemetry bytes for one query. ``k`` defaults to the number of matches."""
    return serialize_record(q.task, q.id, p.label, len(matches) if k is None else k, list(matches))


def payload_size(record: bytes) -> int:
    return len(record)


def uplink_cost(n_hints: int, dim: int, scheme: QuantizationScheme | str) -> int:
    """Bytes per hint-set refresh: n_hints * dim * bytes-per-component (int8 scale words excluded)."""
    if n_hints < 0:
        raise ValidationError("bad-value", "n_hints must be >= 0", field="n_hints")
    if dim <= 0:
        raise ValidationError("bad-value", "dim must be > 0", field="dim")
    return n_hints * dim * QuantizationScheme.parse(scheme).width


def uplink_table(n_hints: int, dim: int) -> list[dict[str, object]]:
    return [
        {"n_hints": n_hints, "dim": dim, "scheme": s.value, "bytes": uplink_cost(n_hints, dim, s)}
        for s in QuantizationScheme
    ]


def quantize_embedding(e: Embedding, scheme: QuantizationScheme | str) -> bytes:
    scheme = QuantizationScheme.parse(scheme)
    x = e.values
    if scheme is QuantizationScheme.FP32:
        return x.astype("<f4").tobytes()
    if scheme is QuantizationScheme.FP16:
        return x.astype("<f2").tobytes()
    scale = np.float32(np.max(np.abs(x)) / np.float32(127.0))
    q = np.clip(np.rint(x / scale), -127, 127).astype(np.int8)
    return struct.pack("<f", scale) + q.tobytes()


def encoded_length(dim: int, scheme: QuantizationScheme | str) -> int:
    scheme = QuantizationScheme.parse(scheme)
    return dim * scheme.width + (4 if scheme is QuantizationScheme.INT8 else 0)


def dequantize_embedding(data: bytes, scheme: QuantizationScheme | str, dim: int) -> Embedding:
    scheme = QuantizationScheme.parse(scheme)
    expected = encoded_length(dim, scheme)
    if len(data) != expected:
        raise ValidationError("length-mismatch", f"buffer has {len(data)} bytes, expected {expected}", field="embedding")
    if scheme is QuantizationScheme.FP32:
        x = np.frombuffer(data, dtype="<f4")
    elif scheme is QuantizationScheme.FP16:
        x = np.frombuffer(data, dtype="<f2").astype(np.float32)
    else:
        (scale,) = struct.unpack("<f", data[:4])
        x = np.frombuffer(data[4:], dtype=np.int8).astype(np.float32) * np.float32(scale)
    return validate_and_normalize(x.astype(np.float64))


def roundtrip(e: Embedding, scheme: QuantizationScheme | str) -> Embedding:
    return dequantize_embedding(quantize_embedding(e, scheme), scheme, e.dim)


def write_telemetry(fh, records: Iterable[bytes]) -> None:
    """Write records as JSONL to a binary stream."""
    for rec in records:
        fh.write(rec)
        fh.write(b"\n")
