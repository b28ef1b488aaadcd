"""Seeded multi-task benchmark: splits, heads, metrics, significance, k-sweep."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..core import HintRecord, TaskKind, ValidationError, load_jsonl
from ..heads import (
    DEFAULT_RIDGE_LAMBDA,
    HEAD_NAMES,
    Prediction,
    centroid_predict,
    check_head,
    constant_baseline,
    fit_centroids,
    fit_ridge_probe,
    knn_vote,
    oracle,
    probe_predict,
    random_baseline,
)
from ..index import build_index
from ..telemetry import QuantizationScheme, emit_telemetry, roundtrip
from .metrics import (
    balanced_accuracy,
    confusion_counts,
    false_positive_rate,
    macro_f1,
    prefers,
    recall_at_k,
    time_preference_accuracy,
    top1_accuracy,
)
from .prng import SplitMix64
from .splits import MAX_TILES_PER_AOI, SplitSpec, make_splits
from .stats import significance_marker, wilcoxon_signed_rank
from .synth import SynthSpec, synth_generate

log = logging.getLogger(__name__)

K_INDEPENDENT_HEADS = ("centroid", "probe")
REFERENCE_HEAD = "retrieval"

TASK_METRICS: dict[TaskKind, tuple[str, ...]] = {
    TaskKind.HAZARD: ("recall_at_k", "top1", "fpr"),
    TaskKind.CHANGE: ("time_pref", "time_pref_group"),
    TaskKind.CLOUD: ("balanced_acc",),
    TaskKind.BUILDINGS: ("macro_f1",),
}
PAYLOAD_METRIC = "payload_bytes"


@dataclass
class BenchConfig:
    tasks: tuple[TaskKind, ...] = tuple(TaskKind)
    heads: tuple[str, ...] = HEAD_NAMES
    k: int = 5
    ks: tuple[int, ...] = (1, 5, 10)
    seeds: tuple[int, ...] = tuple(range(10))
    lam: float = DEFAULT_RIDGE_LAMBDA
    include_normal_queries: bool = True
    change_aggregate: str = "mean"
    quant: QuantizationScheme = QuantizationScheme.FP32
    max_tiles_per_aoi: int = MAX_TILES_PER_AOI
    workers: int = 1
    corpus: tuple[str, ...] = ()
    synth: SynthSpec | None = None
    synth_seed: int = 0
    base_dir: Path = field(default=Path("."), repr=False)

    def __post_init__(self) -> None:
        self.tasks = tuple(TaskKind.parse(t) if not isinstance(t, TaskKind) else t for t in self.tasks)
        self.heads = tuple(check_head(h) for h in self.heads)
        self.quant = QuantizationScheme.parse(self.quant)
        for k in (self.k, *self.ks):
            if isinstance(k, bool) or not isinstance(k, int) or k < 1:
                raise ValidationError("bad-k", f"k values must be positive integers, got {k!r}", field="k")
        if not self.tasks:
            raise ValidationError("bad-config", "no tasks selected", field="tasks")
        if not self.heads:
            raise ValidationError("bad-config", "no heads selected", field="heads")
        if not self.seeds:
            raise ValidationError("bad-config", "seed list is empty", field="seeds")
        if any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in self.seeds):
            raise ValidationError("bad-config", "seeds must be non-negative integers", field="seeds")
        if self.change_aggregate not in ("mean", "max"):
            raise ValidationError("bad-config", "change_aggregate must be mean or max", field="change_aggregate")
        if not self.lam > 0:
            raise ValidationError("bad-lambda", "lambda must be positive", field="lambda")
        if self.workers < 1:
            raise ValidationError("bad-config", "workers must be >= 1", field="workers")
        if not self.corpus and self.synth is None:
            raise ValidationError("bad-config", "config needs a corpus list or a synth section", field="corpus")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Path | str = ".") -> "BenchConfig":
        known = {
            "tasks", "heads", "k", "ks", "seeds", "lambda", "include_normal_queries",
            "change_aggregate", "quant", "max_tiles_per_aoi", "workers", "corpus", "synth",
        }
        unknown = set(data) - known
        if unknown:
            raise ValidationError("bad-config", f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {"base_dir": Path(base_dir)}
        for key in ("tasks", "heads", "ks", "seeds", "corpus"):
            if key in data:
                kwargs[key] = tuple(data[key])
        for key in ("k", "include_normal_queries", "change_aggregate", "quant", "max_tiles_per_aoi", "workers"):
            if key in data:
                kwargs[key] = data[key]
        if "lambda" in data:
            kwargs["lam"] = float(data["lambda"])
        if "synth" in data:
            synth = dict(data["synth"])
            kwargs["synth_seed"] = int(synth.get("seed", 0))
            kwargs["synth"] = SynthSpec.from_dict(synth)
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "tasks": [t.value for t in self.tasks],
            "heads": list(self.heads),
            "k": self.k,
            "ks": list(self.ks),
            "seeds": list(self.seeds),
            "lambda": self.lam,
            "include_normal_queries": self.include_normal_queries,
            "change_aggregate": self.change_aggregate,
            "quant": self.quant.value,
            "max_tiles_per_aoi": self.max_tiles_per_aoi,
        }
        if self.corpus:
            out["corpus"] = list(self.corpus)
        if self.synth is not None:
            synth = {k: getattr(self.synth, k) for k in self.synth.__dataclass_fields__ if k != "class_means"}
            if self.synth.class_means:
                synth["class_means"] = {t: {c: list(v) for c, v in m.items()} for t, m in self.synth.class_means.items()}
            synth["seed"] = self.synth_seed
            out["synth"] = synth
        return out


def load_config(path: str | Path) -> BenchConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError("bad-config", f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ValidationError("bad-config", f"{path}: config must be a JSON object")
    return BenchConfig.from_dict(data, base_dir=path.parent)


def load_corpus(config: BenchConfig) -> dict[TaskKind, list[HintRecord]]:
    corpus: dict[TaskKind, list[HintRecord]] = {t: [] for t in config.tasks}
    if config.synth is not None:
        for task, records in synth_generate(config.synth, config.synth_seed, config.tasks).items():
            corpus[task].extend(records)
    for name in config.corpus:
        path = Path(name)
        if not path.is_absolute():
            path = config.base_dir / path
        for rec in load_jsonl(path):
            if rec.task in corpus:
                corpus[rec.task].append(rec)
    return corpus


# ---------------------------------------------------------------------------
# per-seed evaluation


@dataclass
class SeedResult:
    seed: int
    # (task, head, k, metric) -> value
    values: dict[tuple[str, str, int, str], float] = field(default_factory=dict)
    # (task, head) -> error message
    errors: dict[tuple[str, str], str] = field(default_factory=dict)
    # task -> {"hints": n, "queries": n}
    counts: dict[str, dict[str, int]] = field(default_factory=dict)


def _quantized(hints: Sequence[HintRecord], scheme: QuantizationScheme) -> list[HintRecord]:
    if scheme is QuantizationScheme.FP32:
        return list(hints)
    return [
        HintRecord(id=h.id, task=h.task, label=h.label, embedding=roundtrip(h.embedding, scheme), meta=h.meta)
        for h in hints
    ]


def _task_scores(
    task: TaskKind,
    head: str,
    split: SplitSpec,
    preds: Sequence[Prediction],
    matches: Sequence,
    labels: Mapping[str, str],
    k: int,
) -> dict[str, float]:
    """Task metrics for one (head, k) over the split's queries."""
    queries = split.queries
    truth = [q.label for q in queries]
    predicted = [p.label for p in preds]
    out: dict[str, float] = {}
    if task is TaskKind.HAZARD:
        hits, recalls = [], []
        for q, p, m in zip(queries, preds, matches):
            if q.label == "normal":
                continue
            if head == REFERENCE_HEAD:
                top = m[:k]
                recalls.append(recall_at_k(top, q.label, labels))
                hits.append(labels[top[0].hint_id] == q.label)
            else:
                recalls.append(int(q.label in p.ranked_labels()[:k]))
                hits.append(p.label == q.label)
        out["recall_at_k"] = top1_accuracy(recalls)
        out["top1"] = top1_accuracy(hits)
        fpr = false_positive_rate(truth, predicted)
        if fpr is not None:
            out["fpr"] = fpr
    elif task is TaskKind.CHANGE:
        out["time_pref"] = top1_accuracy(
            prefers(p.scores, p.label, q.label, "before" if q.label == "after" else "after")
            for q, p in zip(queries, preds)
        )
    elif task is TaskKind.CLOUD:
        out["balanced_acc"] = balanced_accuracy(confusion_counts(truth, predicted))
    else:
        out["macro_f1"] = macro_f1(confusion_counts(truth, predicted), labels=set(labels.values()))
    return out


def _evaluate_task(
    config: BenchConfig, task: TaskKind, corpus: Sequence[HintRecord], seed: int, ks: Sequence[int], result: SeedResult
) -> None:
    try:
        split = make_splits(
            corpus,
            task,
            seed,
            include_normal_queries=config.include_normal_queries,
            max_tiles_per_aoi=config.max_tiles_per_aoi,
        )
        if not split.queries:
            raise ValidationError("empty-queries", f"{task.value} split has no queries")
        hints = _quantized(split.hints, config.quant)
        index = build_index(hints)
    except Exception as exc:  # noqa: BLE001 - reported as error cells
        for head in config.heads:
            result.errors[(task.value, head)] = f"{type(exc).__name__}: {exc}"
        return
    result.counts[task.value] = {"hints": len(hints), "queries": len(split.queries)}
    labels = index.labels
    kmax = max(ks)
    all_matches = [index.search(q.embedding, kmax) for q in split.queries]
    group_pref = None

    for head in config.heads:
        try:
            per_k: dict[int, list[Prediction]] = {}
            if head == REFERENCE_HEAD:
                for k in ks:
                    per_k[k] = [knn_vote(m[:k], labels) for m in all_matches]
            else:
                if head == "centroid":
                    model = fit_centroids(hints)
                    preds = [centroid_predict(model, q.embedding) for q in split.queries]
                elif head == "probe":
                    probe = fit_ridge_probe(hints, config.lam)
                    preds = [probe_predict(probe, q.embedding) for q in split.queries]
                elif head == "random":
                    rng = SplitMix64(seed, "random-head", task.value)
                    label_set = sorted(set(labels.values()))
                    preds = [random_baseline(label_set, rng) for _ in split.queries]
                elif head == "constant":
                    fixed = constant_baseline(hints)
                    preds = [fixed] * len(split.queries)
                else:
                    preds = [oracle(q) for q in split.queries]
                per_k = {k: preds for k in ks}

            for k in ks:
                preds = per_k[k]
                scores = _task_scores(task, head, split, preds, all_matches, labels, k)
                if task is TaskKind.CHANGE and head == REFERENCE_HEAD:
                    if group_pref is None:
                        group_pref = time_preference_accuracy(split.queries, index, aggregate=config.change_aggregate)
                    scores["time_pref_group"] = group_pref
                sizes = [len(emit_telemetry(q, p, m[:k], k)) for q, p, m in zip(split.queries, preds, all_matches)]
                scores[PAYLOAD_METRIC] = float(np.mean(sizes))
                for metric, value in scores.items():
                    result.values[(task.value, head, k, metric)] = float(value)
        except Exception as exc:  # noqa: BLE001 - reported as error cells
            result.errors[(task.value, head)] = f"{type(exc).__name__}: {exc}"


def evaluate_seed(
    config: BenchConfig, corpus: Mapping[TaskKind, Sequence[HintRecord]], seed: int, ks: Sequence[int]
) -> SeedResult:
    result = SeedResult(seed)
    for task in config.tasks:
        _evaluate_task(config, task, corpus.get(task, []), seed, ks, result)
    return result


def evaluate(config: BenchConfig, ks: Sequence[int], corpus=None) -> list[SeedResult]:
    """Run every seed; results come back in seed-list order whatever the worker count."""
    if corpus is None:
        corpus = load_corpus(config)
    ks = sorted(set(ks))
    if config.workers == 1:
        return [evaluate_seed(config, corpus, s, ks) for s in config.seeds]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(lambda s: evaluate_seed(config, corpus, s, ks), config.seeds))


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class MetricRow:
    task: str
    head: str
    k: int
    metric: str
    mean: float
    std: float
    p_value: float | None
    n_seeds: int
    values: tuple[float, ...]


@dataclass
class MetricReport:
    config: dict[str, Any]
    rows: list[MetricRow]
    errors: list[dict[str, str]]
    counts: dict[str, dict[str, dict[str, int]]]

    @property
    def ok(self) -> bool:
        return not self.errors

    def row(self, task: str, head: str, metric: str, k: int | None = None) -> MetricRow:
        for r in self.rows:
            if r.task == task and r.head == head and r.metric == metric and (k is None or r.k == k):
                return r
        raise KeyError((task, head, metric, k))


def _collect(results: Sequence[SeedResult]) -> tuple[dict, list[dict[str, str]], dict]:
    series: dict[tuple[str, str, int, str], list[float]] = {}
    failed: dict[tuple[str, str], str] = {}
    for res in results:
        for key, msg in res.errors.items():
            failed.setdefault(key, f"seed {res.seed}: {msg}")
    for res in results:
        for key, value in res.values.items():
            if (key[0], key[1]) not in failed:
                series.setdefault(key, []).append(value)
    errors = [{"task": t, "head": h, "error": msg} for (t, h), msg in sorted(failed.items())]
    counts = {str(res.seed): res.counts for res in results}
    return series, errors, counts


def aggregate(series: Mapping[tuple[str, str, int, str], list[float]], n_seeds: int) -> list[MetricRow]:
    """Mean and population std over seeds, plus Wilcoxon p vs. the retrieval head."""
    rows = []
    for (task, head, k, metric), values in series.items():
        p = None
        ref = series.get((task, REFERENCE_HEAD, k, metric))
        if head != REFERENCE_HEAD and ref is not None and len(ref) == len(values):
            p = wilcoxon_signed_rank(values, ref)
        arr = np.asarray(values)
        rows.append(
            MetricRow(task, head, k, metric, float(arr.mean()), float(arr.std()), p, len(values), tuple(values))
        )
    task_order = {t.value: i for i, t in enumerate(TaskKind)}
    head_order = {h: i for i, h in enumerate(HEAD_NAMES)}
    rows.sort(key=lambda r: (task_order[r.task], r.metric, r.k, head_order[r.head]))
    return rows


def run_benchmark(config: BenchConfig, corpus=None) -> MetricReport:
    results = evaluate(config, [config.k], corpus)
    series, errors, counts = _collect(results)
    return MetricReport(config.to_dict(), aggregate(series, len(config.seeds)), errors, counts)


@dataclass(frozen=True)
class SweepRow:
    task: str
    head: str
    k: int | None  # None for k-independent heads
    metric: str
    mean: float
    std: float
    mean_bytes: float


def k_sweep(config: BenchConfig, ks: Sequence[int] = (1, 5, 10), corpus=None) -> tuple[list[SweepRow], list[dict[str, str]]]:
    """Task metric and mean telemetry bytes per k.

    Centroid and probe do not depend on k; they get a single row (k=None) whose
    byte count is measured at the config's primary k.
    """
    ks = sorted(set(ks))
    results = evaluate(config, sorted(set(ks) | {config.k}), corpus)
    series, errors, _ = _collect(results)
    rows = []
    for task in config.tasks:
        for head in config.heads:
            for metric in TASK_METRICS[task]:
                head_ks = [config.k] if head in K_INDEPENDENT_HEADS else ks
                for k in head_ks:
                    values = series.get((task.value, head, k, metric))
                    if values is None:
                        continue
                    size = series[(task.value, head, k, PAYLOAD_METRIC)]
                    rows.append(
                        SweepRow(
                            task.value,
                            head,
                            None if head in K_INDEPENDENT_HEADS else k,
                            metric,
                            float(np.mean(values)),
                            float(np.std(values)),
                            float(np.mean(size)),
                        )
                    )
    return rows, errors


# ---------------------------------------------------------------------------
# report files


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def report_csv(report: MetricReport) -> str:
    lines = ["task,head,k,metric,mean,std,p_value,n_seeds"]
    for r in report.rows:
        lines.append(f"{r.task},{r.head},{r.k},{r.metric},{_fmt(r.mean)},{_fmt(r.std)},{_fmt(r.p_value)},{r.n_seeds}")
    for e in report.errors:
        lines.append(f"{e['task']},{e['head']},,error,,,,0")
    return "\n".join(lines) + "\n"


def _round(x: float | None) -> float | None:
    return None if x is None else round(x, 6)


def report_json(report: MetricReport) -> str:
    """Table-like summary: one entry per (task, metric, k) with a cell per head."""
    table: dict[tuple[str, str, int], dict[str, Any]] = {}
    for r in report.rows:
        entry = table.setdefault((r.task, r.metric, r.k), {"task": r.task, "metric": r.metric, "k": r.k, "heads": {}})
        entry["heads"][r.head] = {
            "mean": _round(r.mean),
            "std": _round(r.std),
            "p_value": _round(r.p_value),
            "significance": significance_marker(r.p_value),
            "values": [_round(v) for v in r.values],
        }
    doc = {
        "config": report.config,
        "n_seeds": len(report.config["seeds"]),
        "table": list(table.values()),
        "errors": report.errors,
        "counts": report.counts,
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["task,head,k,metric,mean,std,mean_bytes"]
    for r in rows:
        k = "-" if r.k is None else str(r.k)
        lines.append(f"{r.task},{r.head},{k},{r.metric},{_fmt(r.mean)},{_fmt(r.std)},{r.mean_bytes:.2f}")
    return "\n".join(lines) + "\n"


def write_report(report: MetricReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "report.csv", out / "report.json"
    csv_path.write_bytes(report_csv(report).encode("utf-8"))
    json_path.write_bytes(report_json(report).encode("utf-8"))
    return csv_path, json_path


# ---------------------------------------------------------------------------
# quantization fidelity


@dataclass(frozen=True)
class RankingAgreement:
    scheme: str
    k: int
    queries: int
    ordered: int  # identical top-k id sequence
    as_set: int  # same top-k ids, any order

    @property
    def ordered_rate(self) -> float:
        return self.ordered / self.queries if self.queries else 1.0

    @property
    def set_rate(self) -> float:
        return self.as_set / self.queries if self.queries else 1.0


def topk_agreement(config: BenchConfig, scheme: QuantizationScheme | str, k: int = 5, corpus=None) -> RankingAgreement:
    """Compare top-k retrieval on dequantized hints against fp32, over every task and seed split."""
    scheme = QuantizationScheme.parse(scheme)
    if corpus is None:
        corpus = load_corpus(config)
    n = ordered = as_set = 0
    for seed in config.seeds:
        for task in config.tasks:
            split = make_splits(
                corpus[task], task, seed,
                include_normal_queries=config.include_normal_queries,
                max_tiles_per_aoi=config.max_tiles_per_aoi,
            )
            exact = build_index(split.hints)
            lossy = build_index(_quantized(split.hints, scheme))
            for q in split.queries:
                a = exact.search(q.embedding, k).ids
                b = lossy.search(q.embedding, k).ids
                n += 1
                ordered += a == b
                as_set += set(a) == set(b)
    return RankingAgreement(scheme.value, k, n, ordered, as_set)
