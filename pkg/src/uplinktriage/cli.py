"""Command-line entry point.

    uplinktriage ingest --hints hints.jsonl
    uplinktriage query  --hints hints.jsonl --queries queries.jsonl --head retrieval --k 5 --out telemetry.jsonl
    uplinktriage bench  --config bench.json --out results/
    uplinktriage sweep  --config bench.json --k 1,5,10 --out results/sweep.csv
    uplinktriage report --config bench.json --out results/

Telemetry and report files go to --out (or stdout); diagnostics go to stderr.
Exit codes: 0 ok, 1 validation error, 2 runtime or metric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Sequence

from .bench.harness import (
    BenchConfig,
    k_sweep,
    load_config,
    report_csv,
    run_benchmark,
    sweep_csv,
    write_report,
)
from .bench.prng import SplitMix64
from .core import HintRecord, ValidationError, load_jsonl
from .heads import (
    DEFAULT_RIDGE_LAMBDA,
    HEAD_NAMES,
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
from .index import build_index
from .telemetry import QuantizationScheme, emit_telemetry, roundtrip, uplink_table

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

log = logging.getLogger("uplinktriage")


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"0-9"``, ``"1,3,5"`` or a mix such as ``"0-4,10"``."""
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = part.split("-", 1)
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
    except ValueError:
        raise ValidationError("bad-seeds", f"cannot parse seed list {text!r}", field="seeds") from None
    if not seeds:
        raise ValidationError("bad-seeds", "seed list is empty", field="seeds")
    return tuple(seeds)


def parse_ks(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValidationError("bad-k", f"cannot parse k list {text!r}", field="k") from None
    if not ks or any(k < 1 for k in ks):
        raise ValidationError("bad-k", f"k values must be >= 1: {text!r}", field="k")
    return ks


def _require_file(path: str | None, flag: str) -> Path:
    if path is None:
        raise ValidationError("missing-argument", f"{flag} is required", field=flag)
    p = Path(path)
    if not p.is_file():
        raise ValidationError("missing-file", f"{flag} {path}: no such file", field=flag)
    return p


def _quantize_hints(hints: Sequence[HintRecord], scheme: QuantizationScheme) -> list[HintRecord]:
    if scheme is QuantizationScheme.FP32:
        return list(hints)
    return [
        HintRecord(id=h.id, task=h.task, label=h.label, embedding=roundtrip(h.embedding, scheme), meta=h.meta)
        for h in hints
    ]


def cmd_ingest(args) -> int:
    path = _require_file(args.hints, "--hints")
    hints = load_jsonl(path)
    index = build_index(hints)
    per_task = Counter(h.task.value for h in hints)
    per_label = Counter((h.task.value, h.label) for h in hints)
    print(f"# {len(index)} hints, dim {index.dim}", file=sys.stderr)
    for task, n in sorted(per_task.items()):
        labels = ", ".join(f"{lbl}={c}" for (t, lbl), c in sorted(per_label.items()) if t == task)
        print(f"# {task}: {n} ({labels})", file=sys.stderr)
    out = sys.stdout
    print("n_hints,dim,scheme,bytes", file=out)
    for row in uplink_table(len(index), index.dim):
        print(f"{row['n_hints']},{row['dim']},{row['scheme']},{row['bytes']}", file=out)
    return EXIT_OK


def cmd_query(args) -> int:
    hints_path = _require_file(args.hints, "--hints")
    queries_path = _require_file(args.queries, "--queries")
    head = check_head(args.head)
    k = args.k
    if k < 1:
        raise ValidationError("bad-k", "--k must be >= 1", field="k")
    scheme = QuantizationScheme.parse(args.quant)
    hints = _quantize_hints(load_jsonl(hints_path), scheme)
    queries = load_jsonl(queries_path)
    index = build_index(hints)
    labels = index.labels
    seed = parse_seeds(args.seeds)[0] if args.seeds else 0

    predictor = None
    if head == "centroid":
        model = fit_centroids(hints)
        predictor = lambda q: centroid_predict(model, q.embedding)  # noqa: E731
    elif head == "probe":
        probe = fit_ridge_probe(hints, args.lam)
        predictor = lambda q: probe_predict(probe, q.embedding)  # noqa: E731
    elif head == "random":
        rng = SplitMix64(seed, "random-head", "query")
        label_set = sorted(set(labels.values()))
        predictor = lambda q: random_baseline(label_set, rng)  # noqa: E731
    elif head == "constant":
        fixed = constant_baseline(hints)
        predictor = lambda q: fixed  # noqa: E731
    elif head == "oracle":
        predictor = oracle

    sink = open(args.out, "wb") if args.out else sys.stdout.buffer
    sizes, elapsed = [], []
    try:
        for q in queries:
            t0 = time.perf_counter()
            matches = index.search(q.embedding, k)
            pred = knn_vote(matches, labels) if predictor is None else predictor(q)
            record = emit_telemetry(q, pred, matches, k)
            elapsed.append(time.perf_counter() - t0)
            sink.write(record + b"\n")
            sizes.append(len(record))
    finally:
        if args.out:
            sink.close()
        else:
            sink.flush()
    if sizes:
        mean_bytes = sum(sizes) / len(sizes)
        mean_ms = 1000.0 * sum(elapsed) / len(elapsed)
        print(
            f"# {len(sizes)} queries, head={head}, k={k}, mean_payload_bytes={mean_bytes:.2f}, "
            f"mean_latency_ms={mean_ms:.3f}",
            file=sys.stderr,
        )
    return EXIT_OK


def _load_bench_config(args) -> BenchConfig:
    if args.config is None:
        raise ValidationError("missing-argument", "--config is required", field="--config")
    config = load_config(_require_file(args.config, "--config"))
    overrides = {}
    if args.seeds:
        overrides["seeds"] = parse_seeds(args.seeds)
    if args.quant:
        overrides["quant"] = args.quant
    if getattr(args, "workers", None):
        overrides["workers"] = args.workers
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _report_errors(errors) -> None:
    for e in errors:
        print(f"# error cell {e['task']}/{e['head']}: {e['error']}", file=sys.stderr)


def cmd_bench(args) -> int:
    config = _load_bench_config(args)
    if args.k is not None:
        config = dataclasses.replace(config, k=args.k)
    report = run_benchmark(config)
    if args.out:
        csv_path, json_path = write_report(report, args.out)
        print(f"# wrote {csv_path} and {json_path}", file=sys.stderr)
    else:
        sys.stdout.write(report_csv(report))
    _report_errors(report.errors)
    return EXIT_OK if report.ok else EXIT_RUNTIME


def cmd_sweep(args) -> int:
    config = _load_bench_config(args)
    ks = parse_ks(args.k) if args.k else config.ks
    rows, errors = k_sweep(config, ks)
    text = sweep_csv(rows)
    if args.out:
        out = Path(args.out)
        if out.is_dir():
            out = out / "sweep.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(text.encode("utf-8"))
        print(f"# wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    _report_errors(errors)
    return EXIT_OK if not errors else EXIT_RUNTIME


def cmd_report(args) -> int:
    from .plotting import markdown_table, plot_head_comparison, plot_k_sweep

    config = _load_bench_config(args)
    out = Path(args.out or "report")
    out.mkdir(parents=True, exist_ok=True)
    report = run_benchmark(config)
    write_report(report, out)
    rows, sweep_errors = k_sweep(config, config.ks)
    (out / "sweep.csv").write_bytes(sweep_csv(rows).encode("utf-8"))
    (out / "table.md").write_bytes(markdown_table(report).encode("utf-8"))
    plot_k_sweep(rows, out / "ksweep.png")
    plot_head_comparison(report, out / "heads.png")
    print(f"# wrote report.csv, report.json, sweep.csv, table.md, ksweep.png, heads.png to {out}", file=sys.stderr)
    errors = report.errors + sweep_errors
    _report_errors(errors)
    return EXIT_OK if not errors else EXIT_RUNTIME


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uplinktriage", description="Embedding-only uplink triage toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a hint file and print uplink cost per quantization scheme")
    p.add_argument("--hints", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="triage queries against a hint set, emitting telemetry JSONL")
    p.add_argument("--hints", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--head", default="retrieval", help=f"one of {', '.join(HEAD_NAMES)}")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--quant", default="fp32", help="simulate uplink quantization of the hints: fp32, fp16, int8")
    p.add_argument("--seeds", default=None, help="seed for the random head (first value is used)")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_RIDGE_LAMBDA)
    p.add_argument("--out", default=None, help="telemetry file (default stdout)")
    p.set_defaults(func=cmd_query)

    for name, func, help_text in (
        ("bench", cmd_bench, "run the seeded multi-task benchmark"),
        ("sweep", cmd_sweep, "sweep k and record metric vs. telemetry bytes"),
        ("report", cmd_report, "benchmark + sweep with CSV/JSON tables and PNG figures"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--seeds", default=None, help="override the config seed list, e.g. 0-9")
        p.add_argument("--quant", default=None, help="override the config quantization scheme")
        p.add_argument("--workers", type=int, default=None, help="threads used across seeds")
        p.add_argument("--out", default=None)
        if name == "bench":
            p.add_argument("--k", type=int, default=None, help="override the config k")
        elif name == "sweep":
            p.add_argument("--k", default=None, help="comma-separated k values (default: config ks)")
        p.set_defaults(func=func)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
