"""Benchmark harness: synthetic corpora, seeded splits, metrics and significance tests."""

from .harness import (
    BenchConfig,
    MetricReport,
    MetricRow,
    RankingAgreement,
    SweepRow,
    k_sweep,
    load_config,
    load_corpus,
    run_benchmark,
    topk_agreement,
)
from .metrics import (
    balanced_accuracy,
    confusion_counts,
    macro_f1,
    recall_at_k,
    time_preference_accuracy,
    top1_accuracy,
)
from .prng import SplitMix64
from .splits import SplitSpec, leakage_report, make_splits
from .stats import wilcoxon_signed_rank
from .synth import SynthSpec, synth_generate

__all__ = [
    "BenchConfig",
    "MetricReport",
    "MetricRow",
    "RankingAgreement",
    "SplitMix64",
    "SplitSpec",
    "SweepRow",
    "SynthSpec",
    "balanced_accuracy",
    "confusion_counts",
    "k_sweep",
    "leakage_report",
    "load_config",
    "load_corpus",
    "macro_f1",
    "make_splits",
    "recall_at_k",
    "run_benchmark",
    "synth_generate",
    "time_preference_accuracy",
    "top1_accuracy",
    "topk_agreement",
    "wilcoxon_signed_rank",
]
