"""Matplotlib figures for benchmark reports (k-sweep and per-head comparison)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench.harness import K_INDEPENDENT_HEADS, MetricReport, SweepRow, TASK_METRICS  # noqa: E402
from .bench.stats import significance_marker  # noqa: E402
from .core import TaskKind  # noqa: E402

STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "axes.linewidth": 0.6,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.color": "#DDDDDD",
    "grid.linewidth": 0.5,
    "legend.fontsize": 7,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
}

HEAD_COLORS = {
    "retrieval": "#1f77b4",
    "centroid": "#d62728",
    "probe": "#2ca02c",
    "random": "#7f7f7f",
    "constant": "#bcbd22",
    "oracle": "#9467bd",
}

# the metric each task is judged by in the head comparison
PRIMARY_METRIC = {
    "hazard": "top1",
    "change": "time_pref",
    "cloud": "balanced_acc",
    "buildings": "macro_f1",
}

# no timestamps or version strings, so identical data gives identical files
_PNG_METADATA = {"Software": None}


def figure_size(width: float = 7.0, ratio: float | None = None) -> tuple[float, float]:
    if ratio is None:
        ratio = (math.sqrt(5.0) - 1.0) / 2.0
    return width, width * ratio


def plot_k_sweep(rows: Sequence[SweepRow], path: str | Path) -> Path:
    """Task metric vs. telemetry bytes, one panel per task.

    k-dependent heads are drawn as lines over k with +-1 std error bars; the
    k-independent heads are dashed horizontal references.
    """
    tasks = [t.value for t in TaskKind if any(r.task == t.value for r in rows)]
    ncols = min(2, max(1, len(tasks)))
    nrows = math.ceil(len(tasks) / ncols) if tasks else 1
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=figure_size(7.0, 0.4 * nrows), squeeze=False)
        for ax, task in zip(axes.flat, tasks):
            metric = PRIMARY_METRIC[task]
            panel = [r for r in rows if r.task == task and r.metric == metric]
            for head in HEAD_COLORS:
                pts = sorted((r for r in panel if r.head == head), key=lambda r: (r.k or 0))
                if not pts:
                    continue
                color = HEAD_COLORS[head]
                if head in K_INDEPENDENT_HEADS:
                    ax.axhline(pts[0].mean, color=color, linestyle="--", linewidth=1.0, label=head)
                    continue
                x = [r.mean_bytes for r in pts]
                y = [r.mean for r in pts]
                ax.errorbar(x, y, yerr=[r.std for r in pts], color=color, marker="o", ms=3, capsize=2, label=head)
                if head == "retrieval":
                    for r in pts:
                        ax.annotate(f"k={r.k}", (r.mean_bytes, r.mean), textcoords="offset points",
                                    xytext=(3, 4), fontsize=7, color=color)
            ax.set_title(f"{task} ({metric})")
            ax.set_xlabel("telemetry bytes / query")
            ax.set_ylabel(metric)
            ax.set_ylim(-0.05, 1.05)
        for ax in list(axes.flat)[len(tasks):]:
            ax.set_visible(False)
        handles, labels = axes.flat[0].get_legend_handles_labels()
        if handles:
            fig.legend(handles, labels, loc="lower center", ncol=len(labels), bbox_to_anchor=(0.5, 0.0))
        fig.tight_layout(rect=(0, 0.06, 1, 1))
        path = Path(path)
        fig.savefig(path, metadata=_PNG_METADATA)
        plt.close(fig)
    return path


def plot_head_comparison(report: MetricReport, path: str | Path) -> Path:
    """Grouped bars of mean +- std per head for each task's headline metric."""
    k = report.config["k"]
    tasks = [t.value for t in TaskKind if t.value in report.config["tasks"]]
    heads = [h for h in HEAD_COLORS if h in report.config["heads"]]
    width = 0.8 / max(1, len(heads))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figure_size(7.0, 0.45))
        for j, head in enumerate(heads):
            xs, ys, es = [], [], []
            for i, task in enumerate(tasks):
                try:
                    r = report.row(task, head, PRIMARY_METRIC[task], k)
                except KeyError:
                    continue
                xs.append(i + (j - (len(heads) - 1) / 2) * width)
                ys.append(r.mean)
                es.append(r.std)
            ax.bar(xs, ys, width=width, yerr=es, color=HEAD_COLORS[head], label=head, capsize=1.5,
                   error_kw={"linewidth": 0.6})
        ax.set_xticks(range(len(tasks)))
        ax.set_xticklabels([f"{t}\n{PRIMARY_METRIC[t]}" for t in tasks])
        ax.set_ylim(0, 1.08)
        ax.set_ylabel(f"mean over {len(report.config['seeds'])} seeds (k={k})")
        ax.legend(ncol=len(heads), loc="upper center", bbox_to_anchor=(0.5, 1.12))
        fig.tight_layout()
        path = Path(path)
        fig.savefig(path, metadata=_PNG_METADATA)
        plt.close(fig)
    return path


def markdown_table(report: MetricReport) -> str:
    """Table of mean +- std per (task, metric) with significance markers vs. retrieval."""
    k = report.config["k"]
    heads = [h for h in HEAD_COLORS if h in report.config["heads"]]
    lines = [
        "| Task | Metric | " + " | ".join(heads) + " |",
        "|---|---|" + "---|" * len(heads),
    ]
    for task in (t for t in TaskKind if t.value in report.config["tasks"]):
        for metric in TASK_METRICS[task]:
            cells = []
            for head in heads:
                try:
                    r = report.row(task.value, head, metric, k)
                except KeyError:
                    cells.append("")
                    continue
                cells.append(f"{r.mean:.2f}±{r.std:.2f}{significance_marker(r.p_value)}")
            if any(cells):
                lines.append(f"| {task.value} | {metric} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
