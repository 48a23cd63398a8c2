"""Figures for benchmark and training output, written as PNG files."""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}

# PNG metadata without a software version keeps files stable across installs
_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def auc_bars(report, path):
    """Mean AUC per method with one-standard-deviation error bars."""
    with plt.rc_context(STYLE):
        methods = list(report.methods)
        stats = [report.summary(m) for m in methods]
        means = [s[0] if s[2] else 0.0 for s in stats]
        stds = [s[1] if s[2] else 0.0 for s in stats]
        fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * len(methods) + 1.5), 3.2))
        x = np.arange(len(methods))
        colors = ["#7f7f7f" if m in ("adamic_adar", "jaccard", "preferential_attachment")
                  else "#1f77b4" for m in methods]
        ax.bar(x, means, yerr=stds, color=colors, capsize=3)
        for xi, (mean, _, n) in zip(x, stats):
            if n:
                ax.text(xi, mean + 0.01, f"{mean:.3f}", ha="center", va="bottom", fontsize=7)
            else:
                ax.text(xi, 0.02, "failed", ha="center", va="bottom", fontsize=7, rotation=90)
        ax.set_xticks(x)
        ax.set_xticklabels(methods, rotation=30, ha="right")
        ax.set_ylim(0, 1.08)
        ax.set_ylabel("AUC")
        ax.set_title(f"{report.dataset}: mean AUC over {len(report.seeds)} seeds")
        return _save(fig, path)


def loss_traces(traces: dict, path, title: str = "training loss"):
    """One line per trace; ``traces`` maps a label to a list of per-epoch losses."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        for label, trace in traces.items():
            if len(trace):
                ax.plot(np.arange(1, len(trace) + 1), trace, marker="." if len(trace) < 30 else None,
                        label=str(label), linewidth=1)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean loss")
        ax.set_title(title)
        if traces and len(traces) <= 12:
            ax.legend(frameon=False)
        return _save(fig, path)


def benchmark_figures(report, directory) -> dict[str, str]:
    """AUC bars plus one loss panel per trained model (first seed that has a trace)."""
    out = {"auc": auc_bars(report, os.path.join(directory, "auc.png"))}
    learned = {}
    for m in ("skipgram", *report.methods):
        for s in report.seeds:
            if (m, s) in report.traces:
                learned[m] = report.traces[(m, s)]
                break
    if learned:
        with plt.rc_context(STYLE):
            n = len(learned)
            cols = min(3, n)
            rows = math.ceil(n / cols)
            fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.6 * rows), squeeze=False)
            for ax, (m, tr) in zip(axes.flat, learned.items()):
                ax.plot(np.arange(1, len(tr) + 1), tr, linewidth=1)
                ax.set_title(m)
                ax.set_xlabel("epoch")
            for ax in list(axes.flat)[n:]:
                ax.set_visible(False)
            out["loss"] = _save(fig, os.path.join(directory, "loss.png"))
    return out
