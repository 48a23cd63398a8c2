"""Rank-based AUC and the multi-seed benchmark runner."""

from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

from . import pipeline
from .config import METHODS, RunConfig
from .errors import ConfigError, NoddleError, UndefinedAUCError
from .graph import load_edge_list
from .heuristics import KINDS as HEURISTIC_KINDS

log = logging.getLogger(__name__)


class ScoredPair(NamedTuple):
    u: int
    v: int
    label: int
    score: float


def auc(scored) -> float:
    """Mann-Whitney AUC with average ranks for ties.

    ``scored`` is a sequence of :class:`ScoredPair` or a ``(k, 4)`` array of
    ``u, v, label, score`` rows. Ties between a positive and a negative
    count one half.
    """
    arr = np.asarray(scored, dtype=np.float64).reshape(-1, 4) if len(scored) else np.zeros((0, 4))
    return auc_from_scores(arr[:, 2], arr[:, 3])


def auc_from_scores(labels, scores) -> float:
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    pos = labels == 1
    n0 = int(pos.sum())
    n1 = len(labels) - n0
    if n0 == 0 or n1 == 0:
        raise UndefinedAUCError(f"AUC needs both classes (got {n0} positive, {n1} negative)")
    ranks = rankdata(scores, method="average")
    d0 = ranks[pos].sum()
    return float((d0 - n0 * (n0 + 1) / 2) / (n0 * n1))


@dataclass
class BenchmarkReport:
    dataset: str
    methods: tuple[str, ...]
    seeds: tuple[int, ...]
    config_text: str
    config_hash: str
    cells: dict = field(default_factory=dict)       # (method, seed) -> AUC
    failures: dict = field(default_factory=dict)    # (method, seed) -> message
    traces: dict = field(default_factory=dict)      # (method, seed) -> loss trace
    timing: dict = field(default_factory=dict)      # stage name -> seconds

    def values(self, method: str) -> list[float]:
        return [self.cells[(method, s)] for s in self.seeds if (method, s) in self.cells]

    def summary(self, method: str) -> tuple[float, float, int]:
        """Mean, sample standard deviation and number of successful seeds."""
        vals = self.values(method)
        if not vals:
            return math.nan, math.nan, 0
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        return float(np.mean(vals)), std, len(vals)


def check_methods(methods) -> tuple[str, ...]:
    methods = tuple(methods)
    if not methods:
        raise ConfigError("at least one method is required")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigError(f"unknown method(s) {', '.join(unknown)}; expected some of {', '.join(METHODS)}")
    return methods


def _fail(report, method, seed, exc):
    msg = f"{type(exc).__name__}: {exc}"
    log.warning("%s seed %d failed: %s", method, seed, msg)
    report.failures[(method, seed)] = msg


def _clock(report, key, start):
    report.timing[key] = report.timing.get(key, 0.0) + time.perf_counter() - start


def run_benchmark(graph_path, methods, config: RunConfig, seeds) -> BenchmarkReport:
    """Score every method on the same splits for each seed.

    A failure inside one ``(method, seed)`` cell is recorded and the run
    continues; a failed split or embedding fails every cell that needs it.
    """
    methods = check_methods(methods)
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ConfigError("at least one seed is required")
    t0 = time.perf_counter()
    g = load_edge_list(graph_path)
    name = os.path.splitext(os.path.basename(str(graph_path)))[0]
    report = BenchmarkReport(name, methods, seeds, config.dumps(), config.digest())
    _clock(report, "load", t0)
    learned = [m for m in methods if m not in HEURISTIC_KINDS]
    for seed in seeds:
        t = time.perf_counter()
        try:
            ds = pipeline.prepare(g, config, seed)
        except NoddleError as exc:
            for m in methods:
                _fail(report, m, seed, exc)
            continue
        finally:
            _clock(report, "prepare", t)
        test = ds.test
        for kind in (m for m in methods if m in HEURISTIC_KINDS):
            t = time.perf_counter()
            try:
                scores = pipeline.score_heuristic(ds.residual_graph, kind, test)
                report.cells[(kind, seed)] = auc_from_scores(test[:, 2], scores)
            except (NoddleError, ValueError, ArithmeticError) as exc:
                _fail(report, kind, seed, exc)
            _clock(report, kind, t)
        if not learned:
            continue
        t = time.perf_counter()
        try:
            emb = pipeline.embed(ds.residual_graph, config, seed)
        except (NoddleError, ValueError, ArithmeticError) as exc:
            for m in learned:
                _fail(report, m, seed, exc)
            continue
        finally:
            _clock(report, "embed", t)
        report.traces[("skipgram", seed)] = list(emb.losses)
        for m in learned:
            t = time.perf_counter()
            try:
                model, trace = pipeline.fit(emb, ds.train, config, seed, m)
                scores = pipeline.score_learned(model, emb, test)
                report.cells[(m, seed)] = auc_from_scores(test[:, 2], scores)
                report.traces[(m, seed)] = trace
            except (NoddleError, ValueError, ArithmeticError) as exc:
                _fail(report, m, seed, exc)
            _clock(report, m, t)
    report.timing["total"] = time.perf_counter() - t0
    return report


def format_table(report: BenchmarkReport) -> str:
    """Aligned plain-text summary for the terminal."""
    seed_cols = [f"seed {s}" for s in report.seeds]
    header = ["method", "mean", "std", *seed_cols]
    rows = []
    for m in report.methods:
        mean, std, n = report.summary(m)
        cells = []
        for s in report.seeds:
            v = report.cells.get((m, s))
            cells.append("failed" if v is None else f"{v:.4f}")
        rows.append([m, "-" if n == 0 else f"{mean:.4f}", "-" if n == 0 else f"{std:.4f}", *cells])
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    lines = [f"dataset {report.dataset}  config {report.config_hash}",
             "  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join([r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]))
    for (m, s), msg in sorted(report.failures.items()):
        lines.append(f"failed: {m} seed {s}: {msg}")
    return "\n".join(lines) + "\n"


def write_report(report: BenchmarkReport, directory) -> dict[str, str]:
    """Write the result files; returns their paths by role.

    ``report.tsv`` and ``summary.tsv`` depend only on the inputs, config and
    seeds. Wall-clock times go to ``timing.tsv``.
    """
    os.makedirs(directory, exist_ok=True)
    head = (f"# dataset = {report.dataset}\n# config_hash = {report.config_hash}\n"
            f"# seeds = {','.join(str(s) for s in report.seeds)}\n")
    paths = {k: os.path.join(directory, f"{k}.tsv") for k in ("report", "summary", "timing")}
    with open(paths["report"], "w") as fh:
        fh.write(head + "method\tseed\tauc\tstatus\n")
        for m in report.methods:
            for s in report.seeds:
                v = report.cells.get((m, s))
                if v is None:
                    msg = report.failures.get((m, s), "missing").replace("\t", " ").replace("\n", " ")
                    fh.write(f"{m}\t{s}\tnan\tfailed: {msg}\n")
                else:
                    fh.write(f"{m}\t{s}\t{v:.12f}\tok\n")
    with open(paths["summary"], "w") as fh:
        fh.write(head + "method\tmean_auc\tstd_auc\tseeds_ok\n")
        for m in report.methods:
            mean, std, n = report.summary(m)
            fh.write(f"{m}\t{mean:.12f}\t{std:.12f}\t{n}\n")
    with open(paths["timing"], "w") as fh:
        fh.write("stage\tseconds\n")
        for k, v in report.timing.items():
            fh.write(f"{k}\t{v:.3f}\n")
    paths["config"] = os.path.join(directory, "config.txt")
    with open(paths["config"], "w") as fh:
        fh.write(report.config_text)
    return paths
