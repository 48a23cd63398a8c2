"""Command-line entry point: ``noddle <command> [options]``.

Commands share one output directory by default, so the stages can be run
one after another::

    noddle prepare graph.txt -o run
    noddle embed run -o run
    noddle train run -o run
    noddle baseline run -o run
    noddle evaluate run -o run

``noddle benchmark graph.txt`` runs every method over several seeds.
Failures print one line ``noddle: error code=<CODE> exit=<N>: <message>``
to stderr.
"""

from __future__ import annotations

import argparse
import glob
import hashlib
import logging
import os
import sys

import numpy as np

from . import __version__, pipeline, plotting
from .config import SCHEMA, RunConfig, load_config
from .errors import ConfigError, DataError, NoddleError
from .evaluation import (BenchmarkReport, auc_from_scores, check_methods, format_table,
                         run_benchmark, write_report)
from .graph import load_edge_list
from .heuristics import KINDS as HEURISTIC_KINDS
from .heuristics import write_scores
from .mlp import load_model, predict_scores, save_model
from .sampling import load_dataset, save_dataset
from .skipgram import load_embedding, save_embedding

log = logging.getLogger("noddle")

# run.* keys have dedicated flags
_RUN_FLAGS = {"run.seed": "seed", "run.threads": "threads", "run.deterministic": "deterministic",
              "run.output_dir": "output_dir"}


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise ConfigError(message)


def _common(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="master seed (run.seed)")
    p.add_argument("--threads", type=int, help="worker threads, 0 = all cores (run.threads)")
    p.add_argument("-o", "--output-dir", dest="output_dir", help="output directory (run.output_dir)")
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="sequential skip-gram updates for bit-reproducible output")
    p.add_argument("-v", "--verbose", action="count", default=0)
    keys = p.add_argument_group("config overrides")
    for key, spec in SCHEMA.items():
        if key in _RUN_FLAGS:
            continue
        keys.add_argument(f"--{key}", dest=f"key:{key}", metavar="V", help=spec.help or None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noddle", description="Link prediction with node2vec embeddings "
                     "and a deep edge classifier.")
    parser.add_argument("--version", action="version", version=f"noddle {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="split a graph into residual graph and labeled pairs")
    p.add_argument("graph", nargs="?", help="edge-list file (default: dataset.path)")
    _common(p)

    p = sub.add_parser("embed", help="node2vec embedding of a residual graph")
    p.add_argument("input", help="dataset directory or edge-list file")
    _common(p)

    p = sub.add_parser("train", help="fit the edge classifier on the training pairs")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--embedding", help="embedding file (default: <output-dir>/embedding.txt)")
    p.add_argument("--method", default="noddle",
                   help="noddle (optimizer.kind), noddle_<kind>, or node2vec for logistic regression")
    _common(p)

    p = sub.add_parser("baseline", help="score test pairs with the neighborhood heuristics")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--kinds", default=",".join(HEURISTIC_KINDS), help="comma-separated heuristics")
    _common(p)

    p = sub.add_parser("evaluate", help="AUC of scored test pairs")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--scores", nargs="*", help="scored-pair files (default: <output-dir>/scores_*.tsv)")
    p.add_argument("--model", help="model file to score first (default: <output-dir>/model.bin if present)")
    p.add_argument("--embedding", help="embedding file used with --model")
    _common(p)

    p = sub.add_parser("benchmark", help="all methods over several seeds")
    p.add_argument("graph", nargs="?", help="edge-list file (default: dataset.path)")
    _common(p)
    return parser


def resolve_config(args) -> RunConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("key:") and v is not None}
    for key, attr in _RUN_FLAGS.items():
        if getattr(args, attr, None) is not None:
            overrides[key] = getattr(args, attr)
    return load_config(args.config, overrides)


def _apply_threads(cfg: RunConfig):
    import numba
    from threadpoolctl import threadpool_limits

    n = cfg["run.threads"] or os.cpu_count() or 1
    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    threadpool_limits(n)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out, command: str, inputs: dict, cfg: RunConfig, outputs) -> None:
    """Effective config plus the inputs it was applied to."""
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, f"{command}.config.txt"), "w") as fh:
        fh.write(cfg.dumps())
    with open(os.path.join(out, f"{command}.manifest.txt"), "w") as fh:
        fh.write(f"command = {command}\nversion = {__version__}\nconfig_hash = {cfg.digest()}\n")
        fh.write(f"config = {command}.config.txt\n")
        for role, path in inputs.items():
            fh.write(f"input.{role} = {path}\ninput.{role}.sha256 = {_sha256(path)}\n")
        for path in outputs:
            fh.write(f"output = {os.path.basename(path)}\n")
        rerun = " ".join(str(p) for p in inputs.values())
        fh.write(f"rerun = noddle {command} {rerun} --config {command}.config.txt\n")


def _graph_path(args, cfg):
    path = args.graph or cfg["dataset.path"]
    if not path:
        raise ConfigError("no graph given: pass a file or set dataset.path")
    return path


def cmd_prepare(args, cfg):
    path = _graph_path(args, cfg)
    g = load_edge_list(path)
    ds = pipeline.prepare(g, cfg, cfg["run.seed"])
    out = cfg["run.output_dir"]
    save_dataset(ds, out)
    write_manifest(out, "prepare", {"graph": path}, cfg,
                   ["residual.edgelist", "train.tsv", "test.tsv", "manifest.txt"])
    print(f"prepared {len(ds.train)} train and {len(ds.test)} test pairs; "
          f"residual graph has {ds.residual_graph.edge_count} edges -> {out}")


def _residual(path):
    if os.path.isdir(path):
        path = os.path.join(path, "residual.edgelist")
    return path, load_edge_list(path)


def cmd_embed(args, cfg):
    path, g = _residual(args.input)
    emb = pipeline.embed(g, cfg, cfg["run.seed"])
    out = cfg["run.output_dir"]
    os.makedirs(out, exist_ok=True)
    target = os.path.join(out, "embedding.txt")
    save_embedding(emb, target)
    with open(os.path.join(out, "embedding_loss.tsv"), "w") as fh:
        fh.write("epoch\tloss\n")
        for i, v in enumerate(emb.losses, 1):
            fh.write(f"{i}\t{v:.9g}\n")
    write_manifest(out, "embed", {"graph": path}, cfg, [target, "embedding_loss.tsv"])
    print(f"embedded {emb.node_count} nodes in {emb.dim} dimensions -> {target}")


def _load_embedding(path, ds):
    if not os.path.exists(path):
        raise DataError(f"embedding file not found: {path}")
    return load_embedding(path, ds.residual_graph.index_map())


def cmd_train(args, cfg):
    ds = load_dataset(args.dataset)
    out = cfg["run.output_dir"]
    emb_path = args.embedding or os.path.join(out, "embedding.txt")
    emb = _load_embedding(emb_path, ds)
    if args.method not in ("noddle", "node2vec") and not pipeline.classifier_method(args.method):
        raise ConfigError(f"unknown method {args.method!r}")
    if pipeline.classifier_method(args.method):
        check_methods([args.method])
    model, trace = pipeline.fit(emb, ds.train, cfg, cfg["run.seed"], args.method)
    os.makedirs(out, exist_ok=True)
    target = os.path.join(out, "model.bin")
    save_model(model, target)
    with open(os.path.join(out, "loss_trace.tsv"), "w") as fh:
        fh.write("epoch\tloss\n")
        for i, v in enumerate(trace, 1):
            fh.write(f"{i}\t{v:.9g}\n")
    plotting.loss_traces({args.method: trace}, os.path.join(out, "loss.png"), "classifier training loss")
    write_manifest(out, "train", {"dataset": os.path.join(args.dataset, "manifest.txt"),
                                  "embedding": emb_path}, cfg, [target, "loss_trace.tsv", "loss.png"])
    final = f"{trace[-1]:.5f}" if trace else "n/a"
    print(f"trained {args.method} for {len(trace)} epochs, final loss {final} -> {target}")


def cmd_baseline(args, cfg):
    ds = load_dataset(args.dataset)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    bad = [k for k in kinds if k not in HEURISTIC_KINDS]
    if bad or not kinds:
        raise ConfigError(f"unknown heuristic(s) {', '.join(bad) or '(none)'}")
    out = cfg["run.output_dir"]
    os.makedirs(out, exist_ok=True)
    g = ds.residual_graph
    written = []
    for kind in kinds:
        scores = pipeline.score_heuristic(g, kind, ds.test)
        target = os.path.join(out, f"scores_{kind}.tsv")
        write_scores(target, ds.test, scores, kind, g.labels)
        written.append(target)
    write_manifest(out, "baseline", {"dataset": os.path.join(args.dataset, "manifest.txt")}, cfg, written)
    print(f"scored {len(ds.test)} test pairs with {', '.join(kinds)} -> {out}")


def read_scores(path):
    """Labels, scores and kind name from a scored-pair file."""
    labels, scores, kind = [], [], None
    try:
        with open(path) as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if header[:4] != ["u", "v", "label", "score"]:
                raise DataError(f"{path}: not a scored-pair file")
            for lineno, line in enumerate(fh, 2):
                parts = line.rstrip("\n").split("\t")
                try:
                    labels.append(int(parts[2]))
                    scores.append(float(parts[3]))
                except (IndexError, ValueError):
                    raise DataError(f"{path}: line {lineno}: malformed row") from None
                if len(parts) > 4:
                    kind = parts[4]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    name = kind or os.path.splitext(os.path.basename(path))[0].removeprefix("scores_")
    return name, np.array(labels), np.array(scores)


def cmd_evaluate(args, cfg):
    ds = load_dataset(args.dataset)
    out = cfg["run.output_dir"]
    os.makedirs(out, exist_ok=True)
    model_path = args.model or os.path.join(out, "model.bin")
    inputs = {"dataset": os.path.join(args.dataset, "manifest.txt")}
    if args.model or os.path.exists(model_path):
        if not os.path.exists(model_path):
            raise DataError(f"model file not found: {model_path}")
        emb_path = args.embedding or os.path.join(out, "embedding.txt")
        emb = _load_embedding(emb_path, ds)
        model = load_model(model_path)
        scores = predict_scores(model, emb.vectors, ds.test[:, :2])
        write_scores(os.path.join(out, "scores_model.tsv"), ds.test, scores, "model",
                     ds.residual_graph.labels)
        inputs.update(model=model_path, embedding=emb_path)
    files = args.scores if args.scores else sorted(glob.glob(os.path.join(out, "scores_*.tsv")))
    if not files:
        raise DataError("nothing to evaluate: no scored-pair files and no model")
    rows = []
    for path in files:
        name, labels, scores = read_scores(path)
        rows.append((name, auc_from_scores(labels, scores), len(labels)))
    width = max(len(r[0]) for r in rows + [("method", 0, 0)])
    print(f"{'method'.ljust(width)}  {'auc':>7}  {'pairs':>6}")
    with open(os.path.join(out, "auc.tsv"), "w") as fh:
        fh.write(f"# config_hash = {cfg.digest()}\nmethod\tauc\tpairs\n")
        for name, value, n in rows:
            print(f"{name.ljust(width)}  {value:7.4f}  {n:6d}")
            fh.write(f"{name}\t{value:.12f}\t{n}\n")
    write_manifest(out, "evaluate", inputs, cfg, ["auc.tsv"])


def cmd_benchmark(args, cfg):
    path = _graph_path(args, cfg)
    methods = check_methods(cfg["eval.methods"])
    report: BenchmarkReport = run_benchmark(path, methods, cfg, cfg["eval.seeds"])
    out = cfg["run.output_dir"]
    paths = write_report(report, out)
    figs = plotting.benchmark_figures(report, out)
    write_manifest(out, "benchmark", {"graph": path}, cfg, [*paths.values(), *figs.values()])
    sys.stdout.write(format_table(report))
    print(f"report -> {paths['report']}")


COMMANDS = {"prepare": cmd_prepare, "embed": cmd_embed, "train": cmd_train,
            "baseline": cmd_baseline, "evaluate": cmd_evaluate, "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(args)
        if cfg["run.deterministic"] and cfg["embed.shared_updates"]:
            log.warning("deterministic mode: disabling embed.shared_updates")
            cfg.update({"embed.shared_updates": False})
        _apply_threads(cfg)
        COMMANDS[args.command](args, cfg)
    except NoddleError as exc:
        msg = " ".join(str(exc).split())
        print(f"noddle: error code={exc.code} exit={exc.exit_code}: {msg}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"noddle: error code=DATA_ERROR exit=3: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
