import re

import numpy as np
import pytest

from noddle import pipeline
from noddle.cli import main
from noddle.config import RunConfig, load_config, parse_config_text
from noddle.errors import ConfigError, DataError
from noddle.evaluation import format_table, run_benchmark, write_report
from noddle.graph import from_edges, write_edge_list

SMALL = ["--walk.dim", "16", "--walk.walks_per_node", "4", "--walk.length", "20",
         "--walk.context", "5", "--mlp.hidden", "16,16", "--mlp.epochs", "5", "--logreg.epochs", "5"]
SMALL_CFG = {"walk.dim": 16, "walk.walks_per_node": 4, "walk.length": 20, "walk.context": 5,
             "mlp.hidden": "16,16", "mlp.epochs": 5, "logreg.epochs": 5}
ERROR_LINE = re.compile(r"^noddle: error code=[A-Z_]+ exit=\d: \S.*$")


def test_defaults():
    cfg = RunConfig()
    assert cfg["walk.dim"] == 128 and cfg["walk.length"] == 80 and cfg["walk.context"] == 10
    assert cfg["mlp.hidden"] == (1024, 1024, 1024, 1024) and cfg["mlp.batch_size"] == 512
    assert cfg["optimizer.kind"] == "adam" and cfg["embed.optimizer.kind"] == "sgd"
    assert cfg["pairs.negative_ratio"] == 1.0 and cfg["pairs.test_fraction"] == 0.3


def test_precedence(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("# comment\nwalk.length = 40\nwalk.dim = 64  # trailing\n")
    cfg = load_config(f, {"walk.dim": "32"})
    assert cfg["walk.length"] == 40 and cfg["walk.dim"] == 32 and cfg["walk.p"] == 1.0


@pytest.mark.parametrize("text", ["walk.bogus = 3\n", "walk.dim\n", "walk.dim = many\n",
                                  "pairs.test_fraction = 1.5\n", "optimizer.kind = rmsprop\n",
                                  "eval.methods = adamic_adar,katz\n"])
def test_bad_config_text(tmp_path, text):
    f = tmp_path / "c.txt"
    f.write_text(text)
    with pytest.raises(ConfigError):
        load_config(f)


def test_cross_key_validation():
    with pytest.raises(ConfigError):
        load_config(None, {"walk.context": "80"})
    with pytest.raises(ConfigError):
        load_config(None, {"optimizer.lr": "-1"})


def test_missing_config_file(tmp_path):
    with pytest.raises(DataError):
        load_config(tmp_path / "nope.txt")


def test_dump_round_trip():
    cfg = load_config(None, {"walk.q": "0.5", "optimizer.lr": "0.003", "eval.seeds": "7,8"})
    again = load_config(None, parse_config_text(cfg.dumps()))
    assert dict(again.items()) == dict(cfg.items())
    assert again.digest() == cfg.digest()
    moved = cfg.copy()
    moved.update({"run.output_dir": "elsewhere"})
    assert moved.digest() == cfg.digest()
    moved.update({"walk.q": 2.0})
    assert moved.digest() != cfg.digest()


def test_optimizer_overrides_apply_to_matching_kind_only():
    cfg = load_config(None, {"optimizer.kind": "adamax", "optimizer.lr": "0.01"})
    assert cfg.optimizer("optimizer", "adamax").lr == 0.01
    assert cfg.optimizer("optimizer", "adam").lr == 0.001


def test_stage_seeds_are_stable():
    assert pipeline.stage_seeds(3) == pipeline.stage_seeds(3) != pipeline.stage_seeds(4)


# --- benchmark runner --------------------------------------------------------

def small_config(**extra):
    return load_config(None, {**SMALL_CFG, **extra})


def test_unknown_method_fails_before_any_work(tmp_path):
    with pytest.raises(ConfigError):
        run_benchmark(tmp_path / "does-not-exist.txt", ["jaccard", "katz"], small_config(), [1])


def test_benchmark_report_is_reproducible(karate_path, tmp_path):
    cfg = small_config()
    methods = ["adamic_adar", "jaccard", "preferential_attachment", "node2vec", "noddle_adam"]
    a = run_benchmark(karate_path, methods, cfg, [1, 2, 3])
    b = run_benchmark(karate_path, methods, cfg, [1, 2, 3])
    pa = write_report(a, tmp_path / "a")
    pb = write_report(b, tmp_path / "b")
    for key in ("report", "summary", "config"):
        assert open(pa[key], "rb").read() == open(pb[key], "rb").read()
    assert not a.failures
    for m in methods:
        mean, std, n = a.summary(m)
        assert n == 3 and 0 <= mean <= 1
    table = format_table(a)
    assert a.config_hash in table and "noddle_adam" in table


def test_failed_cells_do_not_stop_the_run(karate_path, monkeypatch):
    real_fit = pipeline.fit

    def flaky(emb, pairs, cfg, seed, method="noddle"):
        if method == "noddle_adagrad" and seed == 2:
            raise FloatingPointError("boom")
        return real_fit(emb, pairs, cfg, seed, method)

    monkeypatch.setattr(pipeline, "fit", flaky)
    rep = run_benchmark(karate_path, ["jaccard", "noddle_adagrad", "noddle_adam"], small_config(), [1, 2])
    assert set(rep.failures) == {("noddle_adagrad", 2)}
    assert rep.summary("noddle_adagrad")[2] == 1 and rep.summary("noddle_adam")[2] == 2
    assert "failed" in format_table(rep)


def test_unsplittable_graph_marks_every_cell_failed(tmp_path):
    p = tmp_path / "path.txt"
    write_edge_list(from_edges(3, [(0, 1), (1, 2)]), p)
    rep = run_benchmark(p, ["jaccard", "node2vec"], small_config(), [1])
    assert set(rep.failures) == {("jaccard", 1), ("node2vec", 1)}
    assert np.isnan(rep.summary("jaccard")[0])


# --- command line ------------------------------------------------------------

def run_cli(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_prepare_on_tree_fails_cleanly(tmp_path, capsys):
    p = tmp_path / "path.txt"
    p.write_text("0 1\n1 2\n")
    code, _, err = run_cli(["prepare", p, "-o", tmp_path / "out", "--pairs.removal_fraction", "0.5"], capsys)
    assert code == 3
    lines = err.strip().splitlines()
    assert len(lines) == 1 and ERROR_LINE.match(lines[0]) and "DATA_ERROR" in lines[0]


@pytest.mark.parametrize("args, code", [
    (["prepare", "/nonexistent/graph.txt"], 3),
    (["prepare", "GRAPH", "--walk.bogus", "1"], 2),
    (["prepare", "GRAPH", "--walk.dim", "abc"], 2),
    (["prepare", "GRAPH", "--config", "/nonexistent/cfg.txt"], 3),
    (["frobnicate"], 2),
    (["embed", "GRAPH", "--embed.optimizer.lr", "1e30", "--walk.walks_per_node", "1"], 4),
])
def test_exit_codes(args, code, karate_path, tmp_path, capsys):
    args = [karate_path if a == "GRAPH" else a for a in args] + ["-o", tmp_path] * (args[0] != "frobnicate")
    got, _, err = run_cli(args, capsys)
    assert got == code
    lines = err.strip().splitlines()
    assert len(lines) == 1 and ERROR_LINE.match(lines[0])


def test_stage_by_stage_pipeline(karate_path, tmp_path, capsys):
    d = tmp_path / "run"
    for cmd in (["prepare", karate_path], ["embed", d], ["train", d], ["baseline", d], ["evaluate", d]):
        code, out, err = run_cli(cmd + ["-o", d, "--seed", "3"] + SMALL, capsys)
        assert code == 0, err
    names = {p.name for p in d.iterdir()}
    assert {"train.tsv", "test.tsv", "residual.edgelist", "embedding.txt", "model.bin", "loss.png",
            "scores_jaccard.tsv", "scores_model.tsv", "auc.tsv", "train.config.txt",
            "train.manifest.txt"} <= names
    assert "jaccard" in out and "model" in out
    auc_rows = (d / "auc.tsv").read_text().splitlines()[2:]
    assert len(auc_rows) == 4
    # the stage chain reproduces the benchmark cell for the same seed
    rep = run_benchmark(karate_path, ["jaccard"], small_config(), [3])
    got = {r.split("\t")[0]: float(r.split("\t")[1]) for r in auc_rows}
    assert got["jaccard"] == pytest.approx(rep.cells[("jaccard", 3)], abs=1e-12)


def test_stages_match_benchmark_for_learned_model(karate_path, tmp_path, capsys):
    d = tmp_path / "run"
    for cmd in (["prepare", karate_path], ["embed", d], ["train", d, "--method", "noddle_adam"],
                ["evaluate", d]):
        assert run_cli(cmd + ["-o", d, "--seed", "2"] + SMALL, capsys)[0] == 0
    row = [r for r in (d / "auc.tsv").read_text().splitlines() if r.startswith("model")][0]
    rep = run_benchmark(karate_path, ["noddle_adam"], small_config(), [2])
    assert float(row.split("\t")[1]) == pytest.approx(rep.cells[("noddle_adam", 2)], abs=1e-12)


def test_rerun_from_dumped_config(karate_path, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["prepare", karate_path, "-o", a, "--seed", "9", "--pairs.negative_ratio", "2"], capsys)[0] == 0
    assert run_cli(["prepare", karate_path, "--config", a / "prepare.config.txt", "-o", b], capsys)[0] == 0
    for f in ("train.tsv", "test.tsv", "residual.edgelist"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_benchmark_command(karate_path, tmp_path, capsys):
    outs = []
    for name in ("one", "two"):
        d = tmp_path / name
        code, out, err = run_cli(["benchmark", karate_path, "-o", d, "--threads", "1", "--deterministic",
                                  "--eval.seeds", "1,2,3"] + SMALL, capsys)
        assert code == 0, err
        outs.append(d)
        assert "adamic_adar" in out and "mean" in out
    for f in ("report.tsv", "summary.tsv"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    dumps = [[l for l in (d / "benchmark.config.txt").read_text().splitlines()
              if not l.startswith("run.output_dir")] for d in outs]
    assert dumps[0] == dumps[1]
    assert (outs[0] / "auc.png").stat().st_size > 0 and (outs[0] / "loss.png").stat().st_size > 0
    head = (outs[0] / "report.tsv").read_text().splitlines()
    assert head[1].startswith("# config_hash = ")
