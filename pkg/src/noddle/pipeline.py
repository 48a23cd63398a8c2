"""Stage functions shared by the command line and the benchmark runner.

Each stage derives its random streams from one integer seed, so running the
stages one at a time gives the same artifacts as a benchmark cell.
"""

from __future__ import annotations

import numpy as np

from . import heuristics
from .config import RunConfig
from .errors import ConfigError
from .graph import Graph
from .mlp import MlpModel, edge_features, feature_width, init_mlp, predict_scores, train
from .optim import make_optimizer
from .sampling import PairDataset, build_dataset
from .skipgram import EmbeddingMatrix, train_skipgram
from .walks import generate_walks

STAGES = ("walks", "skipgram", "mlp_init", "mlp_shuffle")


def stage_seeds(seed: int) -> dict[str, int]:
    """Independent integer seeds for the stages after pair sampling."""
    state = np.random.SeedSequence([seed, 1]).generate_state(len(STAGES), dtype=np.uint32)
    return {name: int(s) for name, s in zip(STAGES, state)}


def prepare(g: Graph, cfg: RunConfig, seed: int) -> PairDataset:
    return build_dataset(g, removal_fraction=cfg["pairs.removal_fraction"],
                         negative_ratio=cfg["pairs.negative_ratio"],
                         test_fraction=cfg["pairs.test_fraction"], seed=seed,
                         max_distance=cfg["pairs.max_distance"])


def embed(residual: Graph, cfg: RunConfig, seed: int) -> EmbeddingMatrix:
    seeds = stage_seeds(seed)
    wcfg = cfg.walk_config()
    walks = generate_walks(residual, wcfg, seeds["walks"], mode=cfg["walk.mode"])
    if len(walks) == 0:
        raise ConfigError("residual graph has no edges to walk on")
    return train_skipgram(walks, residual.node_count, wcfg, negatives=cfg["embed.negatives"],
                          epochs=cfg["embed.epochs"], optimizer=cfg.optimizer("embed.optimizer"),
                          seed=seeds["skipgram"], shared_updates=cfg["embed.shared_updates"],
                          labels=residual.labels)


def classifier_method(method: str) -> str | None:
    """Optimizer kind of a ``noddle_<kind>`` method, ``None`` otherwise."""
    return method[len("noddle_"):] if method.startswith("noddle_") else None


def fit(emb: EmbeddingMatrix, pairs: np.ndarray, cfg: RunConfig, seed: int,
        method: str = "noddle") -> tuple[MlpModel, list[float]]:
    """Train a classifier on labeled ``(u, v, label)`` rows.

    ``noddle`` uses ``optimizer.kind``; ``noddle_<kind>`` forces that kind;
    ``node2vec`` is logistic regression on the same edge features.
    """
    seeds = stage_seeds(seed)
    op = cfg["mlp.edge_op"]
    x = edge_features(emb.vectors, pairs[:, :2], op)
    y = pairs[:, 2].astype(np.float32)
    width = feature_width(emb.dim, op)
    patience = cfg["mlp.patience"] or None
    if method == "node2vec":
        model = init_mlp(width, (), seed=seeds["mlp_init"], edge_op=op, dim=emb.dim)
        opt = make_optimizer("adam", lr=cfg["logreg.lr"])
        epochs = cfg["logreg.epochs"]
    elif method == "noddle" or classifier_method(method):
        kind = classifier_method(method)
        model = init_mlp(width, cfg["mlp.hidden"], seed=seeds["mlp_init"], edge_op=op, dim=emb.dim)
        opt = cfg.optimizer("optimizer", kind)
        epochs = cfg["mlp.epochs"]
    else:
        raise ConfigError(f"unknown classifier method {method!r}")
    return train(model, x, y, opt, epochs=epochs, batch_size=cfg["mlp.batch_size"],
                 seed=seeds["mlp_shuffle"], patience=patience)


def score_learned(model: MlpModel, emb: EmbeddingMatrix, pairs: np.ndarray) -> np.ndarray:
    return predict_scores(model, emb.vectors, pairs[:, :2])


def score_heuristic(residual: Graph, kind: str, pairs: np.ndarray) -> np.ndarray:
    return heuristics.score_all(residual, kind, pairs[:, :2])
