"""Edge classifier: node-pair features fed to a ReLU network with a sigmoid head."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import container
from .errors import ConfigError, ContractError, DataError, NumericalError
from .optim import OptimizerState, make_optimizer, step

log = logging.getLogger(__name__)

EDGE_OPS = ("hadamard", "average", "l1", "l2", "concat")
DEFAULT_HIDDEN = (1024, 1024, 1024, 1024)


def edge_features(vectors: np.ndarray, pairs, op: str = "hadamard") -> np.ndarray:
    """Combine the two node vectors of each pair into one edge vector.

    ``pairs`` is a ``(k, 2)`` array (a single ``(u, v)`` gives a 1-D result).
    For ``concat`` the lower-indexed node comes first, so every op is a
    function of the unordered pair.
    """
    if op not in EDGE_OPS:
        raise ConfigError(f"unknown edge op {op!r}; expected one of {', '.join(EDGE_OPS)}")
    vectors = getattr(vectors, "vectors", vectors)
    p = np.asarray(pairs, dtype=np.int64)
    single = p.ndim == 1
    p = p.reshape(-1, 2)
    n = vectors.shape[0]
    if len(p) and (p.min() < 0 or p.max() >= n):
        raise LookupError(f"pair refers to a node outside the embedding ({n} rows)")
    zu = vectors[p[:, 0]]
    zv = vectors[p[:, 1]]
    if op == "hadamard":
        out = zu * zv
    elif op == "average":
        out = (zu + zv) / 2
    elif op == "l1":
        out = np.abs(zu - zv)
    elif op == "l2":
        out = (zu - zv) ** 2
    else:
        lo = np.where((p[:, 0] <= p[:, 1])[:, None], zu, zv)
        hi = np.where((p[:, 0] <= p[:, 1])[:, None], zv, zu)
        out = np.concatenate([lo, hi], axis=1)
    return out[0] if single else out


def feature_width(dim: int, op: str) -> int:
    return 2 * dim if op == "concat" else dim


@dataclass(eq=False)
class MlpModel:
    """Weights are stored as ``(fan_in, fan_out)`` so a layer is ``x @ W + b``."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    edge_op: str = "hadamard"
    dim: int | None = None

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.weights[:-1])

    def parameters(self) -> list[np.ndarray]:
        return [t for pair in zip(self.weights, self.biases) for t in pair]

    def copy(self) -> MlpModel:
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        self.edge_op, self.dim)


def init_mlp(input_width: int, hidden_sizes=DEFAULT_HIDDEN, seed: int = 0, dtype=np.float32,
             edge_op: str = "hadamard", dim: int | None = None) -> MlpModel:
    """He-uniform weights, zero biases; the output layer is scaled by 0.1."""
    if edge_op not in EDGE_OPS:
        raise ConfigError(f"unknown edge op {edge_op!r}")
    rng = np.random.default_rng(seed)
    sizes = [input_width, *hidden_sizes, 1]
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = math.sqrt(6.0 / fan_in)
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        if i == len(sizes) - 2:
            w *= 0.1
        weights.append(w.astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return MlpModel(weights, biases, edge_op, dim)


def _check_width(model, x):
    if x.shape[-1] != model.input_width:
        raise ContractError(f"feature width {x.shape[-1]} != model input width {model.input_width}")


def logits(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=model.weights[0].dtype)
    _check_width(model, x)
    h = x.reshape(-1, x.shape[-1])
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(h @ w + b, 0)
    z = (h @ model.weights[-1] + model.biases[-1])[:, 0]
    return z if x.ndim > 1 else z[0]


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def forward(model: MlpModel, x: np.ndarray):
    """Probability of a link for one feature vector or a batch of rows."""
    z = logits(model, x)
    p = sigmoid(np.atleast_1d(z))
    return p if np.ndim(z) else float(p[0])


def bce_with_logits(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-example binary cross-entropy computed from logits."""
    z = np.asarray(z, dtype=np.float64)
    return np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))


def loss_and_grads(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch and its gradient for every parameter.

    Gradients come back in :meth:`MlpModel.parameters` order.
    """
    dtype = model.weights[0].dtype
    x = np.asarray(x, dtype=dtype)
    _check_width(model, x)
    y = np.asarray(y, dtype=dtype)
    acts = [x]
    h = x
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(h @ w + b, 0)
        acts.append(h)
    z = (h @ model.weights[-1] + model.biases[-1])[:, 0]
    loss = float(bce_with_logits(z, y).mean())
    n = len(y)
    delta = ((sigmoid(z) - y) / n).astype(dtype)[:, None]
    grads = []
    for layer in range(len(model.weights) - 1, -1, -1):
        a = acts[layer]
        gw = a.T @ delta
        gb = delta.sum(axis=0)
        grads.append((gw, gb))
        if layer:
            delta = (delta @ model.weights[layer].T) * (a > 0)
    flat = []
    for gw, gb in reversed(grads):
        flat.extend([gw, gb])
    return loss, flat


def train(model: MlpModel, x: np.ndarray, y: np.ndarray, optimizer: OptimizerState | str = "adam",
          epochs: int = 50, batch_size: int = 512, seed: int = 0, patience: int | None = None):
    """Mini-batch training; returns ``(model, per-epoch mean loss)``.

    ``model`` is updated in place. With ``patience`` set, training stops once
    the epoch loss has not improved for that many epochs.
    """
    y = np.asarray(y)
    if len(y) == 0:
        raise DataError("training set is empty")
    if len(np.unique(y)) < 2:
        raise DataError("training set must contain both classes")
    if epochs < 0 or batch_size < 1:
        raise ConfigError("epochs must be >= 0 and batch_size >= 1")
    if isinstance(optimizer, str):
        optimizer = make_optimizer(optimizer)
    x = np.asarray(x, dtype=model.weights[0].dtype)
    _check_width(model, x)
    states = [optimizer.fresh() for _ in model.parameters()]
    rng = np.random.default_rng(seed)
    trace = []
    best = math.inf
    stale = 0
    for epoch in range(epochs):
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(y), batch_size):
            batch = order[start:start + batch_size]
            loss, grads = loss_and_grads(model, x[batch], y[batch])
            if not math.isfinite(loss):
                raise NumericalError(f"classifier loss became non-finite in epoch {epoch + 1}")
            total += loss * len(batch)
            for param, grad, state in zip(model.parameters(), grads, states):
                step(state, param, grad)
        trace.append(total / len(y))
        log.debug("mlp epoch %d: loss %.5f", epoch + 1, trace[-1])
        if patience:
            if trace[-1] < best - 1e-12:
                best, stale = trace[-1], 0
            else:
                stale += 1
                if stale >= patience:
                    log.info("early stop after %d epochs", epoch + 1)
                    break
    return model, trace


def predict_scores(model: MlpModel, emb, pairs, op: str | None = None,
                   batch_size: int = 4096) -> np.ndarray:
    """Link probabilities for ``pairs`` in order."""
    op = op or model.edge_op
    p = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = np.empty(len(p), dtype=np.float64)
    for start in range(0, len(p), batch_size):
        feats = edge_features(emb, p[start:start + batch_size], op)
        out[start:start + batch_size] = forward(model, feats)
    return out


def save_model(model: MlpModel, path) -> None:
    meta = {"edge_op": model.edge_op, "dim": model.dim, "layers": len(model.weights)}
    arrays = {}
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{i}"] = w
        arrays[f"b{i}"] = b
    with open(path, "wb") as fh:
        fh.write(container.pack(meta, arrays))


def load_model(path) -> MlpModel:
    try:
        with open(path, "rb") as fh:
            meta, arrays = container.unpack(fh.read())
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from None
    n = meta["layers"]
    return MlpModel([arrays[f"W{i}"] for i in range(n)], [arrays[f"b{i}"] for i in range(n)],
                    meta["edge_op"], meta["dim"])
