"""Skip-gram with negative sampling over random-walk corpora.

For a center node ``c`` and an observed context node ``o`` the per-pair loss is

    -log sigma(z_c . y_o) - sum_n log sigma(-z_c . y_n)

where ``z`` rows come from the center matrix, ``y`` rows from the context
matrix and the ``n`` are noise nodes drawn from the walk unigram
distribution raised to 0.75.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

import numba
import numpy as np

from .alias import alias_build, draw, seed_state
from .errors import ConfigError, DataError, NumericalError
from .optim import OptimizerState, make_optimizer, update_kernel
from .walks import WalkConfig

log = logging.getLogger(__name__)

SGD_MIN_LR = 1e-4


@dataclass(eq=False)
class EmbeddingMatrix:
    """Center vectors (the embedding) plus the context matrix used in training.

    ``losses`` holds the mean pair loss on a fixed evaluation sample after
    each epoch.
    """

    vectors: np.ndarray
    context: np.ndarray | None = None
    labels: tuple[str, ...] | None = None
    losses: list[float] = field(default_factory=list)

    @property
    def node_count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def label(self, u: int) -> str:
        return str(u) if self.labels is None else self.labels[u]


@numba.njit(cache=True, error_model="numpy")
def _log_sigmoid(x):
    # log(sigma(x)) without overflow
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True, error_model="numpy")
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _target_grad(zc, y, label, grad_c, grad_y):
    """Accumulate one target's gradient; returns the logit ``zc . y``.

    ``grad_c += (sigma(s) - label) * y`` and ``grad_y = (sigma(s) - label) * zc``.
    """
    s = zc.dtype.type(0.0)
    for d in range(zc.size):
        s += zc[d] * y[d]
    coef = zc.dtype.type(_sigmoid(s) - label)
    for d in range(zc.size):
        grad_c[d] += coef * y[d]
        grad_y[d] = coef * zc[d]
    return s


@numba.njit(cache=True, error_model="numpy")
def pair_gradients(zc, context, idx, labels, grad_c, grad_t):
    """Loss and gradients for one center row against context rows ``idx``.

    ``labels[k]`` is 1 for the observed context and 0 for noise rows.
    Gradients are written into ``grad_c`` (dim) and ``grad_t`` (len(idx), dim).
    """
    loss = 0.0
    grad_c[:] = 0.0
    for k in range(idx.size):
        s = _target_grad(zc, context[idx[k]], labels[k], grad_c, grad_t[k])
        loss -= _log_sigmoid(s) if labels[k] == 1 else _log_sigmoid(-s)
    return loss


@numba.njit(cache=True, error_model="numpy")
def _draw_targets(o, negatives, neg_prob, neg_alias, idx, state):
    # noise draws equal to the observed context are dropped
    idx[0] = o
    k = 1
    for _ in range(negatives):
        nz = draw(neg_prob, neg_alias, state)
        if nz != o:
            idx[k] = nz
            k += 1
    return k


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _train_walk(walk, window, negatives, center, context, neg_prob, neg_alias, state,
                kind, lr0, lr_floor, total_pairs, done_pairs, decay,
                beta1, beta2, gamma, eps, c1, c2, csteps, o1, o2, osteps):
    dim = center.shape[1]
    grad_c = np.empty(dim, dtype=center.dtype)
    grad_y = np.empty(dim, dtype=center.dtype)
    count = 0
    length = walk.size
    for i in range(length):
        c = walk[i]
        zc = center[c]
        lo = max(0, i - window)
        hi = min(length, i + window + 1)
        for j in range(lo, hi):
            if j == i:
                continue
            lr = lr0
            if decay:
                lr = max(lr_floor, lr0 - (lr0 - lr_floor) * (done_pairs + count) / total_pairs)
            o = walk[j]
            grad_c[:] = 0.0
            for r in range(negatives + 1):
                if r == 0:
                    t = o
                    label = 1.0
                else:
                    t = draw(neg_prob, neg_alias, state)
                    if t == o:
                        continue
                    label = 0.0
                # context rows are updated as soon as their gradient is known;
                # grad_c only ever sees pre-update values
                _target_grad(zc, context[t], label, grad_c, grad_y)
                osteps[t] += 1
                if kind == 0:
                    y = context[t]
                    for d in range(dim):
                        y[d] -= lr * grad_y[d]
                else:
                    update_kernel(kind, context[t], grad_y, o1[t], o2[t],
                                  lr, beta1, beta2, gamma, eps, osteps[t])
            csteps[c] += 1
            if kind == 0:
                for d in range(dim):
                    zc[d] -= lr * grad_c[d]
            else:
                update_kernel(kind, zc, grad_c, c1[c], c2[c],
                              lr, beta1, beta2, gamma, eps, csteps[c])
            count += 1
    return count


@numba.njit(cache=True, error_model="numpy")
def _train_epoch_sequential(walks, seeds, window, negatives, center, context, neg_prob, neg_alias,
                            kind, lr0, lr_floor, total_pairs, done_pairs, decay,
                            beta1, beta2, gamma, eps, c1, c2, csteps, o1, o2, osteps):
    count = 0
    for w in range(walks.shape[0]):
        count += _train_walk(walks[w], window, negatives, center, context, neg_prob, neg_alias,
                             seed_state(seeds[w]),
                             kind, lr0, lr_floor, total_pairs, done_pairs + count, decay,
                             beta1, beta2, gamma, eps, c1, c2, csteps, o1, o2, osteps)
    return count


@numba.njit(cache=True, parallel=True, error_model="numpy")
def _train_epoch_shared(walks, seeds, window, negatives, center, context, neg_prob, neg_alias,
                        kind, lr0, lr_floor, total_pairs, done_pairs, decay,
                        beta1, beta2, gamma, eps, c1, c2, csteps, o1, o2, osteps):
    # unsynchronized updates to shared rows are accepted (results are racy)
    nw = walks.shape[0]
    counts = np.zeros(nw, dtype=np.int64)
    per_walk = pairs_per_walk(walks.shape[1], window)
    for w in numba.prange(nw):
        counts[w] = _train_walk(walks[w], window, negatives, center, context, neg_prob, neg_alias,
                                seed_state(seeds[w]),
                                kind, lr0, lr_floor, total_pairs, done_pairs + w * per_walk, decay,
                                beta1, beta2, gamma, eps, c1, c2, csteps, o1, o2, osteps)
    return counts.sum()


@numba.njit(cache=True, error_model="numpy")
def _corpus_loss(walks, seeds, window, negatives, center, context, neg_prob, neg_alias):
    dim = center.shape[1]
    labels = np.zeros(negatives + 1, dtype=np.int64)
    labels[0] = 1
    idx = np.empty(negatives + 1, dtype=np.int64)
    grad_c = np.empty(dim, dtype=center.dtype)
    grad_t = np.empty((negatives + 1, dim), dtype=center.dtype)
    loss = 0.0
    count = 0
    for w in range(walks.shape[0]):
        state = seed_state(seeds[w])
        walk = walks[w]
        length = walk.size
        for i in range(length):
            lo = max(0, i - window)
            hi = min(length, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                k = _draw_targets(walk[j], negatives, neg_prob, neg_alias, idx, state)
                loss += pair_gradients(center[walk[i]], context, idx[:k], labels[:k],
                                       grad_c, grad_t[:k])
                count += 1
    return loss / max(count, 1)


@numba.njit(cache=True, error_model="numpy")
def pairs_per_walk(length, window):
    total = 0
    for i in range(length):
        total += min(length, i + window + 1) - max(0, i - window) - 1
    return total


def corpus_loss(emb: EmbeddingMatrix, walks: np.ndarray, window: int, negatives: int,
                seed: int, noise=None) -> float:
    """Mean pair loss over ``walks`` with noise draws fixed by ``seed``."""
    walks = np.ascontiguousarray(walks, dtype=np.int64)
    if noise is None:
        noise = noise_table(walks, emb.node_count)
    seeds = np.random.SeedSequence(seed).generate_state(len(walks), dtype=np.uint32).astype(np.int64)
    return _corpus_loss(walks, seeds, window, negatives, emb.vectors, emb.context,
                        noise.probabilities, noise.aliases)


def noise_table(walks: np.ndarray, node_count: int, power: float = 0.75):
    counts = np.bincount(walks.ravel(), minlength=node_count).astype(np.float64)
    return alias_build(counts ** power)


def init_embeddings(node_count: int, dim: int, seed: int, dtype=np.float32):
    """Center rows uniform in [-0.5/dim, 0.5/dim]; context rows zero."""
    rng = np.random.default_rng(seed)
    center = rng.uniform(-0.5 / dim, 0.5 / dim, size=(node_count, dim)).astype(dtype)
    return center, np.zeros((node_count, dim), dtype=dtype)


def train_skipgram(walks: np.ndarray, node_count: int, cfg: WalkConfig, negatives: int = 5,
                   epochs: int = 1, optimizer: OptimizerState | str | None = None, seed: int = 0,
                   shared_updates: bool = False, labels=None, dtype=np.float32,
                   loss_sample: int = 1000) -> EmbeddingMatrix:
    """Learn node vectors from ``walks`` (an int array, one walk per row).

    ``optimizer`` defaults to SGD with the learning rate decaying linearly to
    1e-4 over all epochs; adaptive optimizers keep per-row step counters so
    bias correction only counts the updates a row actually received.
    ``loss_sample`` walks (evenly spaced) are re-scored after every epoch with
    fixed noise draws; 0 disables the evaluation.
    """
    if epochs < 0:
        raise ConfigError("epochs must be non-negative")
    if negatives < 0:
        raise ConfigError("negatives must be non-negative")
    walks = np.ascontiguousarray(walks, dtype=np.int64)
    if walks.ndim != 2 or walks.shape[0] == 0:
        raise ConfigError("walks must be a non-empty 2-D array")
    if optimizer is None:
        optimizer = "sgd"
    if isinstance(optimizer, str):
        optimizer = make_optimizer(optimizer)
    ss = np.random.SeedSequence(seed)
    init_seed, eval_seq, *epoch_seqs = ss.spawn(epochs + 2)
    center, context = init_embeddings(node_count, cfg.dim, init_seed.generate_state(1)[0], dtype)
    emb = EmbeddingMatrix(center, context, labels)
    if epochs == 0:
        return emb

    noise = noise_table(walks, node_count)
    neg_alias = noise.aliases
    neg_prob = noise.probabilities

    # row-sparse accumulator state: only rows touched by a pair are updated
    c1, c2, o1, o2 = (np.zeros_like(center) for _ in range(4))
    csteps = np.zeros(node_count, dtype=np.int64)
    osteps = np.zeros(node_count, dtype=np.int64)
    decay = optimizer.kind == "sgd"
    lr_floor = min(SGD_MIN_LR, optimizer.lr)
    per_epoch = walks.shape[0] * pairs_per_walk(walks.shape[1], cfg.context_size)
    total = max(1, per_epoch * epochs)
    run = _train_epoch_shared if shared_updates else _train_epoch_sequential
    eval_walks = None
    if loss_sample > 0:
        pick = np.unique(np.linspace(0, len(walks) - 1, min(loss_sample, len(walks))).astype(np.int64))
        eval_walks = walks[pick]
    eval_seed = int(eval_seq.generate_state(1)[0])
    done = 0
    for epoch, eseq in enumerate(epoch_seqs):
        seeds = eseq.generate_state(walks.shape[0], dtype=np.uint32).astype(np.int64)
        run(walks, seeds, cfg.context_size, negatives, center, context, neg_prob, neg_alias,
            optimizer.code, optimizer.lr, lr_floor, total, done, decay, optimizer.beta1,
            optimizer.beta2, optimizer.gamma, optimizer.eps, c1, c2, csteps, o1, o2, osteps)
        done += per_epoch
        if not (np.isfinite(center).all() and np.isfinite(context).all()):
            raise NumericalError(
                f"skip-gram parameters became non-finite in epoch {epoch + 1}; "
                "lower the learning rate")
        if eval_walks is not None:
            mean = corpus_loss(emb, eval_walks, cfg.context_size, negatives, eval_seed, noise)
            if not math.isfinite(mean):
                raise NumericalError(f"skip-gram loss is non-finite after epoch {epoch + 1}")
            emb.losses.append(mean)
            log.info("skip-gram epoch %d: mean pair loss %.5f", epoch + 1, mean)
    return emb


def save_embedding(emb: EmbeddingMatrix, path) -> None:
    """Text format: header ``n dim`` then ``id v1 ... vdim`` per node."""
    with open(path, "w") as fh:
        fh.write(f"{emb.node_count} {emb.dim}\n")
        for u in range(emb.node_count):
            values = " ".join(f"{x:.9g}" for x in emb.vectors[u].tolist())
            fh.write(f"{emb.label(u)} {values}\n")


def load_embedding(path, index: dict[str, int] | None = None) -> EmbeddingMatrix:
    """Read an embedding file; rows are reordered by ``index`` when given."""
    if not os.path.exists(path):
        raise DataError(f"embedding file {path} not found")
    with open(path) as fh:
        header = fh.readline().split()
        try:
            n, dim = int(header[0]), int(header[1])
        except (IndexError, ValueError):
            raise DataError(f"{path}: bad header") from None
        labels = []
        rows = np.empty((n, dim), dtype=np.float32)
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != dim + 1:
                raise DataError(f"{path}: line {i + 2} has {len(parts)} fields, expected {dim + 1}")
            labels.append(parts[0])
            rows[i] = np.array(parts[1:], dtype=np.float32)
    if index is not None:
        if set(labels) != set(index):
            raise DataError(f"{path}: embedding ids do not match the graph's nodes")
        order = np.empty(n, dtype=np.int64)
        for i, lab in enumerate(labels):
            order[index[lab]] = i
        rows = rows[order]
        labels = sorted(labels, key=index.__getitem__)
    return EmbeddingMatrix(rows, None, tuple(labels))
