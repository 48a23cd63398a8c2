"""Labeled pair construction for link prediction.

Positives are edges removed from the graph without disconnecting their
endpoints; negatives are non-adjacent pairs a short hop distance apart.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numba
import numpy as np

from .errors import DatasetError
from .graph import Graph, component_count, load_edge_list, write_edge_list

log = logging.getLogger(__name__)


class LabeledPair(NamedTuple):
    u: int
    v: int
    label: int


@numba.njit(cache=True)
def _ball_counts(indptr, indices, max_distance):
    n = len(indptr) - 1
    counts = np.zeros(n, dtype=np.int64)
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        head, tail = 0, 1
        queue[0] = s
        dist[s] = 0
        while head < tail:
            x = queue[head]
            head += 1
            if dist[x] == max_distance:
                continue
            for k in range(indptr[x], indptr[x + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[x] + 1
                    queue[tail] = w
                    tail += 1
                    if w > s and dist[w] >= 2:
                        counts[s] += 1
        for i in range(tail):
            dist[queue[i]] = -1
    return counts


@numba.njit(cache=True)
def _ball_pairs(indptr, indices, max_distance, offsets, out):
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        pos = offsets[s]
        head, tail = 0, 1
        queue[0] = s
        dist[s] = 0
        while head < tail:
            x = queue[head]
            head += 1
            if dist[x] == max_distance:
                continue
            for k in range(indptr[x], indptr[x + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[x] + 1
                    queue[tail] = w
                    tail += 1
                    if w > s and dist[w] >= 2:
                        out[pos, 0] = s
                        out[pos, 1] = w
                        pos += 1
        out[offsets[s]:pos, 1] = np.sort(out[offsets[s]:pos, 1])
        for i in range(tail):
            dist[queue[i]] = -1


def eligible_unconnected_pairs(g: Graph, max_distance: int = 3) -> np.ndarray:
    """Every non-adjacent ``(u, v)``, ``u < v``, with 2 <= dist <= max_distance.

    Rows are ordered by ``(u, v)``.
    """
    if max_distance < 2:
        raise ValueError("max_distance must be >= 2")
    counts = _ball_counts(g.indptr, g.indices, max_distance)
    offsets = np.zeros(g.node_count + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    out = np.empty((offsets[-1], 2), dtype=np.int64)
    _ball_pairs(g.indptr, g.indices, max_distance, offsets, out)
    return out


def sample_unconnected_pairs(g: Graph, target_count: int, seed: int,
                             max_distance: int = 3) -> np.ndarray:
    """Uniformly sample up to ``target_count`` negative pairs (label 0).

    Returns an ``(k, 3)`` array of ``u, v, 0`` rows sorted by ``(u, v)``.
    """
    if target_count < 1:
        raise ValueError("target_count must be >= 1")
    pool = eligible_unconnected_pairs(g, max_distance)
    if len(pool) == 0:
        log.warning("graph has no unconnected pair within distance %d", max_distance)
    elif len(pool) > target_count:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(pool), size=target_count, replace=False))
        pool = pool[pick]
    return np.column_stack([pool, np.zeros(len(pool), dtype=np.int64)])


def _reachable_without(adj, u, v):
    # DFS from the lower-degree endpoint; direct edge (u, v) is skipped
    if len(adj[u]) > len(adj[v]):
        u, v = v, u
    if adj[u] & adj[v]:
        return True
    seen = {u}
    stack = [w for w in adj[u] if w != v]
    seen.update(stack)
    while stack:
        x = stack.pop()
        for w in adj[x]:
            if w == v:
                return True
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def sample_connected_pairs(g: Graph, removal_fraction: float, seed: int):
    """Remove edges in seeded random order while it is safe to do so.

    An edge is removed only when both endpoints keep at least one neighbor and
    remain connected to each other in the current residual graph.

    Returns ``(residual_graph, positives)`` where ``positives`` is an
    ``(k, 3)`` array of ``u, v, 1`` rows in removal order.
    """
    if not 0.0 < removal_fraction < 1.0:
        raise ValueError("removal_fraction must lie in (0, 1)")
    edges = g.edges()
    target = max(1, int(round(removal_fraction * len(edges))))
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(edges))
    adj = [set(a) for a in g.adjacency()]
    removed = []
    for i in order:
        u, v = int(edges[i, 0]), int(edges[i, 1])
        if len(adj[u]) < 2 or len(adj[v]) < 2:
            continue
        if not _reachable_without(adj, u, v):
            continue
        adj[u].discard(v)
        adj[v].discard(u)
        removed.append((u, v))
        if len(removed) == target:
            break
    if not removed:
        log.warning("no edge could be removed without disconnecting the graph")
    residual = g.without_edges(removed)
    positives = np.array([(u, v, 1) for u, v in removed], dtype=np.int64).reshape(-1, 3)
    return residual, positives


@dataclass
class PairDataset:
    residual_graph: Graph
    train: np.ndarray  # (k, 3) rows of u, v, label
    test: np.ndarray
    seed: int
    negative_ratio: float
    params: dict = field(default_factory=dict)

    @property
    def train_pairs(self) -> list[LabeledPair]:
        return [LabeledPair(*row) for row in self.train.tolist()]

    @property
    def test_pairs(self) -> list[LabeledPair]:
        return [LabeledPair(*row) for row in self.test.tolist()]


def _split(rows, test_fraction, rng):
    rows = rows[rng.permutation(len(rows))]
    n_test = int(round(test_fraction * len(rows)))
    return rows[n_test:], rows[:n_test]


def build_dataset(g: Graph, removal_fraction: float = 0.2, negative_ratio: float = 1.0,
                  test_fraction: float = 0.3, seed: int = 0,
                  max_distance: int = 3) -> PairDataset:
    """Assemble positives, negatives and a stratified train/test split."""
    if negative_ratio <= 0:
        raise ValueError("negative_ratio must be positive")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    pos_seed, neg_seed, pos_split, neg_split = np.random.SeedSequence(seed).spawn(4)
    residual, positives = sample_connected_pairs(
        g, removal_fraction, int(pos_seed.generate_state(1)[0]))
    if len(positives) == 0:
        raise DatasetError("no removable edge: every edge is a bridge or touches a degree-1 node")
    # distances are measured on the original graph
    n_neg = max(1, int(round(negative_ratio * len(positives))))
    negatives = sample_unconnected_pairs(g, n_neg, int(neg_seed.generate_state(1)[0]),
                                         max_distance)
    if len(negatives) < n_neg:
        log.warning("only %d eligible negatives (wanted %d)", len(negatives), n_neg)
    p_train, p_test = _split(positives, test_fraction, np.random.default_rng(pos_split))
    n_train, n_test = _split(negatives, test_fraction, np.random.default_rng(neg_split))
    params = {
        "removal_fraction": removal_fraction,
        "test_fraction": test_fraction,
        "max_distance": max_distance,
        "node_count": g.node_count,
        "original_edges": g.edge_count,
        "original_components": component_count(g),
    }
    return PairDataset(residual, np.concatenate([p_train, n_train]),
                       np.concatenate([p_test, n_test]), seed, negative_ratio, params)


def _write_pairs(path, g, rows):
    with open(path, "w") as fh:
        fh.write("u\tv\tlabel\n")
        for u, v, y in rows.tolist():
            fh.write(f"{g.label(u)}\t{g.label(v)}\t{y}\n")


def read_pairs(path, g: Graph) -> np.ndarray:
    index = g.index_map()
    rows = []
    with open(path) as fh:
        header = fh.readline().split()
        if header[:3] != ["u", "v", "label"]:
            raise DatasetError(f"{path}: unexpected header {header}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            try:
                rows.append((index[parts[0]], index[parts[1]], int(parts[2])))
            except (KeyError, IndexError, ValueError):
                raise DatasetError(f"{path}:{lineno}: bad pair row {line.strip()!r}") from None
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


def save_dataset(ds: PairDataset, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    g = ds.residual_graph
    write_edge_list(g, d / "residual.edgelist")
    _write_pairs(d / "train.tsv", g, ds.train)
    _write_pairs(d / "test.tsv", g, ds.test)
    manifest = {
        "seed": ds.seed,
        "negative_ratio": ds.negative_ratio,
        **ds.params,
        "residual_edges": g.edge_count,
        "train_size": len(ds.train),
        "test_size": len(ds.test),
        "positives": int((ds.train[:, 2] == 1).sum() + (ds.test[:, 2] == 1).sum()),
        "negatives": int((ds.train[:, 2] == 0).sum() + (ds.test[:, 2] == 0).sum()),
    }
    with open(d / "manifest.txt", "w") as fh:
        for key, value in manifest.items():
            fh.write(f"{key} = {value}\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    return out


def load_dataset(directory) -> PairDataset:
    d = Path(directory)
    for name in ("residual.edgelist", "train.tsv", "test.tsv", "manifest.txt"):
        if not os.path.exists(d / name):
            raise DatasetError(f"dataset directory {d} is missing {name}")
    manifest = read_manifest(d / "manifest.txt")
    g = load_edge_list(d / "residual.edgelist")
    if "node_count" in manifest and int(manifest["node_count"]) != g.node_count:
        # isolated nodes cannot be represented in an edge list
        raise DatasetError("residual graph lost nodes; dataset cannot be reloaded")
    params = {k: v for k, v in manifest.items() if k not in ("seed", "negative_ratio")}
    return PairDataset(g, read_pairs(d / "train.tsv", g), read_pairs(d / "test.tsv", g),
                       int(manifest.get("seed", 0)), float(manifest.get("negative_ratio", 1.0)),
                       params)


__all__ = [
    "LabeledPair", "PairDataset", "build_dataset", "eligible_unconnected_pairs",
    "load_dataset", "sample_connected_pairs", "sample_unconnected_pairs", "save_dataset",
]
