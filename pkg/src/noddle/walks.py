"""Second-order biased random walks.

The transition out of ``cur`` given the previous node ``prev`` weights each
neighbor ``x`` of ``cur`` by ``1/p`` if ``x == prev``, ``1`` if ``x`` is also
adjacent to ``prev`` and ``1/q`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .alias import AliasTable, draw, fill_alias, next_float, next_int, seed_state
from .errors import ConfigError
from .graph import Graph

# above this many table entries (sum of deg(cur) over directed edges) the
# "auto" mode switches to on-the-fly weights
TABLE_ENTRY_LIMIT = 25_000_000


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    context_size: int = 10
    p: float = 1.0
    q: float = 1.0
    dim: int = 128

    def __post_init__(self):
        if self.walks_per_node < 1 or self.walk_length < 1 or self.context_size < 1:
            raise ConfigError("walks_per_node, walk_length and context_size must be positive")
        if self.context_size >= self.walk_length:
            raise ConfigError("context_size must be smaller than walk_length")
        if not (self.p > 0 and self.q > 0):
            raise ConfigError("p and q must be positive")
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")


@numba.njit(cache=True)
def _edge_weights(indptr, indices, prev, cur, inv_p, inv_q, out):
    # merge the two sorted neighbor lists to test adjacency to prev
    j = indptr[prev]
    jend = indptr[prev + 1]
    k = 0
    for e in range(indptr[cur], indptr[cur + 1]):
        x = indices[e]
        if x == prev:
            out[k] = inv_p
        else:
            while j < jend and indices[j] < x:
                j += 1
            out[k] = 1.0 if (j < jend and indices[j] == x) else inv_q
        k += 1
    return k


@numba.njit(cache=True)
def _table_offsets(indptr, indices):
    nnz = indices.size
    off = np.zeros(nnz + 1, dtype=np.int64)
    for e in range(nnz):
        cur = indices[e]
        off[e + 1] = off[e] + indptr[cur + 1] - indptr[cur]
    return off


@numba.njit(cache=True)
def _fill_edge_tables(indptr, indices, inv_p, inv_q, off, prob, alias):
    n = indptr.size - 1
    maxdeg = 0
    for u in range(n):
        maxdeg = max(maxdeg, indptr[u + 1] - indptr[u])
    buf = np.empty(maxdeg, dtype=np.float64)
    for prev in range(n):
        for e in range(indptr[prev], indptr[prev + 1]):
            cur = indices[e]
            k = _edge_weights(indptr, indices, prev, cur, inv_p, inv_q, buf)
            fill_alias(buf[:k], prob[off[e]:off[e] + k], alias[off[e]:off[e] + k])


@numba.njit(cache=True)
def _edge_position(indptr, indices, prev, cur):
    lo = indptr[prev]
    hi = indptr[prev + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < cur:
            lo = mid + 1
        else:
            hi = mid
    return lo


@numba.njit(cache=True)
def _sample_weighted(weights, k, state):
    total = 0.0
    for i in range(k):
        total += weights[i]
    r = next_float(state) * total
    acc = 0.0
    for i in range(k):
        acc += weights[i]
        if r < acc:
            return i
    return k - 1


@numba.njit(cache=True, parallel=True)
def _walk_kernel(indptr, indices, starts, seeds, length, inv_p, inv_q, mode, off, prob, alias, out):
    # mode: 0 uniform (p = q = 1), 1 precomputed tables, 2 on-the-fly weights
    n = indptr.size - 1
    maxdeg = 1
    for u in range(n):
        maxdeg = max(maxdeg, indptr[u + 1] - indptr[u])
    for w in numba.prange(starts.size):
        # per-walk reseeding keeps results independent of thread scheduling
        state = seed_state(seeds[w])
        buf = np.empty(maxdeg if mode == 2 else 1, dtype=np.float64)
        u = starts[w]
        out[w, 0] = u
        deg = indptr[u + 1] - indptr[u]
        if length > 1:
            out[w, 1] = indices[indptr[u] + next_int(state, deg)]
        for s in range(2, length):
            prev = out[w, s - 2]
            cur = out[w, s - 1]
            deg = indptr[cur + 1] - indptr[cur]
            if mode == 0:
                k = next_int(state, deg)
            elif mode == 1:
                e = _edge_position(indptr, indices, prev, cur)
                k = draw(prob[off[e]:off[e] + deg], alias[off[e]:off[e] + deg], state)
            else:
                _edge_weights(indptr, indices, prev, cur, inv_p, inv_q, buf)
                k = _sample_weighted(buf, deg, state)
            out[w, s] = indices[indptr[cur] + k]


class TransitionTables:
    """Alias tables for every directed edge ``prev -> cur``.

    Tables are stored back to back in flat arrays; the table for the edge at
    CSR position ``e`` occupies ``[offsets[e], offsets[e + 1])``.
    """

    def __init__(self, g: Graph, p: float, q: float):
        self.graph = g
        self.p = p
        self.q = q
        self.offsets = _table_offsets(g.indptr, g.indices)
        total = int(self.offsets[-1])
        self.prob = np.empty(total, dtype=np.float64)
        self.alias = np.empty(total, dtype=np.int32)
        _fill_edge_tables(g.indptr, g.indices, 1.0 / p, 1.0 / q, self.offsets, self.prob, self.alias)

    def __getitem__(self, edge) -> AliasTable:
        prev, cur = edge
        g = self.graph
        if not g.has_edge(prev, cur):
            raise KeyError(edge)
        e = int(_edge_position(g.indptr, g.indices, prev, cur))
        sl = slice(self.offsets[e], self.offsets[e + 1])
        return AliasTable(self.prob[sl], self.alias[sl].astype(np.int64))

    def node_table(self, u: int) -> AliasTable:
        """First-step table: uniform over the neighbors of ``u``."""
        deg = self.graph.degree(u)
        return AliasTable(np.ones(deg), np.arange(deg))

    def __len__(self):
        return len(self.graph.indices)


def transition_weights(g: Graph, prev: int, cur: int, p: float, q: float) -> np.ndarray:
    """Unnormalized weights over ``g.neighbors(cur)`` after arriving from ``prev``."""
    out = np.empty(g.degree(cur), dtype=np.float64)
    _edge_weights(g.indptr, g.indices, prev, cur, 1.0 / p, 1.0 / q, out)
    return out


def preprocess_transition_tables(g: Graph, p: float, q: float) -> TransitionTables:
    if not (p > 0 and q > 0):
        raise ConfigError("p and q must be positive")
    return TransitionTables(g, p, q)


def table_entry_count(g: Graph) -> int:
    deg = g.degrees
    return int(np.dot(deg, deg))


def walk_seeds(seed: int, count: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(count, dtype=np.uint32).astype(np.int64)


def generate_walks(g: Graph, cfg: WalkConfig, seed: int, tables: TransitionTables | None = None,
                   mode: str = "auto") -> np.ndarray:
    """``cfg.walks_per_node`` walks from every non-isolated node.

    Returns an ``(r * n_active, walk_length)`` int array; walk ``i`` starts at
    the ``i % n_active``-th non-isolated node, repetition ``i // n_active``.
    Each walk draws from its own seeded stream, so output depends only on
    ``seed``.
    """
    if mode not in ("auto", "precomputed", "on_the_fly"):
        raise ConfigError(f"unknown walk mode {mode!r}")
    active = np.flatnonzero(g.degrees > 0)
    starts = np.tile(active, cfg.walks_per_node)
    seeds = walk_seeds(seed, len(starts))
    out = np.empty((len(starts), cfg.walk_length), dtype=np.int32)
    if len(starts) == 0:
        return out
    uniform = cfg.p == 1.0 and cfg.q == 1.0
    if tables is not None:
        code = 1
    elif mode == "precomputed" or (mode == "auto" and not uniform
                                   and table_entry_count(g) <= TABLE_ENTRY_LIMIT):
        tables = preprocess_transition_tables(g, cfg.p, cfg.q)
        code = 1
    elif mode == "auto" and uniform:
        code = 0
    else:
        code = 2
    if code == 1:
        off, prob, alias = tables.offsets, tables.prob, tables.alias
    else:
        off = np.zeros(1, np.int64)
        prob = np.zeros(1)
        alias = np.zeros(1, np.int32)
    _walk_kernel(g.indptr, g.indices, starts, seeds, cfg.walk_length,
                 1.0 / cfg.p, 1.0 / cfg.q, code, off, prob, alias, out)
    return out
