"""Immutable undirected graphs in compressed sparse row form."""

from __future__ import annotations

import io
import logging
import os
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from .errors import DataError, EmptyGraphError, GraphFormatError, InvalidEdgeError

log = logging.getLogger(__name__)


class LoadReport(NamedTuple):
    lines: int
    duplicates: int
    self_loops: int


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph.

    ``indptr``/``indices`` hold the adjacency in CSR layout; each node's
    neighbor slice is sorted ascending and symmetric across endpoints.
    ``labels`` maps internal index -> external id (``None`` means the ids are
    the indices themselves).
    """

    indptr: np.ndarray
    indices: np.ndarray
    labels: tuple[str, ...] | None = None

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        self._check_node(u)
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        self._check_node(u)
        return int(self.indptr[u + 1] - self.indptr[u])

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return bool(i < len(nbrs) and nbrs[i] == v)

    def edges(self) -> np.ndarray:
        """All edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        rows = np.repeat(np.arange(self.node_count, dtype=np.int64), self.degrees)
        mask = rows < self.indices
        return np.column_stack([rows[mask], self.indices[mask]])

    def adjacency(self) -> list[list[int]]:
        return [self.indices[self.indptr[u]:self.indptr[u + 1]].tolist()
                for u in range(self.node_count)]

    def label(self, u: int) -> str:
        return str(u) if self.labels is None else self.labels[u]

    def index_map(self) -> dict[str, int]:
        return {self.label(u): u for u in range(self.node_count)}

    def without_edges(self, pairs: Iterable[tuple[int, int]]) -> Graph:
        drop = {(min(u, v), max(u, v)) for u, v in pairs}
        kept = [(u, v) for u, v in self.edges().tolist() if (u, v) not in drop]
        return from_edges(self.node_count, kept, labels=self.labels)

    def _check_node(self, u):
        if not 0 <= u < self.node_count:
            raise IndexError(f"node {u} out of range for graph with {self.node_count} nodes")

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.labels == other.labels
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"Graph(node_count={self.node_count}, edge_count={self.edge_count})"


def from_edges(node_count: int, edges, labels=None) -> Graph:
    """Build a graph from an edge iterable; duplicates and self-loops are dropped."""
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64).reshape(-1, 2)
    if len(arr) and (arr.min() < 0 or arr.max() >= node_count):
        raise IndexError("edge endpoint out of range")
    arr = arr[arr[:, 0] != arr[:, 1]]
    both = np.concatenate([arr, arr[:, ::-1]])
    both = np.unique(both, axis=0) if len(both) else both
    counts = np.bincount(both[:, 0], minlength=node_count) if len(both) else np.zeros(node_count, np.int64)
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = both[:, 1].astype(np.int32) if len(both) else np.zeros(0, np.int32)
    if labels is not None:
        labels = tuple(str(x) for x in labels)
        if len(labels) != node_count:
            raise ValueError("labels must have one entry per node")
    return Graph(indptr, indices, labels)


def _id_sort_key(ids):
    try:
        return sorted(ids, key=int)
    except ValueError:
        return sorted(ids)


def parse_edge_list(stream: TextIO) -> tuple[Graph, LoadReport]:
    """Parse whitespace-delimited edge-list text; ``#`` lines are comments."""
    raw = []
    seen = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 2 node tokens, got {len(tokens)}", lineno)
        for tok in tokens:
            seen.setdefault(tok, len(seen))
        raw.append((tokens[0], tokens[1]))
    if not raw:
        raise EmptyGraphError("edge list contains no edges")

    ids = _id_sort_key(seen)
    index = {tok: i for i, tok in enumerate(ids)}
    pairs = set()
    loops = dups = 0
    for a, b in raw:
        u, v = index[a], index[b]
        if u == v:
            loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        if key in pairs:
            dups += 1
        else:
            pairs.add(key)
    g = from_edges(len(ids), sorted(pairs), labels=ids)
    return g, LoadReport(len(raw), dups, loops)


def load_edge_list(source) -> Graph:
    """Load a graph from a path or text stream, logging dropped lines."""
    if isinstance(source, (str, os.PathLike)):
        try:
            fh = open(source)
        except OSError as exc:
            raise DataError(f"cannot open edge list {source}: {exc.strerror}") from None
        with fh:
            g, report = parse_edge_list(fh)
    else:
        g, report = parse_edge_list(source)
    if report.duplicates or report.self_loops:
        log.warning("dropped %d duplicate edges and %d self-loops",
                    report.duplicates, report.self_loops)
    return g


def write_edge_list(g: Graph, target) -> None:
    lines = "".join(f"{g.label(u)} {g.label(v)}\n" for u, v in g.edges().tolist())
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w") as fh:
            fh.write(lines)
    else:
        target.write(lines)


def graph_from_text(text: str) -> Graph:
    return load_edge_list(io.StringIO(text))


def degree(g: Graph, u: int) -> int:
    return g.degree(u)


def bfs_distance_capped(g: Graph, source: int, cap: int) -> dict[int, int]:
    """Hop distances from ``source`` for every node at most ``cap`` hops away."""
    g._check_node(source)
    if cap < 1:
        raise ValueError("cap must be >= 1")
    dist = {source: 0}
    frontier = deque([source])
    while frontier:
        u = frontier.popleft()
        d = dist[u]
        if d == cap:
            continue
        for w in g.indices[g.indptr[u]:g.indptr[u + 1]].tolist():
            if w not in dist:
                dist[w] = d + 1
                frontier.append(w)
    return dist


def is_connected_after_removal(g: Graph, edge: tuple[int, int]) -> bool:
    """True iff ``v`` stays reachable from ``u`` once edge ``(u, v)`` is ignored."""
    u, v = edge
    if not (0 <= u < g.node_count and 0 <= v < g.node_count) or not g.has_edge(u, v):
        raise InvalidEdgeError(f"({u}, {v}) is not an edge")
    seen = {u}
    stack = [u]
    while stack:
        x = stack.pop()
        for w in g.indices[g.indptr[x]:g.indptr[x + 1]].tolist():
            if x == u and w == v:
                continue
            if w == v:
                return True
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def component_labels(g: Graph) -> np.ndarray:
    comp = np.full(g.node_count, -1, dtype=np.int64)
    c = 0
    for s in range(g.node_count):
        if comp[s] >= 0:
            continue
        comp[s] = c
        stack = [s]
        while stack:
            x = stack.pop()
            for w in g.indices[g.indptr[x]:g.indptr[x + 1]].tolist():
                if comp[w] < 0:
                    comp[w] = c
                    stack.append(w)
        c += 1
    return comp


def component_count(g: Graph) -> int:
    if g.node_count == 0:
        return 0
    return int(component_labels(g).max()) + 1


KARATE_PATH = os.path.join(os.path.dirname(__file__), "data", "karate.edgelist")


def karate_club() -> Graph:
    """Zachary's karate club (34 nodes, 78 edges), bundled with the package."""
    return load_edge_list(KARATE_PATH)
