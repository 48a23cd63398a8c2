"""Neighborhood similarity baselines: Adamic-Adar, Jaccard and preferential attachment."""

from __future__ import annotations

import math

import numba
import numpy as np

from .errors import ConfigError
from .graph import Graph

KINDS = ("adamic_adar", "jaccard", "preferential_attachment")
_CODE = {k: i for i, k in enumerate(KINDS)}


@numba.njit(cache=True)
def _score_pairs(indptr, indices, pairs, code, out):
    for r in range(pairs.shape[0]):
        u = pairs[r, 0]
        v = pairs[r, 1]
        du = indptr[u + 1] - indptr[u]
        dv = indptr[v + 1] - indptr[v]
        if code == 2:
            out[r] = float(du) * float(dv)
            continue
        # walk the two sorted neighbor lists
        i = indptr[u]
        j = indptr[v]
        common = 0
        aa = 0.0
        while i < indptr[u + 1] and j < indptr[v + 1]:
            a = indices[i]
            b = indices[j]
            if a < b:
                i += 1
            elif b < a:
                j += 1
            else:
                k = indptr[a + 1] - indptr[a]
                if k >= 2:
                    aa += 1.0 / math.log(k)
                common += 1
                i += 1
                j += 1
        if code == 0:
            out[r] = aa
        else:
            union = du + dv - common
            out[r] = common / union if union > 0 else 0.0


def _check_kind(kind):
    if kind not in _CODE:
        raise ConfigError(f"unknown heuristic {kind!r}; expected one of {', '.join(KINDS)}")


def score_all(g: Graph, kind: str, pairs) -> np.ndarray:
    """Score every ``(u, v)`` row of ``pairs``; order is preserved."""
    _check_kind(kind)
    p = np.asarray(pairs, dtype=np.int64).reshape(-1, 2) if len(pairs) else np.zeros((0, 2), np.int64)
    if len(p):
        bad = (p < 0) | (p >= g.node_count)
        if bad.any():
            r = int(np.flatnonzero(bad.any(axis=1))[0])
            raise IndexError(f"pair {tuple(p[r])} at row {r} refers to a node outside the graph")
        loops = p[:, 0] == p[:, 1]
        if loops.any():
            r = int(np.flatnonzero(loops)[0])
            raise ValueError(f"pair {tuple(p[r])} at row {r} has identical endpoints")
    out = np.empty(len(p), dtype=np.float64)
    _score_pairs(g.indptr, g.indices, p, _CODE[kind], out)
    return out


def score(g: Graph, kind: str, u: int, v: int) -> float:
    return float(score_all(g, kind, [(u, v)])[0])


def write_scores(path, pairs, scores, kind: str, labels=None) -> None:
    """Tab-separated ``u v label score kind`` rows; ``labels`` maps indices to ids."""
    with open(path, "w") as fh:
        fh.write("u\tv\tlabel\tscore\tkind\n")
        for (u, v, y), s in zip(np.asarray(pairs), scores):
            a = labels[u] if labels is not None else u
            b = labels[v] if labels is not None else v
            fh.write(f"{a}\t{b}\t{int(y)}\t{float(s):.17g}\t{kind}\n")
