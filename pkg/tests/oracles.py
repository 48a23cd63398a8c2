"""Brute-force reference implementations used as test oracles.

Everything here is deliberately naive (dicts, sets, explicit loops or
networkx) and shares no code with the package.
"""

import itertools
import math
from collections import deque

import networkx as nx
import numpy as np


def adjacency_sets(n, edges):
    adj = {u: set() for u in range(n)}
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def bfs_all(adj, source):
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def all_pairs_distance(adj):
    return {u: bfs_all(adj, u) for u in adj}


def is_bridge(adj, u, v):
    """Remove the edge and rerun a full BFS from u."""
    cut = {k: set(s) for k, s in adj.items()}
    cut[u].discard(v)
    cut[v].discard(u)
    return v not in bfs_all(cut, u)


def component_count(adj):
    seen = set()
    count = 0
    for s in adj:
        if s not in seen:
            count += 1
            seen |= set(bfs_all(adj, s))
    return count


def heuristic(adj, kind, u, v):
    cu, cv = adj[u], adj[v]
    if kind == "adamic_adar":
        return sum(1.0 / math.log(len(adj[x])) for x in cu & cv if len(adj[x]) >= 2)
    if kind == "jaccard":
        union = cu | cv
        return len(cu & cv) / len(union) if union else 0.0
    return float(len(cu) * len(cv))


def pairwise_auc(labels, scores):
    pos = [s for y, s in zip(labels, scores) if y == 1]
    neg = [s for y, s in zip(labels, scores) if y == 0]
    total = 0.0
    for a, b in itertools.product(pos, neg):
        total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (len(pos) * len(neg))


def random_graph(n, m, seed):
    """G(n, m) graph as (node_count, sorted edge list)."""
    g = nx.gnm_random_graph(n, m, seed=seed)
    return n, sorted(tuple(sorted(e)) for e in g.edges())


def central_difference(f, x, h):
    """Central-difference gradient of scalar ``f`` at every entry of ``x`` (modified in place)."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        grad.reshape(-1)[i] = (up - down) / (2 * h)
    return grad


def reference_step(kind, w, g, state, hp):
    """One optimizer step written directly from the textbook update rules."""
    t = state.get("t", 0) + 1
    state["t"] = t
    lr, eps = hp["lr"], hp["eps"]
    if kind == "sgd":
        return w - lr * g
    if kind == "adagrad":
        state["v"] = state.get("v", 0.0) + g * g
        return w - lr * g / np.sqrt(state["v"] + eps)
    if kind == "adadelta":
        rho = hp["gamma"]
        eg = rho * state.get("eg", 0.0) + (1 - rho) * g * g
        dx = np.sqrt(state.get("ex", 0.0) + eps) / np.sqrt(eg + eps) * g
        state["eg"], state["ex"] = eg, rho * state.get("ex", 0.0) + (1 - rho) * dx * dx
        return w - dx
    b1, b2 = hp["beta1"], hp["beta2"]
    m = b1 * state.get("m", 0.0) + (1 - b1) * g
    state["m"] = m
    if kind == "adam":
        v = b2 * state.get("v", 0.0) + (1 - b2) * g * g
        state["v"] = v
        return w - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    u = np.maximum(b2 * state.get("u", 0.0), np.abs(g))
    state["u"] = u
    return w - (lr / (1 - b1 ** t)) * m / (u + eps)


def full_softmax_loss(center, context, pairs):
    """Mean cross-entropy of the full softmax over all context rows."""
    total = 0.0
    for c, o in pairs:
        logits = context @ center[c]
        top = logits.max()
        total += -(logits[o] - top - math.log(np.exp(logits - top).sum()))
    return total / len(pairs)
