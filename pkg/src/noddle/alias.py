"""Walker/Vose alias tables for O(1) draws from a fixed discrete distribution."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import DegenerateDistributionError


@dataclass(frozen=True, eq=False)
class AliasTable:
    probabilities: np.ndarray
    aliases: np.ndarray

    @property
    def outcome_count(self) -> int:
        return len(self.probabilities)

    def distribution(self) -> np.ndarray:
        """Exact probability of each outcome implied by the table."""
        n = self.outcome_count
        mass = self.probabilities.astype(np.float64).copy()
        np.add.at(mass, self.aliases, 1.0 - self.probabilities)
        return mass / n


@numba.njit(cache=True)
def fill_alias(weights, prob, alias):
    """Vose's construction into preallocated ``prob``/``alias`` slices."""
    n = weights.size
    total = 0.0
    for i in range(n):
        total += weights[i]
    scaled = np.empty(n, dtype=np.float64)
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        scaled[i] = weights[i] * n / total
        alias[i] = i
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        l = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            nl -= 1
            small[ns] = l
            ns += 1
    # leftovers are 1 up to rounding
    for i in range(nl):
        prob[large[i]] = 1.0
    for i in range(ns):
        prob[small[i]] = 1.0


def alias_build(weights) -> AliasTable:
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise DegenerateDistributionError("empty weight vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    if not w.sum() > 0:
        raise DegenerateDistributionError("all weights are zero")
    prob = np.empty(w.size, dtype=np.float64)
    alias = np.empty(w.size, dtype=np.int64)
    fill_alias(w, prob, alias)
    return AliasTable(prob, alias)


def alias_sample(table: AliasTable, rng: np.random.Generator, size=None):
    """Draw one index (or an array of ``size`` indices) from ``table``."""
    n = table.outcome_count
    i = rng.integers(n, size=size)
    u = rng.random(size=size)
    if size is None:
        return int(i) if u < table.probabilities[i] else int(table.aliases[i])
    return np.where(u < table.probabilities[i], i, table.aliases[i])


@numba.njit(cache=True)
def seed_state(seed):
    """splitmix64 scramble of ``seed`` into a non-zero xorshift state."""
    z = np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    if z == 0:
        z = np.uint64(1)
    state = np.empty(1, dtype=np.uint64)
    state[0] = z
    return state


@numba.njit(cache=True)
def next_u64(state):
    # xorshift64*
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * np.uint64(0x2545F4914F6CDD1D)


@numba.njit(cache=True)
def next_float(state):
    return (next_u64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def next_int(state, n):
    return np.int64(next_float(state) * n)


@numba.njit(cache=True)
def draw(prob, alias, state):
    """Alias draw driven by an explicit xorshift state."""
    u = next_float(state) * prob.size
    i = np.int64(u)
    if u - i < prob[i]:
        return i
    return alias[i]
