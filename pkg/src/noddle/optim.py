"""First-order optimizers shared by the skip-gram trainer and the classifier.

All five update rules live in one numba kernel that works on flat arrays, so
dense parameter tensors and single embedding rows go through the same code.

Defaults follow the original publications of each method:

========  ======  ======  =======  =====  ======
kind      lr      beta1   beta2    gamma  eps
========  ======  ======  =======  =====  ======
sgd       0.025   -       -        -      -
adagrad   0.01    -       -        -      1e-8
adadelta  (1.0)   -       -        0.95   1e-6
adam      0.001   0.9     0.999    -      1e-8
adamax    0.001   0.9     0.999    -      1e-8
========  ======  ======  =======  =====  ======

Adadelta has no learning rate; ``lr`` is accepted for uniformity and ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import container
from .errors import ConfigError, ContractError, NumericalError

KINDS = ("sgd", "adagrad", "adadelta", "adam", "adamax")
KIND_CODE = {k: i for i, k in enumerate(KINDS)}

DEFAULTS = {
    "sgd": dict(lr=0.025, beta1=0.0, beta2=0.0, gamma=0.0, eps=0.0),
    "adagrad": dict(lr=0.01, beta1=0.0, beta2=0.0, gamma=0.0, eps=1e-8),
    "adadelta": dict(lr=1.0, beta1=0.0, beta2=0.0, gamma=0.95, eps=1e-6),
    "adam": dict(lr=0.001, beta1=0.9, beta2=0.999, gamma=0.0, eps=1e-8),
    "adamax": dict(lr=0.001, beta1=0.9, beta2=0.999, gamma=0.0, eps=1e-8),
}

# accumulator names per kind, in the order they are passed to the kernel
ACCUMULATORS = {
    "sgd": (),
    "adagrad": ("v",),
    "adadelta": ("v", "T"),
    "adam": ("s", "v"),
    "adamax": ("s", "u"),
}


@numba.njit(cache=True, error_model="numpy")
def update_kernel(kind, w, g, a1, a2, lr, beta1, beta2, gamma, eps, t):
    """Apply one update to the flat arrays ``w`` in place.

    ``a1``/``a2`` are the kind's accumulators (ignored where unused) and ``t``
    is the 1-based step number used for bias correction.
    """
    n = w.size
    if kind == 0:
        for i in range(n):
            w[i] -= lr * g[i]
    elif kind == 1:
        for i in range(n):
            a1[i] += g[i] * g[i]
            w[i] -= lr / math.sqrt(a1[i] + eps) * g[i]
    elif kind == 2:
        for i in range(n):
            a1[i] = gamma * a1[i] + (1.0 - gamma) * g[i] * g[i]
            delta = math.sqrt(a2[i] + eps) / math.sqrt(a1[i] + eps) * g[i]
            a2[i] = gamma * a2[i] + (1.0 - gamma) * delta * delta
            w[i] -= delta
    elif kind == 3:
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        for i in range(n):
            a1[i] = beta1 * a1[i] + (1.0 - beta1) * g[i]
            a2[i] = beta2 * a2[i] + (1.0 - beta2) * g[i] * g[i]
            w[i] -= lr * (a1[i] / c1) / (math.sqrt(a2[i] / c2) + eps)
    else:
        c1 = 1.0 - beta1 ** t
        for i in range(n):
            a1[i] = beta1 * a1[i] + (1.0 - beta1) * g[i]
            a2[i] = max(beta2 * a2[i], abs(g[i]))
            w[i] -= (lr / c1) * a1[i] / (a2[i] + eps)


@dataclass
class OptimizerState:
    kind: str
    lr: float
    beta1: float
    beta2: float
    gamma: float
    eps: float
    t: int = 0
    accumulators: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def code(self) -> int:
        return KIND_CODE[self.kind]

    @property
    def hyperparameters(self) -> dict[str, float]:
        return dict(lr=self.lr, beta1=self.beta1, beta2=self.beta2, gamma=self.gamma, eps=self.eps)

    def fresh(self) -> OptimizerState:
        """Same hyperparameters, no history."""
        return OptimizerState(self.kind, **self.hyperparameters)

    def buffers(self, shape, dtype):
        """Allocate (or return) the two accumulator slots passed to the kernel."""
        names = ACCUMULATORS[self.kind]
        for name in names:
            if name not in self.accumulators:
                self.accumulators[name] = np.zeros(shape, dtype=dtype)
        bufs = [self.accumulators[name] for name in names]
        while len(bufs) < 2:
            bufs.append(np.zeros(0, dtype=dtype))
        return bufs


def make_optimizer(kind: str, hyperparameters: dict | None = None, **kwargs) -> OptimizerState:
    """Create a fresh optimizer state with documented defaults filled in."""
    if kind not in DEFAULTS:
        raise ConfigError(f"unknown optimizer kind {kind!r}; expected one of {', '.join(KINDS)}")
    params = dict(DEFAULTS[kind])
    given = {**(hyperparameters or {}), **kwargs}
    for key, value in given.items():
        if key not in params:
            raise ConfigError(f"unknown optimizer hyperparameter {key!r}")
        if value is not None:
            params[key] = float(value)
    if not params["lr"] > 0:
        raise ConfigError("optimizer learning rate must be positive")
    if params["eps"] < 0:
        raise ConfigError("optimizer eps must be non-negative")
    for key in ("beta1", "beta2", "gamma"):
        if not 0.0 <= params[key] < 1.0:
            raise ConfigError(f"optimizer {key} must lie in [0, 1)")
    return OptimizerState(kind, **params)


def step(state: OptimizerState, params: np.ndarray, grads: np.ndarray):
    """One in-place update of ``params``; returns ``(params, state)``."""
    if params.shape != grads.shape:
        raise ContractError(f"gradient shape {grads.shape} != parameter shape {params.shape}")
    if not params.flags.c_contiguous:
        raise ContractError("parameters must be C-contiguous")
    if not np.all(np.isfinite(grads)):
        raise NumericalError("non-finite gradient passed to optimizer")
    for acc in state.accumulators.values():
        if acc.shape != params.shape:
            raise ContractError(f"accumulator shape {acc.shape} != parameter shape {params.shape}")
    a1, a2 = state.buffers(params.shape, params.dtype)
    state.t += 1
    g = np.ascontiguousarray(grads, dtype=params.dtype)
    update_kernel(state.code, params.reshape(-1), g.reshape(-1), a1.reshape(-1), a2.reshape(-1),
                  state.lr, state.beta1, state.beta2, state.gamma, state.eps, state.t)
    return params, state


def dumps_state(state: OptimizerState) -> bytes:
    meta = {"kind": state.kind, "t": state.t, **state.hyperparameters}
    return container.pack(meta, state.accumulators)


def loads_state(blob: bytes) -> OptimizerState:
    meta, accs = container.unpack(blob)
    t = meta.pop("t")
    kind = meta.pop("kind")
    return OptimizerState(kind, t=t, accumulators=accs, **meta)
