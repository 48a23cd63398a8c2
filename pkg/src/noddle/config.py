"""Layered run configuration.

Keys are flat and dotted (``walk.length``). Values are resolved in order:
built-in default, then a config file, then command-line overrides. Config
files hold one ``key = value`` per line; ``#`` starts a comment.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Any, Callable

from .errors import ConfigError, DataError
from .heuristics import KINDS as HEURISTIC_KINDS
from .mlp import EDGE_OPS
from .optim import KINDS as OPTIMIZER_KINDS
from .optim import OptimizerState, make_optimizer
from .walks import WalkConfig


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(t) for t in text)
    text = str(text).strip()
    return tuple(int(t) for t in text.split(",")) if text else ()


def _str_list(text):
    if isinstance(text, (list, tuple)):
        return tuple(str(t) for t in text)
    return tuple(t.strip() for t in str(text).split(",") if t.strip())


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "default", "none"):
        return None
    return float(text)


def _fmt(value):
    if value is None:
        return "default"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Key:
    default: Any
    parse: Callable
    check: Callable | None = None
    help: str = ""


def _positive(x):
    return x > 0


def _fraction(x):
    return 0 < x < 1


def _nonneg(x):
    return x >= 0


def _is_optimizer(x):
    return x in OPTIMIZER_KINDS


def _is_edge_op(x):
    return x in EDGE_OPS


METHODS = HEURISTIC_KINDS + ("node2vec",) + tuple(
    f"noddle_{k}" for k in ("adam", "adamax", "adagrad", "adadelta"))


def _methods_ok(xs):
    return len(xs) > 0 and all(m in METHODS for m in xs)


def _optimizer_keys(prefix, kind):
    return {
        f"{prefix}.kind": Key(kind, str, _is_optimizer, "sgd, adagrad, adadelta, adam or adamax"),
        f"{prefix}.lr": Key(None, _optional_float, None, "learning rate (default: per kind)"),
        f"{prefix}.beta1": Key(None, _optional_float),
        f"{prefix}.beta2": Key(None, _optional_float),
        f"{prefix}.gamma": Key(None, _optional_float),
        f"{prefix}.eps": Key(None, _optional_float),
    }


SCHEMA: dict[str, Key] = {
    "dataset.path": Key("", str, None, "edge-list file"),
    "pairs.removal_fraction": Key(0.2, float, _fraction, "share of edges removed as positives"),
    "pairs.negative_ratio": Key(1.0, float, _positive, "negatives per positive"),
    "pairs.test_fraction": Key(0.3, float, _fraction),
    "pairs.max_distance": Key(3, int, lambda x: x >= 2, "negatives lie within this hop distance"),
    "walk.dim": Key(128, int, lambda x: x >= 2),
    "walk.walks_per_node": Key(10, int, _positive),
    "walk.length": Key(80, int, lambda x: x >= 2),
    "walk.context": Key(10, int, _positive),
    "walk.p": Key(1.0, float, _positive),
    "walk.q": Key(1.0, float, _positive),
    "walk.mode": Key("auto", str, lambda x: x in ("auto", "precomputed", "on_the_fly")),
    "embed.negatives": Key(5, int, _positive),
    "embed.epochs": Key(1, int, _nonneg),
    "embed.shared_updates": Key(False, _bool, None, "lock-free parallel skip-gram updates"),
    **_optimizer_keys("embed.optimizer", "sgd"),
    **_optimizer_keys("optimizer", "adam"),
    "mlp.hidden": Key((1024, 1024, 1024, 1024), _int_list, lambda x: all(h > 0 for h in x)),
    "mlp.edge_op": Key("hadamard", str, _is_edge_op),
    "mlp.epochs": Key(50, int, _nonneg),
    "mlp.batch_size": Key(512, int, _positive),
    "mlp.patience": Key(5, int, _nonneg, "early stop after this many stale epochs (0 = off)"),
    "logreg.epochs": Key(100, int, _nonneg, "node2vec-only baseline classifier"),
    "logreg.lr": Key(0.01, float, _positive),
    "eval.methods": Key(METHODS, _str_list, _methods_ok),
    "eval.seeds": Key((1, 2, 3, 4, 5), _int_list, lambda x: len(x) > 0),
    "run.seed": Key(0, int, _nonneg),
    "run.threads": Key(0, int, _nonneg, "0 means all cores"),
    "run.deterministic": Key(False, _bool),
    "run.output_dir": Key("out", str),
}

# keys that do not influence results and stay out of the config hash
VOLATILE = ("run.output_dir", "run.threads")


class RunConfig:
    """Validated mapping of every configuration key to its value."""

    def __init__(self, values: dict[str, Any] | None = None):
        self._values = {k: spec.default for k, spec in SCHEMA.items()}
        if values:
            self.update(values)

    def update(self, values: dict[str, Any], source: str = "override") -> None:
        for key, raw in values.items():
            self._values[key] = parse_value(key, raw, source)

    def __getitem__(self, key: str):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def items(self):
        return self._values.items()

    def copy(self) -> RunConfig:
        c = RunConfig()
        c._values = dict(self._values)
        return c

    def section(self, prefix: str) -> dict[str, Any]:
        """Values under ``prefix.`` with the prefix stripped, direct children only."""
        n = len(prefix) + 1
        return {k[n:]: v for k, v in self._values.items()
                if k.startswith(prefix + ".") and "." not in k[n:]}

    def optimizer_hyperparameters(self, prefix: str) -> dict[str, float]:
        sec = self.section(prefix)
        return {k: v for k, v in sec.items() if k != "kind" and v is not None}

    def walk_config(self) -> WalkConfig:
        return WalkConfig(walks_per_node=self["walk.walks_per_node"], walk_length=self["walk.length"],
                          context_size=self["walk.context"], p=self["walk.p"], q=self["walk.q"],
                          dim=self["walk.dim"])

    def optimizer(self, prefix: str, kind: str | None = None) -> OptimizerState:
        """Optimizer for ``prefix``; with ``kind`` given, hyperparameters under
        ``prefix`` apply only if ``kind`` matches ``prefix.kind``."""
        if kind is not None and kind != self[prefix + ".kind"]:
            return make_optimizer(kind)
        return make_optimizer(self[prefix + ".kind"], self.optimizer_hyperparameters(prefix))

    def validate(self) -> RunConfig:
        """Cross-key checks that single-key parsing cannot catch."""
        self.walk_config()
        self.optimizer("embed.optimizer")
        self.optimizer("optimizer")
        return self

    def dumps(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in sorted(self._values.items()))

    def digest(self) -> str:
        stable = "".join(f"{k} = {_fmt(v)}\n" for k, v in sorted(self._values.items())
                         if k not in VOLATILE)
        return hashlib.sha256(stable.encode()).hexdigest()[:16]


def parse_value(key: str, raw, source: str = "override"):
    spec = SCHEMA.get(key)
    if spec is None:
        raise ConfigError(f"unknown config key {key!r} ({source})")
    try:
        value = spec.parse(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {raw!r} for {key} ({source})") from None
    if value is not None and spec.check is not None and not spec.check(value):
        raise ConfigError(f"value {raw!r} out of range for {key} ({source}) {spec.help}".rstrip())
    return value


def parse_config_text(text: str, source: str = "config") -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        out[key] = value.strip()
    return out


def load_config(path=None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Defaults, then the file at ``path``, then ``overrides``."""
    cfg = RunConfig()
    if path is not None:
        if not os.path.isfile(path):
            raise DataError(f"config file not found: {path}")
        with open(path) as fh:
            cfg.update(parse_config_text(fh.read(), str(path)), source=str(path))
    if overrides:
        cfg.update(overrides, source="command line")
    return cfg.validate()
