"""Run configuration read from ``key = value`` files.

Lines starting with ``#`` are comments.  Lists are comma separated.  Keys
of the form ``suite.param`` override per-suite settings (replica counts,
thresholds); the accepted names are the suite defaults in ``suites.py``.
Unknown keys are errors.
"""

import math
from dataclasses import dataclass, field, fields, replace

from .errors import DomainError

_LISTS = {"epsilons": float, "rs": float, "suites": str}
_SCALARS = {
    "seed": int,
    "out": str,
    "threads": int,
    "model": str,
    "alpha": float,
    "a_lambda": float,
    "n": int,
    "replicas": int,
    "dt": float,
}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    out: str = "out"
    threads: int = 1
    model: str = "beta"
    alpha: float = 1.5
    a_lambda: float | None = None
    n: int = 10_000
    epsilons: tuple = (1e-3,)
    rs: tuple = (0.25, 0.5, 0.75)
    replicas: int = 100
    dt: float = 1e-5
    suites: tuple = ()
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an integer in [0, 2^64)")
        if self.threads < 1:
            raise DomainError("threads must be positive")
        if self.model not in ("kingman", "beta"):
            raise DomainError("model must be 'kingman' or 'beta'")
        if self.model == "beta" and not 1.0 < self.alpha < 2.0:
            raise DomainError("beta models need alpha in (1, 2)")
        if self.a_lambda is not None and not self.a_lambda > 0:
            raise DomainError("a_lambda must be positive")
        if self.n < 2:
            raise DomainError("n must be at least 2")
        if any(not e > 0 for e in self.epsilons):
            raise DomainError("epsilons must be positive")
        if any(not 0.0 <= r < 1.0 for r in self.rs):
            raise DomainError("rs must lie in [0, 1)")
        if self.replicas < 1:
            raise DomainError("replicas must be positive")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError("dt must be positive")

    def with_(self, **kw):
        return replace(self, **kw)


def _convert(kind, raw, key):
    try:
        if kind is int:
            return int(raw, 0)
        if kind is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise DomainError(f"bad value for {key}: {raw!r}") from exc


def _parse_override(raw, default, key):
    if isinstance(default, (list, tuple)):
        inner = type(default[0]) if default else float
        return tuple(_convert(inner, x.strip(), key) for x in raw.split(",") if x.strip())
    if isinstance(default, bool):
        if raw.lower() not in ("true", "false"):
            raise DomainError(f"bad value for {key}: {raw!r}")
        return raw.lower() == "true"
    return _convert(type(default), raw, key)


def parse_pairs(pairs, suite_defaults=None):
    """Build a RunConfig from ``(key, raw string)`` pairs."""
    from .suites import SUITE_DEFAULTS

    suite_defaults = SUITE_DEFAULTS if suite_defaults is None else suite_defaults
    kw, overrides = {}, {}
    for key, raw in pairs:
        if key in _SCALARS:
            kw[key] = _convert(_SCALARS[key], raw, key)
        elif key in _LISTS:
            kw[key] = tuple(_convert(_LISTS[key], x.strip(), key) for x in raw.split(",") if x.strip())
        elif "." in key:
            suite, name = key.split(".", 1)
            if suite not in suite_defaults or name not in suite_defaults[suite]:
                raise DomainError(f"unknown config key {key!r}")
            overrides[key] = _parse_override(raw, suite_defaults[suite][name], key)
        else:
            raise DomainError(f"unknown config key {key!r}")
    if "seed" not in kw:
        raise DomainError("config must set a seed")
    return RunConfig(overrides=overrides, **kw)


def read_pairs(path):
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key = value")
            key, raw = line.split("=", 1)
            pairs.append((key.strip(), raw.strip()))
    return pairs


def load_config(path=None, **cli):
    """Config file values, then command-line values (those not None) on top."""
    pairs = read_pairs(path) if path else []
    seen = {k for k, _ in pairs}
    for key, value in cli.items():
        if value is None:
            continue
        if key not in _SCALARS and key not in _LISTS:
            raise DomainError(f"unknown option {key!r}")
        raw = ",".join(map(str, value)) if isinstance(value, (list, tuple)) else str(value)
        pairs = [(k, v) for k, v in pairs if k != key] if key in seen else pairs
        pairs.append((key, raw))
    return parse_pairs(pairs)


CONFIG_FIELDS = tuple(f.name for f in fields(RunConfig))
