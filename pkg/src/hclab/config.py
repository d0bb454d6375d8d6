"""Experiment configuration files.

Plain-text format: ``[section]`` headers with ``key = value`` lines;
``#`` or ``;`` start a comment.  One experiment per file:

    [experiment]
    name = pd-curve

    [params]
    kappa = 0.005
    b = 100
    lambda = 0.20, 0.25, 0.30, 0.35, 0.40, 2.0
    M = 10000
    T = 300
    seeds = 10
    master_seed = 20240817

    [output]
    path = fig1_left.csv

Grids may be comma lists or ``start:stop:count`` (inclusive linspace).
Unknown sections or keys are rejected with the offending line number, and
every numeric field is validated against the module preconditions before
any computation starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = ["ExperimentConfig", "parse_config_text", "load_config", "EXPERIMENTS"]

EXPERIMENTS = (
    "generate",
    "bp-run",
    "pd-curve",
    "free-energy",
    "phase-diagram",
    "mu-profile",
    "exhaustive",
    "verify-bounds",
    "gaussian-check",
)


def parse_config_text(text: str):
    """-> {section: {key: (raw_value, lineno)}}, strictly validated shape."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", lineno)
            current = line[1:-1].strip()
            if not current:
                raise ConfigError("empty section name", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        if current is None:
            raise ConfigError("key before any [section] header", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].split(";", 1)[0].strip()
        if not key:
            raise ConfigError("empty key", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current][key] = (value, lineno)
    return sections


def _parse_value(kind: str, raw: str, lineno: int):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "yes", "on", "1"):
                return True
            if raw.lower() in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind == "str":
            return raw
        if kind == "floatlist":
            if ":" in raw:
                parts = raw.split(":")
                if len(parts) != 3:
                    raise ValueError("grid must be start:stop:count")
                lo, hi, cnt = float(parts[0]), float(parts[1]), int(parts[2])
                if cnt < 1:
                    raise ValueError("grid count must be positive")
                return [float(x) for x in np.linspace(lo, hi, cnt)]
            return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {raw!r} as {kind}: {exc}", lineno) from None
    raise AssertionError(f"unknown kind {kind}")


# key -> (type, required, default); validated per experiment
_COMMON = {
    "master_seed": ("int", False, 0),
}
_SCHEMAS: dict[str, dict[str, tuple[str, bool, object]]] = {
    "generate": {
        **_COMMON,
        "n": ("int", True, None),
        "kappa": ("float", True, None),
        "b": ("float", True, None),
        "lambda": ("float", False, None),
        "a": ("float", False, None),
        "fixed_size": ("bool", False, False),
    },
    "bp-run": {
        **_COMMON,
        "n": ("int", True, None),
        "kappa": ("float", True, None),
        "b": ("float", True, None),
        "lambda": ("float", True, None),
        "t": ("int", True, None),
        "seeds": ("int", False, 1),
        "init": ("str", False, "free"),
        "threshold_rule": ("str", False, "max_psucc"),
        "fixed_size": ("bool", False, False),
    },
    "pd-curve": {
        **_COMMON,
        "kappa": ("float", True, None),
        "b": ("float", True, None),
        "lambda": ("floatlist", True, None),
        "M": ("int", True, None),
        "T": ("int", True, None),
        "seeds": ("int", False, 1),
        "reweight": ("bool", False, True),
        "mc_rounds": ("int", False, 100_000),
    },
    "free-energy": {
        **_COMMON,
        "kappa": ("float", True, None),
        "b": ("float", True, None),
        "lambda": ("float", True, None),
        "M": ("int", True, None),
        "T": ("int", True, None),
        "seeds": ("int", False, 1),
        "reweight": ("bool", False, True),
        "mc_rounds": ("int", False, 100_000),
        "snapshot_prefix": ("str", False, None),
    },
    "phase-diagram": {
        **_COMMON,
        "kappa": ("floatlist", True, None),
        "tol": ("float", False, 1e-4),
        "lambda_min": ("float", False, None),
        "lambda_max": ("float", False, None),
    },
    "mu-profile": {
        **_COMMON,
        "kappa": ("float", True, None),
        "lambda": ("float", True, None),
        "mu": ("floatlist", True, None),
    },
    "exhaustive": {
        **_COMMON,
        "n": ("int", True, None),
        "kappa": ("float", True, None),
        "b": ("float", True, None),
        "lambda": ("float", True, None),
        "k": ("int", False, None),
        "seeds": ("int", False, 1),
        "bp_t": ("int", False, None),
        "threshold_rule": ("str", False, "max_psucc"),
    },
    "verify-bounds": {
        **_COMMON,
        "kappa": ("float", True, None),
        "b": ("float", True, None),
        "lambda": ("floatlist", True, None),
        "M": ("int", True, None),
        "T": ("int", False, 300),
        "reweight": ("bool", False, True),
    },
    "gaussian-check": {
        **_COMMON,
        "kappa": ("float", True, None),
        "b": ("float", True, None),
        "lambda": ("float", True, None),
        "t": ("int", True, None),
        "M": ("int", True, None),
    },
}


@dataclass
class ExperimentConfig:
    """A validated experiment: name, typed parameters, output path."""

    experiment: str
    params: dict = field(default_factory=dict)
    out_path: str = "out.csv"
    raw_items: tuple = ()  # canonical (section.key, value) pairs for hashing

    def canonical_text(self) -> str:
        lines = [f"experiment={self.experiment}"]
        lines += [f"{k}={v}" for k, v in sorted(self.raw_items)]
        return "\n".join(lines)


def _validate_params(experiment: str, params: dict, linenos: dict) -> None:
    def bad(key, msg):
        raise ConfigError(f"{key}: {msg}", linenos.get(key))

    def require(cond, key, msg):
        if not cond:
            bad(key, msg)

    p = params
    if "kappa" in p:
        kappas = p["kappa"] if isinstance(p["kappa"], list) else [p["kappa"]]
        for k in kappas:
            require(0.0 < k < 1.0, "kappa", "must lie in (0, 1)")
    if "b" in p:
        require(p["b"] > 0, "b", "must be positive")
    if "lambda" in p and p["lambda"] is not None:
        lams = p["lambda"] if isinstance(p["lambda"], list) else [p["lambda"]]
        require(len(lams) > 0, "lambda", "grid must be nonempty")
        for lam in lams:
            require(lam >= 0, "lambda", "must be nonnegative")
    if "n" in p:
        require(p["n"] >= 2, "n", "must be at least 2")
    if "M" in p:
        require(p["M"] >= 1000, "M", "population size must be at least 1000")
    if "T" in p:
        require(p["T"] >= 0, "T", "must be nonnegative")
    if "t" in p:
        require(p["t"] >= 0, "t", "must be nonnegative")
    if "seeds" in p:
        require(p["seeds"] >= 1, "seeds", "must be at least 1")
    if "mc_rounds" in p:
        require(p["mc_rounds"] >= 1000, "mc_rounds", "must be at least 1000")
    if "mu" in p:
        for m in p["mu"]:
            require(m >= 0, "mu", "values must be nonnegative")
    if experiment == "generate":
        require(
            (p.get("lambda") is None) != (p.get("a") is None),
            "lambda",
            "exactly one of lambda or a must be given",
        )
        if p.get("a") is not None:
            require(p["a"] >= p["b"], "a", "need a >= b")
    if experiment in ("bp-run", "exhaustive"):
        rule = p.get("threshold_rule", "max_psucc")
        require(rule in ("max_psucc", "min_errors"), "threshold_rule",
                "must be max_psucc or min_errors")
    if experiment == "bp-run":
        require(p["init"] in ("free", "plus"), "init", "must be free or plus")
    if experiment == "exhaustive" and p.get("k") is not None:
        require(1 <= p["k"] <= p["n"], "k", "must satisfy 1 <= k <= n")
    if experiment == "phase-diagram":
        lo, hi = p.get("lambda_min"), p.get("lambda_max")
        if (lo is None) != (hi is None):
            bad("lambda_min", "lambda_min and lambda_max must be given together")
        if lo is not None:
            require(0 <= lo < hi, "lambda_min", "need 0 <= lambda_min < lambda_max")


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    """Parse and validate a config file.

    ``experiment`` (from the CLI) must match the file's [experiment] name
    when both are present; either alone is enough.
    """
    with open(path) as fh:
        sections = parse_config_text(fh.read())

    for sec in sections:
        if sec not in ("experiment", "params", "output"):
            lineno = min(ln for _, ln in sections[sec].values()) if sections[sec] else None
            raise ConfigError(f"unknown section [{sec}]", lineno)

    name = experiment
    exp_sec = sections.get("experiment", {})
    for key, (value, lineno) in exp_sec.items():
        if key != "name":
            raise ConfigError(f"unknown key {key!r} in [experiment]", lineno)
        if experiment is not None and value != experiment:
            raise ConfigError(
                f"config is for experiment {value!r}, not {experiment!r}", lineno
            )
        name = value
    if name is None:
        raise ConfigError("no experiment name given (CLI argument or [experiment] name)")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")

    schema = _SCHEMAS[name]
    params: dict = {}
    linenos: dict = {}
    for key, (raw, lineno) in sections.get("params", {}).items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for experiment {name}", lineno)
        params[key] = _parse_value(schema[key][0], raw, lineno)
        linenos[key] = lineno
    for key, (kind, required, default) in schema.items():
        if key not in params:
            if required:
                raise ConfigError(f"missing required key {key!r} for experiment {name}")
            params[key] = default

    out_path = "out.csv"
    for key, (value, lineno) in sections.get("output", {}).items():
        if key != "path":
            raise ConfigError(f"unknown key {key!r} in [output]", lineno)
        out_path = value

    _validate_params(name, params, linenos)
    raw_items = tuple(
        (f"{sec}.{key}", val)
        for sec, body in sorted(sections.items())
        for key, (val, _) in sorted(body.items())
    )
    return ExperimentConfig(
        experiment=name, params=params, out_path=out_path, raw_items=raw_items
    )
