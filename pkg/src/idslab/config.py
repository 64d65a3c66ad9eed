"""Run configuration files.

INI-style text with a ``[model]`` and a ``[run]`` section::

    [model]
    dimension = 1
    L = 100
    lambda = 0.5
    law = uniform
    a = -1
    b = 1

    [run]
    R = 10
    energies = -3:3:0.1

Lists are written as JSON (``[0, 0.1, 0.2]``) and grids may also use the
``start:stop:step`` form, which includes ``stop``. Unknown keys are errors.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .lattice import DisorderSpec, LatticeSpec, ModelSpec, PeriodicPotential

COMMANDS = (
    "ids", "surface", "holder-e", "holder-lambda", "weak-disorder",
    "wegner", "ct-decay", "dos-series", "selftest",
)


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(key, reason)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{k}: {r}" for k, r in self.errors))


REQUIRED = object()

# key -> (kind, default)
MODEL_KEYS = {
    "dimension": ("int", REQUIRED),
    "L": ("int", REQUIRED),
    "boundary": ("str", "dirichlet"),
    "lambda": ("float", 0.0),
    "law": ("str", "uniform"),
    "a": ("float", -1.0),
    "b": ("float", 1.0),
    "sigma": ("float", 1.0),
    "cutoff_k": ("float", 3.0),
    "seed": ("int", 0),
    "background_period": ("intlist", None),
    "background_values": ("floatlist", None),
}

_Q = {"q1": ("float", 1.0), "q_star": ("float", 1.0)}
RUN_KEYS = {
    "ids": {"energies": ("grid", REQUIRED), "R": ("int", 10)},
    "surface": {"energies": ("grid", REQUIRED), "lambdas": ("grid", REQUIRED),
                "R": ("int", 10), "couple_seeds": ("bool", True)},
    "holder-e": {"energies": ("grid", REQUIRED), "R": ("int", 10),
                 "window": ("floatlist", REQUIRED), "separations": ("floatlist", None), **_Q},
    "holder-lambda": {"lambdas": ("grid", REQUIRED), "E": ("float", 0.0), "R": ("int", 10),
                      "couple_seeds": ("bool", True), **_Q},
    "weak-disorder": {"lambdas": ("grid", REQUIRED), "E": ("float", 0.0), "R": ("int", 10),
                      "couple_seeds": ("bool", True), "n0_ref": ("float", None),
                      "final_tolerance": ("float", 0.01)},
    "wegner": {"E": ("float", 0.0), "etas": ("floatlist", REQUIRED), "R": ("int", 100),
               "slope_min": ("float", 0.8), "slope_max": ("float", 1.2)},
    "ct-decay": {"E": ("float", REQUIRED), "max_range": ("int", 10)},
    "dos-series": {"E": ("float", REQUIRED), "epsilon": ("float", 1e-3), "K": ("int", 4),
                   "L_box": ("int", 512), "R": ("int", 400), "c1_assumed": ("float", 1.0),
                   "force": ("bool", False)},
    "selftest": {"n_models": ("int", 20), "n_energies": ("int", 20), "max_sites": ("int", 200)},
}


def _parse_grid(text):
    if ":" in text and not text.lstrip().startswith("["):
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if not step > 0 or stop < start:
            raise ValueError("grid needs step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(n)]
    return [float(v) for v in _json_list(text)]


def _json_list(text):
    val = json.loads(text)
    if not isinstance(val, list):
        raise ValueError("expected a JSON list")
    return val


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(text) if text.strip().lstrip("-").isdigit() else int(v)


_PARSERS = {
    "int": _parse_int,
    "float": float,
    "str": lambda t: t.strip(),
    "bool": _parse_bool,
    "grid": _parse_grid,
    "intlist": lambda t: [int(v) for v in _json_list(t)],
    "floatlist": lambda t: [float(v) for v in _json_list(t)],
}


def _section(raw, keys, prefix, errors):
    out = {}
    for key in raw:
        if key not in keys:
            errors.append((f"{prefix}.{key}", "unknown key"))
    for key, (kind, default) in keys.items():
        if key in raw:
            try:
                out[key] = _PARSERS[kind](raw[key])
            except (ValueError, TypeError, json.JSONDecodeError) as exc:
                errors.append((f"{prefix}.{key}", f"expected {kind}: {exc}"))
        elif default is REQUIRED:
            errors.append((f"{prefix}.{key}", "missing required key"))
        else:
            out[key] = default
    return out


@dataclass(frozen=True)
class RunConfig:
    command: str
    model_params: tuple
    run_params: tuple

    @property
    def model_dict(self) -> dict:
        return dict(self.model_params)

    @property
    def params(self) -> dict:
        return dict(self.run_params)

    def model(self) -> ModelSpec:
        return build_model(self.model_dict)

    def canonical(self) -> str:
        return serialize(self)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def build_model(m: dict) -> ModelSpec:
    d = m["dimension"]
    period = m["background_period"] or [1] * d
    values = m["background_values"] if m["background_values"] is not None else [0.0] * math.prod(period)
    return ModelSpec(
        LatticeSpec(d, m["L"], m["boundary"]),
        PeriodicPotential(tuple(period), np.array(values, dtype=float)),
        DisorderSpec(m["law"], m["a"], m["b"], m["sigma"], m["cutoff_k"], m["seed"]),
        m["lambda"],
    )


def _validate(command, m, r, errors):
    checks = [
        ("model.dimension", m.get("dimension") in (1, 2, 3), "dimension must be 1, 2 or 3"),
        ("model.L", m.get("L", 1) >= 1, "L must be >= 1"),
        ("model.boundary", m.get("boundary") in ("dirichlet", "periodic"),
         "boundary must be dirichlet or periodic"),
        ("model.lambda", m.get("lambda", 0) >= 0, "lambda must be ≥ 0"),
        ("model.law", m.get("law") in ("uniform", "truncated_gaussian"),
         "law must be uniform or truncated_gaussian"),
        ("model.b", m.get("a", -1) < m.get("b", 1) or m.get("law") != "uniform",
         "uniform law needs a < b"),
        ("model.sigma", m.get("sigma", 1) > 0, "sigma must be > 0"),
        ("model.cutoff_k", m.get("cutoff_k", 1) > 0, "cutoff_k must be > 0"),
        ("model.seed", 0 <= m.get("seed", 0) < 2**64, "seed must be an unsigned 64-bit integer"),
    ]
    if "R" in r:
        checks.append(("run.R", r["R"] >= 1, "R must be >= 1"))
    for key in ("energies", "lambdas"):
        if r.get(key) is not None:
            g = r[key]
            checks.append((f"run.{key}", len(g) > 0 and all(b > a for a, b in zip(g, g[1:])),
                           f"{key} must be non-empty and strictly ascending"))
    if r.get("lambdas") is not None:
        checks.append(("run.lambdas", min(r["lambdas"]) >= 0, "lambdas must be ≥ 0"))
    if r.get("window") is not None:
        w = r["window"]
        checks.append(("run.window", len(w) == 2 and w[0] < w[1], "window must be [lo, hi] with lo < hi"))
    if r.get("etas") is not None:
        checks.append(("run.etas", len(r["etas"]) > 0 and min(r["etas"]) > 0, "etas must be > 0"))
    if command == "dos-series":
        checks.append(("run.epsilon", r.get("epsilon", 1) > 0, "epsilon must be > 0"))
        checks.append(("run.K", r.get("K", 0) >= 0, "K must be >= 0"))
    for key, ok, reason in checks:
        if not ok:
            errors.append((key, reason))
    if not errors:
        try:
            build_model(m)
        except ValueError as exc:
            errors.append(("model", str(exc)))


def parse_config(text: str, command: str = None) -> RunConfig:
    """Parse and validate config text; raises ``ConfigError`` listing every problem."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([("config", f"unreadable: {exc}")]) from exc
    errors = []
    for sec in cp.sections():
        if sec not in ("model", "run"):
            errors.append((sec, "unknown section"))
    raw_run = dict(cp["run"]) if cp.has_section("run") else {}
    file_cmd = raw_run.pop("command", None)
    if command is None:
        command = file_cmd
    elif file_cmd is not None and file_cmd != command:
        errors.append(("run.command", f"file says {file_cmd!r} but {command!r} was requested"))
    if command not in COMMANDS:
        raise ConfigError(errors + [("command", f"unknown command {command!r}")])
    if not cp.has_section("model"):
        raise ConfigError(errors + [("model", "missing [model] section")])
    m = _section(dict(cp["model"]), MODEL_KEYS, "model", errors)
    r = _section(raw_run, RUN_KEYS[command], "run", errors)
    if not errors:
        _validate(command, m, r, errors)
    if errors:
        raise ConfigError(errors)
    return RunConfig(command, tuple(m.items()), tuple(r.items()))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return json.dumps([_num(x) for x in v])
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _num(x):
    return x if isinstance(x, int) else float(x)


def serialize(cfg: RunConfig) -> str:
    """Canonical text: every key present, keys in schema order, ``null`` values omitted."""
    lines = ["[model]"]
    for key in MODEL_KEYS:
        v = cfg.model_dict[key]
        if v is not None:
            lines.append(f"{key} = {_fmt(v)}")
    lines += ["", "[run]", f"command = {cfg.command}"]
    for key in RUN_KEYS[cfg.command]:
        v = cfg.params[key]
        if v is not None:
            lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
