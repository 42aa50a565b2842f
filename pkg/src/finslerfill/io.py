"""Configuration parsing and deterministic serialisation."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metric import MetricError, metric_from_spec

try:
    from importlib.metadata import version as _pkg_version
    TOOL_VERSION = _pkg_version("finslerfill")
except Exception:  # pragma: no cover - running from a source tree
    TOOL_VERSION = "0.1.0"


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "h": 0.02,
    "R": 3,
    "n": 16,
    "m": 512,
    "seed": 0,
    "out": "out",
    "schedule": None,
    "what": "indicatrices",
    "tolerances": {},
}

TOLERANCE_DEFAULTS = {
    "distance": None,       # None means 2h/R
    "angle": 1e-9,
    "duality": 1e-8,
    "cyclic_angle": 0.02,
    "pu_ratio": 0.03,
}


@dataclass
class RunConfig:
    metric: dict
    metric0: dict | None = None
    h: float = 0.02
    R: int = 3
    n: int = 16
    m: int = 512
    seed: int = 0
    out: str = "out"
    schedule: list | None = None
    what: str = "indicatrices"
    tolerances: dict = field(default_factory=dict)

    def tol(self, key):
        return self.tolerances.get(key, TOLERANCE_DEFAULTS[key])

    def to_dict(self):
        d = {"metric": self.metric, "h": self.h, "R": self.R, "n": self.n, "m": self.m,
             "seed": self.seed, "schedule": self.schedule, "what": self.what,
             "tolerances": dict(sorted(self.tolerances.items()))}
        if self.metric0 is not None:
            d["metric0"] = self.metric0
        return d

    @property
    def config_hash(self):
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def _to_builtin(obj):
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_builtin(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not np.isfinite(v):
            return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
        return v
    return obj


def canonical_json(obj):
    return json.dumps(_to_builtin(obj), sort_keys=True, separators=(",", ":"))


def dumps(obj):
    return json.dumps(_to_builtin(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        r = list(csv.reader(fh))
    return r[0], np.array([[float(v) for v in row] for row in r[1:]])


def write_matrix(path, matrix, labels=None):
    """Square matrix with a one-line header; the first column holds the row
    labels (boundary angles)."""
    M = np.asarray(matrix, dtype=float)
    labels = np.arange(len(M)) if labels is None else np.asarray(labels)
    header = ["angle"] + [f"q{j}" for j in range(M.shape[1])]
    write_csv(path, header, [[labels[i]] + list(M[i]) for i in range(len(M))])


# ---------------------------------------------------------------------------
# config


def load_metric_spec(spec, base_dir="."):
    """A metric spec given inline or as a path to a JSON file."""
    if isinstance(spec, str):
        path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
        spec = read_json(path)
    if not isinstance(spec, dict):
        raise ConfigError("metric spec must be an object or a path")
    try:
        metric_from_spec(spec)
    except (MetricError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid metric spec: {exc}") from exc
    return spec


def _check_range(name, value, lo, hi, kind):
    try:
        v = kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a {kind.__name__}") from exc
    if kind is int and float(value) != v:
        raise ConfigError(f"{name} must be an integer")
    if not (lo <= v <= hi):
        raise ConfigError(f"{name}={v} outside [{lo}, {hi}]")
    return v


def load_config(path, overrides=None) -> RunConfig:
    raw = read_json(path) if path is not None else {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    base = os.path.dirname(os.path.abspath(path)) if path else "."
    merged = {**DEFAULTS, **raw}
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
    unknown = set(merged) - set(DEFAULTS) - {"metric", "metric0"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "metric" not in merged:
        raise ConfigError("config needs a 'metric'")
    tols = merged.get("tolerances") or {}
    bad = set(tols) - set(TOLERANCE_DEFAULTS)
    if bad:
        raise ConfigError(f"unknown tolerances: {sorted(bad)}")
    for k, v in tols.items():
        if v is not None:
            _check_range(f"tolerances.{k}", v, 0.0, 1.0, float)
    sched = merged.get("schedule")
    if sched is not None:
        if not isinstance(sched, list) or not sched:
            raise ConfigError("schedule must be a non-empty list")
        sched = [_check_range("schedule entry", s, 2, 4096, int) for s in sched]
    return RunConfig(
        metric=load_metric_spec(merged["metric"], base),
        metric0=None if merged.get("metric0") is None else load_metric_spec(merged["metric0"], base),
        h=_check_range("h", merged["h"], 1e-3, 0.2, float),
        R=_check_range("R", merged["R"], 1, 8, int),
        n=_check_range("n", merged["n"], 2, 4096, int),
        m=_check_range("m", merged["m"], 8, 1 << 16, int),
        seed=_check_range("seed", merged["seed"], 0, 2**32 - 1, int),
        out=str(merged["out"]),
        schedule=sched,
        what=str(merged["what"]),
        tolerances={k: v for k, v in tols.items() if v is not None},
    )


# ---------------------------------------------------------------------------
# certificates


CERTIFICATE_KEYS = ("metrics", "mesh", "n", "I", "error_bar", "ht_area", "verdict", "tool_version",
                    "config_hash")


def certificate_document(cert, config: RunConfig):
    """The on-disk certificate: the schema fields, the bound, provenance,
    diagnostics and the full config."""
    doc = cert.to_dict()
    doc["tool_version"] = TOOL_VERSION
    doc["config_hash"] = config.config_hash
    doc["config"] = config.to_dict()
    return doc


def write_certificate(path, cert, config):
    doc = certificate_document(cert, config)
    write_json(path, doc)
    return doc


def validate_certificate(doc):
    missing = [k for k in CERTIFICATE_KEYS if k not in doc]
    if missing:
        raise ValueError(f"certificate is missing {missing}")
    if set(doc["mesh"]) != {"h", "R"}:
        raise ValueError("certificate mesh must have exactly h and R")
    if "config" not in doc:
        raise ValueError("certificate does not embed its config")
    if doc["config_hash"] != hashlib.sha256(canonical_json(doc["config"]).encode()).hexdigest():
        raise ValueError("config hash does not match the embedded config")
    return True
