"""Analysis configuration: JSON file plus command-line overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError

BACKENDS = ("internal", "smtlib-export")
FORMATS = ("human", "json")


@dataclass(frozen=True)
class AnalysisConfig:
    entry: str | None = None
    cli_args: dict = field(default_factory=dict)
    dataset_overrides: dict = field(default_factory=dict)
    path_cap: int = 4096
    timeout_ms: int = 10_000
    max_tuples: int = 10**6
    backend: str = "internal"
    format: str = "human"
    jobs: int = 1
    merge: bool = True
    emit_smt2: str | None = None

    def validated(self):
        if not isinstance(self.path_cap, int) or isinstance(self.path_cap, bool) or self.path_cap < 1:
            raise ConfigError("pathCap", "must be an integer >= 1")
        if not _pos_int(self.timeout_ms):
            raise ConfigError("solverBudget.timeoutMs", "must be a positive integer")
        if not _pos_int(self.max_tuples):
            raise ConfigError("solverBudget.maxTuples", "must be a positive integer")
        if self.backend not in BACKENDS:
            raise ConfigError("backend", f"must be one of {', '.join(BACKENDS)}")
        if self.format not in FORMATS:
            raise ConfigError("format", f"must be one of {', '.join(FORMATS)}")
        if not _pos_int(self.jobs):
            raise ConfigError("jobs", "must be a positive integer")
        for k, v in self.cli_args.items():
            if not _arg_value(v):
                raise ConfigError(f"cliArgs.{k}", "must be an integer, boolean or string")
        return self


def _pos_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v > 0


def _arg_value(v):
    return isinstance(v, (int, str, bool)) or v is None


def _dataset(name, spec):
    where = f"datasetOverrides.{name}"
    if not isinstance(spec, dict):
        raise ConfigError(where, "must be an object")
    out = {}
    for key, dest in (("length", "length"), ("itemShape", "item"), ("labelShape", "label")):
        if key not in spec:
            continue
        v = spec[key]
        if key == "length":
            if not _pos_int(v):
                raise ConfigError(f"{where}.length", "must be a positive integer")
        elif not (isinstance(v, list) and all(isinstance(d, int) and not isinstance(d, bool)
                                              and d >= 0 for d in v)):
            raise ConfigError(f"{where}.{key}", "must be a list of non-negative integers")
        out[dest] = v
    unknown = set(spec) - {"length", "itemShape", "labelShape"}
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}", "unknown field")
    return out


_KEYS = {"entry", "cliArgs", "datasetOverrides", "pathCap", "solverBudget", "backend", "format",
         "jobs", "merge", "emitSmt2"}


def config_from_dict(data, base: Path | None = None) -> AnalysisConfig:
    if not isinstance(data, dict):
        raise ConfigError("", "configuration must be a JSON object")
    unknown = set(data) - _KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    kw = {}
    if "entry" in data:
        if not isinstance(data["entry"], str):
            raise ConfigError("entry", "must be a path string")
        entry = Path(data["entry"])
        kw["entry"] = str(base / entry) if base and not entry.is_absolute() else str(entry)
    if "cliArgs" in data:
        if not isinstance(data["cliArgs"], dict):
            raise ConfigError("cliArgs", "must be an object")
        kw["cli_args"] = dict(data["cliArgs"])
    if "datasetOverrides" in data:
        if not isinstance(data["datasetOverrides"], dict):
            raise ConfigError("datasetOverrides", "must be an object")
        kw["dataset_overrides"] = {k: _dataset(k, v) for k, v in data["datasetOverrides"].items()}
    if "pathCap" in data:
        kw["path_cap"] = data["pathCap"]
    if "solverBudget" in data:
        b = data["solverBudget"]
        if not isinstance(b, dict) or set(b) - {"timeoutMs", "maxTuples"}:
            raise ConfigError("solverBudget", "must be an object with timeoutMs and/or maxTuples")
        if "timeoutMs" in b:
            kw["timeout_ms"] = b["timeoutMs"]
        if "maxTuples" in b:
            kw["max_tuples"] = b["maxTuples"]
    for key, dest in (("backend", "backend"), ("format", "format"), ("jobs", "jobs")):
        if key in data:
            kw[dest] = data[key]
    if "merge" in data:
        if not isinstance(data["merge"], bool):
            raise ConfigError("merge", "must be a boolean")
        kw["merge"] = data["merge"]
    if "emitSmt2" in data:
        if not isinstance(data["emitSmt2"], str):
            raise ConfigError("emitSmt2", "must be a directory path")
        kw["emit_smt2"] = data["emitSmt2"]
    return AnalysisConfig(**kw).validated()


def load_config(path) -> AnalysisConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as ex:
        raise ConfigError("", f"cannot read {path}: {ex.strerror}") from None
    except json.JSONDecodeError as ex:
        raise ConfigError("", f"{path} is not valid JSON: {ex.msg} at line {ex.lineno}") from None
    return config_from_dict(data, path.parent)


def parse_arg(text):
    """``k=v`` from the command line. Integers and booleans are recognized; anything else is a string."""
    if "=" not in text:
        raise ConfigError("--arg", f"expected NAME=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    k = k.strip()
    if not k.isidentifier():
        raise ConfigError("--arg", f"{k!r} is not a valid name")
    low = v.strip().lower()
    if low in ("true", "false"):
        return k, low == "true"
    if low == "none":
        return k, None
    try:
        return k, int(v, 0)
    except ValueError:
        return k, v


def merge_overrides(cfg: AnalysisConfig, **changes) -> AnalysisConfig:
    """Apply command-line values over a loaded config. ``None`` means "not given"."""
    changes = {k: v for k, v in changes.items() if v is not None}
    if "cli_args" in changes:
        changes["cli_args"] = {**cfg.cli_args, **changes["cli_args"]}
    return replace(cfg, **changes).validated()
