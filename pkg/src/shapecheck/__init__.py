"""Static detection of tensor-shape errors by path-sensitive symbolic execution."""

from .cli import analyze, run
from .config import AnalysisConfig, load_config
from .solver import analyze_path, check_sat, elaborate, emit_smtlib, summarize
from .surface import lower, parse_source, to_source
from .symexec import ExecOptions, Executor

__all__ = [
    "AnalysisConfig", "ExecOptions", "Executor", "analyze", "analyze_path", "check_sat",
    "elaborate", "emit_smtlib", "load_config", "lower", "parse_source", "run", "summarize",
    "to_source",
]
