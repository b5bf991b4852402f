"""Command-line entry point: parse, lower, execute symbolically, solve, report.

Exit codes: 0 no shape error, 1 at least one invalid path, 2 inconclusive
(some path is dontknow, none invalid), 3 parse/config/internal error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import AnalysisConfig, load_config, merge_overrides, parse_arg
from .errors import ConfigError, ShapeCheckError
from .report import (
    EXIT_ERROR, build_report, error_report, exit_code, render_human, to_json,
)
from .shapeops import catalog_markdown
from .solver import DONTKNOW, INVALID, UNREACHABLE, Budget, PathVerdict, analyze_paths, emit_smtlib, summarize
from .surface import lower, parse_source
from .symexec import DONTKNOW as DONTKNOW_STATUS
from .symexec import ExecOptions, Executor


def _ms(t0):
    return (time.perf_counter() - t0) * 1000.0


def analyze(config: AnalysisConfig, text: str | None = None):
    """Run the whole pipeline on ``config.entry`` (or on ``text``). Returns ``(report, exit code)``.

    Analysis errors propagate as ShapeCheckError; ``run`` turns them into exit code 3.
    """
    file = config.entry or "<input>"
    if text is None:
        text = Path(file).read_text(encoding="utf-8")
    timings = {}
    t0 = time.perf_counter()
    program = parse_source(text, file)
    timings["parseMs"] = _ms(t0)
    t0 = time.perf_counter()
    defs = lower(program, config.cli_args)
    timings["lowerMs"] = _ms(t0)
    t0 = time.perf_counter()
    ex = Executor(defs, ExecOptions(path_cap=config.path_cap, merge=config.merge,
                                    datasets=config.dataset_overrides))
    states = ex.run()
    timings["symexecMs"] = _ms(t0)

    budget = Budget(timeout=config.timeout_ms / 1000.0, max_tuples=config.max_tuples)
    t0 = time.perf_counter()
    if config.emit_smt2:
        _write_smt2(config.emit_smt2, file, states)
    if config.backend == "internal":
        verdicts = analyze_paths([st.constraints for st in states], budget, config.jobs)
        verdicts = [_combine(st, v) for st, v in zip(states, verdicts)]
    else:
        verdicts = [PathVerdict(DONTKNOW, reason="offline check exported as SMT-LIB") for _ in states]
    timings["solveMs"] = _ms(t0)
    # per-path solve times are not separable under parallel solving; report the mean
    per_path = [timings["solveMs"] / max(len(states), 1)] * len(states)
    program_verdict = summarize(verdicts)
    stats = {"paths": len(states), "merges": ex.merges, "truncated": ex.truncated}
    for k in timings:
        timings[k] = round(timings[k], 3)
    report = build_report(file, states, verdicts, program_verdict, per_path, timings, stats)
    return report, exit_code(program_verdict.kind)


def _combine(state, verdict):
    """Fold the online status of a path that stopped early into its offline verdict."""
    if state.status == DONTKNOW_STATUS and verdict.kind not in (INVALID, UNREACHABLE):
        return PathVerdict(DONTKNOW, reason=state.reason or "analysis stopped early")
    return verdict


def _write_smt2(directory, file, states):
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(file).stem
    for i, st in enumerate(states, 1):
        try:
            text = emit_smtlib(st.constraints)
        except ShapeCheckError as ex:
            text = f"; not exported: {ex}\n"
        (out / f"{stem}.path{i}.smt2").write_text(text, encoding="utf-8")


def run(config: AnalysisConfig, out=None, err=None):
    """Analyze and print in the configured format. Returns ``(report, exit code)``."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        report, code = analyze(config)
    except (ShapeCheckError, OSError, RecursionError) as ex:
        msg = _describe(ex)
        report, code = error_report(config.entry, msg), EXIT_ERROR
        if config.format == "human":
            err.write(f"error: {msg}\n")
    except Exception as ex:  # internal error: still a clean exit code
        msg = f"internal error: {type(ex).__name__}: {ex}"
        report, code = error_report(config.entry, msg), EXIT_ERROR
        if config.format == "human":
            err.write(f"error: {msg}\n")
    if config.format == "json":
        out.write(to_json(report))
    elif code != EXIT_ERROR:
        out.write(render_human(report))
    return report, code


def _describe(ex):
    if isinstance(ex, OSError):
        return f"{ex.filename}: {ex.strerror}" if ex.filename else str(ex)
    if isinstance(ex, RecursionError):
        return "program too deeply nested to analyze"
    return f"{type(ex).__name__}: {ex}"


def build_parser():
    p = argparse.ArgumentParser(prog="shapecheck",
                                description="Static tensor-shape checker for the kernel language.")
    p.add_argument("entry", nargs="?", help="program to analyze (.tsl)")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--arg", action="append", default=[], metavar="NAME=VALUE",
                   help="command-line argument visible to the program as args.NAME (repeatable)")
    p.add_argument("--timeout-ms", type=int, help="per-path solver time budget")
    p.add_argument("--max-tuples", type=int, help="per-query enumeration budget")
    p.add_argument("--path-cap", type=int, help="maximum number of live paths")
    p.add_argument("--backend", choices=["internal", "smtlib-export"])
    p.add_argument("--format", choices=["human", "json"])
    p.add_argument("--emit-smt2", metavar="DIR", help="write one SMT-LIB2 script per path")
    p.add_argument("--jobs", type=int, help="solve paths in parallel processes")
    p.add_argument("--no-merge", action="store_true", help="disable path merging")
    p.add_argument("--list-ops", action="store_true", help="print the operation catalog and exit")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.list_ops:
        sys.stdout.write(catalog_markdown())
        return 0
    try:
        cfg = load_config(args.config) if args.config else AnalysisConfig()
        cli_args = dict(parse_arg(a) for a in args.arg)
        cfg = merge_overrides(
            cfg, entry=args.entry, cli_args=cli_args or None, timeout_ms=args.timeout_ms,
            max_tuples=args.max_tuples, path_cap=args.path_cap, backend=args.backend,
            format=args.format, emit_smt2=args.emit_smt2, jobs=args.jobs,
            merge=False if args.no_merge else None)
        if not cfg.entry:
            raise ConfigError("entry", "no program given (pass a path or set entry in the config)")
        cfg = _with_sidecar(cfg, args.config)
    except ConfigError as ex:
        if args.format == "json":
            sys.stdout.write(to_json(error_report(args.entry, f"ConfigError: {ex}")))
        else:
            sys.stderr.write(f"error: {ex}\n")
        return EXIT_ERROR
    _, code = run(cfg)
    return code


def _with_sidecar(cfg, explicit_config):
    """Use ``prog.json`` next to ``prog.tsl`` when no config file was given."""
    if explicit_config:
        return cfg
    side = Path(cfg.entry).with_suffix(".json")
    if not side.is_file():
        return cfg
    base = load_config(side)
    return merge_overrides(base, entry=cfg.entry, cli_args=cfg.cli_args or None,
                           **{k: getattr(cfg, k) for k in _changed(cfg)})


def _changed(cfg):
    default = AnalysisConfig()
    return [k for k in ("path_cap", "timeout_ms", "max_tuples", "backend", "format", "jobs",
                        "merge", "emit_smt2") if getattr(cfg, k) != getattr(default, k)]


if __name__ == "__main__":
    sys.exit(main())
