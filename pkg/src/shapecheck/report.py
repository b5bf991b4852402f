"""Analysis reports: a JSON document and a human-readable rendering of it.

Everything that depends on wall-clock time lives under keys named
``timings``. Dropping those keys gives byte-identical JSON across runs.
"""

from __future__ import annotations

import json
from importlib import resources

from .constraints import (
    BOOL, And, BoolVal, Eq, Forall, Lt, Not, Or, Symbol, pretty,
)
from .simplify import simplify
from .solver import DONTKNOW, INVALID, UNREACHABLE, VALID

EXIT_OK, EXIT_INVALID, EXIT_INCONCLUSIVE, EXIT_ERROR = 0, 1, 2, 3

ONLINE_LABELS = {
    "open": "potential success",
    "potentialUnreachable": "potential unreachable",
    "immediateFail": "immediate fail",
    "dontknow": "dontknow",
}


def exit_code(program_verdict):
    return {"no-error": EXIT_OK, "error": EXIT_INVALID, "inconclusive": EXIT_INCONCLUSIVE}[program_verdict]


def display(formula):
    """The constraint as written, with ground sub-terms folded: ``(256, 1181) = (256, 4)``."""
    t = type(formula)
    if t is Eq:
        return f"{_fold(formula.lhs)} = {_fold(formula.rhs)}"
    if t is Lt:
        return f"{_fold(formula.lhs)} < {_fold(formula.rhs)}"
    if t is Not and type(formula.arg) is Lt:
        return f"{_fold(formula.arg.rhs)} <= {_fold(formula.arg.lhs)}"
    if t is Not and type(formula.arg) is Eq:
        return f"{_fold(formula.arg.lhs)} != {_fold(formula.arg.rhs)}"
    if t is Not:
        return f"not ({display(formula.arg)})"
    if t is And or t is Or:
        sep = " and " if t is And else " or "
        return sep.join(f"({display(x)})" if type(x) in (And, Or) else display(x)
                        for x in formula.items)
    if t is Forall or t is BoolVal:
        return pretty(formula)
    return pretty(simplify(formula))


def _fold(e):
    return pretty(simplify(e))


def _json_value(v):
    return bool(v) if isinstance(v, bool) else int(v)


def counterexample(model):
    out = {}
    for sym in sorted(model, key=lambda s: s.id):
        if isinstance(sym, Symbol):
            out[sym.label] = _json_value(model[sym]) if sym.sort != BOOL else bool(model[sym])
    return out


def violation_json(c):
    return {
        "opName": c.op_name or "",
        "sourcePos": c.origin.to_json() if c.origin is not None else None,
        "constraintText": display(c.formula),
        "genIndex": c.gen_index,
    }


def path_entry(path_id, state, verdict, solve_ms):
    entry = {
        "pathId": path_id,
        "trace": list(state.trace),
        "online": state.status,
        "verdict": verdict.kind,
        "constraints": {"hard": len(state.hard()), "soft": len(state.soft())},
    }
    if state.reason or verdict.reason:
        entry["reason"] = verdict.reason or state.reason
    if verdict.kind == INVALID:
        entry["firstViolation"] = violation_json(verdict.first_violation)
        entry["counterexample"] = counterexample(verdict.model)
    entry["timings"] = {"solveMs": round(solve_ms, 3)}
    return entry


def build_report(file, states, verdicts, program, solve_ms, timings, stats):
    paths = [path_entry(i + 1, st, v, ms) for i, (st, v, ms) in enumerate(zip(states, verdicts, solve_ms))]
    online = {label: 0 for label in ONLINE_LABELS}
    for st in states:
        online[st.status] += 1
    summary = {k: 0 for k in (VALID, INVALID, UNREACHABLE, DONTKNOW)}
    for v in verdicts:
        summary[v.kind] += 1
    summary["total"] = len(verdicts)
    return {
        "file": file,
        "programVerdict": program.kind,
        "exitCode": exit_code(program.kind),
        "online": {ONLINE_LABELS[k]: n for k, n in online.items()},
        "summary": summary,
        "reportOrder": [i + 1 for i in program.order],
        "paths": paths,
        "stats": stats,
        "timings": timings,
    }


def error_report(file, message):
    return {
        "file": file,
        "programVerdict": "failure",
        "exitCode": EXIT_ERROR,
        "error": message,
    }


def to_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def strip_timings(report):
    """Copy of ``report`` without any ``timings`` block."""
    if isinstance(report, dict):
        return {k: strip_timings(v) for k, v in report.items() if k != "timings"}
    if isinstance(report, list):
        return [strip_timings(v) for v in report]
    return report


def schema():
    text = resources.files("shapecheck").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _pos_text(pos):
    if pos is None:
        return "<unknown>"
    return f"{pos['file']}:{pos['line']}:{pos['column']}"


def render_human(report):
    if "error" in report:
        return f"error: {report['error']}\n"
    lines = [f"analyzing {report['file']}"]
    on = report["online"]
    total = report["summary"]["total"]
    lines.append(f"online check: {total} path{'s' if total != 1 else ''}: "
                 + ", ".join(f"{n} {label}" for label, n in on.items()))
    lines.append("offline check:")
    by_id = {p["pathId"]: p for p in report["paths"]}
    shown = report["reportOrder"] + [p["pathId"] for p in report["paths"]
                                     if p["pathId"] not in report["reportOrder"]]
    for pid in shown:
        p = by_id[pid]
        trace = "".join(x[0] if x in ("T", "F") else f"[{x}]" for x in p["trace"])
        head = f"  path {pid}" + (f" {trace}" if trace else "") + f": {p['verdict']}"
        if p["verdict"] == DONTKNOW and p.get("reason"):
            head += f" ({p['reason']})"
        lines.append(head)
        if p["verdict"] == INVALID:
            fv = p["firstViolation"]
            lines.append(f"    first violation: {fv['opName']} at {_pos_text(fv['sourcePos'])}"
                         f" (constraint #{fv['genIndex']})")
            lines.append(f"      {fv['constraintText']}")
            if p["counterexample"]:
                ce = ", ".join(f"{k} = {v}" for k, v in p["counterexample"].items())
                lines.append(f"    counterexample: {ce}")
    s = report["summary"]
    verdict = {"no-error": "no shape error found", "error": "SHAPE ERROR",
               "inconclusive": "inconclusive"}[report["programVerdict"]]
    lines.append(f"result: {s['valid']} valid, {s['invalid']} invalid, {s['unreachable']} unreachable, "
                 f"{s['dontknow']} dontknow: {verdict}")
    return "\n".join(lines) + "\n"
