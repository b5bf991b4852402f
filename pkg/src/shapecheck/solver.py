"""Offline check of collected path constraints.

For each path: if the hard constraints H are unsatisfiable the path is
unreachable; with no soft constraints it is valid; otherwise we look for an
assignment that satisfies H and breaks some soft constraint. Finding one makes
the path invalid, and that assignment is the counterexample. Ruling all of
them out makes the path valid. Running out of budget first gives dontknow.

The decision procedure is a depth-first search over symbols in id order,
pruned by the simplifier and by interval propagation, falling back to plain
enumeration once the remaining domain is small. Every model it returns is
re-checked by ground evaluation.

Evaluation errors (division by zero, an index past the rank) are part of the
semantics: a constraint *holds* only when it evaluates to true without error.
``elaborate`` makes that explicit by rewriting every formula into an
error-free one that is true exactly when the original holds.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .constraints import (
    BOOL, FALSE, NUM, SHAPE, And, BinOp, BoolExpr, BoolVal, BoolVar, Concat, Constraint,
    Eq, Forall, Index, Lt, Not, Num, NumVar, Or, Prod, Rank, Shape, ShapeVar, Slice,
    SymbolSource, children, concrete_eval, conj, disj, free_symbols, le, lt, substitute,
)
from .errors import ShapeCheckError, UnresolvedRank
from .simplify import TOP, Interval, propagate, simplify

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"

VALID, INVALID, UNREACHABLE, DONTKNOW = "valid", "invalid", "unreachable", "dontknow"

FORALL_SPAN = 1000
BRUTE_FORCE = 4096


@dataclass(frozen=True)
class Budget:
    timeout: float = 10.0
    max_tuples: int = 10**6


@dataclass(frozen=True)
class SatResult:
    status: str
    model: dict | None = None
    reason: str = ""


@dataclass(frozen=True)
class PathVerdict:
    kind: str
    model: dict | None = None
    first_violation: Constraint | None = None
    reason: str = ""


@dataclass(frozen=True)
class ProgramVerdict:
    kind: str  # "no-error", "error" or "inconclusive"
    order: tuple = ()  # path indices to report: invalid first, then dontknow


def holds(formula, model):
    """True when ``formula`` evaluates to true under ``model`` without an evaluation error."""
    try:
        return concrete_eval(formula, model) is True
    except ShapeCheckError:
        return False


# ----------------------------------------------------------------------------
# elaboration: shapes to integer atoms, partial formulas to total ones


@dataclass
class Elaboration:
    hard: list = field(default_factory=list)   # (Constraint, total formula)
    soft: list = field(default_factory=list)
    extra: list = field(default_factory=list)  # side conditions on introduced symbols

    @property
    def H(self):
        return conj([f for _, f in self.hard] + self.extra)

    @property
    def S(self):
        return conj([f for _, f in self.soft])

    @property
    def atom_map(self):
        return {f: c for c, f in self.hard + self.soft}


class _Elaborator:
    def __init__(self, fresh):
        self.fresh = fresh
        self.shapes = {}  # ShapeVar symbol -> tuple of NumVar dims
        self.extra = []

    def bind(self, sym, rank):
        dims = tuple(self.fresh.num(f"{sym.hint.split('@')[0]}_{i}") for i in range(rank))
        self.shapes[sym] = dims
        self.extra.extend(le(0, d) for d in dims)

    # numbers: (value, definedness conditions in evaluation order)

    def num(self, e):
        t = type(e)
        if t is Num or t is NumVar:
            return e, []
        if t is BinOp:
            a, da = self.num(e.lhs)
            b, db = self.num(e.rhs)
            d = da + db
            if e.op in ("//", "%"):
                d.append(Not(Eq(b, Num(0))))
            return BinOp(e.op, a, b), d
        if t is Rank:
            dims, d = self.shape(e.shape)
            return Num(len(dims)), d
        if t is Prod:
            dims, d = self.shape(e.shape)
            out = Num(1)
            for x in dims:
                out = x if out == Num(1) else BinOp("*", out, x)
            return out, d
        if t is Index:
            dims, d = self.shape(e.shape)
            i, di = self.num(e.index)
            d = d + di
            k = simplify(i)
            if type(k) is Num:
                if 0 <= k.value < len(dims):
                    return dims[k.value], d
                return Num(0), d + [FALSE]
            return Index(Shape(dims), i), d + [le(0, i), lt(i, Num(len(dims)))]
        raise TypeError(f"not a number expression: {e!r}")

    def shape(self, e):
        t = type(e)
        if t is Shape:
            dims, d = [], []
            for x in e.dims:
                v, dv = self.num(x)
                dims.append(v)
                d += dv
            return dims, d
        if t is ShapeVar:
            if e.sym not in self.shapes:
                raise UnresolvedRank(f"rank of {e.sym.name} is not determined")
            return list(self.shapes[e.sym]), []
        if t is Concat:
            a, da = self.shape(e.left)
            b, db = self.shape(e.right)
            return a + b, da + db
        if t is Slice:
            dims, d = self.shape(e.shape)
            lo, dl = self.num(e.lo)
            hi, dh = self.num(e.hi)
            lo, hi = simplify(lo), simplify(hi)
            if type(lo) is not Num or type(hi) is not Num:
                raise UnresolvedRank("slice bounds are not constant, so the rank is unknown")
            d = d + dl + dh
            if not 0 <= lo.value <= hi.value <= len(dims):
                return [], d + [FALSE]
            return dims[lo.value:hi.value], d
        raise TypeError(f"not a shape expression: {e!r}")

    # booleans: (true-formula, false-formula), both free of evaluation errors

    def tf(self, b):
        t = type(b)
        if t is BoolVal:
            return b, BoolVal(not b.value)
        if t is BoolVar:
            return b, Not(b)
        if t is Not:
            tt, ff = self.tf(b.arg)
            return ff, tt
        if t is And:
            parts = [self.tf(x) for x in b.items]
            true = conj(p[0] for p in parts)
            false = disj(conj([q[0] for q in parts[:k]] + [parts[k][1]]) for k in range(len(parts)))
            return true, false
        if t is Or:
            parts = [self.tf(x) for x in b.items]
            true = disj(conj([q[1] for q in parts[:k]] + [parts[k][0]]) for k in range(len(parts)))
            false = conj(p[1] for p in parts)
            return true, false
        if t is Lt:
            a, da = self.num(b.lhs)
            c, dc = self.num(b.rhs)
            d = da + dc
            return conj(d + [Lt(a, c)]), conj(d + [Not(Lt(a, c))])
        if t is Eq:
            sort = b.lhs.sort
            if sort == NUM:
                a, da = self.num(b.lhs)
                c, dc = self.num(b.rhs)
                d = da + dc
                return conj(d + [Eq(a, c)]), conj(d + [Not(Eq(a, c))])
            if sort == SHAPE:
                xs, dx = self.shape(b.lhs)
                ys, dy = self.shape(b.rhs)
                d = dx + dy
                if len(xs) != len(ys):
                    return conj(d + [FALSE]), conj(d)
                same = conj(Eq(x, y) for x, y in zip(xs, ys))
                return conj(d + [same]), conj(d + [Not(same)])
            lt_, lf = self.tf(b.lhs)
            rt, rf = self.tf(b.rhs)
            d = [disj((lt_, lf)), disj((rt, rf))]
            return conj(d + [Eq(lt_, rt)]), conj(d + [Not(Eq(lt_, rt))])
        if t is Forall:
            lo, dl = self.num(b.lo)
            hi, dh = self.num(b.hi)
            d = dl + dh
            bt, bf = self.tf(b.body)
            true = conj(d + [Forall(b.var, lo, hi, bt)])
            # false: some v is false while every earlier w is true
            w = self.fresh.fresh(NUM, b.var.hint)
            before = Forall(w, lo, BinOp("-", NumVar(b.var), Num(1)),
                            substitute(bt, {b.var: NumVar(w)}))
            false = conj(d + [Not(Forall(b.var, lo, hi, Not(And((before, bf)))))])
            return true, false
        raise TypeError(f"not a boolean expression: {b!r}")


def _max_id(e, acc):
    if isinstance(e, (NumVar, ShapeVar, BoolVar)):
        acc[0] = max(acc[0], e.sym.id)
    elif type(e) is Forall:
        acc[0] = max(acc[0], e.var.id)
    for k in children(e):
        _max_id(k, acc)


def _top_atoms(b):
    if type(b) is And:
        for x in b.items:
            yield from _top_atoms(x)
    else:
        yield b


def _rank_facts(el, formulas):
    """Fix ranks of shape variables from hard facts ``S = <shape>`` or ``rank(S) = k``."""
    progress = True
    while progress:
        progress = False
        for f in formulas:
            for a in _top_atoms(f):
                if type(a) is not Eq:
                    continue
                for x, y in ((a.lhs, a.rhs), (a.rhs, a.lhs)):
                    if type(x) is ShapeVar and x.sym not in el.shapes:
                        try:
                            dims, _ = el.shape(y)
                        except UnresolvedRank:
                            continue
                        el.bind(x.sym, len(dims))
                        progress = True
                    elif (type(x) is Rank and type(x.shape) is ShapeVar
                          and x.shape.sym not in el.shapes and type(y) is Num and y.value >= 0):
                        el.bind(x.shape.sym, y.value)
                        progress = True


def elaborate(constraints):
    """Turn constraints into total integer formulas, keeping provenance.

    Raises UnresolvedRank when some shape's rank cannot be pinned down.
    """
    cs = sorted(constraints, key=lambda c: c.gen_index)
    acc = [-1]
    for c in cs:
        _max_id(c.formula, acc)
    el = _Elaborator(SymbolSource(acc[0] + 1))
    hard_simplified = [simplify(c.formula) for c in cs if c.is_hard]
    _rank_facts(el, hard_simplified)
    out = Elaboration()
    for c in cs:
        true, _ = el.tf(c.formula)
        (out.hard if c.is_hard else out.soft).append((c, true))
    out.extra = list(el.extra)
    return out


# ----------------------------------------------------------------------------
# satisfiability


class _OutOfBudget(Exception):
    pass


def _constants(e, acc):
    if type(e) is Num:
        acc.append(abs(e.value))
    for k in children(e):
        _constants(k, acc)


def _span_too_large(f):
    for node in _walk(f):
        if type(node) is Forall and not free_symbols(node.lo) and not free_symbols(node.hi):
            try:
                span = concrete_eval(node.hi) - concrete_eval(node.lo) + 1
            except ShapeCheckError:
                continue
            if span > FORALL_SPAN:
                return True
    return False


def _walk(e):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(children(n))


def _value_expr(sym, v):
    return BoolVal(v) if sym.sort == BOOL else Num(v)


class _Search:
    def __init__(self, budget):
        self.budget = budget or Budget()
        self.deadline = time.monotonic() + self.budget.timeout
        self.tuples = 0
        self.window = 256

    def tick(self, n=1):
        self.tuples += n
        if self.tuples > self.budget.max_tuples:
            raise _OutOfBudget("enumeration budget exhausted")
        if time.monotonic() > self.deadline:
            raise _OutOfBudget("time budget exhausted")

    def run(self, f):
        if _span_too_large(f):
            return SatResult(UNKNOWN, reason="quantifier range too large to expand")
        self.original = f
        self.symbols = sorted(free_symbols(f), key=lambda s: s.id)
        consts = []
        _constants(f, consts)
        self.window = min(max(256, 4 * max(consts, default=0) + 64), 1 << 16)
        try:
            status, model = self.dfs(simplify(f), {}, {})
        except _OutOfBudget as ex:
            return SatResult(UNKNOWN, reason=str(ex))
        except RecursionError:
            return SatResult(UNKNOWN, reason="formula too deep")
        if status == SAT:
            return SatResult(SAT, model)
        if status == UNKNOWN:
            return SatResult(UNKNOWN, reason="search space is unbounded")
        return SatResult(UNSAT)

    def domain(self, sym, ctx):
        """Candidate values in ascending order, plus whether the list is truncated."""
        if sym.sort == BOOL:
            return [False, True], False
        iv = ctx.get(sym, TOP)
        if iv.finite:
            return range(int(iv.lo), int(iv.hi) + 1), False
        w = self.window
        if iv.lo != TOP.lo:
            lo = int(iv.lo)
            return range(lo, lo + w), True
        if iv.hi != TOP.hi:
            hi = int(iv.hi)
            return range(hi - w + 1, hi + 1), True
        return [0] + [v for k in range(1, w) for v in (k, -k)], True

    def complete(self, model, ctx):
        out = dict(model)
        for s in self.symbols:
            if s not in out:
                if s.sort == BOOL:
                    out[s] = False
                else:
                    iv = ctx.get(s, TOP)
                    out[s] = int(iv.lo) if iv.lo != TOP.lo else (int(iv.hi) if iv.hi < 0 else 0)
        return out

    def dfs(self, f, ctx, model):
        self.tick()
        f = simplify(f, ctx)
        if type(f) is BoolVal and not f.value:
            return UNSAT, None
        ctx = propagate([f], ctx)
        if ctx is None:
            return UNSAT, None
        free = sorted(free_symbols(f), key=lambda s: s.id)
        if not free:
            if not holds(f, {}):
                return UNSAT, None
            m = self.complete(model, ctx)
            if holds(self.original, m):
                return SAT, m
            # the simplifier and ground evaluation disagree; fail safe
            return UNKNOWN, None
        doms = [self.domain(s, ctx) for s in free]
        size = 1
        for d, trunc in doms:
            size *= len(d)
        if size <= BRUTE_FORCE:
            return self.brute(f, free, doms, ctx, model)
        # branch on the smallest finite domain first: pinning it often decides
        # the formula without walking the window of an unbounded symbol
        finite = [i for i, (d, trunc) in enumerate(doms) if not trunc]
        pick = min(finite, key=lambda i: len(doms[i][0])) if finite else 0
        sym = free[pick]
        values, truncated = doms[pick]
        unknown = truncated
        for v in values:
            status, m = self.dfs(substitute(f, {sym: _value_expr(sym, v)}),
                                 _pin(ctx, sym, v), {**model, sym: v})
            if status == SAT:
                return SAT, m
            if status == UNKNOWN:
                unknown = True
        return (UNKNOWN if unknown else UNSAT), None

    def brute(self, f, free, doms, ctx, model):
        unknown = any(trunc for _, trunc in doms)
        for combo in itertools.product(*(d for d, _ in doms)):
            self.tick()
            env = dict(zip(free, combo))
            if holds(f, env):
                m = self.complete({**model, **env}, ctx)
                if holds(self.original, m):
                    return SAT, m
                unknown = True
        return (UNKNOWN if unknown else UNSAT), None


def _pin(ctx, sym, v):
    if sym.sort == BOOL:
        return ctx
    out = dict(ctx)
    out[sym] = Interval(v, v)
    return out


def check_sat(f: BoolExpr, budget: Budget | None = None) -> SatResult:
    """Decide satisfiability of an error-free formula (see ``elaborate``).

    A sat answer comes with a model that has been re-verified. The search is
    deterministic, so the same formula always yields the same model.
    """
    return _Search(budget).run(f)


# ----------------------------------------------------------------------------
# per-path verdicts


def analyze_path(constraints, budget: Budget | None = None) -> PathVerdict:
    try:
        el = elaborate(constraints)
    except UnresolvedRank as ex:
        return PathVerdict(DONTKNOW, reason=f"unresolved rank: {ex}")
    budget = budget or Budget()
    hard = el.H
    r = check_sat(hard, budget)
    if r.status == UNSAT:
        return PathVerdict(UNREACHABLE)
    if not el.soft:
        return PathVerdict(VALID)
    every = free_symbols(conj([hard] + [f for _, f in el.soft]))
    unknown = r.reason if r.status == UNKNOWN else ""
    # soft constraints are tried in generation order, so the first one found
    # broken is also the earliest one broken by the model
    for c, f in el.soft:
        q = check_sat(And((hard, Not(f))), budget)
        if q.status == SAT:
            model = _extend(q.model, every, hard)
            first = next((c2 for c2, f2 in el.soft if not holds(f2, model)), c)
            return PathVerdict(INVALID, model=model, first_violation=first)
        if q.status == UNKNOWN:
            unknown = unknown or q.reason
    if unknown:
        return PathVerdict(DONTKNOW, reason=unknown)
    return PathVerdict(VALID)


def _extend(model, symbols, hard):
    out = dict(model)
    ctx = propagate([hard]) or {}
    for s in sorted(symbols, key=lambda s: s.id):
        if s not in out:
            if s.sort == BOOL:
                out[s] = False
            else:
                iv = ctx.get(s, TOP)
                out[s] = int(iv.lo) if iv.lo != TOP.lo else 0
    return out


def _analyze_job(job):
    constraints, budget = job
    return analyze_path(constraints, budget)


def analyze_paths(constraint_sets, budget: Budget | None = None, jobs: int = 1):
    """``analyze_path`` over many paths; the result order matches the input order."""
    items = [(tuple(cs), budget) for cs in constraint_sets]
    if jobs <= 1 or len(items) <= 1:
        return [_analyze_job(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_analyze_job, items))


def summarize(verdicts) -> ProgramVerdict:
    invalid = [i for i, v in enumerate(verdicts) if v.kind == INVALID]
    unknown = [i for i, v in enumerate(verdicts) if v.kind == DONTKNOW]
    invalid.sort(key=lambda i: (verdicts[i].first_violation.gen_index, i))
    if invalid:
        kind = "error"
    elif unknown:
        kind = "inconclusive"
    else:
        kind = "no-error"
    return ProgramVerdict(kind, tuple(invalid + unknown))


# ----------------------------------------------------------------------------
# SMT-LIB export


def _smt_int(v):
    return f"(- {-v})" if v < 0 else str(v)


def _smt(e):
    t = type(e)
    if t is Num:
        return _smt_int(e.value)
    if t in (NumVar, BoolVar):
        return e.sym.name
    if t is BoolVal:
        return "true" if e.value else "false"
    if t is BinOp:
        a, b = _smt(e.lhs), _smt(e.rhs)
        if e.op in ("+", "-", "*"):
            return f"({e.op} {a} {b})"
        # floor division; SMT-LIB div is Euclidean, which agrees for positive divisors
        if type(e.rhs) is Num and e.rhs.value > 0:
            return f"({'div' if e.op == '//' else 'mod'} {a} {b})"
        q = f"(ite (< {b} 0) (div (- {a}) (- {b})) (div {a} {b}))"
        return q if e.op == "//" else f"(- {a} (* {b} {q}))"
    if t is Index:
        dims = e.shape.dims
        i = _smt(e.index)
        out = _smt(dims[-1])
        for k in range(len(dims) - 2, -1, -1):
            out = f"(ite (= {i} {k}) {_smt(dims[k])} {out})"
        return out
    if t is And or t is Or:
        if not e.items:
            return "true" if t is And else "false"
        head = "and" if t is And else "or"
        return f"({head} " + " ".join(_smt(x) for x in e.items) + ")"
    if t is Not:
        return f"(not {_smt(e.arg)})"
    if t is Eq:
        return f"(= {_smt(e.lhs)} {_smt(e.rhs)})"
    if t is Lt:
        return f"(< {_smt(e.lhs)} {_smt(e.rhs)})"
    if t is Forall:
        v = e.var.name
        return (f"(forall (({v} Int)) (=> (and (<= {_smt(e.lo)} {v}) (<= {v} {_smt(e.hi)})) "
                f"{_smt(e.body)}))")
    raise TypeError(f"cannot export {e!r}")


def emit_smtlib(constraints) -> str:
    """SMT-LIB2 script for the path query: H and not (H implies S).

    With no soft constraints only H is asserted, so the script checks
    reachability. Declarations and assertions come out in a fixed order, so
    the text is identical across runs.
    """
    constraints = list(constraints)
    if not constraints:
        return "(check-sat)\n"
    el = elaborate(constraints)
    # the elaborated formulas are total, so simplifying them is exact
    el.hard = [(c, simplify(f)) for c, f in el.hard]
    el.soft = [(c, simplify(f)) for c, f in el.soft]
    hard = el.H
    asserts = [hard]
    if el.soft:
        asserts.append(Not(el.S))
    symbols = sorted(free_symbols(conj(asserts)), key=lambda s: s.id)
    quantified = any(type(n) is Forall for a in asserts for n in _walk(a))
    lines = [f"(set-logic {'NIA' if quantified else 'QF_NIA'})"]
    for s in symbols:
        lines.append(f"(declare-const {s.name} {'Bool' if s.sort == BOOL else 'Int'})")
    for c, f in el.hard:
        lines.append(f"; hard #{c.gen_index} {c.op_name or ''}".rstrip())
        lines.append(f"(assert {_smt(f)})")
    for f in el.extra:
        lines.append(f"(assert {_smt(f)})")
    if el.soft:
        lines.append("; soft: " + ", ".join(f"#{c.gen_index}" for c, _ in el.soft))
        lines.append(f"(assert (not {_smt(el.S)}))")
    lines += ["(check-sat)", "(get-model)"]
    return "\n".join(lines) + "\n"


__all__ = [
    "Budget", "SatResult", "PathVerdict", "ProgramVerdict", "Elaboration", "elaborate",
    "check_sat", "analyze_path", "analyze_paths", "summarize", "emit_smtlib", "holds",
    "SAT", "UNSAT", "UNKNOWN", "VALID", "INVALID", "UNREACHABLE", "DONTKNOW",
]
