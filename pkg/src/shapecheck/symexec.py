"""Path-sensitive symbolic execution of the IR.

``Executor.eval(state, e)`` returns one ``(value, state)`` pair per execution
path that ``e`` can take from ``state``. Every tensor operation adds its
constraints to the path; each one passes through the online check first, so
constraints that simplify to true are dropped and ones that simplify to false
stop the path right there.

Branches on unknown conditions split the path. After both arms have run, arm
results that are indistinguishable (same environment, same constraints, no
global writes, nothing depending on the condition) are merged back together,
which is what keeps chains of random blocks from exploding.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field, replace

from .constraints import (
    HARD, SOFT, And, BoolExpr, BoolVal, Constraint, Eq, Index, Lt, Not, Num, NumExpr, Or,
    Rank, Shape, SymbolSource, as_num, eq, free_symbols, le, lt,
)
from .errors import (
    ArityMismatch, DontKnowRank, MultipleInferredDims, NonConstantLoopBound, OpArgumentError,
    SortError, UnboundVariable, UnknownOp,
)
from .shapeops import CATALOG, RuleContext
from .simplify import IMMEDIATE_FAIL, TRIVIALLY_TRUE, online_check, propagate, simplify
from .surface import ir
from .values import (
    NONE, DatasetV, EnumerateV, FloatV, FuncV, NoneV, ShapeV, SliceV, StrV, Tensor, TupleV, kind,
)

OPEN = "open"
IMMEDIATE = "immediateFail"
UNREACHABLE = "potentialUnreachable"
DONTKNOW = "dontknow"


class _NoReturn:
    def __repr__(self):
        return "<no return>"


NORETURN = _NoReturn()


@dataclass
class PathState:
    globals: dict
    locals: dict | None = None
    constraints: tuple = ()
    discharged: tuple = ()
    effects: tuple = ()
    status: str = OPEN
    failure: Constraint | None = None
    reason: str = ""
    returned: object = NORETURN
    intervals: dict = field(default_factory=dict)
    trace: tuple = ()

    @property
    def is_open(self):
        return self.status == OPEN and self.returned is NORETURN

    def hard(self):
        return [c for c in self.constraints if c.kind == HARD]

    def soft(self):
        return [c for c in self.constraints if c.kind == SOFT]

    def lookup(self, name):
        if self.locals is not None and name in self.locals:
            return self.locals[name]
        if name in self.globals:
            return self.globals[name]
        raise KeyError(name)

    def env_key(self):
        loc = None if self.locals is None else tuple(sorted(self.locals.items(), key=_first))
        return loc, tuple(sorted(self.globals.items(), key=_first))


def _first(kv):
    return kv[0]


@dataclass
class ExecOptions:
    path_cap: int = 4096
    merge: bool = True
    datasets: dict = field(default_factory=dict)


class Executor:
    def __init__(self, program: ir.Defs, options: ExecOptions | None = None):
        self.program = program
        self.options = options or ExecOptions()
        self.fresh = SymbolSource()
        self.counter = itertools.count()
        self.merges = 0
        self.truncated = 0

    # -- driver --

    def run(self):
        """Evaluate the program; returns the final path states in deterministic order."""
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 20000))
        try:
            start = PathState(globals={})
            return [st for _, st in self.eval(start, self.program.body)]
        finally:
            sys.setrecursionlimit(old)

    # -- constraint emission --

    def emit(self, st, c: Constraint):
        """Add one constraint to an open path, applying the online check."""
        c = replace(c, gen_index=next(self.counter))
        d = online_check(st, c)
        if d.kind == TRIVIALLY_TRUE:
            return replace(st, discharged=st.discharged + (c,))
        constraints = st.constraints + (c,)
        if d.kind == IMMEDIATE_FAIL:
            status = IMMEDIATE if c.kind == SOFT else UNREACHABLE
            return replace(st, constraints=constraints, status=status, failure=c)
        if c.kind == HARD:
            iv = propagate([x for x in constraints if x.kind == HARD])
            if iv is None:
                return replace(st, constraints=constraints, status=UNREACHABLE, failure=c)
            return replace(st, constraints=constraints, intervals=iv)
        return replace(st, constraints=constraints)

    def emit_all(self, st, cs):
        for c in cs:
            if st.status != OPEN:
                break
            st = self.emit(st, c)
        return st

    def dontknow(self, st, reason):
        return replace(st, status=DONTKNOW, reason=reason)

    def simp(self, st, e):
        return simplify(e, st.intervals)

    # -- sequencing helpers --

    def then(self, results, fn):
        out = []
        for v, st in results:
            if not st.is_open:
                out.append((v, st))
            else:
                out.extend(fn(v, st))
        return self.cap(out)

    def cap(self, results):
        limit = self.options.path_cap
        live = [i for i, (_, st) in enumerate(results) if st.is_open]
        if len(live) <= limit:
            return results
        keep = set(live[:limit])
        out, spilled = [], None
        for i, (v, st) in enumerate(results):
            if st.is_open and i not in keep:
                if spilled is None:
                    spilled = (v, self.dontknow(st, f"path limit of {limit} exceeded"))
                    out.append(spilled)
                self.truncated += 1
                continue
            out.append((v, st))
        return out

    def eval_list(self, st, exprs):
        """Evaluate expressions left to right; yields (values, state) per path."""
        results = [((), st)]
        for e in exprs:
            results = self.then(results, lambda vs, s, e=e: [
                (vs + (v,), s2) for v, s2 in self.eval(s, e)])
        return results

    # -- evaluation --

    def eval(self, st, e):
        m = getattr(self, "eval_" + type(e).__name__)
        return m(st, e)

    def eval_IntConst(self, st, e):
        return [(Num(e.value), st)]

    def eval_BoolConst(self, st, e):
        return [(BoolVal(e.value), st)]

    def eval_NoneConst(self, st, e):
        return [(NONE, st)]

    def eval_StrConst(self, st, e):
        return [(StrV(e.value), st)]

    def eval_FloatConst(self, st, e):
        return [(FloatV(e.text), st)]

    def eval_Var(self, st, e):
        try:
            return [(st.lookup(e.name), st)]
        except KeyError:
            pass
        if self.program.function(e.name) is not None:
            return [(FuncV(e.name), st)]
        raise UnboundVariable(e.name, e.pos)

    def eval_TupleE(self, st, e):
        return [(TupleV(vs), s) for vs, s in self.eval_list(st, e.items)]

    def eval_SliceE(self, st, e):
        return [(SliceV(*vs), s) for vs, s in self.eval_list(st, (e.lo, e.hi, e.step))]

    def eval_Seq(self, st, e):
        results = [(NONE, st)]
        for item in e.items:
            results = self.then(results, lambda _, s, item=item: self.eval(s, item))
        return results

    def eval_Let(self, st, e):
        def bind(v, s):
            s = self.assign(s, e.target, v, e.is_global, e.pos)
            return self.eval(s, e.body)
        return self.then(self.eval(st, e.bound), bind)

    def assign(self, st, target, v, is_global, pos):
        if isinstance(target, tuple):
            items = self.unpack(st, v, len(target), pos)
            for t, x in zip(target, items):
                st = self.assign(st, t, x, is_global, pos)
            return st
        if st.locals is None or is_global:
            g = dict(st.globals)
            g[target] = v
            effects = st.effects + (target,) if st.locals is not None else st.effects
            return replace(st, globals=g, effects=effects)
        loc = dict(st.locals)
        loc[target] = v
        return replace(st, locals=loc)

    def unpack(self, st, v, n, pos):
        if isinstance(v, TupleV):
            items = v.items
        elif isinstance(v, ShapeV):
            r = simplify(Rank(v.shape), st.intervals)
            if type(r) is not Num:
                raise SortError("cannot unpack a shape of unknown rank", pos)
            items = tuple(self.simp(st, Index(v.shape, Num(i))) for i in range(r.value))
        else:
            raise SortError(f"cannot unpack a {kind(v)}", pos)
        if len(items) != n:
            raise SortError(f"expected {n} values to unpack, got {len(items)}", pos)
        return items

    def eval_Return(self, st, e):
        return [(NONE, replace(s, returned=v)) for v, s in self.eval(st, e.value)]

    def eval_Defs(self, st, e):
        return self.eval(st, e.body)

    # -- operators --

    def eval_UnOp(self, st, e):
        def go(v, s):
            if e.op == "not":
                return [(self.simp(s, Not(self.truth(s, v, e.pos))), s)]
            if isinstance(v, NumExpr):
                return [(self.simp(s, -v), s)]
            if isinstance(v, (Tensor, FloatV)):
                return [(v, s)]
            raise SortError(f"bad operand for unary -: {kind(v)}", e.pos)
        return self.then(self.eval(st, e.arg), go)

    def truth(self, st, v, pos):
        """The boolean a value stands for when used as a condition."""
        if isinstance(v, BoolExpr):
            return v
        if isinstance(v, NumExpr):
            return Not(eq(v, 0))
        if isinstance(v, NoneV):
            return BoolVal(False)
        if isinstance(v, StrV):
            return BoolVal(bool(v.text))
        if isinstance(v, TupleV):
            return BoolVal(bool(v.items))
        if isinstance(v, ShapeV):
            return lt(0, Rank(v.shape))
        if isinstance(v, (Tensor, FloatV)):
            # the value of a tensor or float is never tracked
            return self.fresh.bool(f"cond@{pos}" if pos else "cond")
        return BoolVal(True)

    def eval_BinOp(self, st, e):
        if e.op in ("and", "or"):
            return self.logic(st, e)

        def go(vs, s):
            a, b = vs
            return self.binop(s, e.op, a, b, e.pos)
        return self.then(self.eval_list(st, (e.lhs, e.rhs)), go)

    def logic(self, st, e):
        def left(a, s):
            ta = self.simp(s, self.truth(s, a, e.pos))
            if type(ta) is BoolVal and ta.value == (e.op == "or"):
                return [(ta, s)]

            def right(b, s2):
                tb = self.truth(s2, b, e.pos)
                node = Or((ta, tb)) if e.op == "or" else And((ta, tb))
                return [(self.simp(s2, node), s2)]
            return self.then(self.eval(s, e.rhs), right)
        return self.then(self.eval(st, e.lhs), left)

    def binop(self, st, op, a, b, pos):
        if op == "=":
            return [(self.equal(st, a, b, pos), st)]
        if op == "<":
            return self.less(st, a, b, pos)
        if op == ">":
            return self.less(st, b, a, pos)
        if isinstance(a, Tensor) or isinstance(b, Tensor):
            return self.tensor_arith(st, op, a, b, pos)
        if isinstance(a, NumExpr) and isinstance(b, NumExpr):
            if op in ("//", "%"):
                st = self.emit(st, Constraint(Not(eq(b, 0)), SOFT, -1, pos, op))
                if st.status != OPEN:
                    return [(Num(0), st)]
            return [(self.simp(st, _arith(op, a, b)), st)]
        if isinstance(a, (FloatV, NumExpr)) and isinstance(b, (FloatV, NumExpr)):
            return [(FloatV(), st)]
        if op == "+" and isinstance(a, (TupleV, ShapeV)) and isinstance(b, (TupleV, ShapeV)):
            if isinstance(a, TupleV) and isinstance(b, TupleV):
                return [(TupleV(a.items + b.items), st)]
            return [(ShapeV(self.simp(st, _as_shape(a) @ _as_shape(b))), st)]
        if op == "*" and isinstance(a, TupleV) and isinstance(b, NumExpr):
            n = self.simp(st, b)
            if type(n) is Num:
                return [(TupleV(a.items * max(n.value, 0)), st)]
        if op == "+" and isinstance(a, StrV) and isinstance(b, StrV):
            return [(StrV(a.text + b.text), st)]
        raise SortError(f"unsupported operand kinds for {op}: {kind(a)} and {kind(b)}", pos)

    def tensor_arith(self, st, op, a, b, pos):
        if isinstance(a, Tensor) and isinstance(b, Tensor):
            return self.apply_rule(st, "broadcast", (a, b), (), pos, op_name=_OP_NAMES.get(op, op))
        other = b if isinstance(a, Tensor) else a
        if isinstance(other, (NumExpr, FloatV, BoolExpr)):
            return [(a if isinstance(a, Tensor) else b, st)]
        raise SortError(f"unsupported operand kinds for {op}: {kind(a)} and {kind(b)}", pos)

    def equal(self, st, a, b, pos):
        if isinstance(a, (ShapeV, TupleV)) and isinstance(b, (ShapeV, TupleV)):
            try:
                return self.simp(st, Eq(_as_shape(a), _as_shape(b)))
            except TypeError:
                return BoolVal(a == b)
        if isinstance(a, NumExpr) and isinstance(b, NumExpr):
            return self.simp(st, Eq(a, b))
        if isinstance(a, BoolExpr) and isinstance(b, BoolExpr):
            return self.simp(st, Eq(a, b))
        if isinstance(a, BoolExpr) and isinstance(b, NumExpr):
            return self.simp(st, Eq(_bool_num(a), b))
        if isinstance(a, NumExpr) and isinstance(b, BoolExpr):
            return self.simp(st, Eq(a, _bool_num(b)))
        if isinstance(a, (Tensor, FloatV)) or isinstance(b, (Tensor, FloatV)):
            return self.fresh.bool(f"cmp@{pos}" if pos else "cmp")
        return BoolVal(a == b)

    def less(self, st, a, b, pos):
        if isinstance(a, BoolExpr):
            a = _bool_num(a)
        if isinstance(b, BoolExpr):
            b = _bool_num(b)
        if isinstance(a, NumExpr) and isinstance(b, NumExpr):
            return [(self.simp(st, Lt(a, b)), st)]
        if isinstance(a, Tensor) and isinstance(b, Tensor):
            return self.apply_rule(st, "broadcast", (a, b), (), pos, op_name="lt")
        if isinstance(a, Tensor) or isinstance(b, Tensor):
            return [(a if isinstance(a, Tensor) else b, st)]
        if isinstance(a, (FloatV, NumExpr)) and isinstance(b, (FloatV, NumExpr)):
            return [(self.fresh.bool(f"cmp@{pos}" if pos else "cmp"), st)]
        raise SortError(f"cannot compare {kind(a)} and {kind(b)}", pos)

    # -- control flow --

    def eval_If(self, st, e):
        return self.then(self.eval(st, e.cond), lambda v, s: self.branch(s, v, e))

    def branch(self, st, v, e):
        cond = self.simp(st, self.truth(st, v, e.cond.pos or e.pos))
        c = Constraint(cond, HARD, -1, e.pos, "if")
        d = online_check(st, c, branch=True)
        if d.value is not None:
            return self.eval(st, e.then if d.value else e.else_)
        base = len(st.constraints)
        then_st = self.emit(st, c)
        else_st = self.emit(st, Constraint(self.simp(st, Not(cond)), HARD, -1, e.pos, "if"))
        then_st = replace(then_st, trace=st.trace + ("T",))
        else_st = replace(else_st, trace=st.trace + ("F",))
        then_res = self.eval(then_st, e.then) if then_st.status == OPEN else [(NONE, then_st)]
        else_res = self.eval(else_st, e.else_) if else_st.status == OPEN else [(NONE, else_st)]
        if not self.options.merge:
            return self.cap(then_res + else_res)
        return self.cap(self.try_merge(st, base, free_symbols(cond), then_res, else_res))

    def try_merge(self, base_state, base, cond_syms, then_res, else_res):
        """Merge arm paths that behave identically and do not depend on the condition."""
        n_eff = len(base_state.effects)
        n_dis = len(base_state.discharged)

        def info(st):
            if st.status != OPEN or len(st.effects) != n_eff:
                return None
            local = st.constraints[base + 1:]
            emitted = local + st.discharged[n_dis:]
            for c in emitted:
                if free_symbols(c.formula) & cond_syms:
                    return None
            ret = None if st.returned is NORETURN else st.returned
            return (st.env_key(), st.returned is NORETURN, ret,
                    tuple(c.signature() for c in local))

        else_info = [info(s) for _, s in else_res]
        used = [False] * len(else_res)
        out = []
        for v, st in then_res:
            key = info(st)
            match = None
            if key is not None:
                for j, k2 in enumerate(else_info):
                    if not used[j] and k2 == key and else_res[j][0] == v:
                        match = j
                        break
            if match is None:
                out.append((v, st))
                continue
            used[match] = True
            self.merges += 1
            constraints = base_state.constraints + st.constraints[base + 1:]
            iv = propagate([c for c in constraints if c.kind == HARD]) or {}
            out.append((v, replace(st, constraints=constraints, intervals=iv,
                                   trace=base_state.trace)))
        out.extend(r for r, u in zip(else_res, used) if not u)
        return out

    def eval_ForRange(self, st, e):
        def go(bounds, s):
            vals = []
            for b in bounds:
                n = self.simp(s, as_num(b) if isinstance(b, NumExpr) else b)
                if type(n) is not Num:
                    raise NonConstantLoopBound(e.pos)
                vals.append(n.value)
            results = [(NONE, s)]
            for i in range(*vals):
                results = self.then(results, lambda _, s2, i=i: self.eval(
                    self.assign(s2, e.target, Num(i), False, e.pos), e.body))
            return results
        return self.then(self.eval_list(st, (e.lo, e.hi, e.step)), go)

    def eval_ForDataset(self, st, e):
        return self.then(self.eval(st, e.iterable), lambda v, s: self.iterate(s, e, v, None))

    def iterate(self, st, e, it, index):
        if isinstance(it, EnumerateV):
            inner = it.inner
            if isinstance(inner, TupleV):
                results = [(NONE, st)]
                for i, x in enumerate(inner.items):
                    results = self.then(results, lambda _, s, i=i, x=x: self.body_with(
                        s, e, TupleV((Num(i), x))))
                return results
            idx = self.fresh.num(f"step@{e.pos}" if e.pos else "step")
            st = self.emit(st, Constraint(le(0, idx), HARD, -1, e.pos, "enumerate"))
            return self.iterate(st, e, inner, idx)
        if isinstance(it, DatasetV):
            return self.dataset_loop(st, e, it, index)
        if isinstance(it, TupleV):
            results = [(NONE, st)]
            for x in it.items:
                results = self.then(results, lambda _, s, x=x: self.body_with(s, e, x))
            return results
        if isinstance(it, ShapeV):
            r = self.simp(st, Rank(it.shape))
            if type(r) is Num:
                dims = [self.simp(st, Index(it.shape, Num(i))) for i in range(r.value)]
                return self.iterate(st, e, TupleV(tuple(dims)), index)
            return [(NONE, self.dontknow(st, "loop over a shape of unknown rank"))]
        if isinstance(it, Tensor):
            # one symbolic iteration stands for all rows
            return self.then(self.apply_rule(st, "getitem", (it, Num(0)), (), e.pos),
                             lambda row, s: self.body_with(s, e, row))
        raise SortError(f"cannot iterate over a {kind(it)}", e.pos)

    def body_with(self, st, e, item, index=None):
        if index is not None:
            item = TupleV((index, item))
        return self.eval(self.assign(st, e.target, item, False, e.pos), e.body)

    def dataset_loop(self, st, e, ds, index):
        """Analyze the loop body for a full batch and, unless dropped, the residual batch."""
        pos = e.pos
        n, b = ds.length, ds.batch
        out = []
        regular = self.emit(st, Constraint(le(b, n), HARD, -1, pos, "dataset"))
        regular = replace(regular, trace=st.trace + ("batch",))
        if regular.status == OPEN:
            out.extend(self.body_with(regular, e, _batch(ds, b), index))
        elif regular.status == UNREACHABLE and not ds.drop_last:
            pass
        else:
            out.append((NONE, regular))
        if not ds.drop_last:
            r = self.fresh.num(f"residual@{pos}" if pos else "residual")
            res = replace(st, trace=st.trace + ("residual",))
            res = self.emit_all(res, [
                Constraint(eq(r, n % b), HARD, -1, pos, "dataset"),
                Constraint(lt(0, r), HARD, -1, pos, "dataset"),
                Constraint(lt(r, b), HARD, -1, pos, "dataset"),
            ])
            if res.status == OPEN:
                rv = self.simp(res, r)
                out.extend(self.body_with(res, e, _batch(ds, rv), index))
            elif res.status != UNREACHABLE:
                out.append((NONE, res))
        if not out:
            # neither case is feasible (e.g. an empty dataset with drop_last)
            out.append((NONE, regular))
        return self.cap(out)

    # -- calls --

    def eval_Call(self, st, e):
        f = self.program.function(e.fname)
        if f is None:
            raise UnboundVariable(e.fname, e.pos)

        def go(vals, s):
            nargs = len(e.args)
            pos_vals, kw_vals = vals[:nargs], dict(zip([k for k, _ in e.kwargs], vals[nargs:]))
            return self.call(s, f, pos_vals, kw_vals, e.pos)
        return self.then(self.eval_list(st, tuple(e.args) + tuple(v for _, v in e.kwargs)), go)

    def call(self, st, f, args, kwargs, pos):
        if len(args) > len(f.params):
            raise ArityMismatch(f"{pos}: {f.name}() takes {len(f.params)} arguments, got {len(args)}")
        bound = dict(zip(f.params, args))
        for k in kwargs:
            if k not in f.params:
                raise ArityMismatch(f"{pos}: {f.name}() has no parameter '{k}'")
            if k in bound:
                raise ArityMismatch(f"{pos}: {f.name}() got multiple values for '{k}'")
        bound.update(kwargs)
        caller_locals = st.locals
        frame = replace(st, locals={})
        results = [(NONE, frame)]
        for p, d in zip(f.params, f.defaults):
            if p in bound:
                results = [(v, replace(s, locals={**s.locals, p: bound[p]})) for v, s in results]
                continue
            if d is None:
                raise ArityMismatch(f"{pos}: {f.name}() missing argument '{p}'")
            results = self.then(results, lambda _, s, p=p, d=d: [
                (v, replace(s2, locals={**s2.locals, p: v})) for v, s2 in self.eval(s, d)])
        results = self.then(results, lambda _, s: self.eval(s, f.body))
        out = []
        for _, s in results:
            value = NONE if s.returned is NORETURN else s.returned
            out.append((value, replace(s, locals=caller_locals, returned=NORETURN)))
        return out

    # -- tensor operations and builtins --

    def eval_TensorExpr(self, st, e):
        def go(vals, s):
            nargs = len(e.args)
            args = vals[:nargs]
            kwargs = tuple(zip([k for k, _ in e.kwargs], vals[nargs:]))
            return self.operation(s, e.op, args, kwargs, e.pos)
        return self.then(self.eval_list(st, tuple(e.args) + tuple(v for _, v in e.kwargs)), go)

    def operation(self, st, op, args, kwargs, pos):
        builtin = _BUILTINS.get(op)
        if builtin is not None:
            res = builtin(self, st, args, dict(kwargs), pos)
            if res is not NotImplemented:
                return res
        if op == "getitem" and args and not isinstance(args[0], Tensor):
            return self.getitem(st, args, pos)
        if op in ("size", "numel", "ndim", "dim", "len") and args and isinstance(args[0], ShapeV):
            return _BUILTINS["len"](self, st, args, {}, pos)
        return self.apply_rule(st, op, args, kwargs, pos)

    def apply_rule(self, st, op, args, kwargs, pos, op_name=None):
        try:
            rule = CATALOG.lookup(op)
            value, cs = rule.apply(args, dict(kwargs), self.fresh, pos, st.intervals,
                                   {"datasets": self.options.datasets}, op_name or op)
        except UnknownOp as ex:
            return [(NONE, self.dontknow(st, str(ex)))]
        except (DontKnowRank, OpArgumentError) as ex:
            return [(NONE, self.dontknow(st, str(ex)))]
        except MultipleInferredDims as ex:
            c = Constraint(BoolVal(False), SOFT, -1, pos, op_name or op)
            return [(NONE, replace(self.emit(st, c), reason=str(ex)))]
        st = self.emit_all(st, cs)
        return [(value, st)]

    def getitem(self, st, args, pos):
        if len(args) != 2:
            raise SortError("subscript takes one index", pos)
        obj, idx = args
        if isinstance(obj, TupleV):
            if isinstance(idx, NumExpr):
                n = self.simp(st, idx)
                if type(n) is not Num:
                    return [(NONE, self.dontknow(st, "tuple index is not a constant"))]
                i = n.value
                if not -len(obj.items) <= i < len(obj.items):
                    c = Constraint(BoolVal(False), SOFT, -1, pos, "getitem")
                    return [(NONE, self.emit(st, c))]
                return [(obj.items[i], st)]
            if isinstance(idx, SliceV):
                parts = [None if isinstance(x, NoneV) else self.simp(st, x)
                         for x in (idx.lo, idx.hi, idx.step)]
                if any(p is not None and type(p) is not Num for p in parts):
                    return [(NONE, self.dontknow(st, "tuple slice is not constant"))]
                sl = slice(*(None if p is None else p.value for p in parts))
                return [(TupleV(obj.items[sl]), st)]
        if isinstance(obj, ShapeV):
            return self.shape_getitem(st, obj.shape, idx, pos)
        raise SortError(f"cannot subscript a {kind(obj)}", pos)

    def shape_getitem(self, st, s, idx, pos):
        cx = RuleContext("getitem", self.fresh, pos, st.intervals)
        if isinstance(idx, NumExpr):
            i = cx.norm_dim(s, idx)
            cx.soft(le(0, i))
            cx.soft(lt(i, Rank(s)))
            st = self.emit_all(st, cx.emitted)
            return [(self.simp(st, Index(s, i)), st)]
        if isinstance(idx, SliceV):
            if not isinstance(idx.step, NoneV) and cx.const(idx.step) != 1:
                return [(NONE, self.dontknow(st, "strided shape slice"))]
            lo = Num(0) if isinstance(idx.lo, NoneV) else cx.norm_dim(s, idx.lo)
            hi = Rank(s) if isinstance(idx.hi, NoneV) else cx.norm_dim(s, idx.hi)
            # Python clamps slice bounds; clamp the constant cases the same way
            r = cx.rank(s)
            if r is not None:
                lc, hc = cx.const(lo), cx.const(hi)
                if lc is not None:
                    lo = Num(min(max(lc, 0), r))
                if hc is not None:
                    hi = Num(min(max(hc, 0), r))
                if cx.const(lo) is not None and cx.const(hi) is not None and lo.value > hi.value:
                    hi = lo
            cx.soft(le(0, lo))
            cx.soft(le(lo, hi))
            cx.soft(le(hi, Rank(s)))
            st = self.emit_all(st, cx.emitted)
            return [(ShapeV(self.simp(st, s.slice(lo, hi))), st)]
        raise SortError(f"cannot index a shape with a {kind(idx)}", pos)


_OP_NAMES = {"+": "add", "-": "sub", "*": "mul", "//": "div", "%": "mod"}


def _arith(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "//":
        return a // b
    return a % b


def _bool_num(b):
    if type(b) is BoolVal:
        return Num(int(b.value))
    raise SortError("symbolic booleans cannot be used as numbers")


def _as_shape(v):
    if isinstance(v, ShapeV):
        return v.shape
    return Shape([as_num(x) if isinstance(x, (int, NumExpr)) else _not_num(x) for x in v.items])


def _not_num(x):
    raise TypeError(x)


def _batch(ds, b):
    data = Tensor(simplify(Shape((b,)) @ ds.item))
    label = Tensor(simplify(Shape((b,)) @ ds.label))
    return TupleV((data, label))


# ----------------------------------------------------------------------------
# builtins: Python functions that are not tensor operations


def _b_print(ex, st, args, kwargs, pos):
    return [(NONE, st)]


def _b_len(ex, st, args, kwargs, pos):
    if len(args) != 1:
        raise SortError("len takes one argument", pos)
    v = args[0]
    if isinstance(v, TupleV):
        return [(Num(len(v.items)), st)]
    if isinstance(v, ShapeV):
        return [(ex.simp(st, Rank(v.shape)), st)]
    if isinstance(v, StrV):
        return [(Num(len(v.text)), st)]
    if isinstance(v, DatasetV):
        return [(v.length, st)]
    return NotImplemented


def _b_minmax(pick):
    def f(ex, st, args, kwargs, pos):
        items = args[0].items if len(args) == 1 and isinstance(args[0], TupleV) else args
        if not items or any(isinstance(x, Tensor) for x in items):
            return NotImplemented
        if not all(isinstance(x, NumExpr) for x in items):
            return [(FloatV(), st)]
        vals = [ex.simp(st, x) for x in items]
        if all(type(x) is Num for x in vals):
            return [(Num(pick(x.value for x in vals)), st)]
        m = ex.fresh.num(f"{pick.__name__}@{pos}" if pos else pick.__name__)
        cs = [Constraint(le(m, x) if pick is min else le(x, m), HARD, -1, pos, pick.__name__)
              for x in vals]
        cs.append(Constraint(Or(tuple(Eq(m, x) for x in vals)), HARD, -1, pos, pick.__name__))
        return [(m, ex.emit_all(st, cs))]
    return f


def _b_abs(ex, st, args, kwargs, pos):
    v = args[0]
    if isinstance(v, NumExpr):
        n = ex.simp(st, v)
        if type(n) is Num:
            return [(Num(abs(n.value)), st)]
        m = ex.fresh.num(f"abs@{pos}" if pos else "abs")
        cs = [Constraint(Or((Eq(m, n), Eq(m, -n))), HARD, -1, pos, "abs"),
              Constraint(le(0, m), HARD, -1, pos, "abs")]
        return [(m, ex.emit_all(st, cs))]
    if isinstance(v, FloatV):
        return [(v, st)]
    return NotImplemented


def _b_int(ex, st, args, kwargs, pos):
    v = args[0] if args else Num(0)
    if isinstance(v, NumExpr):
        return [(v, st)]
    if isinstance(v, BoolVal):
        return [(Num(int(v.value)), st)]
    if isinstance(v, FloatV):
        return [(ex.fresh.num(f"int@{pos}" if pos else "int"), st)]
    if isinstance(v, Tensor):
        return ex.apply_rule(st, "item", (v,), (), pos)
    raise SortError(f"int() of a {kind(v)}", pos)


def _b_float(ex, st, args, kwargs, pos):
    if args and isinstance(args[0], Tensor):
        return NotImplemented
    return [(FloatV(), st)]


def _b_random(ex, st, args, kwargs, pos):
    return [(FloatV("random"), st)]


def _b_tuple(ex, st, args, kwargs, pos):
    if not args:
        return [(TupleV(()), st)]
    v = args[0]
    if isinstance(v, TupleV):
        return [(v, st)]
    if isinstance(v, ShapeV):
        r = ex.simp(st, Rank(v.shape))
        if type(r) is Num:
            return [(TupleV(tuple(ex.simp(st, Index(v.shape, Num(i))) for i in range(r.value))), st)]
        return [(v, st)]
    raise SortError(f"cannot convert a {kind(v)} to a tuple", pos)


def _b_range(ex, st, args, kwargs, pos):
    vals = [ex.simp(st, a) if isinstance(a, NumExpr) else a for a in args]
    if not all(type(v) is Num for v in vals):
        return [(NONE, ex.dontknow(st, "range() with non-constant bounds"))]
    return [(TupleV(tuple(Num(i) for i in range(*(v.value for v in vals)))), st)]


def _b_enumerate(ex, st, args, kwargs, pos):
    return [(EnumerateV(args[0]), st)]


def _b_isinstance(ex, st, args, kwargs, pos):
    return [(ex.fresh.bool("isinstance"), st)]


def _b_str(ex, st, args, kwargs, pos):
    return [(StrV("?"), st)]


_BUILTINS = {
    "print": _b_print,
    "len": _b_len,
    "min": _b_minmax(min),
    "max": _b_minmax(max),
    "abs": _b_abs,
    "int": _b_int,
    "float": _b_float,
    "random": _b_random,
    "uniform": _b_random,
    "tuple": _b_tuple,
    "list": _b_tuple,
    "range": _b_range,
    "enumerate": _b_enumerate,
    "isinstance": _b_isinstance,
    "str": _b_str,
}
