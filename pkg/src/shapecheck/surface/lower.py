"""Lowering from the surface tree to the IR.

Besides the structural translation this is where command-line arguments are
substituted (``args.epochs`` becomes a constant), ``range`` bounds are checked
to be constant, and the call graph is checked for cycles.
"""

from __future__ import annotations

from ..errors import MissingArgument, NonConstantLoopBound, RecursionCycleError, SortError
from . import ast as S
from . import ir

_CMP = {"<", "<=", ">", ">=", "==", "!="}
ARGS = "args"


def check_recursion(program):
    """Raise RecursionCycleError if user functions call each other cyclically."""
    names = {f.name for f in program.functions}
    graph = {f.name: sorted(_callees(f.body, names)) for f in program.functions}
    state = {}

    def visit(n, path):
        state[n] = "active"
        for m in graph[n]:
            if state.get(m) == "active":
                raise RecursionCycleError(path[path.index(m):] + [m])
            if m not in state:
                visit(m, path + [m])
        state[n] = "done"

    for f in program.functions:
        if f.name not in state:
            visit(f.name, [f.name])


def _callees(node, names):
    out = set()
    for n in _nodes(node):
        if isinstance(n, S.CallExpr) and isinstance(n.func, S.Name) and n.func.id in names:
            out.add(n.func.id)
        elif isinstance(n, S.Name) and n.id in names:
            out.add(n.id)
    return out


def _nodes(x):
    if isinstance(x, (tuple, list)):
        for y in x:
            yield from _nodes(y)
        return
    if not isinstance(x, (S.Expr, S.Stmt, S.Param)):
        return
    yield x
    for name in x.__dataclass_fields__:
        if name == "pos":
            continue
        v = getattr(x, name)
        if isinstance(v, (S.Expr, S.Stmt, S.Param, tuple, list)):
            yield from _nodes(v)


def _assigned(body):
    """Names assigned anywhere in a statement list (not descending into defs)."""
    out = set()
    for st in _nodes(tuple(body)):
        if isinstance(st, S.Assign):
            out |= _target_names(st.target)
        elif isinstance(st, S.AugAssign):
            out.add(st.name)
        elif isinstance(st, S.For):
            out |= _target_names(st.target)
    return out


def _target_names(t):
    if isinstance(t, S.Name):
        return {t.id}
    out = set()
    for x in t.items:
        out |= _target_names(x)
    return out


def _target(t):
    if isinstance(t, S.Name):
        return t.id
    return tuple(_target(x) for x in t.items)


class _Scope:
    def __init__(self, variables, globals_=(), loop_vars=()):
        self.variables = set(variables)
        self.globals = set(globals_)
        self.loop_vars = set(loop_vars)


class Lowerer:
    def __init__(self, program, cli_args):
        self.program = program
        self.cli = dict(cli_args or {})
        self.functions = {f.name for f in program.functions}
        self.top_vars = _assigned(program.entry)

    # -- entry --

    def lower(self):
        funcs = tuple(self.function(f) for f in self.program.functions)
        scope = _Scope(self.top_vars | self.functions)
        body = self.block(self.program.entry, scope, {})
        return ir.Defs(funcs, body)

    def function(self, f):
        globals_ = set()
        for st in _nodes(f.body):
            if isinstance(st, S.Global):
                globals_ |= set(st.names)
        params = [p.name for p in f.params]
        local = (_assigned(f.body) | set(params)) - globals_
        scope = _Scope(local | self.top_vars | self.functions | globals_, globals_)
        defaults = tuple(None if p.default is None else self.expr(p.default, scope)
                         for p in f.params)
        body = self.block(f.body, scope, {})
        return ir.Function(f.name, tuple(params), defaults, body, f.pos)

    # -- statements --

    def block(self, stmts, scope, consts):
        """Fold a statement list into nested Let/Seq nodes."""
        consts = dict(consts)
        lowered = []  # list of (kind, payload)
        for st in stmts:
            if isinstance(st, S.Assign):
                value = self.expr(st.value, scope)
                target = _target(st.target)
                if isinstance(st.target, S.Name):
                    c = self.const(st.value, scope, consts)
                    if c is None:
                        consts.pop(st.target.id, None)
                    else:
                        consts[st.target.id] = c
                else:
                    for n in _target_names(st.target):
                        consts.pop(n, None)
                lowered.append(("let", (target, value, self._is_global(st.target, scope), st.pos)))
            elif isinstance(st, S.AugAssign):
                rhs = self.expr(st.value, scope)
                value = ir.BinOp(st.op, ir.Var(st.name, st.pos), rhs, st.pos)
                old = consts.pop(st.name, None)
                c = self.const(st.value, scope, consts)
                if old is not None and c is not None:
                    consts[st.name] = _fold(st.op, old, c)
                lowered.append(("let", (st.name, value, st.name in scope.globals, st.pos)))
            else:
                lowered.append(("stmt", self.stmt(st, scope, consts)))
                for n in _assigned([st]):
                    consts.pop(n, None)
        body = ir.Seq(())
        pending = []
        for kind, payload in reversed(lowered):
            if kind == "stmt":
                pending.insert(0, payload)
                continue
            if pending:
                body = _seq(pending, body)
                pending = []
            target, value, is_global, pos = payload
            body = ir.Let(target, value, body, is_global, pos)
        if pending:
            body = _seq(pending, body)
        return body

    def _is_global(self, target, scope):
        names = _target_names(target)
        g = names & scope.globals
        if g and g != names:
            raise SortError("tuple assignment mixes global and local names", target.pos)
        return bool(g)

    def stmt(self, st, scope, consts):
        if isinstance(st, S.ExprStmt):
            return self.expr(st.value, scope)
        if isinstance(st, S.Return):
            value = ir.NoneConst(st.pos) if st.value is None else self.expr(st.value, scope)
            return ir.Return(value, st.pos)
        if isinstance(st, S.If):
            cond = self.expr(st.cond, scope)
            return ir.If(cond, self.block(st.body, scope, consts),
                         self.block(st.orelse, scope, consts), st.pos)
        if isinstance(st, S.For):
            return self.for_stmt(st, scope, consts)
        if isinstance(st, (S.Pass, S.Global)):
            return ir.Seq((), st.pos)
        if isinstance(st, S.FunctionDef):
            raise SortError("nested function definitions are not supported", st.pos)
        raise TypeError(f"unexpected statement {st!r}")

    def for_stmt(self, st, scope, consts):
        inner = {k: v for k, v in consts.items() if k not in _assigned(st.body)}
        it = st.iter
        target = _target(st.target)
        if isinstance(it, S.CallExpr) and isinstance(it.func, S.Name) and it.func.id == "range" \
                and "range" not in scope.variables:
            if it.kwargs or not 1 <= len(it.args) <= 3:
                raise SortError("range takes one to three positional arguments", it.pos)
            bounds = []
            for a in it.args:
                c = self.const(a, scope, consts)
                if c is None:
                    if not self._loop_constant(a, scope):
                        raise NonConstantLoopBound(a.pos or st.pos)
                    bounds.append(self.expr(a, scope))
                else:
                    bounds.append(ir.IntConst(c, a.pos))
            if len(bounds) == 1:
                bounds.insert(0, ir.IntConst(0, st.pos))
            if len(bounds) == 2:
                bounds.append(ir.IntConst(1, st.pos))
            if isinstance(bounds[2], ir.IntConst) and bounds[2].value == 0:
                raise SortError("range step must not be zero", it.pos)
            loop_scope = _Scope(scope.variables, scope.globals,
                                scope.loop_vars | _target_names(st.target))
            body = self.block(st.body, loop_scope, inner)
            return ir.ForRange(target, bounds[0], bounds[1], bounds[2], body, st.pos)
        iterable = self.expr(it, scope)
        return ir.ForDataset(target, iterable, self.block(st.body, scope, inner), st.pos)

    def _loop_constant(self, e, scope):
        """True if ``e`` only involves literals, CLI args and enclosing range variables."""
        if isinstance(e, S.IntLit):
            return True
        if isinstance(e, S.Name):
            return e.id in scope.loop_vars
        if isinstance(e, S.Attr):
            return self._is_cli(e, scope)
        if isinstance(e, S.UnaryExpr):
            return e.op == "-" and self._loop_constant(e.operand, scope)
        if isinstance(e, S.BinExpr):
            return e.op in ("+", "-", "*", "//", "%") and self._loop_constant(e.left, scope) \
                and self._loop_constant(e.right, scope)
        return False

    # -- constants --

    def _is_cli(self, e, scope):
        return isinstance(e, S.Attr) and isinstance(e.obj, S.Name) and e.obj.id == ARGS \
            and ARGS not in scope.variables

    def cli_value(self, e):
        if e.name not in self.cli:
            raise MissingArgument(e.name, e.pos)
        return self.cli[e.name]

    def const(self, e, scope, consts):
        """Fold ``e`` to an int if it is built from literals, CLI args and known constants."""
        if isinstance(e, S.IntLit):
            return e.value
        if isinstance(e, S.Name):
            return consts.get(e.id)
        if self._is_cli(e, scope):
            v = self.cli_value(e)
            return v if isinstance(v, int) and not isinstance(v, bool) else None
        if isinstance(e, S.UnaryExpr) and e.op == "-":
            v = self.const(e.operand, scope, consts)
            return None if v is None else -v
        if isinstance(e, S.BinExpr) and e.op in ("+", "-", "*", "//", "%"):
            a = self.const(e.left, scope, consts)
            b = self.const(e.right, scope, consts)
            if a is None or b is None or (e.op in ("//", "%") and b == 0):
                return None
            return _fold(e.op, a, b)
        return None

    # -- expressions --

    def expr(self, e, scope):
        if isinstance(e, S.IntLit):
            return ir.IntConst(e.value, e.pos)
        if isinstance(e, S.BoolLit):
            return ir.BoolConst(e.value, e.pos)
        if isinstance(e, S.NoneLit):
            return ir.NoneConst(e.pos)
        if isinstance(e, S.StrLit):
            return ir.StrConst(e.value, e.pos)
        if isinstance(e, S.FloatLit):
            return ir.FloatConst(e.text, e.pos)
        if isinstance(e, S.Name):
            return ir.Var(e.id, e.pos)
        if isinstance(e, S.BinExpr):
            lhs, rhs = self.expr(e.left, scope), self.expr(e.right, scope)
            if e.op == "@":
                return ir.TensorExpr("matmul", (lhs, rhs), (), e.pos)
            return ir.BinOp(e.op, lhs, rhs, e.pos)
        if isinstance(e, S.Compare):
            return self.compare(e, scope)
        if isinstance(e, S.UnaryExpr):
            return ir.UnOp(e.op, self.expr(e.operand, scope), e.pos)
        if isinstance(e, (S.TupleExpr, S.ListExpr)):
            return ir.TupleE(tuple(self.expr(x, scope) for x in e.items), e.pos)
        if isinstance(e, S.Subscript):
            return ir.TensorExpr("getitem", (self.expr(e.obj, scope), self.index(e.index, scope)),
                                 (), e.pos)
        if isinstance(e, S.SliceExpr):
            raise SortError("slice outside a subscript", e.pos)
        if isinstance(e, S.Attr):
            if self._is_cli(e, scope):
                return _const_ir(self.cli_value(e), e.pos)
            if self._is_namespace(e.obj, scope):
                return ir.TensorExpr(e.name, (), (), e.pos)
            op = "size" if e.name == "shape" else e.name
            return ir.TensorExpr(op, (self.expr(e.obj, scope),), (), e.pos)
        if isinstance(e, S.CallExpr):
            return self.call(e, scope)
        raise TypeError(f"unexpected expression {e!r}")

    def index(self, e, scope):
        if isinstance(e, S.SliceExpr):
            def part(x):
                return ir.NoneConst(e.pos) if x is None else self.expr(x, scope)
            return ir.SliceE(part(e.lo), part(e.hi), part(e.step), e.pos)
        if isinstance(e, S.TupleExpr):
            return ir.TupleE(tuple(self.index(x, scope) for x in e.items), e.pos)
        return self.expr(e, scope)

    def compare(self, e, scope):
        operands = [e.first] + list(e.rest)
        parts = []
        for op, a, b in zip(e.ops, operands, operands[1:]):
            x, y = self.expr(a, scope), self.expr(b, scope)
            if op == "<":
                c = ir.BinOp("<", x, y, e.pos)
            elif op == ">":
                c = ir.BinOp(">", x, y, e.pos)
            elif op == "<=":
                c = ir.UnOp("not", ir.BinOp(">", x, y, e.pos), e.pos)
            elif op == ">=":
                c = ir.UnOp("not", ir.BinOp("<", x, y, e.pos), e.pos)
            elif op == "==":
                c = ir.BinOp("=", x, y, e.pos)
            else:
                c = ir.UnOp("not", ir.BinOp("=", x, y, e.pos), e.pos)
            parts.append(c)
        out = parts[0]
        for c in parts[1:]:
            out = ir.BinOp("and", out, c, e.pos)
        return out

    def _is_namespace(self, e, scope):
        while isinstance(e, S.Attr):
            e = e.obj
        return isinstance(e, S.Name) and e.id not in scope.variables and e.id != ARGS

    def call(self, e, scope):
        args = tuple(self.expr(a, scope) for a in e.args)
        kwargs = tuple((k, self.expr(v, scope)) for k, v in e.kwargs)
        f = e.func
        if isinstance(f, S.Name):
            if f.id in self.functions:
                return ir.Call(f.id, args, kwargs, e.pos)
            return ir.TensorExpr(f.id, args, kwargs, e.pos)
        if isinstance(f, S.Attr):
            if self._is_namespace(f.obj, scope):
                return ir.TensorExpr(f.name, args, kwargs, e.pos)
            obj = self.expr(f.obj, scope)
            return ir.TensorExpr(f.name, (obj,) + args, kwargs, e.pos)
        raise SortError("only named functions and methods can be called", e.pos)


def _fold(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "//":
        return a // b
    return a % b


def _const_ir(v, pos):
    if isinstance(v, bool):
        return ir.BoolConst(v, pos)
    if isinstance(v, int):
        return ir.IntConst(v, pos)
    if isinstance(v, str):
        return ir.StrConst(v, pos)
    if v is None:
        return ir.NoneConst(pos)
    if isinstance(v, float):
        return ir.FloatConst(repr(v), pos)
    if isinstance(v, (list, tuple)):
        return ir.TupleE(tuple(_const_ir(x, pos) for x in v), pos)
    raise SortError(f"unsupported command-line argument value {v!r}", pos)


def _seq(items, rest):
    if isinstance(rest, ir.Seq):
        items = list(items) + list(rest.items)
    else:
        items = list(items) + [rest]
    return items[0] if len(items) == 1 else ir.Seq(tuple(items))


def lower(program, cli_args=None):
    """Lower a parsed program to a closed IR expression (a :class:`ir.Defs`)."""
    check_recursion(program)
    return Lowerer(program, cli_args).lower()
