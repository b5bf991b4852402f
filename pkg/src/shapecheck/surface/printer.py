"""Pretty printer: surface tree back to kernel-language text.

``parse_source(to_source(p))`` yields a program equal to ``p``.
"""

from __future__ import annotations

from .ast import (
    Assign, Attr, AugAssign, BinExpr, BoolLit, CallExpr, Compare, ExprStmt, FloatLit, For,
    FunctionDef, Global, If, IntLit, ListExpr, Name, NoneLit, Pass, Program, Return, SliceExpr,
    StrLit, Subscript, TupleExpr, UnaryExpr,
)

_PREC = {"or": 1, "and": 2, "+": 5, "-": 5, "*": 6, "//": 6, "%": 6, "@": 6}
NOT, CMP, UNARY, POSTFIX, ATOM = 3, 4, 7, 8, 9

INDENT = "    "


def _prec(e):
    if isinstance(e, BinExpr):
        return _PREC[e.op]
    if isinstance(e, Compare):
        return CMP
    if isinstance(e, UnaryExpr):
        return NOT if e.op == "not" else UNARY
    if isinstance(e, (CallExpr, Attr, Subscript)):
        return POSTFIX
    return ATOM


def expr_source(e, need=0):
    s = _expr(e)
    return f"({s})" if _prec(e) < need else s


def _expr(e):
    if isinstance(e, Name):
        return e.id
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, FloatLit):
        return e.text
    if isinstance(e, BoolLit):
        return "True" if e.value else "False"
    if isinstance(e, NoneLit):
        return "None"
    if isinstance(e, StrLit):
        return repr(e.value)
    if isinstance(e, BinExpr):
        p = _PREC[e.op]
        return f"{expr_source(e.left, p)} {e.op} {expr_source(e.right, p + 1)}"
    if isinstance(e, Compare):
        parts = [expr_source(e.first, CMP + 1)]
        for op, x in zip(e.ops, e.rest):
            parts += [op, expr_source(x, CMP + 1)]
        return " ".join(parts)
    if isinstance(e, UnaryExpr):
        if e.op == "not":
            return "not " + expr_source(e.operand, NOT)
        return "-" + expr_source(e.operand, UNARY)
    if isinstance(e, CallExpr):
        args = [expr_source(a) for a in e.args] + [f"{k}={expr_source(v)}" for k, v in e.kwargs]
        return f"{_postfix_obj(e.func)}({', '.join(args)})"
    if isinstance(e, Attr):
        return f"{_postfix_obj(e.obj)}.{e.name}"
    if isinstance(e, Subscript):
        return f"{_postfix_obj(e.obj)}[{_index(e.index)}]"
    if isinstance(e, TupleExpr):
        if len(e.items) == 1:
            return f"({expr_source(e.items[0])},)"
        return "(" + ", ".join(expr_source(x) for x in e.items) + ")"
    if isinstance(e, ListExpr):
        return "[" + ", ".join(expr_source(x) for x in e.items) + "]"
    if isinstance(e, SliceExpr):
        raise ValueError("slice outside a subscript")
    raise TypeError(f"not an expression: {e!r}")


def _postfix_obj(e):
    if isinstance(e, (IntLit, FloatLit)):
        return f"({_expr(e)})"
    return expr_source(e, POSTFIX)


def _slice(s):
    lo = "" if s.lo is None else expr_source(s.lo)
    hi = "" if s.hi is None else expr_source(s.hi)
    out = f"{lo}:{hi}"
    if s.step is not None:
        out += ":" + expr_source(s.step)
    return out


def _index(e):
    if isinstance(e, SliceExpr):
        return _slice(e)
    if isinstance(e, TupleExpr) and e.items:
        parts = [_slice(x) if isinstance(x, SliceExpr) else expr_source(x) for x in e.items]
        return ", ".join(parts) + ("," if len(parts) == 1 else "")
    return expr_source(e)


def _target(e):
    if isinstance(e, TupleExpr):
        inner = ", ".join(_target(x) if isinstance(x, Name) else f"({_target(x)})" for x in e.items)
        return inner + ("," if len(e.items) == 1 else "")
    return e.id


def _stmts(body, depth, out):
    for st in body:
        _stmt(st, depth, out)


def _stmt(st, depth, out):
    pad = INDENT * depth
    if isinstance(st, FunctionDef):
        params = [p.name if p.default is None else f"{p.name}={expr_source(p.default)}"
                  for p in st.params]
        out.append(f"{pad}def {st.name}({', '.join(params)}):")
        _stmts(st.body, depth + 1, out)
    elif isinstance(st, If):
        out.append(f"{pad}if {expr_source(st.cond)}:")
        _stmts(st.body, depth + 1, out)
        rest = st.orelse
        while len(rest) == 1 and isinstance(rest[0], If):
            out.append(f"{pad}elif {expr_source(rest[0].cond)}:")
            _stmts(rest[0].body, depth + 1, out)
            rest = rest[0].orelse
        if rest:
            out.append(f"{pad}else:")
            _stmts(rest, depth + 1, out)
    elif isinstance(st, For):
        out.append(f"{pad}for {_target(st.target)} in {expr_source(st.iter)}:")
        _stmts(st.body, depth + 1, out)
    elif isinstance(st, Assign):
        out.append(f"{pad}{_target(st.target)} = {expr_source(st.value)}")
    elif isinstance(st, AugAssign):
        out.append(f"{pad}{st.name} {st.op}= {expr_source(st.value)}")
    elif isinstance(st, ExprStmt):
        out.append(pad + expr_source(st.value))
    elif isinstance(st, Return):
        out.append(pad + ("return" if st.value is None else "return " + expr_source(st.value)))
    elif isinstance(st, Global):
        out.append(f"{pad}global {', '.join(st.names)}")
    elif isinstance(st, Pass):
        out.append(pad + "pass")
    else:
        raise TypeError(f"not a statement: {st!r}")


def to_source(program: Program):
    out = []
    for f in program.functions:
        _stmt(f, 0, out)
        out.append("")
    _stmts(program.entry, 0, out)
    return "\n".join(out).rstrip("\n") + "\n"
