"""The analysis IR: a small expression language that the symbolic executor runs.

Statement sequences are folded into nested ``Let`` / ``Seq`` nodes. ``Let``
binds in the enclosing function's frame (Python scoping), so a variable
assigned inside an ``if`` arm stays visible after the ``if``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..source import SourcePos


def _pos():
    return field(default=None, compare=False, repr=False)


class IRExpr:
    __slots__ = ()


@dataclass(frozen=True)
class IntConst(IRExpr):
    value: int
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class BoolConst(IRExpr):
    value: bool
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class NoneConst(IRExpr):
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class StrConst(IRExpr):
    value: str
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class FloatConst(IRExpr):
    text: str
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Var(IRExpr):
    name: str
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Let(IRExpr):
    """Bind ``target`` (a name or nested tuple of names) to ``bound``, then run ``body``.

    ``is_global`` marks writes to a variable declared ``global`` in a function.
    """

    target: object
    bound: IRExpr
    body: IRExpr
    is_global: bool = False
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class If(IRExpr):
    cond: IRExpr
    then: IRExpr
    else_: IRExpr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class BinOp(IRExpr):
    """``op`` is one of + - * // % < > = and or.

    ``a > b`` means ``b < a`` but keeps operand evaluation left to right.
    """

    op: str
    lhs: IRExpr
    rhs: IRExpr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class UnOp(IRExpr):
    op: str  # "-" or "not"
    arg: IRExpr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Call(IRExpr):
    fname: str
    args: tuple
    kwargs: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class TensorExpr(IRExpr):
    """A catalog operation or builtin, looked up by name at evaluation time."""

    op: str
    args: tuple
    kwargs: tuple = ()
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Seq(IRExpr):
    items: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class ForRange(IRExpr):
    target: object
    lo: IRExpr
    hi: IRExpr
    step: IRExpr
    body: IRExpr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class ForDataset(IRExpr):
    """Iteration over a dataset epoch (or, when the value is a tuple, over its items)."""

    target: object
    iterable: IRExpr
    body: IRExpr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Return(IRExpr):
    value: IRExpr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class TupleE(IRExpr):
    items: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class SliceE(IRExpr):
    lo: IRExpr
    hi: IRExpr
    step: IRExpr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple  # names
    defaults: tuple  # IRExpr or None per param
    body: IRExpr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Defs(IRExpr):
    """Root node: function table plus the entry body."""

    functions: tuple
    body: IRExpr
    pos: SourcePos = _pos()

    def function(self, name):
        for f in self.functions:
            if f.name == name:
                return f
        return None


def walk(e):
    """Yield every IR node under ``e`` (pre-order)."""
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Defs):
            stack.extend(f.body for f in reversed(n.functions))
            stack.append(n.body)
            for f in n.functions:
                stack.extend(d for d in f.defaults if d is not None)
            continue
        kids = []
        for name in getattr(n, "__dataclass_fields__", ()):
            v = getattr(n, name)
            if isinstance(v, IRExpr):
                kids.append(v)
            elif isinstance(v, tuple):
                for x in v:
                    if isinstance(x, IRExpr):
                        kids.append(x)
                    elif isinstance(x, tuple) and len(x) == 2 and isinstance(x[1], IRExpr):
                        kids.append(x[1])
        stack.extend(reversed(kids))
