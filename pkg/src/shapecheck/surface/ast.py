"""Surface syntax tree of the kernel language.

Positions are excluded from equality so that two parses of equivalent text
compare equal even when layout differs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..source import SourcePos


def _pos():
    return field(default=None, compare=False, repr=False)


class Expr:
    __slots__ = ()


class Stmt:
    __slots__ = ()


# -- expressions --


@dataclass(frozen=True)
class Name(Expr):
    id: str
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class FloatLit(Expr):
    """Floating-point literal, kept as text; it never influences shapes."""

    text: str
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class NoneLit(Expr):
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class StrLit(Expr):
    value: str
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class BinExpr(Expr):
    """Arithmetic (+ - * // % @), comparison (< <= > >= == !=) or logic (and, or)."""

    op: str
    left: Expr
    right: Expr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Compare(Expr):
    """A comparison chain ``a < b <= c``: ``ops`` has one entry per gap."""

    first: Expr
    ops: tuple
    rest: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class UnaryExpr(Expr):
    op: str  # "-", "not"
    operand: Expr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class CallExpr(Expr):
    func: Expr
    args: tuple
    kwargs: tuple  # ((name, Expr), ...)
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Attr(Expr):
    obj: Expr
    name: str
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Subscript(Expr):
    obj: Expr
    index: Expr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class SliceExpr(Expr):
    lo: Expr | None
    hi: Expr | None
    step: Expr | None
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class TupleExpr(Expr):
    items: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class ListExpr(Expr):
    items: tuple
    pos: SourcePos = _pos()


# -- statements --


@dataclass(frozen=True)
class Assign(Stmt):
    """``target = value``; ``target`` is a Name or a (nested) TupleExpr of Names."""

    target: Expr
    value: Expr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class AugAssign(Stmt):
    name: str
    op: str
    value: Expr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class ExprStmt(Stmt):
    value: Expr
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Return(Stmt):
    value: Expr | None
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    body: tuple
    orelse: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class For(Stmt):
    target: Expr
    iter: Expr
    body: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Global(Stmt):
    names: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Pass(Stmt):
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Param:
    name: str
    default: Expr | None = None
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class FunctionDef(Stmt):
    name: str
    params: tuple
    body: tuple
    pos: SourcePos = _pos()


@dataclass(frozen=True)
class Program:
    functions: tuple  # FunctionDef, in source order
    entry: tuple  # top-level statements other than definitions
    file: str = field(default="<input>", compare=False)

    def function(self, name):
        for f in self.functions:
            if f.name == name:
                return f
        return None
