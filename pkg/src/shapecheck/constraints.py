"""Symbolic shape, number and boolean expressions, and the constraints built from them.

Every node is an immutable dataclass, so structural equality and hashing come
for free. Expressions are never simplified at construction time; see
:mod:`shapecheck.simplify` for that.

The canonical text form is an s-expression, e.g.::

    (= (dim s0_img 1) 784)
    (forall s3_i 0 4 (< s3_i (rank s1_x)))
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import DivisionByZero, IndexOutOfRange, SortMismatch, UnboundSymbol
from .source import SourcePos

NUM, SHAPE, BOOL = "num", "shape", "bool"


@dataclass(frozen=True, slots=True, order=True)
class Symbol:
    """An unknown. Identity is the integer id; the hint is for humans only."""

    id: int
    sort: str
    hint: str = field(default="", compare=False)

    @property
    def name(self):
        base = re.sub(r"\W+", "_", self.hint.split("@", 1)[0]).strip("_")
        return f"s{self.id}_{base}" if base else f"s{self.id}"

    @property
    def label(self):
        """``name`` plus the generation site, used as counterexample keys."""
        site = self.hint.split("@", 1)[1] if "@" in self.hint else ""
        return f"{self.name}@{site}" if site else self.name

    def __repr__(self):
        return self.name


class SymbolSource:
    """Hands out globally unique symbols for one analysis run."""

    def __init__(self, start=0):
        self._ids = itertools.count(start)

    def fresh(self, sort, hint=""):
        return Symbol(next(self._ids), sort, hint)

    def num(self, hint=""):
        return NumVar(self.fresh(NUM, hint))

    def shape(self, hint=""):
        return ShapeVar(self.fresh(SHAPE, hint))

    def bool(self, hint=""):
        return BoolVar(self.fresh(BOOL, hint))


class ValueExpr:
    __slots__ = ()
    sort: str = ""

    def __str__(self):
        return to_sexpr(self)


# ----------------------------------------------------------------------------
# number expressions


class NumExpr(ValueExpr):
    __slots__ = ()
    sort = NUM

    def __add__(self, other):
        return BinOp("+", self, as_num(other))

    def __radd__(self, other):
        return BinOp("+", as_num(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_num(other))

    def __rsub__(self, other):
        return BinOp("-", as_num(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_num(other))

    def __rmul__(self, other):
        return BinOp("*", as_num(other), self)

    def __floordiv__(self, other):
        return BinOp("//", self, as_num(other))

    def __mod__(self, other):
        return BinOp("%", self, as_num(other))

    def __neg__(self):
        return BinOp("-", Num(0), self)


@dataclass(frozen=True, slots=True)
class Num(NumExpr):
    value: int


@dataclass(frozen=True, slots=True)
class NumVar(NumExpr):
    sym: Symbol


NUM_OPS = ("+", "-", "*", "//", "%")


@dataclass(frozen=True, slots=True)
class BinOp(NumExpr):
    op: str
    lhs: NumExpr
    rhs: NumExpr


@dataclass(frozen=True, slots=True)
class Rank(NumExpr):
    shape: ShapeExpr


@dataclass(frozen=True, slots=True)
class Index(NumExpr):
    shape: ShapeExpr
    index: NumExpr


@dataclass(frozen=True, slots=True)
class Prod(NumExpr):
    shape: ShapeExpr


# ----------------------------------------------------------------------------
# shape expressions


class ShapeExpr(ValueExpr):
    __slots__ = ()
    sort = SHAPE

    def rank(self):
        return Rank(self)

    def dim(self, i):
        return Index(self, as_num(i))

    def slice(self, lo, hi=None):
        return Slice(self, as_num(lo), Rank(self) if hi is None else as_num(hi))

    def prod(self):
        return Prod(self)

    def __matmul__(self, other):
        return Concat(self, other)


@dataclass(frozen=True, slots=True)
class Shape(ShapeExpr):
    dims: tuple

    def __init__(self, dims=()):
        object.__setattr__(self, "dims", tuple(as_num(d) for d in dims))


@dataclass(frozen=True, slots=True)
class ShapeVar(ShapeExpr):
    sym: Symbol


@dataclass(frozen=True, slots=True)
class Slice(ShapeExpr):
    shape: ShapeExpr
    lo: NumExpr
    hi: NumExpr


@dataclass(frozen=True, slots=True)
class Concat(ShapeExpr):
    left: ShapeExpr
    right: ShapeExpr


# ----------------------------------------------------------------------------
# boolean expressions (also the constraint formula language)


class BoolExpr(ValueExpr):
    __slots__ = ()
    sort = BOOL

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True, slots=True)
class BoolVal(BoolExpr):
    value: bool


TRUE = BoolVal(True)
FALSE = BoolVal(False)


@dataclass(frozen=True, slots=True)
class BoolVar(BoolExpr):
    sym: Symbol


@dataclass(frozen=True, slots=True)
class And(BoolExpr):
    items: tuple

    def __init__(self, items):
        object.__setattr__(self, "items", tuple(items))


@dataclass(frozen=True, slots=True)
class Or(BoolExpr):
    items: tuple

    def __init__(self, items):
        object.__setattr__(self, "items", tuple(items))


@dataclass(frozen=True, slots=True)
class Not(BoolExpr):
    arg: BoolExpr


@dataclass(frozen=True, slots=True)
class Eq(BoolExpr):
    lhs: ValueExpr
    rhs: ValueExpr

    def __post_init__(self):
        if self.lhs.sort != self.rhs.sort:
            raise SortMismatch(f"equality between {self.lhs.sort} and {self.rhs.sort}")


@dataclass(frozen=True, slots=True)
class Lt(BoolExpr):
    lhs: NumExpr
    rhs: NumExpr


@dataclass(frozen=True, slots=True)
class Forall(BoolExpr):
    """``body`` holds for every integer ``var`` in the closed range [lo, hi]."""

    var: Symbol
    lo: NumExpr
    hi: NumExpr
    body: BoolExpr


# ----------------------------------------------------------------------------
# construction helpers


def as_num(x):
    if isinstance(x, NumExpr):
        return x
    if isinstance(x, bool) or not isinstance(x, int):
        raise SortMismatch(f"expected a number expression, got {x!r}")
    return Num(x)


def as_shape(x):
    if isinstance(x, ShapeExpr):
        return x
    return Shape(x)


def le(a, b):
    return Not(Lt(as_num(b), as_num(a)))


def ge(a, b):
    return le(b, a)


def lt(a, b):
    return Lt(as_num(a), as_num(b))


def gt(a, b):
    return Lt(as_num(b), as_num(a))


def eq(a, b):
    if isinstance(a, int):
        a = Num(a)
    if isinstance(b, int):
        b = Num(b)
    return Eq(a, b)


def ne(a, b):
    return Not(eq(a, b))


def between(lo, x, hi):
    """``lo <= x <= hi``."""
    return And((le(lo, x), le(x, hi)))


def conj(items):
    items = tuple(items)
    if not items:
        return TRUE
    return items[0] if len(items) == 1 else And(items)


def disj(items):
    items = tuple(items)
    if not items:
        return FALSE
    return items[0] if len(items) == 1 else Or(items)


# ----------------------------------------------------------------------------
# constraints


HARD, SOFT = "hard", "soft"


@dataclass(frozen=True, slots=True)
class Constraint:
    formula: BoolExpr
    kind: str = SOFT
    gen_index: int = -1
    origin: SourcePos | None = None
    op_name: str | None = None

    def __post_init__(self):
        if self.kind not in (HARD, SOFT):
            raise ValueError(f"constraint kind must be hard or soft, not {self.kind!r}")
        if not isinstance(self.formula, BoolExpr):
            raise SortMismatch("constraint formula must be boolean")

    @property
    def is_hard(self):
        return self.kind == HARD

    def signature(self):
        """Everything but the generation index; used to compare branch arms."""
        return (self.formula, self.kind, self.origin, self.op_name)

    def text(self):
        return to_sexpr(self.formula)


class ConstraintSet:
    """An ordered, immutable collection of constraints (generation order)."""

    __slots__ = ("_items",)

    def __init__(self, items: Iterable[Constraint] = ()):
        self._items = tuple(items)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]

    def __eq__(self, other):
        return isinstance(other, ConstraintSet) and self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        return f"ConstraintSet({list(self._items)!r})"

    @property
    def items(self):
        return self._items

    def hard(self):
        return tuple(c for c in self._items if c.kind == HARD)

    def soft(self):
        return tuple(c for c in self._items if c.kind == SOFT)

    def add(self, c: Constraint):
        return ConstraintSet(self._items + (c,))

    def union(self, other: ConstraintSet):
        return ConstraintSet(sorted(self._items + other._items, key=lambda c: c.gen_index))


# ----------------------------------------------------------------------------
# traversal


_CHILDREN = {
    Num: (), NumVar: (), BinOp: ("lhs", "rhs"), Rank: ("shape",), Index: ("shape", "index"),
    Prod: ("shape",), ShapeVar: (), Slice: ("shape", "lo", "hi"), Concat: ("left", "right"),
    BoolVal: (), BoolVar: (), Not: ("arg",), Eq: ("lhs", "rhs"), Lt: ("lhs", "rhs"),
}


def children(e):
    t = type(e)
    if t is Shape:
        return e.dims
    if t is And or t is Or:
        return e.items
    if t is Forall:
        return (e.lo, e.hi, e.body)
    return tuple(getattr(e, f) for f in _CHILDREN[t])


def rebuild(e, kids):
    """Return a copy of ``e`` with its children replaced (same order as :func:`children`)."""
    t = type(e)
    if t is Shape:
        return Shape(kids)
    if t is And or t is Or:
        return t(kids)
    if t is Forall:
        return Forall(e.var, *kids)
    names = _CHILDREN[t]
    if not names:
        return e
    return replace(e, **dict(zip(names, kids)))


def _leaf_symbol(e):
    t = type(e)
    if t is NumVar or t is ShapeVar or t is BoolVar:
        return e.sym
    return None


def free_symbols(e):
    """Symbols occurring in ``e`` outside of any ``Forall`` binder."""
    if isinstance(e, Constraint):
        e = e.formula
    out = set()
    _collect(e, frozenset(), out)
    return out


def _collect(e, bound, out):
    s = _leaf_symbol(e)
    if s is not None:
        if s not in bound:
            out.add(s)
        return
    if type(e) is Forall:
        _collect(e.lo, bound, out)
        _collect(e.hi, bound, out)
        _collect(e.body, bound | {e.var}, out)
        return
    for k in children(e):
        _collect(k, bound, out)


def _var_for(sym):
    return {NUM: NumVar, SHAPE: ShapeVar, BOOL: BoolVar}[sym.sort](sym)


def substitute(e, binding: Mapping[Symbol, ValueExpr]):
    """Replace bound symbols by expressions. Binder variables are never captured."""
    for sym, val in binding.items():
        if val.sort != sym.sort:
            raise SortMismatch(f"{sym.name} is {sym.sort}-sorted but bound to a {val.sort} expression")
    if isinstance(e, Constraint):
        return replace(e, formula=_subst(e.formula, dict(binding)))
    return _subst(e, dict(binding))


def _subst(e, binding):
    if not binding:
        return e
    s = _leaf_symbol(e)
    if s is not None:
        return binding.get(s, e)
    if type(e) is Forall:
        inner = {k: v for k, v in binding.items() if k != e.var}
        var, body = e.var, e.body
        clash = any(var in free_symbols(v) for v in inner.values())
        if clash:
            used = {var.id} | {x.id for v in inner.values() for x in free_symbols(v)}
            used |= {x.id for x in free_symbols(body)}
            fresh = Symbol(max(used) + 1, NUM, var.hint)
            body = _subst(body, {var: NumVar(fresh)})
            var = fresh
        return Forall(var, _subst(e.lo, binding), _subst(e.hi, binding), _subst(body, inner))
    kids = children(e)
    if not kids:
        return e
    return rebuild(e, [_subst(k, binding) for k in kids])


# ----------------------------------------------------------------------------
# ground evaluation (the reference semantics)


def concrete_eval(e, assignment: Mapping[Symbol, object] = None):
    """Evaluate ``e`` under a total assignment of its free symbols.

    Numbers evaluate to ``int``, shapes to ``tuple`` of ``int``, booleans to
    ``bool``. ``//`` and ``%`` use floor semantics (Python's).
    """
    if isinstance(e, Constraint):
        e = e.formula
    return _eval(e, assignment or {})


def _eval(e, env):
    t = type(e)
    if t is Num:
        return e.value
    if t is NumVar or t is ShapeVar or t is BoolVar:
        try:
            return env[e.sym]
        except KeyError:
            raise UnboundSymbol(f"no value for {e.sym.name}") from None
    if t is BinOp:
        a = _eval(e.lhs, env)
        b = _eval(e.rhs, env)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0:
            raise DivisionByZero(f"{op} by zero in {to_sexpr(e)}")
        return a // b if op == "//" else a % b
    if t is Rank:
        return len(_eval(e.shape, env))
    if t is Index:
        s = _eval(e.shape, env)
        i = _eval(e.index, env)
        if not 0 <= i < len(s):
            raise IndexOutOfRange(f"index {i} out of range for shape {s}")
        return s[i]
    if t is Prod:
        p = 1
        for d in _eval(e.shape, env):
            p *= d
        return p
    if t is Shape:
        return tuple(_eval(d, env) for d in e.dims)
    if t is Slice:
        s = _eval(e.shape, env)
        lo = _eval(e.lo, env)
        hi = _eval(e.hi, env)
        if not 0 <= lo <= hi <= len(s):
            raise IndexOutOfRange(f"slice [{lo}:{hi}] out of range for shape {s}")
        return s[lo:hi]
    if t is Concat:
        return _eval(e.left, env) + _eval(e.right, env)
    if t is BoolVal:
        return e.value
    if t is And:
        return all(_eval(x, env) for x in e.items)
    if t is Or:
        return any(_eval(x, env) for x in e.items)
    if t is Not:
        return not _eval(e.arg, env)
    if t is Eq:
        return _eval(e.lhs, env) == _eval(e.rhs, env)
    if t is Lt:
        return _eval(e.lhs, env) < _eval(e.rhs, env)
    if t is Forall:
        lo = _eval(e.lo, env)
        hi = _eval(e.hi, env)
        inner = dict(env)
        for v in range(lo, hi + 1):
            inner[e.var] = v
            if not _eval(e.body, inner):
                return False
        return True
    raise TypeError(f"not an expression: {e!r}")


# ----------------------------------------------------------------------------
# canonical text form


_SEXPR_HEAD = {Rank: "rank", Index: "dim", Prod: "prod", Slice: "slice", Concat: "concat",
               Not: "not", Eq: "=", Lt: "<"}


def to_sexpr(e):
    if isinstance(e, Constraint):
        return to_sexpr(e.formula)
    t = type(e)
    if t is Num:
        return str(e.value)
    if t is NumVar or t is ShapeVar or t is BoolVar:
        return e.sym.name
    if t is BoolVal:
        return "true" if e.value else "false"
    if t is BinOp:
        return f"({e.op} {to_sexpr(e.lhs)} {to_sexpr(e.rhs)})"
    if t is Shape:
        return "(shape" + "".join(" " + to_sexpr(d) for d in e.dims) + ")"
    if t is And or t is Or:
        head = "and" if t is And else "or"
        return f"({head}" + "".join(" " + to_sexpr(x) for x in e.items) + ")"
    if t is Forall:
        return f"(forall {e.var.name} {to_sexpr(e.lo)} {to_sexpr(e.hi)} {to_sexpr(e.body)})"
    return f"({_SEXPR_HEAD[t]} " + " ".join(to_sexpr(k) for k in children(e)) + ")"


def pretty(e):
    """Infix rendering for human-facing reports, e.g. ``(256, 1181) = (256, 4)``."""
    if isinstance(e, Constraint):
        e = e.formula
    t = type(e)
    if t is Num:
        return str(e.value)
    if t is NumVar or t is ShapeVar or t is BoolVar:
        return e.sym.name
    if t is BoolVal:
        return "true" if e.value else "false"
    if t is BinOp:
        return f"({pretty(e.lhs)} {e.op} {pretty(e.rhs)})"
    if t is Rank:
        return f"rank({pretty(e.shape)})"
    if t is Index:
        return f"{pretty(e.shape)}[{pretty(e.index)}]"
    if t is Prod:
        return f"prod({pretty(e.shape)})"
    if t is Shape:
        inner = ", ".join(pretty(d) for d in e.dims)
        return f"({inner},)" if len(e.dims) == 1 else f"({inner})"
    if t is Slice:
        return f"{pretty(e.shape)}[{pretty(e.lo)}:{pretty(e.hi)}]"
    if t is Concat:
        return f"{pretty(e.left)} @ {pretty(e.right)}"
    if t is And:
        return " and ".join(_paren(x) for x in e.items)
    if t is Or:
        return " or ".join(_paren(x) for x in e.items)
    if t is Not:
        if type(e.arg) is Lt:
            return f"{pretty(e.arg.rhs)} <= {pretty(e.arg.lhs)}"
        if type(e.arg) is Eq:
            return f"{pretty(e.arg.lhs)} != {pretty(e.arg.rhs)}"
        return f"not {_paren(e.arg)}"
    if t is Eq:
        return f"{pretty(e.lhs)} = {pretty(e.rhs)}"
    if t is Lt:
        return f"{pretty(e.lhs)} < {pretty(e.rhs)}"
    if t is Forall:
        return f"forall {e.var.name} in [{pretty(e.lo)}, {pretty(e.hi)}]. {_paren(e.body)}"
    raise TypeError(e)


def _paren(e):
    s = pretty(e)
    return f"({s})" if type(e) in (And, Or, Forall) else s
