"""Online constraint checking: normal forms, constant folding and interval reasoning.

Number expressions are normalised to a sum of products with integer
coefficients over *atoms* (symbols and anything that does not distribute:
``rank``/``dim``/``prod`` of unknown shapes, and floor division or modulo that
cannot be folded). Shapes are normalised to a list of segments, each either a
single dimension or an opaque slice of an unknown shape.

Simplification only ever turns an expression into one that evaluates to the
same value wherever the original is defined. The result may be *more* defined
(``x * 0`` becomes ``0`` even when ``x`` divides by zero).

Dimensions of unknown shapes are assumed non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

from .constraints import (
    BOOL, FALSE, NUM, SHAPE, TRUE, And, BinOp, BoolExpr, BoolVal, BoolVar, Concat,
    Constraint, Eq, Forall, Index, Lt, Not, Num, NumExpr, NumVar, Or, Prod, Rank, Shape,
    ShapeExpr, ShapeVar, Slice, Symbol, to_sexpr,
)

INF = math.inf


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float = -INF
    hi: float = INF

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def is_point(self):
        return self.lo == self.hi

    @property
    def finite(self):
        return self.lo != -INF and self.hi != INF

    def size(self):
        return self.hi - self.lo + 1

    def __contains__(self, v):
        return self.lo <= v <= self.hi

    def __str__(self):
        lo = "-inf" if self.lo == -INF else str(self.lo)
        hi = "+inf" if self.hi == INF else str(self.hi)
        return f"[{lo}, {hi}]"


TOP = Interval()
NONNEG = Interval(0, INF)


def _imul(a, b):
    if a == 0 or b == 0:
        return 0
    return a * b


def iv_add(a, b):
    return Interval(a.lo + b.lo, a.hi + b.hi)


def iv_scale(a, c):
    if c == 0:
        return Interval(0, 0)
    lo, hi = _imul(a.lo, c), _imul(a.hi, c)
    return Interval(min(lo, hi), max(lo, hi))


def iv_mul(a, b):
    ps = [_imul(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
    return Interval(min(ps), max(ps))


def _floordiv_bound(x, c):
    if x in (INF, -INF):
        return x if c > 0 else -x
    return x // c


def iv_floordiv_const(a, c):
    lo, hi = _floordiv_bound(a.lo, c), _floordiv_bound(a.hi, c)
    return Interval(min(lo, hi), max(lo, hi))


# ----------------------------------------------------------------------------
# polynomials
#
# A polynomial is a dict mapping a monomial (sorted tuple of atoms, repeats
# allowed) to a non-zero integer coefficient. The constant term uses ().


@lru_cache(maxsize=1 << 16)
def atom_key(atom):
    return to_sexpr(atom)


def _mono_key(m):
    return (len(m), tuple(atom_key(a) for a in m))


def p_const(c):
    return {(): c} if c else {}


def p_atom(a):
    return {(a,): 1}


def p_add(p, q, sign=1):
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + sign * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def p_scale(p, k):
    if k == 0:
        return {}
    return {m: c * k for m, c in p.items()}


def p_mul(p, q):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(sorted(m1 + m2, key=atom_key))
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def p_constant(p):
    """The constant value of ``p``, or None when it has non-constant terms."""
    if not p:
        return 0
    if len(p) == 1 and () in p:
        return p[()]
    return None


def _mono_expr(m):
    e = m[0]
    for a in m[1:]:
        e = BinOp("*", e, a)
    return e


def from_poly(p):
    if not p:
        return Num(0)
    terms = sorted((m for m in p if m), key=_mono_key)
    expr = None
    for m in terms:
        c = p[m]
        base = _mono_expr(m)
        mag = abs(c)
        t = base if mag == 1 else BinOp("*", Num(mag), base)
        if expr is None:
            expr = t if c > 0 else (BinOp("*", Num(c), base))
        else:
            expr = BinOp("+" if c > 0 else "-", expr, t)
    k = p.get((), 0)
    if expr is None:
        return Num(k)
    if k > 0:
        expr = BinOp("+", expr, Num(k))
    elif k < 0:
        expr = BinOp("-", expr, Num(-k))
    return expr


# ----------------------------------------------------------------------------
# shape segments


@dataclass(frozen=True, slots=True)
class Opaque:
    """``base[lo:hi]`` for a shape whose rank is not statically known; hi None = rank(base)."""

    base: ShapeExpr
    lo: tuple
    hi: tuple | None

    # polys are stored as sorted item tuples so the segment stays hashable
    @staticmethod
    def make(base, lo, hi):
        return Opaque(base, _freeze(lo), None if hi is None else _freeze(hi))


def _freeze(p):
    return tuple(sorted(p.items(), key=lambda kv: _mono_key(kv[0])))


def _thaw(t):
    return dict(t)


def _seg_rank(seg):
    if not isinstance(seg, Opaque):
        return {(): 1}
    lo = _thaw(seg.lo)
    hi = p_atom(Rank(seg.base)) if seg.hi is None else _thaw(seg.hi)
    return p_add(hi, lo, -1)


def _seg_expr(seg):
    lo = _thaw(seg.lo)
    if not lo and seg.hi is None:
        return seg.base
    hi = Rank(seg.base) if seg.hi is None else from_poly(_thaw(seg.hi))
    return Slice(seg.base, from_poly(lo), hi)


def rank_poly(segs):
    total = {}
    for s in segs:
        total = p_add(total, _seg_rank(s))
    return total


def from_segments(segs):
    out = None
    dims = []

    def flush():
        nonlocal out, dims
        if dims:
            t = Shape([from_poly(d) for d in dims])
            out = t if out is None else Concat(out, t)
            dims = []

    for s in segs:
        if isinstance(s, Opaque):
            flush()
            e = _seg_expr(s)
            out = e if out is None else Concat(out, e)
        else:
            dims.append(s)
    flush()
    return Shape(()) if out is None else out


# ----------------------------------------------------------------------------
# the simplifier proper


class _Simplifier:
    def __init__(self, ctx):
        self.ctx = ctx or {}

    # -- numbers --

    def poly(self, e):
        t = type(e)
        if t is Num:
            return p_const(e.value)
        if t is NumVar:
            iv = self.ctx.get(e.sym)
            if iv is not None and iv.is_point:
                return p_const(int(iv.lo))
            return p_atom(e)
        if t is BinOp:
            op = e.op
            if op in ("+", "-", "*"):
                a = self.poly(e.lhs)
                b = self.poly(e.rhs)
                if op == "+":
                    return p_add(a, b)
                if op == "-":
                    return p_add(a, b, -1)
                return p_mul(a, b)
            return self.divmod(op, self.poly(e.lhs), self.poly(e.rhs))
        if t is Rank:
            return rank_poly(self.segments(e.shape))
        if t is Index:
            return self.index(self.segments(e.shape), self.poly(e.index))
        if t is Prod:
            out = {(): 1}
            for s in self.segments(e.shape):
                if isinstance(s, Opaque):
                    out = p_mul(out, p_atom(Prod(_seg_expr(s))))
                else:
                    out = p_mul(out, s)
            return out
        raise TypeError(f"not a number expression: {e!r}")

    def divmod(self, op, a, b):
        ca, cb = p_constant(a), p_constant(b)
        if cb is not None and cb != 0:
            if ca is not None:
                return p_const(ca // cb if op == "//" else ca % cb)
            if cb in (1, -1):
                return p_scale(a, cb) if op == "//" else {}
            quot, rest = {}, {}
            for m, c in a.items():
                q, r = divmod(c, cb)
                if q:
                    quot[m] = q
                if r:
                    rest[m] = r
            cr = p_constant(rest)
            if cr is not None:
                return p_add(quot, p_const(cr // cb)) if op == "//" else p_const(cr % cb)
            g = abs(cb)
            for v in rest.values():
                g = math.gcd(g, v)
            if g > 1:
                inner = self.divmod(op, {m: v // g for m, v in rest.items()}, p_const(cb // g))
                return p_add(quot, inner) if op == "//" else p_scale(inner, g)
            iv = self.interval(rest)
            in_range = (0 <= iv.lo and iv.hi <= cb - 1) if cb > 0 else (cb + 1 <= iv.lo and iv.hi <= 0)
            if in_range:
                return quot if op == "//" else rest
            atom = p_atom(BinOp(op, from_poly(rest), Num(cb)))
            return p_add(quot, atom) if op == "//" else atom
        if not a:
            return {}
        if cb is None and a == b:
            return {(): 1} if op == "//" else {}
        return p_atom(BinOp(op, from_poly(a), from_poly(b)))

    def num(self, e):
        return from_poly(self.poly(e))

    # -- intervals --

    def atom_interval(self, a):
        t = type(a)
        if t is NumVar:
            return self.ctx.get(a.sym, TOP)
        if t is Rank:
            return NONNEG
        if t is Index or t is Prod:
            return NONNEG if _only_unknown_shapes(a.shape) else TOP
        if t is BinOp:
            if type(a.rhs) is Num and a.rhs.value != 0:
                c = a.rhs.value
                if a.op == "%":
                    return Interval(0, c - 1) if c > 0 else Interval(c + 1, 0)
                return iv_floordiv_const(self.interval(self.poly(a.lhs)), c)
        return TOP

    def interval(self, p):
        total = Interval(0, 0)
        for m, c in p.items():
            if not m:
                total = iv_add(total, Interval(c, c))
                continue
            iv = self.atom_interval(m[0])
            for a in m[1:]:
                iv = iv_mul(iv, self.atom_interval(a))
            total = iv_add(total, iv_scale(iv, c))
            if total.lo == -INF and total.hi == INF:
                return TOP
        return total

    # -- shapes --

    def segments(self, s):
        t = type(s)
        if t is Shape:
            return [self.poly(d) for d in s.dims]
        if t is ShapeVar:
            return [Opaque.make(s, {}, None)]
        if t is Concat:
            return self.segments(s.left) + self.segments(s.right)
        if t is Slice:
            return self.slice(self.segments(s.shape), self.poly(s.lo), self.poly(s.hi))
        raise TypeError(f"not a shape expression: {s!r}")

    def slice(self, segs, lo, hi):
        segs = list(segs)
        total = rank_poly(segs)
        # peel whole or partial segments off the front while lo is a known constant
        while segs:
            k = p_constant(lo)
            if k is None or k <= 0:
                break
            first = segs[0]
            r = p_constant(_seg_rank(first))
            if r is None:
                if len(segs) != 1:
                    break
                segs[0] = Opaque.make(first.base, p_add(_thaw(first.lo), lo), None if first.hi is None else _thaw(first.hi))
                hi, total, lo = p_add(hi, lo, -1), p_add(total, lo, -1), {}
                break
            if k >= r:
                segs.pop(0)
                lo, hi, total = p_const(k - r), p_add(hi, p_const(-r)), p_add(total, p_const(-r))
            else:
                segs[0] = Opaque.make(first.base, p_add(_thaw(first.lo), p_const(k)), None if first.hi is None else _thaw(first.hi))
                lo, hi, total = {}, p_add(hi, p_const(-k)), p_add(total, p_const(-k))
        if p_constant(lo) != 0:
            return self._opaque_slice(segs, lo, hi)
        # and off the back while the distance to the end is a known constant
        while segs:
            tail = p_constant(p_add(total, hi, -1))
            if tail is None or tail <= 0:
                break
            last = segs[-1]
            r = p_constant(_seg_rank(last))
            if r is None:
                if len(segs) != 1:
                    break
                end = p_atom(Rank(last.base)) if last.hi is None else _thaw(last.hi)
                segs[-1] = Opaque.make(last.base, _thaw(last.lo), p_add(end, p_const(-tail)))
                total = p_add(total, p_const(-tail))
                break
            if tail >= r:
                segs.pop()
                total = p_add(total, p_const(-r))
            else:
                end = p_atom(Rank(last.base)) if last.hi is None else _thaw(last.hi)
                segs[-1] = Opaque.make(last.base, _thaw(last.lo), p_add(end, p_const(-tail)))
                total = p_add(total, p_const(-tail))
        if p_constant(p_add(total, hi, -1)) == 0:
            return [self._tidy_opaque(s) for s in segs]
        if len(segs) == 1 and isinstance(segs[0], Opaque):
            s = segs[0]
            base_lo = _thaw(s.lo)
            return [self._tidy_opaque(Opaque.make(s.base, base_lo, p_add(base_lo, hi)))]
        return self._opaque_slice(segs, lo, hi)

    def _tidy_opaque(self, s):
        if not isinstance(s, Opaque) or s.hi is None:
            return s
        if _thaw(s.hi) == p_atom(Rank(s.base)):
            return Opaque(s.base, s.lo, None)
        return s

    def _opaque_slice(self, segs, lo, hi):
        if len(segs) == 1 and isinstance(segs[0], Opaque):
            s = segs[0]
            base_lo = _thaw(s.lo)
            return [self._tidy_opaque(Opaque.make(s.base, p_add(base_lo, lo), p_add(base_lo, hi)))]
        return [self._tidy_opaque(Opaque.make(from_segments(segs), lo, hi))]

    def index(self, segs, i):
        k = p_constant(i)
        if k is not None and k >= 0:
            for n, s in enumerate(segs):
                if not isinstance(s, Opaque):
                    if k == 0:
                        return s
                    k -= 1
                    continue
                r = p_constant(_seg_rank(s))
                if r is not None and k >= r:
                    k -= r
                    continue
                if r is not None or n == len(segs) - 1:
                    return p_atom(Index(s.base, from_poly(p_add(_thaw(s.lo), p_const(k)))))
                return p_atom(Index(from_segments(segs[n:]), Num(k)))
            return p_atom(Index(Shape(()), Num(k)))
        if len(segs) == 1 and isinstance(segs[0], Opaque):
            s = segs[0]
            return p_atom(Index(s.base, from_poly(p_add(_thaw(s.lo), i))))
        return p_atom(Index(from_segments(segs), from_poly(i)))

    def shape(self, s):
        return from_segments(self.segments(s))

    # -- booleans --

    def bool(self, b):
        t = type(b)
        if t is BoolVal or t is BoolVar:
            return b
        if t is Not:
            a = self.bool(b.arg)
            if type(a) is BoolVal:
                return BoolVal(not a.value)
            if type(a) is Not:
                return a.arg
            return Not(a)
        if t is And or t is Or:
            return self.junction(t, b.items)
        if t is Eq:
            return self.eq(b.lhs, b.rhs)
        if t is Lt:
            return self.lt(self.poly(b.lhs), self.poly(b.rhs))
        if t is Forall:
            lo, hi = self.num(b.lo), self.num(b.hi)
            if type(lo) is Num and type(hi) is Num and hi.value < lo.value:
                return TRUE
            inner = _Simplifier({k: v for k, v in self.ctx.items() if k != b.var})
            if type(lo) is Num and type(hi) is Num:
                inner.ctx[b.var] = Interval(lo.value, hi.value)
            body = inner.bool(b.body)
            if type(body) is BoolVal and body.value:
                return TRUE
            return Forall(b.var, lo, hi, body)
        raise TypeError(f"not a boolean expression: {b!r}")

    def junction(self, t, items, done=False):
        # done: items are already in simplified form
        unit, zero = (True, False) if t is And else (False, True)
        out, seen = [], set()
        stack = list(reversed(items))
        while stack:
            x = stack.pop()
            if not done:
                x = self.bool(x)
            if type(x) is t:
                stack.extend(reversed(x.items))
                continue
            if type(x) is BoolVal:
                if x.value == zero:
                    return BoolVal(zero)
                continue
            if x in seen:
                continue
            neg = x.arg if type(x) is Not else Not(x)
            if neg in seen:
                return BoolVal(zero)
            seen.add(x)
            out.append(x)
        if not out:
            return BoolVal(unit)
        return out[0] if len(out) == 1 else t(out)

    def eq(self, a, b):
        if a.sort == NUM:
            return self.num_eq(p_add(self.poly(a), self.poly(b), -1))
        if a.sort == BOOL:
            x, y = self.bool(a), self.bool(b)
            if x == y:
                return TRUE
            if type(x) is BoolVal and type(y) is BoolVal:
                return BoolVal(x.value == y.value)
            if type(y) is BoolVal:
                return x if y.value else self.bool(Not(x))
            if type(x) is BoolVal:
                return y if x.value else self.bool(Not(y))
            return Eq(x, y)
        return self.shape_eq(self.segments(a), self.segments(b))

    def shape_eq(self, sa, sb):
        dr = p_constant(p_add(rank_poly(sa), rank_poly(sb), -1))
        if dr is not None and dr != 0:
            return FALSE
        parts = []
        sa, sb = list(sa), list(sb)
        while sa and sb and not isinstance(sa[0], Opaque) and not isinstance(sb[0], Opaque):
            parts.append(self.num_eq(p_add(sa.pop(0), sb.pop(0), -1)))
        while sa and sb and not isinstance(sa[-1], Opaque) and not isinstance(sb[-1], Opaque):
            parts.append(self.num_eq(p_add(sa.pop(), sb.pop(), -1)))
        if sa != sb:
            if not sa or not sb:
                rest = sa or sb
                parts.append(self.num_eq(rank_poly(rest)))
            else:
                ra = rank_poly(sa)
                rb = rank_poly(sb)
                d = p_constant(p_add(ra, rb, -1))
                if d is not None and d != 0:
                    return FALSE
                parts.append(Eq(from_segments(sa), from_segments(sb)))
        return self.junction(And, parts, done=True)

    def num_eq(self, d):
        c = p_constant(d)
        if c is not None:
            return BoolVal(c == 0)
        iv = self.interval(d)
        if 0 not in iv:
            return FALSE
        if iv.lo == iv.hi == 0:
            return TRUE
        g_terms = 0
        for m, v in d.items():
            if m:
                g_terms = math.gcd(g_terms, v)
        if d.get((), 0) % g_terms:
            return FALSE
        g = math.gcd(g_terms, d.get((), 0))
        if g > 1:
            d = {m: v // g for m, v in d.items()}
        lead = min((m for m in d if m), key=_mono_key)
        if d[lead] < 0:
            d = p_scale(d, -1)
        return Eq(*_split(d))

    def lt(self, a, b):
        d = p_add(a, b, -1)
        c = p_constant(d)
        if c is not None:
            return BoolVal(c < 0)
        iv = self.interval(d)
        if iv.hi < 0:
            return TRUE
        if iv.lo >= 0:
            return FALSE
        # tighten: g*y + k < 0  <=>  y < ceil(-k / g)
        k = d.get((), 0)
        g = 0
        for m, v in d.items():
            if m:
                g = math.gcd(g, v)
        if g > 1:
            d = {m: v // g for m, v in d.items() if m}
            bound = -((k) // g)  # ceil(-k / g)
            if bound:
                d[()] = -bound
        return Lt(*_split(d))


def _split(d):
    pos = {m: c for m, c in d.items() if c > 0}
    neg = {m: -c for m, c in d.items() if c < 0}
    return from_poly(pos), from_poly(neg)


def _only_unknown_shapes(s):
    t = type(s)
    if t is ShapeVar:
        return True
    if t is Shape:
        return False
    if t is Slice:
        return _only_unknown_shapes(s.shape)
    if t is Concat:
        return _only_unknown_shapes(s.left) and _only_unknown_shapes(s.right)
    return False


# ----------------------------------------------------------------------------
# public API


def simplify(e, ctx: Mapping[Symbol, Interval] | None = None):
    """Return a semantically equivalent, normalised form of ``e``.

    ``ctx`` maps number symbols to intervals known to contain their value; it
    lets comparisons be decided and pins singleton symbols to constants.
    """
    s = _Simplifier(ctx)
    if isinstance(e, Constraint):
        return s.bool(e.formula)
    if isinstance(e, NumExpr):
        return s.num(e)
    if isinstance(e, ShapeExpr):
        return s.shape(e)
    if isinstance(e, BoolExpr):
        return s.bool(e)
    raise TypeError(f"cannot simplify {e!r}")


def tidy(formula, ctx=None):
    """Simplify the operands of each atom but keep the atoms themselves.

    Used for report text: ``(256, 1181) = (256, 4)`` stays readable instead of
    collapsing to ``false``.
    """
    s = _Simplifier(ctx)

    def go(b):
        t = type(b)
        if t is Eq:
            if b.lhs.sort == NUM:
                return Eq(s.num(b.lhs), s.num(b.rhs))
            if b.lhs.sort == SHAPE:
                return Eq(s.shape(b.lhs), s.shape(b.rhs))
            return Eq(go(b.lhs), go(b.rhs))
        if t is Lt:
            return Lt(s.num(b.lhs), s.num(b.rhs))
        if t is Not:
            return Not(go(b.arg))
        if t is And or t is Or:
            return t([go(x) for x in b.items])
        return b

    return go(formula.formula if isinstance(formula, Constraint) else formula)


def is_true(b):
    return type(b) is BoolVal and b.value


def is_false(b):
    return type(b) is BoolVal and not b.value


def linear_parts(e, ctx=None):
    """Return ``(coeffs, const)`` if ``e`` is linear over number symbols, else None."""
    p = _Simplifier(ctx).poly(e)
    coeffs = {}
    for m, c in p.items():
        if not m:
            continue
        if len(m) != 1:
            return None
        coeffs[m[0]] = c
    return coeffs, p.get((), 0)


# ----------------------------------------------------------------------------
# interval propagation


@dataclass(frozen=True, slots=True)
class _Atom:
    kind: str           # "le": poly <= 0, "eq": poly == 0, "ne": poly != 0
    poly: tuple         # frozen poly


@lru_cache(maxsize=1 << 14)
def _extract(formula):
    """Propagation atoms of one (simplified) hard formula."""
    out = []
    _collect_atoms(simplify(formula), out)
    return tuple(out)


def _collect_atoms(b, out):
    t = type(b)
    if t is And:
        for x in b.items:
            _collect_atoms(x, out)
        return
    s = _Simplifier({})
    if t is Eq and b.lhs.sort == NUM:
        out.append(_Atom("eq", _freeze(p_add(s.poly(b.lhs), s.poly(b.rhs), -1))))
    elif t is Lt:
        d = p_add(s.poly(b.lhs), s.poly(b.rhs), -1)
        out.append(_Atom("le", _freeze(p_add(d, {(): 1}))))
    elif t is Not and type(b.arg) is Lt:
        out.append(_Atom("le", _freeze(p_add(s.poly(b.arg.rhs), s.poly(b.arg.lhs), -1))))
    elif t is Not and type(b.arg) is Eq and b.arg.lhs.sort == NUM:
        out.append(_Atom("ne", _freeze(p_add(s.poly(b.arg.lhs), s.poly(b.arg.rhs), -1))))
    elif t is BoolVal and not b.value:
        out.append(_Atom("le", _freeze({(): 1})))


class Infeasible(Exception):
    pass


def _ceil_div(a, c):
    if a in (INF, -INF):
        return a if c > 0 else -a
    return -((-a) // c)


def _floor_div(a, c):
    if a in (INF, -INF):
        return a if c > 0 else -a
    return a // c


def _narrow_atoms(atoms, ctx, rounds=64):
    ctx = dict(ctx)
    for _ in range(rounds):
        changed = False
        for at in atoms:
            p = _thaw(at.poly)
            sim = _Simplifier(ctx)
            if at.kind == "ne":
                if len(p) <= 2 and all(len(m) <= 1 for m in p):
                    terms = [m for m in p if m]
                    if len(terms) == 1 and type(terms[0][0]) is NumVar:
                        c = p[terms[0]]
                        k = p.get((), 0)
                        if (-k) % c == 0:
                            v = (-k) // c
                            sym = terms[0][0].sym
                            iv = ctx.get(sym, TOP)
                            if iv.lo == v == iv.hi:
                                raise Infeasible
                            if iv.lo == v:
                                ctx[sym] = Interval(v + 1, iv.hi)
                                changed = True
                            elif iv.hi == v:
                                ctx[sym] = Interval(iv.lo, v - 1)
                                changed = True
                continue
            whole = sim.interval(p)
            if at.kind == "le" and whole.lo > 0:
                raise Infeasible
            if at.kind == "eq" and 0 not in whole:
                raise Infeasible
            for m, c in p.items():
                if len(m) != 1 or type(m[0]) is not NumVar:
                    continue
                sym = m[0].sym
                rest = dict(p)
                del rest[m]
                r = sim.interval(rest)
                iv = ctx.get(sym, TOP)
                # c*x + rest <= 0  or  == 0
                if at.kind == "le":
                    bound = -r.lo  # c*x <= -rest.lo
                    if c > 0:
                        new = Interval(iv.lo, min(iv.hi, _floor_div(bound, c))) if iv.lo <= _floor_div(bound, c) else None
                    else:
                        nb = _ceil_div(bound, c)
                        new = Interval(max(iv.lo, nb), iv.hi) if nb <= iv.hi else None
                else:
                    lo_t, hi_t = -r.hi, -r.lo  # c*x in [lo_t, hi_t]
                    if c > 0:
                        lo, hi = _ceil_div(lo_t, c), _floor_div(hi_t, c)
                    else:
                        lo, hi = _ceil_div(hi_t, c), _floor_div(lo_t, c)
                    lo, hi = max(iv.lo, lo), min(iv.hi, hi)
                    new = Interval(lo, hi) if lo <= hi else None
                if new is None:
                    raise Infeasible
                if new != iv:
                    ctx[sym] = new
                    sim = _Simplifier(ctx)
                    changed = True
        if not changed:
            break
    return ctx


def propagate(constraints: Iterable, start: Mapping[Symbol, Interval] | None = None):
    """Interval bounds implied by the hard constraints, or None if they are infeasible.

    Accepts Constraints (only hard ones are used) or bare boolean formulas. The
    result over-approximates: every satisfying assignment lies inside it.
    """
    atoms = []
    for c in constraints:
        if isinstance(c, Constraint):
            if not c.is_hard:
                continue
            c = c.formula
        atoms.extend(_extract(c))
    try:
        return _narrow_atoms(atoms, start or {})
    except Infeasible:
        return None


# ----------------------------------------------------------------------------
# online check


RECORD = "record"
TRIVIALLY_TRUE = "triviallyTrue"
IMMEDIATE_FAIL = "immediateFail"
RESOLVED_BRANCH = "resolvedBranch"


@dataclass(frozen=True, slots=True)
class Disposition:
    kind: str
    value: bool | None = None
    simplified: BoolExpr | None = None


def online_check(state, c: Constraint, branch=False):
    """Classify a constraint against the path's current interval knowledge.

    ``state`` is anything with an ``intervals`` mapping (a symbolic-execution
    path state). With ``branch=True`` the formula is a branch condition, and a
    constant result becomes ``resolvedBranch``.
    """
    ctx = getattr(state, "intervals", None) or {}
    s = simplify(c.formula, ctx)
    if type(s) is BoolVal:
        if branch:
            return Disposition(RESOLVED_BRANCH, s.value, s)
        return Disposition(TRIVIALLY_TRUE if s.value else IMMEDIATE_FAIL, s.value, s)
    return Disposition(RECORD, None, s)
