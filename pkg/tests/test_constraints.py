import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import ExprGen
from shapecheck.constraints import (
    HARD, NUM, SHAPE, BinOp, Concat, Constraint, ConstraintSet, Eq, Forall, Index, Lt, Num, NumVar,
    Prod, Rank, Shape, ShapeVar, Slice, Symbol, concrete_eval, free_symbols, pretty, substitute,
    to_sexpr,
)
from shapecheck.errors import DivisionByZero, IndexOutOfRange, ShapeCheckError, SortMismatch
from shapecheck.source import SourcePos

a = Symbol(1, NUM, "a")
k = Symbol(2, NUM, "k")
S = Symbol(3, SHAPE, "S")


def outcome(e, env):
    try:
        return "ok", concrete_eval(e, env)
    except ShapeCheckError as ex:
        return "err", type(ex)


def test_substitute_number():
    assert substitute(NumVar(a) + 1, {a: Num(2)}) == BinOp("+", Num(2), Num(1))


def test_substitute_shape_symbol():
    assert substitute(Rank(ShapeVar(S)), {S: Shape((3, 4))}) == Rank(Shape((3, 4)))


def test_substitute_leaves_unbound_symbols():
    e = NumVar(a) * NumVar(k)
    assert substitute(e, {a: Num(5)}) == BinOp("*", Num(5), NumVar(k))


def test_substitute_rejects_wrong_sort():
    with pytest.raises(SortMismatch):
        substitute(NumVar(a), {a: Shape((1,))})


def test_forall_binder_is_not_captured():
    # forall k in [0, 2]. k < a, then a := k + 1 where k is the (outer) free k
    f = Forall(k, Num(0), Num(2), Lt(NumVar(k), NumVar(a)))
    g = substitute(f, {a: NumVar(k) + 1})
    assert free_symbols(g) == {k}
    for outer in range(-3, 6):
        expected = all(j < outer + 1 for j in range(0, 3))
        assert concrete_eval(g, {k: outer}) is expected


def test_forall_binder_is_not_replaced():
    f = Forall(k, Num(0), Num(3), Lt(NumVar(k), Num(10)))
    assert substitute(f, {k: Num(100)}) == f


def test_free_symbols():
    assert free_symbols(Shape((NumVar(a), 3))) == {a}
    assert free_symbols(Forall(k, Num(0), Num(5), Lt(NumVar(k), NumVar(a)))) == {a}
    assert free_symbols(Num(7)) == set()


def test_concrete_eval_examples():
    assert concrete_eval(Prod(Shape((2, 3, 4)))) == 24
    assert concrete_eval(Slice(Shape((2, 3, 4)), Num(1), Num(3))) == (3, 4)
    with pytest.raises(IndexOutOfRange):
        concrete_eval(Index(Shape((2, 3, 4)), Num(3)))


def test_floor_semantics():
    assert concrete_eval(Num(-7) // 2) == -4
    assert concrete_eval(Num(-7) % 2) == 1
    assert concrete_eval(Num(7) % -2) == -1
    with pytest.raises(DivisionByZero):
        concrete_eval(Num(1) % 0)


def test_slice_does_not_clamp():
    with pytest.raises(IndexOutOfRange):
        concrete_eval(Slice(Shape((2, 3)), Num(1), Num(3)))
    with pytest.raises(IndexOutOfRange):
        concrete_eval(Slice(Shape((2, 3)), Num(2), Num(1)))


def test_eq_requires_same_sort():
    with pytest.raises(SortMismatch):
        Eq(NumVar(a), ShapeVar(S))


def test_sexpr_text():
    e = Eq(Index(ShapeVar(S), Num(0)), NumVar(a) % 64)
    assert to_sexpr(e) == "(= (dim s3_S 0) (% s1_a 64))"
    assert pretty(Eq(Shape((256, 1181)), Shape((256, 4)))) == "(256, 1181) = (256, 4)"


def test_constraint_set_split_and_union():
    pos = SourcePos("t.tsl", 1, 1)
    c = [Constraint(Lt(Num(i), NumVar(a)), HARD if i % 2 else "soft", i, pos) for i in range(6)]
    left = ConstraintSet([c[0], c[2], c[4]])
    right = ConstraintSet([c[1], c[3], c[5]])
    both = left.union(right)
    assert [x.gen_index for x in both] == list(range(6))
    assert [x.gen_index for x in both.hard()] == [1, 3, 5]
    assert [x.gen_index for x in both.soft()] == [0, 2, 4]


def test_constraint_kind_is_checked():
    with pytest.raises(ValueError):
        Constraint(Lt(Num(0), Num(1)), "maybe")


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 10**6))
def test_substitution_then_evaluation(seed):
    g = ExprGen(seed)
    e = g.any()
    env = g.assignment()
    first = {s: v for i, (s, v) in enumerate(sorted(env.items())) if i % 2 == 0}
    rest = {s: v for s, v in env.items() if s not in first}
    binding = {s: (Num(v) if s.sort == NUM else Shape(v)) for s, v in first.items()}
    assert outcome(substitute(e, binding), rest) == outcome(e, env)


shapes = st.lists(st.integers(0, 9), max_size=5).map(tuple)


@given(shapes, shapes)
def test_concat_slice_algebra(s1, s2):
    x, y = Shape(s1), Shape(s2)
    assert concrete_eval(Rank(Concat(x, y))) == len(s1) + len(s2)
    assert concrete_eval(Slice(Concat(x, y), Num(0), Rank(x))) == s1
    assert concrete_eval(Prod(Concat(x, y))) == concrete_eval(Prod(x)) * concrete_eval(Prod(y))
    assert concrete_eval(Slice(x, Num(0), Rank(x))) == s1


@given(shapes, shapes)
def test_concat_slice_algebra_symbolic(s1, s2):
    s1v, s2v = Symbol(10, SHAPE, "p"), Symbol(11, SHAPE, "q")
    env = {s1v: s1, s2v: s2}
    x, y = ShapeVar(s1v), ShapeVar(s2v)
    assert concrete_eval(Slice(Concat(x, y), Rank(x), Rank(Concat(x, y))), env) == s2
