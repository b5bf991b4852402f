import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import ConstraintGen, ground_holds, verdict_problems
from shapecheck.constraints import (
    HARD, NUM, SHAPE, SOFT, FALSE, And, Constraint, Eq, Forall, Index, Lt, Num, NumVar, Shape,
    ShapeVar, Symbol, between, eq, lt, ne,
)
from shapecheck.errors import UnresolvedRank
from shapecheck.solver import (
    DONTKNOW, INVALID, SAT, UNKNOWN, UNREACHABLE, UNSAT, VALID, Budget, PathVerdict, analyze_path,
    analyze_paths, check_sat, elaborate, emit_smtlib, holds, summarize,
)
from shapecheck.source import SourcePos

a = Symbol(1, NUM, "a")
b = Symbol(2, NUM, "b")
c = Symbol(3, NUM, "channels")
N = Symbol(4, NUM, "N")
R = Symbol(5, NUM, "R")
S = Symbol(6, SHAPE, "S")


def hard(f, i):
    return Constraint(f, HARD, i)


def soft(f, i, op=None):
    return Constraint(f, SOFT, i, SourcePos("t.tsl", i + 1, 1), op)


# -- elaboration --


def test_pointwise_shape_equality():
    el = elaborate([soft(Eq(Shape((NumVar(a), 3)), Shape((2, NumVar(b)))), 0)])
    f = el.soft[0][1]
    assert f == And((eq(NumVar(a), 2), eq(3, NumVar(b))))


def test_ground_mismatch_elaborates_to_false_atom():
    el = elaborate([soft(Eq(Shape((256, 1181)), Shape((256, 4))), 0)])
    f = el.soft[0][1]
    assert not holds(f, {})
    assert eq(1181, 4) in f.items


def test_rank_mismatch_is_false():
    el = elaborate([soft(Eq(Shape((1, 2)), Shape((1, 2, 3))), 0)])
    assert not holds(el.soft[0][1], {})


def test_unresolved_rank():
    with pytest.raises(UnresolvedRank):
        elaborate([soft(Eq(ShapeVar(S), Shape((2, 3))), 0)])
    v = analyze_path([soft(Eq(ShapeVar(S), Shape((2, 3))), 0)])
    assert v.kind == DONTKNOW and "rank" in v.reason


def test_shape_symbol_with_known_rank():
    cs = [hard(Eq(ShapeVar(S), Shape((NumVar(a), NumVar(b)))), 0),
          hard(between(1, NumVar(a), 3), 1), hard(between(1, NumVar(b), 3), 2),
          soft(lt(Index(ShapeVar(S), Num(1)), 3), 3)]
    v = analyze_path(cs)
    assert v.kind == INVALID
    assert v.model[b] == 3


def test_atom_map_keeps_provenance():
    c0 = soft(eq(NumVar(a), 1), 0, "mm")
    el = elaborate([hard(between(0, NumVar(a), 4), 1), c0])
    assert el.atom_map[el.soft[0][1]] is c0


# -- check_sat --


def test_contradiction_is_unsat():
    assert check_sat(And((eq(NumVar(a), 1), eq(NumVar(a), 2)))).status == UNSAT


def test_channel_counterexample():
    r = check_sat(And((between(1, NumVar(c), 4), ne(NumVar(c), 1))))
    assert r.status == SAT and r.model[c] in (2, 3, 4)
    assert r.model[c] == 2  # smallest model


def test_residual_cannot_equal_batch():
    f = And((Eq(NumVar(N) % 64, NumVar(R)), lt(0, NumVar(R)), lt(NumVar(R), 64), eq(NumVar(R), 64)))
    assert check_sat(f).status == UNSAT
    # enumeration over small N agrees
    assert not any(n % 64 == 64 for n in range(0, 1000))


def test_bounded_symbol_is_pinned_before_unbounded_one():
    # R is bounded by N % 256; once R is fixed, 3072*R % R folds to 0 and
    # the unbounded N never needs enumerating
    f = And((lt(0, NumVar(N)), Eq(NumVar(N) % 256, NumVar(R)), lt(0, NumVar(R)),
             ne((NumVar(R) * 3072) % NumVar(R), 0)))
    t0 = time.monotonic()
    assert check_sat(f).status == UNSAT
    assert time.monotonic() - t0 < 2.0


def test_unbounded_search_finds_far_model():
    r = check_sat(eq(NumVar(a) * 3, 300))
    assert r.status == SAT and r.model[a] == 100


def test_wide_forall_is_unknown():
    k = Symbol(50, NUM, "k")
    f = Forall(k, Num(0), Num(5000), Lt(NumVar(k), NumVar(a)))
    assert check_sat(And((between(0, NumVar(a), 9000), f))).status == UNKNOWN


def test_small_forall_is_expanded():
    k = Symbol(50, NUM, "k")
    f = Forall(k, Num(0), Num(5), Lt(NumVar(k), NumVar(a)))
    r = check_sat(And((between(0, NumVar(a), 10), f)))
    assert r.status == SAT and r.model[a] == 6


def test_tuple_budget_gives_unknown():
    x, y, z = (Symbol(i, NUM, n) for i, n in ((10, "x"), (11, "y"), (12, "z")))
    f = And((between(0, NumVar(x), 200), between(0, NumVar(y), 200), between(0, NumVar(z), 200),
             eq(NumVar(x) * NumVar(y) * NumVar(z) % 7919, 7918)))
    assert check_sat(f, Budget(max_tuples=1000)).status == UNKNOWN


def test_time_budget_is_respected():
    x, y, z = (Symbol(i, NUM, n) for i, n in ((10, "x"), (11, "y"), (12, "z")))
    f = And((between(0, NumVar(x), 300), between(0, NumVar(y), 300), between(0, NumVar(z), 300),
             eq((NumVar(x) * NumVar(y) * NumVar(z)) % 1000003, 999999)))
    t0 = time.perf_counter()
    r = check_sat(f, Budget(timeout=0.2, max_tuples=10**9))
    assert r.status in (UNKNOWN, SAT)
    assert time.perf_counter() - t0 < 2.0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_sat_models_satisfy_formula(seed):
    g = ConstraintGen(seed)
    f = And([x.formula for x in g.constraint_set()])
    el = elaborate([hard(f, 0)])
    r = check_sat(el.H)
    if r.status == SAT:
        assert holds(el.H, r.model)
        assert ground_holds(f, {s: r.model.get(s, 0) for s in g.windows})


# -- analyze_path --


def test_no_constraints_is_valid():
    assert analyze_path([]).kind == VALID


def test_reshape_of_color_image_is_invalid():
    cs = [hard(between(1, NumVar(c), 4), 0), soft(eq(NumVar(c) * 784, 784), 1, "reshape")]
    v = analyze_path(cs)
    assert v.kind == INVALID
    assert v.model[c] in (2, 3, 4)
    assert v.first_violation.op_name == "reshape"


def test_unreachable_takes_precedence():
    cs = [hard(eq(NumVar(a), 1), 0), hard(eq(NumVar(a), 2), 1), soft(FALSE, 2)]
    assert analyze_path(cs).kind == UNREACHABLE


def test_first_violation_is_earliest_broken():
    cs = [hard(between(0, NumVar(a), 5), 0),
          soft(lt(NumVar(a), 10), 1),
          soft(lt(NumVar(a), 3), 2),
          soft(lt(NumVar(a), 2), 3)]
    v = analyze_path(cs)
    assert v.kind == INVALID
    broken = [x.gen_index for x in cs if x.kind == SOFT and not holds(x.formula, v.model)]
    assert v.first_violation.gen_index == min(broken)


def test_evaluation_error_breaks_a_soft_constraint():
    cs = [hard(between(0, NumVar(a), 3), 0), soft(eq(Num(6) % NumVar(a), 0), 1)]
    v = analyze_path(cs)
    assert v.kind == INVALID
    assert v.model[a] in (0, 1, 2, 3) and not holds(cs[1].formula, v.model)


def test_index_guard():
    cs = [hard(between(0, NumVar(a), 4), 0), soft(eq(Index(Shape((5, 5, 5)), NumVar(a)), 5), 1)]
    v = analyze_path(cs)
    assert v.kind == INVALID and v.model[a] in (3, 4)


def test_paths_in_parallel_match_serial():
    sets = []
    for seed in range(12):
        g = ConstraintGen(seed)
        sets.append(g.constraint_set())
    assert analyze_paths(sets, jobs=3) == analyze_paths(sets, jobs=1)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_agrees_with_enumeration(seed):
    g = ConstraintGen(seed)
    cs = g.constraint_set()
    assert verdict_problems(cs, g.windows, analyze_path(cs)) == []


# -- summarize --


def verdict(kind, gen_index=0):
    fv = soft(FALSE, gen_index) if kind == INVALID else None
    return PathVerdict(kind, {} if fv else None, fv)


def test_summaries():
    assert summarize([verdict(VALID), verdict(UNREACHABLE)]).kind == "no-error"
    s = summarize([verdict(VALID), verdict(INVALID)])
    assert s.kind == "error" and s.order == (1,)
    assert summarize([verdict(DONTKNOW)]).kind == "inconclusive"


def test_summary_order():
    vs = [verdict(DONTKNOW), verdict(INVALID, 9), verdict(VALID), verdict(INVALID, 4)]
    s = summarize(vs)
    assert s.kind == "error" and s.order == (3, 1, 0)


# -- SMT-LIB export --


def test_empty_script():
    assert emit_smtlib([]) == "(check-sat)\n"


def test_script_shape():
    text = emit_smtlib([hard(between(1, NumVar(a), 4), 0), soft(eq(NumVar(a), 1), 1)])
    assert text.startswith("(set-logic QF_NIA)\n")
    assert "(declare-const s1_a Int)" in text
    assert text.rstrip().endswith("(check-sat)\n(get-model)")


def test_script_is_deterministic():
    g = ConstraintGen(7)
    cs = g.constraint_set()
    assert emit_smtlib(cs) == emit_smtlib(cs)
