import random

import pytest

from shape_reference import (
    GENERATORS, ORIGIN, REJECT, RULE_NAMES, differential, normalize, run_case,
)
from shapecheck.constraints import (
    HARD, NUM, SOFT, BoolVal, Constraint, NumVar, Shape, Symbol, SymbolSource, concrete_eval,
    free_symbols, lt,
)
from shapecheck.errors import MultipleInferredDims, UnknownOp
from shapecheck.shapeops import CATALOG, catalog_lookup, catalog_markdown
from shapecheck.simplify import simplify
from shapecheck.solver import INVALID, UNREACHABLE, VALID, analyze_path, holds
from shapecheck.values import Tensor

B = Symbol(1, NUM, "B")
N = Symbol(2, NUM, "N")
b = Symbol(3, NUM, "b")


def T(*dims):
    return Tensor(Shape(dims))


def apply(name, *args, **kwargs):
    return catalog_lookup(name).apply(list(args), kwargs, fresh=SymbolSource(100), origin=ORIGIN)


def ground(value):
    return normalize(value, {})


def all_hold(emitted, kind=SOFT, env=None):
    return all(holds(c.formula, env or {}) for c in emitted if c.kind == kind)


def verdict(emitted):
    cs = [c.__class__(c.formula, c.kind, i, c.origin, c.op_name) for i, c in enumerate(emitted)]
    return analyze_path(cs)


# -- examples --


def test_mm():
    v, cs = apply("mm", T(3, 4), T(4, 5))
    assert ground(v) == (3, 5) and all_hold(cs)
    v, cs = apply("mm", T(3, 5), T(4, 5))
    assert ground(v) == (3, 5) and not all_hold(cs)
    assert verdict(cs).kind == INVALID
    v, cs = apply("mm", T(1, 1), T(1, 1))
    assert ground(v) == (1, 1) and all_hold(cs)


def test_reshape():
    v, cs = apply("reshape", T(16, 1, 28, 28), 16, -1)
    assert ground(v) == (16, 784) and all_hold(cs)
    v, cs = apply("reshape", T(3, 28, 28), 784)
    assert not all_hold(cs)
    assert any(simplify(c.formula) == BoolVal(False) for c in cs)


def test_reshape_of_symbolic_vector_is_valid():
    a = Symbol(4, NUM, "a")
    v, cs = apply("reshape", Tensor(Shape((NumVar(a),))), NumVar(a))
    assert v.shape == Shape((NumVar(a),))
    # the product equality folds away; what is left is positivity of the target dim
    assert all(simplify(c.formula) != BoolVal(False) for c in cs)
    dim_fact = Constraint(lt(0, NumVar(a)), HARD, -1)
    assert verdict([dim_fact] + cs).kind == VALID


def test_reshape_with_two_inferred_dims():
    with pytest.raises(MultipleInferredDims):
        apply("reshape", T(4, 4), -1, -1)


def test_transpose():
    assert ground(apply("transpose", T(2, 3, 4), 0, 2)[0]) == (4, 3, 2)
    assert ground(apply("transpose", T(2, 3), 0, 1)[0]) == (3, 2)
    _, cs = apply("transpose", T(2, 3), 1, 1)
    assert not all_hold(cs)


def test_read_image_channels_are_bounded():
    v, cs = apply("read_image")
    c, h, w = v.shape.dims
    assert {x.kind for x in cs} == {HARD}
    ok = [n for n in range(-2, 8) if all_hold(cs, HARD, {c.sym: n, h.sym: 5, w.sym: 5})]
    assert ok == [1, 2, 3, 4]


def test_color_image_into_flat_reshape():
    img, cs = apply("read_image")
    _, more = apply("reshape", img, 784)
    v = verdict(cs + more)
    assert v.kind == INVALID
    c = img.shape.dims[0].sym
    h, w = img.shape.dims[1].sym, img.shape.dims[2].sym
    assert v.model[c] * v.model[h] * v.model[w] != 784


def test_monochrome_image_into_flat_reshape():
    img, cs = apply("read_image")
    mono, c2 = apply("convert_monochrome", img)
    assert ground_dim(mono, 0) == 1
    _, c3 = apply("reshape", mono, 784)
    h, w = img.shape.dims[1].sym, img.shape.dims[2].sym
    soft = [c for c in c2 + c3 if c.kind == SOFT]
    for hv, wv in [(28, 28), (1, 784), (28, 29), (3, 5)]:
        env = {img.shape.dims[0].sym: 3, h: hv, w: wv}
        assert all(holds(c.formula, env) for c in soft) == (hv * wv == 784)
    assert verdict(cs + c2 + c3).kind == INVALID  # some image size is not 28 x 28


def ground_dim(t, i):
    return concrete_eval(simplify(t.shape.dims[i]))


def test_randint():
    n, cs = apply("randint", 0, 1)
    assert [m for m in range(-3, 4) if all_hold(cs, HARD, {n.sym: m})] == [0, 1]
    n, cs = apply("randint", 5, 5)
    assert [m for m in range(0, 10) if all_hold(cs, HARD, {n.sym: m})] == [5]
    n, cs = apply("randint", 1, 0)
    assert verdict(cs).kind == UNREACHABLE


def test_broadcast():
    v, cs = apply("broadcast", T(8, 1, 5), T(8, 4, 5))
    assert ground(v) == (8, 4, 5) and all_hold(cs)
    v, cs = apply("add", T(4, 5), T(4, 5))
    assert ground(v) == (4, 5) and all_hold(cs)
    _, cs = apply("broadcast", T(3, 4), T(5, 4))
    assert not all_hold(cs)


def test_nll_loss():
    _, cs = apply("nll_loss", T(256, 4, 1181), T(256, 4))
    assert not all_hold(cs)
    v, cs = apply("nll_loss", T(1024, 1181), T(1024))
    assert ground(v) == () and all_hold(cs)
    v, cs = apply("nll_loss", T(1, 2), T(1))
    assert all_hold(cs)


def test_conv2d():
    v, cs = apply("conv2d", T(16, 1, 28, 28), 1, 32, 3)
    assert ground(v) == (16, 32, 26, 26) and all_hold(cs)
    _, cs = apply("conv2d", T(16, 3, 28, 28), 1, 32, 3)
    assert not all_hold(cs)
    v, cs = apply("conv2d", T(2, 3, 7, 7), 3, 8, 7)
    assert ground(v) == (2, 8, 1, 1) and all_hold(cs)


def test_cat():
    assert ground(apply("cat", [T(2, 3), T(2, 5)], dim=1)[0]) == (2, 8)
    zb = Tensor(Shape((NumVar(B), NumVar(N))))
    v, cs = apply("cat", [zb, zb], dim=0)
    env = {B: 7, N: 3}
    assert concrete_eval(v.shape, env) == (14, 3)
    assert all_hold(cs, SOFT, env)
    assert ground(apply("cat", [T(3)], dim=0)[0]) == (3,)


def test_lookup():
    assert catalog_lookup("mm").name == "mm"
    assert catalog_lookup("view") is catalog_lookup("reshape")
    with pytest.raises(UnknownOp):
        catalog_lookup("frobnicate")


def test_diag_offset_constraint():
    two_b = NumVar(B) * 2
    sim = Tensor(Shape((two_b, two_b)))
    _, cs = apply("diag", sim, NumVar(b))
    soft = [c for c in cs if c.kind == SOFT]
    assert soft
    # -2B <= b <= 2B, checked pointwise
    for bv in range(1, 5):
        for off in range(-12, 13):
            env = {B: bv, b: off}
            assert all(holds(c.formula, env) for c in soft) == (-2 * bv <= off <= 2 * bv)


def test_catalog_table_lists_every_rule():
    table = catalog_markdown()
    for r in CATALOG.rules:
        assert f"`{r.name}`" in table
    assert len(CATALOG.rules) >= 34


# -- differential testing against reference shape functions --


def test_every_rule_has_a_reference():
    assert sorted(GENERATORS) == sorted(RULE_NAMES)


@pytest.mark.parametrize("name", RULE_NAMES)
def test_rule_matches_reference(name):
    problems, counts = differential(name, 1000)
    assert problems == []
    assert counts["accepted"] > 0


@pytest.mark.parametrize("name", RULE_NAMES)
def test_conformant_ground_inputs_emit_only_true_constraints(name):
    rng = random.Random(name)
    seen = 0
    for _ in range(300):
        case = GENERATORS[name](rng)
        out = run_case(name, case, rng)
        if out.ours == REJECT or any(free_symbols(c.formula) for c in out.emitted):
            continue
        if out.expected == out.ours:
            seen += 1
            for c in out.emitted:
                assert simplify(c.formula) == BoolVal(True), (name, case.args, c)
    if name not in ("read_image", "randint", "item"):
        assert seen > 0


@pytest.mark.parametrize("name", RULE_NAMES)
def test_apply_is_deterministic(name):
    rng = random.Random(name + "/det")
    for _ in range(50):
        case = GENERATORS[name](rng)
        rule = catalog_lookup(name)
        try:
            first = rule.apply(case.args, dict(case.kwargs), fresh=SymbolSource(9), origin=ORIGIN)
        except MultipleInferredDims:
            continue
        second = rule.apply(case.args, dict(case.kwargs), fresh=SymbolSource(9), origin=ORIGIN)
        assert first == second
