from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapecheck.errors import MissingArgument, NonConstantLoopBound, ParseError, RecursionCycleError
from shapecheck.surface import ir, lower, parse_source, to_source
from shapecheck.surface.parser import KEYWORDS
from shapecheck.surface.ast import (
    Assign, Attr, AugAssign, BinExpr, BoolLit, CallExpr, Compare, ExprStmt, FloatLit, For,
    FunctionDef, Global, If, IntLit, ListExpr, Name, NoneLit, Param, Pass, Program, Return,
    SliceExpr, StrLit, Subscript, TupleExpr, UnaryExpr,
)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

NAMES = ["x", "y", "z", "out", "batch", "n_in", "w2"]
CALLEES = [Name("g"), Attr(Name("F"), "relu"), Attr(Attr(Name("torch"), "nn"), "zeros")]

names = st.sampled_from(NAMES)
leaves = st.one_of(
    names.map(Name),
    st.integers(0, 10**6).map(IntLit),
    st.sampled_from(["0.5", "1e-3", "2.0"]).map(FloatLit),
    st.booleans().map(BoolLit),
    st.just(NoneLit()),
    st.text("abc/._", max_size=6).map(StrLit),
)


def _compound(inner):
    small = st.lists(inner, max_size=3).map(tuple)
    slice_part = st.builds(SliceExpr, st.none() | inner, st.none() | inner, st.none() | inner)
    return st.one_of(
        st.builds(BinExpr, st.sampled_from(["+", "-", "*", "//", "%", "@", "and", "or"]), inner, inner),
        st.lists(st.tuples(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), inner),
                 min_size=1, max_size=2).flatmap(
            lambda gaps: inner.map(lambda first: Compare(first, tuple(o for o, _ in gaps),
                                                         tuple(x for _, x in gaps)))),
        st.builds(UnaryExpr, st.sampled_from(["-", "not"]), inner),
        st.builds(CallExpr, st.sampled_from(CALLEES), small,
                  st.lists(st.tuples(st.sampled_from(["stride", "dim"]), inner), max_size=1).map(tuple)),
        st.builds(Attr, inner, st.sampled_from(["shape", "T"])),
        st.builds(Subscript, inner, st.one_of(inner, slice_part,
                                              st.lists(inner | slice_part, min_size=1, max_size=3)
                                              .map(tuple).map(TupleExpr))),
        small.map(TupleExpr),
        small.map(ListExpr),
    )


exprs = st.recursive(leaves, _compound, max_leaves=12)
targets = names.map(Name) | st.lists(names.map(Name), min_size=1, max_size=3).map(tuple).map(TupleExpr)


def _stmts(in_function):
    simple = st.one_of(
        st.builds(Assign, targets, exprs),
        st.builds(AugAssign, names, st.sampled_from(["+", "-", "*", "//", "%"]), exprs),
        st.builds(ExprStmt, exprs),
        st.just(Pass()),
    )
    if in_function:
        simple = simple | st.builds(Return, st.none() | exprs) | st.builds(
            Global, st.lists(names, min_size=1, max_size=2, unique=True).map(tuple))

    def nest(inner):
        body = st.lists(inner, min_size=1, max_size=3).map(tuple)
        return st.builds(If, exprs, body, st.lists(inner, max_size=2).map(tuple)) | st.builds(
            For, targets, exprs, body)

    return st.recursive(simple, nest, max_leaves=6)


@st.composite
def programs(draw):
    n = draw(st.integers(0, 2))
    funcs = []
    for i in range(n):
        plain = draw(st.lists(names, max_size=2, unique=True))
        params = [Param(p) for p in plain]
        if draw(st.booleans()):
            params.append(Param("opt", draw(exprs)))
        body = tuple(draw(st.lists(_stmts(True), min_size=1, max_size=3)))
        funcs.append(FunctionDef(f"fn{i}", tuple(params), body))
    entry = tuple(draw(st.lists(_stmts(False), max_size=4)))
    return Program(tuple(funcs), entry)


@settings(max_examples=200, deadline=None)
@given(programs())
def test_print_then_parse_is_identity(p):
    text = to_source(p)
    back = parse_source(text, "gen.tsl")
    assert back == p
    assert to_source(back) == text


def test_minimal_assignment():
    p = parse_source("x = 1 + 2\n", "a.tsl")
    assert p.entry == (Assign(Name("x"), BinExpr("+", IntLit(1), IntLit(2))),)
    d = lower(p)
    assert d.body == ir.Let("x", ir.BinOp("+", ir.IntConst(1), ir.IntConst(2)), ir.Seq(()))


def test_positions_are_one_based_and_point_into_text():
    text = "def f(a):\n    return a\ny = f(3)\n"
    p = parse_source(text, "pos.tsl")
    call = p.entry[0].value
    assert (call.pos.line, call.pos.column) == (3, 5)
    assert call.pos.file == "pos.tsl"
    line = text.splitlines()[call.pos.line - 1]
    assert line[call.pos.column - 1:].startswith("f(3)")


def test_every_ir_node_has_a_position():
    text = (CORPUS / "fig2_mnist.tsl").read_text()
    d = lower(parse_source(text, "fig2_mnist.tsl"), {"epochs": 1})
    missing = [n for n in ir.walk(d.body) if n.pos is None]
    assert not missing


def test_training_script_shape():
    p = parse_source((CORPUS / "fig2_mnist.tsl").read_text(), "fig2_mnist.tsl")
    assert p.functions
    d = lower(p, {"epochs": 1})
    loops = [n for n in ir.walk(d) if isinstance(n, (ir.ForRange, ir.ForDataset))]
    assert any(isinstance(n, ir.ForRange) and n.hi == ir.IntConst(1) for n in loops)
    assert any(isinstance(n, ir.ForDataset) for n in loops)


def test_direct_recursion_is_rejected():
    with pytest.raises(RecursionCycleError) as ex:
        parse_source("def f():\n    return f()\n")
    assert ex.value.cycle == ["f", "f"]


def test_mutual_recursion_is_rejected():
    with pytest.raises(RecursionCycleError):
        parse_source("def f():\n    return g()\n\ndef g():\n    return f()\n")


def test_all_syntax_errors_are_listed():
    with pytest.raises(ParseError) as ex:
        parse_source("x = = 1\ny = (\n")
    lines = [pos.line for pos, _ in ex.value.errors]
    assert 1 in lines and 2 in lines


def test_cli_argument_becomes_loop_bound():
    d = lower(parse_source("for i in range(args.epochs):\n    x = i\n"), {"epochs": 1})
    assert isinstance(d.body, ir.ForRange)
    assert d.body.hi == ir.IntConst(1)


def test_missing_argument():
    with pytest.raises(MissingArgument) as ex:
        lower(parse_source("for i in range(args.n):\n    pass\n"))
    assert ex.value.name == "n"


def test_non_constant_loop_bound():
    with pytest.raises(NonConstantLoopBound) as ex:
        lower(parse_source("for i in range(n):\n    pass\n"))
    assert ex.value.pos.line == 1


def test_empty_program_lowers_to_empty_sequence():
    assert lower(parse_source("", "e.tsl")).body == ir.Seq(())


def test_crlf_accepted():
    a = parse_source("x = 1\r\ny = x\r\n")
    b = parse_source("x = 1\ny = x\n")
    assert a == b


def test_lowering_is_deterministic():
    text = (CORPUS / "fig3b_residual.tsl").read_text()
    assert lower(parse_source(text)) == lower(parse_source(text))


def test_greater_than_keeps_operand_order():
    d = lower(parse_source("y = a > b\n"))
    bound = d.body.bound
    assert bound.op == ">"
    assert bound.lhs == ir.Var("a") and bound.rhs == ir.Var("b")


def test_grammar_doc_lists_reserved_words():
    text = (CORPUS.parent / "docs" / "grammar.ebnf").read_text()
    reserved = text.split("reserved       =")[1].split(";")[0]
    assert {w.strip('" ') for w in reserved.replace("|", " ").split()} == KEYWORDS
