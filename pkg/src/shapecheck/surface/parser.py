"""Recursive-descent parser for the kernel language.

Tokenization is delegated to the standard library's :mod:`tokenize`, which
already produces the INDENT/DEDENT structure the grammar relies on. The parser
keeps going after a syntax error (skipping to the next statement) so that one
run reports every error in the file.
"""

from __future__ import annotations

import ast as pyast
import io
import keyword
import tokenize
from tokenize import DEDENT, ENDMARKER, INDENT, NAME, NEWLINE, NUMBER, OP, STRING

from ..errors import ParseError
from ..source import SourcePos
from .ast import (
    Assign, Attr, AugAssign, BinExpr, BoolLit, CallExpr, Compare, ExprStmt, FloatLit, For,
    FunctionDef, Global, If, IntLit, ListExpr, Name, NoneLit, Param, Pass, Program, Return,
    SliceExpr, StrLit, Subscript, TupleExpr, UnaryExpr,
)

COMPARE_OPS = ("<", "<=", ">", ">=", "==", "!=")
AUG_OPS = {"+=": "+", "-=": "-", "*=": "*", "//=": "//", "%=": "%"}

# words the kernel language reserves; other Python keywords are rejected outright
KEYWORDS = {"def", "return", "if", "elif", "else", "for", "in", "global", "pass", "and", "or",
            "not", "True", "False", "None"}


class _Fail(Exception):
    pass


class Parser:
    def __init__(self, text, file="<input>"):
        self.file = file
        self.errors = []
        self.toks = self._tokenize(text.replace("\r\n", "\n").replace("\r", "\n"))
        self.i = 0

    # -- tokens --

    def _tokenize(self, text):
        if text and not text.endswith("\n"):
            text += "\n"
        out = []
        try:
            for tok in tokenize.generate_tokens(io.StringIO(text).readline):
                if tok.type in (tokenize.COMMENT, tokenize.NL):
                    continue
                if tok.type == tokenize.ERRORTOKEN:
                    if tok.string.isspace():
                        continue
                    self.errors.append((self._pos(tok), f"unexpected character {tok.string!r}"))
                    continue
                out.append(tok)
        except (tokenize.TokenError, IndentationError, SyntaxError) as e:
            opener, unbalanced = _bracket_state(out, self.file)
            if isinstance(e, tokenize.TokenError) and "statement" in str(e.args[0]) and unbalanced:
                # a stray closing bracket was already reported by the parser's view
                self.errors.append((unbalanced, "unmatched closing bracket"))
            elif isinstance(e, tokenize.TokenError) and "statement" in str(e.args[0]) and opener:
                self.errors.append((opener, "bracket is never closed"))
            else:
                line, col = _error_location(e, text)
                self.errors.append((SourcePos(self.file, line, col), _token_error_message(e)))
            # close any open blocks so parsing of the good prefix can proceed
            end = out[-1].end if out else (1, 0)
            depth = sum(1 for t in out if t.type == INDENT) - sum(1 for t in out if t.type == DEDENT)
            if out and out[-1].type != NEWLINE:
                out.append(tokenize.TokenInfo(NEWLINE, "\n", end, end, ""))
            out.extend(tokenize.TokenInfo(DEDENT, "", end, end, "") for _ in range(depth))
            out.append(tokenize.TokenInfo(ENDMARKER, "", end, end, ""))
        return out

    def _pos(self, tok):
        line, col = tok.start
        return SourcePos(self.file, max(line, 1), col + 1, len(tok.string))

    @property
    def tok(self):
        return self.toks[self.i]

    def pos(self):
        return self._pos(self.tok)

    def pos_since(self, start):
        """Position of the text from token ``start`` through the last consumed token."""
        first, last = self.toks[start], self.toks[self.i - 1]
        line, col = first.start
        span = last.end[1] - col if last.end[0] == line else len(first.line) - col
        return SourcePos(self.file, max(line, 1), col + 1, max(span, 0))

    def at(self, type_, string=None):
        t = self.tok
        return t.type == type_ and (string is None or t.string == string)

    def at_op(self, *ops):
        return self.tok.type == OP and self.tok.string in ops

    def at_kw(self, *words):
        return self.tok.type == NAME and self.tok.string in words

    def advance(self):
        t = self.tok
        if t.type != ENDMARKER:
            self.i += 1
        return t

    def expect_op(self, op):
        if not self.at_op(op):
            self.fail(f"expected '{op}'")
        return self.advance()

    def expect_kw(self, word):
        if not self.at_kw(word):
            self.fail(f"expected '{word}'")
        return self.advance()

    def expect_name(self):
        t = self.tok
        if t.type != NAME or t.string in KEYWORDS:
            self.fail("expected a name")
        if keyword.iskeyword(t.string):
            self.fail(f"'{t.string}' is not part of the kernel language", False)
        return self.advance().string

    def fail(self, msg, show_found=True):
        t = self.tok
        if not show_found:
            self.errors.append((self._pos(t), msg))
            raise _Fail()
        found = "end of input" if t.type == ENDMARKER else (
            "end of line" if t.type == NEWLINE else repr(t.string) if t.string else tokenize.tok_name[t.type])
        self.errors.append((self._pos(t), f"{msg}, found {found}"))
        raise _Fail()

    # -- program and statements --

    def parse_program(self):
        functions, entry = [], []
        while not self.at(ENDMARKER):
            if self.at(INDENT) or self.at(DEDENT):
                self._stray_indent()
                continue
            st = self.statement()
            if st is None:
                continue
            (functions if isinstance(st, FunctionDef) else entry).append(st)
        if self.errors:
            raise ParseError(sorted(self.errors, key=lambda e: (e[0].line, e[0].column)))
        return Program(tuple(functions), tuple(entry), self.file)

    def _stray_indent(self):
        self.errors.append((self.pos(), "unexpected indentation"))
        self._skip_block()

    def statement(self):
        start = self.i
        try:
            if self.at_kw("def"):
                return self.funcdef()
            if self.at_kw("if"):
                return self.if_stmt()
            if self.at_kw("for"):
                return self.for_stmt()
            st = self.simple()
            if not self.at(NEWLINE):
                self.fail("expected end of statement")
            self.advance()
            return st
        except _Fail:
            self._sync(start)
            return None

    def _sync(self, start):
        if self.i == start and not self.at(ENDMARKER) and not self.at(DEDENT):
            self.advance()
        while not (self.at(NEWLINE) or self.at(ENDMARKER) or self.at(DEDENT)):
            if self.at(INDENT):
                break
            self.advance()
        if self.at(NEWLINE):
            self.advance()
        if self.at(INDENT):
            self._skip_block()

    def _skip_block(self):
        depth = 0
        while not self.at(ENDMARKER):
            t = self.advance()
            if t.type == INDENT:
                depth += 1
            elif t.type == DEDENT:
                depth -= 1
                if depth <= 0:
                    return

    def block(self):
        self.expect_op(":")
        if not self.at(NEWLINE):
            st = self.simple()
            if not self.at(NEWLINE):
                self.fail("expected end of statement")
            self.advance()
            return (st,)
        self.advance()
        if not self.at(INDENT):
            self.fail("expected an indented block")
        self.advance()
        body = []
        while not self.at(DEDENT) and not self.at(ENDMARKER):
            if self.at(INDENT):
                self._stray_indent()
                continue
            st = self.statement()
            if st is not None:
                if isinstance(st, FunctionDef):
                    self.errors.append((st.pos, "nested function definitions are not supported"))
                    continue
                body.append(st)
        if self.at(DEDENT):
            self.advance()
        if not body:
            body.append(Pass(pos=self.pos()))
        return tuple(body)

    def funcdef(self):
        pos = self.pos()
        self.advance()
        name = self.expect_name()
        self.expect_op("(")
        params = []
        while not self.at_op(")"):
            ppos = self.pos()
            pname = self.expect_name()
            default = None
            if self.at_op("="):
                self.advance()
                default = self.expr()
            elif params and params[-1].default is not None:
                self.fail("parameter without a default follows one with a default")
            params.append(Param(pname, default, ppos))
            if not self.at_op(","):
                break
            self.advance()
        self.expect_op(")")
        if len({p.name for p in params}) != len(params):
            self.errors.append((pos, f"duplicate parameter name in '{name}'"))
        return FunctionDef(name, tuple(params), self.block(), pos)

    def if_stmt(self):
        pos = self.pos()
        self.advance()
        cond = self.expr()
        body = self.block()
        orelse = ()
        if self.at_kw("elif"):
            orelse = (self.if_stmt(),)
        elif self.at_kw("else"):
            self.advance()
            orelse = self.block()
        return If(cond, body, orelse, pos)

    def for_stmt(self):
        pos = self.pos()
        self.advance()
        target = self.target_list()
        self.expect_kw("in")
        it = self.expr()
        return For(target, it, self.block(), pos)

    def target_list(self):
        pos = self.pos()
        items = [self.target()]
        comma = False
        while self.at_op(","):
            comma = True
            self.advance()
            if self.at_kw("in") or self.at_op("="):
                break
            items.append(self.target())
        return TupleExpr(tuple(items), pos) if comma else items[0]

    def target(self):
        pos = self.pos()
        if self.at_op("("):
            self.advance()
            t = self.target_list()
            self.expect_op(")")
            return t
        return Name(self.expect_name(), pos)

    def simple(self):
        pos = self.pos()
        if self.at_kw("pass"):
            self.advance()
            return Pass(pos)
        if self.at_kw("return"):
            self.advance()
            value = None if self.at(NEWLINE) else self.expr_list()
            return Return(value, pos)
        if self.at_kw("global"):
            self.advance()
            names = [self.expect_name()]
            while self.at_op(","):
                self.advance()
                names.append(self.expect_name())
            return Global(tuple(names), pos)
        if self.tok.type == NAME and keyword.iskeyword(self.tok.string) \
                and self.tok.string not in KEYWORDS:
            self.fail(f"'{self.tok.string}' is not part of the kernel language", False)
        value = self.expr_list()
        if self.at_op("="):
            self.advance()
            _check_target(self, value)
            rhs = self.expr_list()
            if self.at_op("="):
                self.fail("chained assignment is not supported")
            return Assign(value, rhs, pos)
        if self.tok.type == OP and self.tok.string in AUG_OPS:
            op = AUG_OPS[self.advance().string]
            if not isinstance(value, Name):
                self.errors.append((pos, "augmented assignment needs a plain name"))
                raise _Fail()
            return AugAssign(value.id, op, self.expr(), pos)
        return ExprStmt(value, pos)

    # -- expressions --

    def expr_list(self):
        pos = self.pos()
        first = self.expr()
        if not self.at_op(","):
            return first
        items = [first]
        while self.at_op(","):
            self.advance()
            if self.at(NEWLINE) or self.at_op("=", ")", "]"):
                break
            items.append(self.expr())
        return TupleExpr(tuple(items), pos)

    def expr(self):
        pos = self.pos()
        left = self.and_expr()
        while self.at_kw("or"):
            self.advance()
            left = BinExpr("or", left, self.and_expr(), pos)
        return left

    def and_expr(self):
        pos = self.pos()
        left = self.not_expr()
        while self.at_kw("and"):
            self.advance()
            left = BinExpr("and", left, self.not_expr(), pos)
        return left

    def not_expr(self):
        if self.at_kw("not"):
            pos = self.pos()
            self.advance()
            return UnaryExpr("not", self.not_expr(), pos)
        return self.comparison()

    def comparison(self):
        pos = self.pos()
        first = self.arith()
        ops, rest = [], []
        while self.at_op(*COMPARE_OPS):
            ops.append(self.advance().string)
            rest.append(self.arith())
        if not ops:
            return first
        return Compare(first, tuple(ops), tuple(rest), pos)

    def arith(self):
        pos = self.pos()
        left = self.term()
        while self.at_op("+", "-"):
            op = self.advance().string
            left = BinExpr(op, left, self.term(), pos)
        return left

    def term(self):
        pos = self.pos()
        left = self.factor()
        while self.at_op("*", "//", "%", "@"):
            op = self.advance().string
            left = BinExpr(op, left, self.factor(), pos)
        if self.at_op("/"):
            self.fail("true division is not supported; use //")
        return left

    def factor(self):
        if self.at_op("-"):
            pos = self.pos()
            self.advance()
            return UnaryExpr("-", self.factor(), pos)
        if self.at_op("+"):
            self.advance()
            return self.factor()
        return self.postfix()

    def postfix(self):
        start = self.i
        e = self.atom()
        while True:
            if self.at_op("("):
                self.advance()
                args, kwargs = self.call_args()
                e = CallExpr(e, args, kwargs, self.pos_since(start))
            elif self.at_op("."):
                self.advance()
                name = self.expect_name()
                e = Attr(e, name, self.pos_since(start))
            elif self.at_op("["):
                self.advance()
                index = self.subscript()
                self.expect_op("]")
                e = Subscript(e, index, self.pos_since(start))
            else:
                return e

    def call_args(self):
        args, kwargs = [], []
        while not self.at_op(")"):
            if self.tok.type == NAME and self.toks[self.i + 1].type == OP \
                    and self.toks[self.i + 1].string == "=":
                name = self.expect_name()
                self.advance()
                if name in {k for k, _ in kwargs}:
                    self.fail(f"repeated keyword argument '{name}'")
                kwargs.append((name, self.expr()))
            else:
                if kwargs:
                    self.fail("positional argument follows keyword argument")
                if self.at_op("*", "**"):
                    self.fail("argument unpacking is not supported")
                args.append(self.expr())
            if not self.at_op(","):
                break
            self.advance()
        self.expect_op(")")
        return tuple(args), tuple(kwargs)

    def subscript(self):
        pos = self.pos()
        items = [self.subitem()]
        comma = False
        while self.at_op(","):
            comma = True
            self.advance()
            if self.at_op("]"):
                break
            items.append(self.subitem())
        return TupleExpr(tuple(items), pos) if comma else items[0]

    def subitem(self):
        pos = self.pos()
        lo = None if self.at_op(":") else self.expr()
        if not self.at_op(":"):
            return lo
        self.advance()
        hi = None if self.at_op(":", ",", "]") else self.expr()
        step = None
        if self.at_op(":"):
            self.advance()
            step = None if self.at_op(",", "]") else self.expr()
        return SliceExpr(lo, hi, step, pos)

    def atom(self):
        t = self.tok
        pos = self.pos()
        if t.type == NUMBER:
            self.advance()
            return _number(self, t, pos)
        if t.type == STRING:
            parts = []
            while self.tok.type == STRING:
                parts.append(_string(self, self.advance(), pos))
            return StrLit("".join(parts), pos)
        if t.type == NAME:
            if t.string == "True" or t.string == "False":
                self.advance()
                return BoolLit(t.string == "True", pos)
            if t.string == "None":
                self.advance()
                return NoneLit(pos)
            return Name(self.expect_name(), pos)
        if self.at_op("("):
            self.advance()
            if self.at_op(")"):
                self.advance()
                return TupleExpr((), pos)
            first = self.expr()
            if self.at_op(")"):
                self.advance()
                return first
            items = [first]
            while self.at_op(","):
                self.advance()
                if self.at_op(")"):
                    break
                items.append(self.expr())
            self.expect_op(")")
            return TupleExpr(tuple(items), pos)
        if self.at_op("["):
            self.advance()
            items = []
            while not self.at_op("]"):
                items.append(self.expr())
                if not self.at_op(","):
                    break
                self.advance()
            self.expect_op("]")
            return ListExpr(tuple(items), pos)
        self.fail("expected an expression")


def _number(p, tok, pos):
    s = tok.string
    if s[-1] in "jJ":
        p.errors.append((pos, "complex literals are not supported"))
        raise _Fail()
    try:
        return IntLit(int(s, 0), pos)
    except ValueError:
        pass
    try:
        float(s)
    except ValueError:
        p.errors.append((pos, f"invalid number {s!r}"))
        raise _Fail() from None
    return FloatLit(s, pos)


def _string(p, tok, pos):
    s = tok.string
    prefix = s[:min(i for i in (s.find("'"), s.find('"')) if i >= 0)].lower()
    if "f" in prefix or "b" in prefix:
        p.errors.append((pos, "only plain string literals are supported"))
        raise _Fail()
    return pyast.literal_eval(s)


def _check_target(p, e):
    if isinstance(e, Name):
        return
    if isinstance(e, TupleExpr) and e.items:
        for x in e.items:
            _check_target(p, x)
        return
    p.errors.append((getattr(e, "pos", None) or p.pos(), "can only assign to names or tuples of names"))
    raise _Fail()


def _bracket_state(toks, file):
    """(innermost unclosed opener position, first unmatched closer position)."""
    stack = []
    for t in toks:
        if t.type != OP:
            continue
        if t.string in "([{":
            stack.append(t)
        elif t.string in ")]}":
            if not stack:
                line, col = t.start
                return None, SourcePos(file, line, col + 1, 1)
            stack.pop()
    if stack:
        line, col = stack[-1].start
        return SourcePos(file, line, col + 1, 1), None
    return None, None


def _error_location(e, text):
    if isinstance(e, SyntaxError) and e.lineno:
        return e.lineno, max(e.offset or 1, 1)
    if isinstance(e, tokenize.TokenError) and len(e.args) > 1:
        line, col = e.args[1]
        nlines = text.count("\n") or 1
        return min(max(line, 1), nlines), col + 1
    return 1, 1


def _token_error_message(e):
    msg = e.args[0] if e.args else str(e)
    if "EOF in multi-line string" in msg:
        return "unterminated string literal"
    if "EOF in multi-line statement" in msg:
        return "unclosed bracket at end of input"
    return msg


def parse_source(text, file="<input>"):
    """Parse kernel-language text into a :class:`Program` (raises ParseError)."""
    program = Parser(text, file).parse_program()
    from .lower import check_recursion
    check_recursion(program)
    return program
