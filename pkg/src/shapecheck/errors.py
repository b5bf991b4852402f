"""Exception hierarchy shared by every stage of the analyzer."""

from __future__ import annotations


class ShapeCheckError(Exception):
    """Base class for all analyzer errors."""


# -- frontend ---------------------------------------------------------------


class ParseError(ShapeCheckError):
    """One or more syntax errors. ``errors`` holds ``(SourcePos, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{pos}: {msg}" for pos, msg in self.errors]
        super().__init__("\n".join(lines) or "syntax error")


class RecursionCycleError(ShapeCheckError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("recursive call cycle: " + " -> ".join(self.cycle))


class MissingArgument(ShapeCheckError):
    def __init__(self, name, pos=None):
        self.name = name
        self.pos = pos
        where = f"{pos}: " if pos else ""
        super().__init__(f"{where}command-line argument '{name}' is not provided")


class NonConstantLoopBound(ShapeCheckError):
    def __init__(self, pos, detail=""):
        self.pos = pos
        super().__init__(f"{pos}: loop bound does not lower to a constant {detail}".rstrip())


# -- expression algebra -----------------------------------------------------


class SortMismatch(ShapeCheckError):
    pass


class IndexOutOfRange(ShapeCheckError):
    pass


class DivisionByZero(ShapeCheckError, ZeroDivisionError):
    pass


class UnboundSymbol(ShapeCheckError):
    pass


# -- tensor-op catalog --------------------------------------------------------


class UnknownOp(ShapeCheckError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown tensor operation '{name}'")


class MultipleInferredDims(ShapeCheckError):
    pass


class DontKnowRank(ShapeCheckError):
    """A rule needs a statically known rank and the operand does not have one."""


class OpArgumentError(ShapeCheckError):
    """Arguments that cannot be bound to an op's parameter list."""


# -- symbolic execution -------------------------------------------------------


class UnboundVariable(ShapeCheckError):
    def __init__(self, name, pos=None):
        self.name = name
        self.pos = pos
        super().__init__(f"{pos}: unbound variable '{name}'" if pos else f"unbound variable '{name}'")


class SortError(ShapeCheckError):
    def __init__(self, message, pos=None):
        self.pos = pos
        super().__init__(f"{pos}: {message}" if pos else message)


class ArityMismatch(ShapeCheckError):
    pass


# -- solver / config ----------------------------------------------------------


class UnresolvedRank(ShapeCheckError):
    pass


class ConfigError(ShapeCheckError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
