"""Runtime values manipulated by the symbolic executor.

Numbers and booleans are plain :class:`NumExpr` / :class:`BoolExpr` nodes. The
classes here wrap everything else: tensors (known only by their shape), shape
tuples such as ``x.shape``, Python tuples, slices, strings and dataset objects.
"""

from __future__ import annotations

from dataclasses import dataclass

from .constraints import BoolExpr, NumExpr, ShapeExpr, pretty


@dataclass(frozen=True, slots=True)
class Tensor:
    shape: ShapeExpr

    def __str__(self):
        return f"Tensor{pretty(self.shape)}"


@dataclass(frozen=True, slots=True)
class ShapeV:
    """A shape used as a value (``x.shape``, ``x.size()``)."""

    shape: ShapeExpr

    def __str__(self):
        return pretty(self.shape)


@dataclass(frozen=True, slots=True)
class TupleV:
    items: tuple

    def __str__(self):
        return "(" + ", ".join(show(v) for v in self.items) + ")"


@dataclass(frozen=True, slots=True)
class SliceV:
    lo: object = None
    hi: object = None
    step: object = None


@dataclass(frozen=True, slots=True)
class StrV:
    text: str


@dataclass(frozen=True, slots=True)
class NoneV:
    pass


NONE = NoneV()


@dataclass(frozen=True, slots=True)
class DatasetV:
    """One epoch over a dataset: total length, batch size and item shapes."""

    name: str
    length: NumExpr
    batch: NumExpr
    drop_last: bool
    item: ShapeExpr
    label: ShapeExpr

    def __str__(self):
        return f"Dataset({self.name}, n={pretty(self.length)}, batch={pretty(self.batch)})"


@dataclass(frozen=True, slots=True)
class FuncV:
    """A reference to a user function (functions are first-order but may be passed around)."""

    name: str


def show(v):
    if isinstance(v, (NumExpr, BoolExpr)):
        return pretty(v)
    if isinstance(v, StrV):
        return repr(v.text)
    if isinstance(v, NoneV):
        return "None"
    return str(v)


def kind(v):
    """A short human name for a value's kind, used in sort errors."""
    if isinstance(v, NumExpr):
        return "number"
    if isinstance(v, BoolExpr):
        return "bool"
    return {Tensor: "tensor", ShapeV: "shape", TupleV: "tuple", SliceV: "slice", StrV: "string",
            NoneV: "None", DatasetV: "dataset", FuncV: "function", FloatV: "float",
            EnumerateV: "enumerate"}.get(type(v), type(v).__name__)


@dataclass(frozen=True, slots=True)
class FloatV:
    """A floating-point value. Its magnitude never matters for shapes, so it stays opaque."""

    text: str = "?"

    def __str__(self):
        return self.text


@dataclass(frozen=True, slots=True)
class EnumerateV:
    """``enumerate(x)``; only useful as a loop iterable."""

    inner: object
