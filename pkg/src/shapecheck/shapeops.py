"""Shape semantics of tensor operations.

Each :class:`OpRule` turns symbolic argument values into a symbolic result and a
list of emitted constraints. Soft constraints are the operation's
preconditions (violating one is a shape error); hard constraints describe what
is known about fresh unknowns the operation introduces (an image's channel
count, a random integer's range).

Rules never decide anything themselves: a rule that sees ``(3, 5) mm (4, 5)``
still returns a ``(3, 5)`` tensor and simply emits the soft constraint
``5 = 4``. The online and offline checks take it from there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .constraints import (
    HARD, SOFT, BoolVal, Constraint, Index, Num, NumExpr, Prod, Rank, Shape, ShapeExpr,
    SymbolSource, as_num, between, eq, le, lt,
)
from .errors import DontKnowRank, MultipleInferredDims, OpArgumentError, UnknownOp
from .simplify import simplify
from .values import NONE, DatasetV, NoneV, ShapeV, SliceV, StrV, Tensor, TupleV

REQUIRED = object()


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    default: object = REQUIRED


@dataclass(frozen=True)
class OpRule:
    """One catalog entry.

    ``fn(cx, **bound)`` computes the result; ``sig``, ``result`` and
    ``requires`` are documentation for the generated catalog table.
    """

    name: str
    params: tuple
    fn: Callable
    sig: str
    result: str
    requires: str
    extrapolated: bool = False
    aliases: tuple = field(default=())

    def apply(self, args, kwargs=None, fresh=None, origin=None, intervals=None, options=None,
              op_name=None):
        """Run the rule. Returns ``(value, [Constraint, ...])``.

        Emitted constraints carry ``origin`` and the op name; their generation
        index is left at -1 for the caller to assign.
        """
        cx = RuleContext(op_name or self.name, fresh or SymbolSource(), origin, intervals, options)
        bound = bind(self, cx, list(args), dict(kwargs or {}))
        value = self.fn(cx, **bound)
        return value, cx.emitted


class RuleContext:
    def __init__(self, op, fresh, origin, intervals=None, options=None):
        self.op = op
        self.fresh = fresh
        self.origin = origin
        self.intervals = intervals or {}
        self.options = options or {}
        self.emitted = []

    def soft(self, formula):
        self.emitted.append(Constraint(formula, SOFT, -1, self.origin, self.op))

    def hard(self, formula):
        self.emitted.append(Constraint(formula, HARD, -1, self.origin, self.op))

    def _hint(self, hint):
        return f"{hint}@{self.origin}" if self.origin else hint

    def num(self, hint):
        return self.fresh.num(self._hint(hint))

    def shape_var(self, hint):
        return self.fresh.shape(self._hint(hint))

    def simp(self, e):
        return simplify(e, self.intervals)

    def const(self, n):
        if isinstance(n, int):
            return n
        x = self.simp(n)
        return x.value if type(x) is Num else None

    def rank(self, s):
        return self.const(Rank(s))

    def need_rank(self, s):
        r = self.rank(s)
        if r is None:
            raise DontKnowRank(f"{self.op}: rank of {s} is not statically known")
        return r

    def dims(self, s):
        return [self.simp(Index(s, Num(i))) for i in range(self.need_rank(s))]

    def norm_dim(self, s, d, extra=0):
        """Map a ground negative dim to ``rank + extra + d``, like framework indexing."""
        c = self.const(d)
        if c is not None and c < 0:
            return self.simp(Rank(s) + (extra + c))
        return self.simp(as_num(d))

    def bool(self, v, name):
        if isinstance(v, bool):
            return v
        if isinstance(v, BoolVal):
            return v.value
        if isinstance(v, NumExpr):
            c = self.const(v)
            if c is not None:
                return bool(c)
        raise OpArgumentError(f"{self.op}: argument '{name}' must be a constant boolean")

    def tensor(self, shape):
        return Tensor(self.simp(shape))


# ----------------------------------------------------------------------------
# argument binding


def _to_num(cx, v, name):
    if isinstance(v, NumExpr):
        return v
    if isinstance(v, BoolVal):
        return Num(int(v.value))
    if isinstance(v, int):
        return Num(v)
    raise OpArgumentError(f"{cx.op}: argument '{name}' must be a number, got {type(v).__name__}")


def _to_dims(cx, v, name):
    """A list of number expressions, or a ShapeExpr when the rank is unknown."""
    if isinstance(v, (TupleV, list, tuple)):
        items = v.items if isinstance(v, TupleV) else v
        return [_to_num(cx, x, name) for x in items]
    if isinstance(v, ShapeV):
        r = cx.rank(v.shape)
        if r is None:
            return v.shape
        return [cx.simp(Index(v.shape, Num(i))) for i in range(r)]
    return [_to_num(cx, v, name)]


def _convert(cx, p, v):
    k = p.kind
    if k == "any":
        return v
    if isinstance(v, NoneV) and p.default is not REQUIRED:
        return p.default
    if k == "tensor":
        if isinstance(v, Tensor):
            return v.shape
        raise OpArgumentError(f"{cx.op}: argument '{p.name}' must be a tensor")
    if k == "num":
        return _to_num(cx, v, p.name)
    if k == "dims":
        return _to_dims(cx, v, p.name)
    if k == "tensors":
        items = v.items if isinstance(v, TupleV) else v
        if not isinstance(items, (tuple, list)) or not all(isinstance(x, Tensor) for x in items):
            raise OpArgumentError(f"{cx.op}: argument '{p.name}' must be a sequence of tensors")
        return [x.shape for x in items]
    if k == "bool":
        return cx.bool(v, p.name)
    if k == "str":
        if isinstance(v, StrV):
            return v.text
        raise OpArgumentError(f"{cx.op}: argument '{p.name}' must be a string")
    raise AssertionError(k)


def bind(rule, cx, args, kwargs):
    out = {}
    params = list(rule.params)
    for i, p in enumerate(params):
        if p.kind == "dims" and p.default is REQUIRED and i == len(params) - 1 and len(args) > 1:
            # varargs form: reshape(x, 2, 3, 4)
            out[p.name] = [_to_num(cx, a, p.name) for a in args]
            args = []
            continue
        if args:
            v = args.pop(0)
        elif p.name in kwargs:
            v = kwargs.pop(p.name)
        elif p.default is not REQUIRED:
            out[p.name] = p.default
            continue
        else:
            raise OpArgumentError(f"{cx.op}: missing argument '{p.name}'")
        out[p.name] = _convert(cx, p, v)
    if args:
        raise OpArgumentError(f"{cx.op}: too many positional arguments")
    if kwargs:
        raise OpArgumentError(f"{cx.op}: unexpected keyword argument '{sorted(kwargs)[0]}'")
    return out


def _shape_of(dims):
    return dims if isinstance(dims, ShapeExpr) else Shape(dims)


def _prod(items):
    out = Num(1)
    for x in items:
        out = out * x
    return out


# ----------------------------------------------------------------------------
# rules


def r_identity(cx, x):
    return Tensor(x)


def r_no_result(cx, x):
    return NONE


def r_elementwise_dim(cx, x, dim):
    d = cx.norm_dim(x, dim)
    cx.soft(le(0, d))
    cx.soft(lt(d, Rank(x)))
    return Tensor(x)


def r_scalar(cx, value):
    return Tensor(Shape(()))


def r_same_shape(cx, a, b):
    cx.soft(eq(a, b))
    return Tensor(a)


def broadcast_shapes(cx, a, b):
    ra, rb = cx.need_rank(a), cx.need_rank(b)
    da, db = cx.dims(a), cx.dims(b)
    n = min(ra, rb)
    tail = []
    for x, y in zip(da[ra - n:], db[rb - n:]):
        if cx.const(x) == 1:
            tail.append(y)
        elif cx.const(y) == 1:
            tail.append(x)
        else:
            cx.soft(eq(x, y))
            tail.append(x)
    lead = da[:ra - n] if ra > rb else db[:rb - n]
    return Shape(lead + tail)


def r_broadcast(cx, a, b):
    return cx.tensor(broadcast_shapes(cx, a, b))


def r_where(cx, cond, a, b):
    return cx.tensor(broadcast_shapes(cx, broadcast_shapes(cx, cond, a), b))


def r_mm(cx, a, b):
    cx.soft(eq(Rank(a), 2))
    cx.soft(eq(Rank(b), 2))
    cx.soft(eq(a.dim(1), b.dim(0)))
    return cx.tensor(Shape((a.dim(0), b.dim(1))))


def r_matmul(cx, a, b):
    ra, rb = cx.need_rank(a), cx.need_rank(b)
    if ra == 0 or rb == 0:
        cx.soft(lt(0, Rank(a if ra == 0 else b)))
        return Tensor(Shape(()))
    if ra == 1 and rb == 1:
        cx.soft(eq(a.dim(0), b.dim(0)))
        return Tensor(Shape(()))
    if rb == 1:
        cx.soft(eq(a.dim(ra - 1), b.dim(0)))
        return cx.tensor(a.slice(0, ra - 1))
    if ra == 1:
        cx.soft(eq(a.dim(0), b.dim(rb - 2)))
        return cx.tensor(b.slice(0, rb - 2) @ Shape((b.dim(rb - 1),)))
    cx.soft(eq(a.dim(ra - 1), b.dim(rb - 2)))
    batch = broadcast_shapes(cx, cx.simp(a.slice(0, ra - 2)), cx.simp(b.slice(0, rb - 2)))
    return cx.tensor(batch @ Shape((a.dim(ra - 2), b.dim(rb - 1))))


def r_bmm(cx, a, b):
    cx.soft(eq(Rank(a), 3))
    cx.soft(eq(Rank(b), 3))
    cx.soft(eq(a.dim(0), b.dim(0)))
    cx.soft(eq(a.dim(2), b.dim(1)))
    return cx.tensor(Shape((a.dim(0), a.dim(1), b.dim(2))))


def r_item(cx, x):
    cx.soft(eq(Prod(x), 1))
    return cx.num("item")


def r_repeat(cx, x, sizes):
    if isinstance(sizes, ShapeExpr):
        raise DontKnowRank(f"{cx.op}: repeat counts of unknown length")
    r = cx.need_rank(x)
    cx.soft(le(Rank(x), len(sizes)))
    if r > len(sizes):
        return Tensor(x)
    dims = [Num(1)] * (len(sizes) - r) + cx.dims(x)
    for s in sizes:
        cx.soft(le(0, s))
    return cx.tensor(Shape([d * s for d, s in zip(dims, sizes)]))


def r_expand(cx, x, sizes):
    if isinstance(sizes, ShapeExpr):
        raise DontKnowRank(f"{cx.op}: target of unknown rank")
    r = cx.need_rank(x)
    n = len(sizes)
    cx.soft(le(Rank(x), n))
    if r > n:
        return Tensor(x)
    xd = cx.dims(x)
    out = []
    for i, s in enumerate(sizes):
        j = i - (n - r)
        if j < 0:
            cx.soft(le(0, s))
            out.append(s)
            continue
        if cx.const(s) == -1:
            out.append(xd[j])
        elif cx.const(xd[j]) == 1:
            cx.soft(le(0, s))
            out.append(s)
        else:
            cx.soft(eq(xd[j], s))
            out.append(xd[j])
    return cx.tensor(Shape(out))


def r_expand_as(cx, x, other):
    return r_expand(cx, x, cx.dims(other))


def r_transpose(cx, x, dim0, dim1):
    d0, d1 = dim0, dim1
    cx.soft(le(0, d0))
    cx.soft(lt(d0, d1))
    cx.soft(lt(d1, Rank(x)))
    out = x.slice(0, d0) @ Shape((x.dim(d1),)) @ x.slice(d0 + 1, d1) @ Shape((x.dim(d0),)) \
        @ x.slice(d1 + 1)
    return cx.tensor(out)


def r_permute(cx, x, dims):
    if isinstance(dims, ShapeExpr):
        raise DontKnowRank(f"{cx.op}: permutation of unknown length")
    cx.soft(eq(Rank(x), len(dims)))
    ground = [cx.const(d) for d in dims]
    if any(g is None for g in ground):
        raise DontKnowRank(f"{cx.op}: permutation must be constant")
    r = len(dims)
    norm = [g + r if g < 0 else g for g in ground]
    ok = sorted(norm) == list(range(r))
    cx.soft(BoolVal(ok))
    if not ok:
        return Tensor(x)
    return cx.tensor(Shape([x.dim(g) for g in norm]))


def _reduced(cx, x, dim, keepdim):
    d = cx.norm_dim(x, dim)
    cx.soft(le(0, d))
    cx.soft(lt(d, Rank(x)))
    mid = Shape((1,)) if keepdim else Shape(())
    return x.slice(0, d) @ mid @ x.slice(d + 1)


def r_reduce(cx, x, dim, keepdim):
    if dim is None:
        if keepdim:
            return cx.tensor(Shape([1] * cx.need_rank(x)))
        return Tensor(Shape(()))
    return cx.tensor(_reduced(cx, x, dim, keepdim))


def r_reduce_pair(cx, x, dim, keepdim):
    if dim is None:
        return Tensor(Shape(()))
    t = cx.tensor(_reduced(cx, x, dim, keepdim))
    return TupleV((t, t))


def r_topk(cx, x, k, dim):
    d = cx.norm_dim(x, dim)
    cx.soft(le(0, d))
    cx.soft(lt(d, Rank(x)))
    cx.soft(le(0, k))
    cx.soft(le(k, x.dim(d)))
    t = cx.tensor(x.slice(0, d) @ Shape((k,)) @ x.slice(d + 1))
    return TupleV((t, t))


def r_reshape(cx, x, dims):
    if isinstance(dims, ShapeExpr):
        cx.soft(eq(Prod(x), Prod(dims)))
        return cx.tensor(dims)
    if not dims:
        cx.soft(eq(Prod(x), 1))
        return Tensor(Shape(()))
    holes = [i for i, d in enumerate(dims) if cx.const(d) == -1]
    if len(holes) > 1:
        raise MultipleInferredDims(f"{cx.op}: only one dimension can be inferred")
    others = [d for i, d in enumerate(dims) if i not in holes]
    for d in others:
        cx.soft(lt(0, d))
    if not holes:
        cx.soft(eq(Prod(x), _prod(dims)))
        return cx.tensor(Shape(dims))
    p = _prod(others)
    cx.soft(eq(Prod(x) % p, 0))
    out = list(dims)
    out[holes[0]] = Prod(x) // p
    return cx.tensor(Shape(out))


def r_reshape_as(cx, x, other):
    return r_reshape(cx, x, other)


def _spatial(cx, h, k, stride, pad, dilation):
    out = (h + 2 * pad - dilation * (k - 1) - 1) // stride + 1
    cx.soft(le(1, out))
    return out


def r_conv2d(cx, x, in_channels, out_channels, kernel_size, stride, padding, dilation):
    cx.soft(eq(Rank(x), 4))
    cx.soft(eq(x.dim(1), in_channels))
    for v in (kernel_size, stride, dilation):
        cx.soft(lt(0, v))
    cx.soft(le(0, padding))
    h = _spatial(cx, x.dim(2), kernel_size, stride, padding, dilation)
    w = _spatial(cx, x.dim(3), kernel_size, stride, padding, dilation)
    return cx.tensor(Shape((x.dim(0), out_channels, h, w)))


def r_conv_transpose2d(cx, x, in_channels, out_channels, kernel_size, stride, padding,
                       output_padding, dilation):
    cx.soft(eq(Rank(x), 4))
    cx.soft(eq(x.dim(1), in_channels))
    for v in (kernel_size, stride, dilation):
        cx.soft(lt(0, v))
    cx.soft(le(0, padding))
    cx.soft(le(0, output_padding))

    def size(h):
        out = (h - 1) * stride - 2 * padding + dilation * (kernel_size - 1) + output_padding + 1
        cx.soft(le(1, out))
        return out

    return cx.tensor(Shape((x.dim(0), out_channels, size(x.dim(2)), size(x.dim(3)))))


def r_pool2d(cx, x, kernel_size, stride, padding, dilation):
    if stride is None:
        stride = kernel_size
    cx.soft(le(3, Rank(x)))
    cx.soft(le(Rank(x), 4))
    cx.soft(lt(0, kernel_size))
    cx.soft(lt(0, stride))
    cx.soft(lt(0, dilation))
    cx.soft(le(0, padding))
    cx.soft(le(2 * padding, kernel_size))
    r = Rank(x)
    h = _spatial(cx, x.dim(r - 2), kernel_size, stride, padding, dilation)
    w = _spatial(cx, x.dim(r - 1), kernel_size, stride, padding, dilation)
    return cx.tensor(x.slice(0, r - 2) @ Shape((h, w)))


def r_adaptive_pool2d(cx, x, output_size):
    if isinstance(output_size, ShapeExpr) or len(output_size) not in (1, 2):
        raise OpArgumentError(f"{cx.op}: output_size must be an int or a pair")
    oh, ow = output_size if len(output_size) == 2 else output_size * 2
    cx.soft(le(3, Rank(x)))
    cx.soft(le(Rank(x), 4))
    cx.soft(lt(0, oh))
    cx.soft(lt(0, ow))
    return cx.tensor(x.slice(0, Rank(x) - 2) @ Shape((oh, ow)))


def r_batchnorm2d(cx, x, num_features):
    cx.soft(eq(Rank(x), 4))
    cx.soft(eq(x.dim(1), num_features))
    return Tensor(x)


def r_nll_loss(cx, output, target):
    cx.soft(le(2, Rank(output)))
    cx.soft(eq(output.slice(0, 1) @ output.slice(2), target))
    return Tensor(Shape(()))


def r_pair_loss(cx, a, b):
    cx.soft(eq(a, b))
    return Tensor(Shape(()))


def r_cat(cx, tensors, dim):
    if not tensors:
        raise OpArgumentError(f"{cx.op}: expects at least one tensor")
    first = tensors[0]
    d = cx.norm_dim(first, dim)
    cx.soft(le(0, d))
    cx.soft(lt(d, Rank(first)))
    total = first.dim(d)
    for t in tensors[1:]:
        cx.soft(eq(Rank(t), Rank(first)))
        cx.soft(eq(t.slice(0, d), first.slice(0, d)))
        cx.soft(eq(t.slice(d + 1), first.slice(d + 1)))
        total = total + t.dim(d)
    return cx.tensor(first.slice(0, d) @ Shape((total,)) @ first.slice(d + 1))


def r_stack(cx, tensors, dim):
    if not tensors:
        raise OpArgumentError(f"{cx.op}: expects at least one tensor")
    first = tensors[0]
    d = cx.norm_dim(first, dim, extra=1)
    cx.soft(le(0, d))
    cx.soft(le(d, Rank(first)))
    for t in tensors[1:]:
        cx.soft(eq(t, first))
    return cx.tensor(first.slice(0, d) @ Shape((len(tensors),)) @ first.slice(d))


def r_unsqueeze(cx, x, dim):
    d = cx.norm_dim(x, dim, extra=1)
    cx.soft(le(0, d))
    cx.soft(le(d, Rank(x)))
    return cx.tensor(x.slice(0, d) @ Shape((1,)) @ x.slice(d))


def r_squeeze(cx, x, dim):
    if dim is None:
        dims = cx.dims(x)
        if any(cx.const(d) is None for d in dims):
            raise DontKnowRank(f"{cx.op}: which dims are 1 is not statically known")
        return Tensor(Shape([d for d in dims if cx.const(d) != 1]))
    d = cx.norm_dim(x, dim)
    cx.soft(le(0, d))
    cx.soft(lt(d, Rank(x)))
    cx.soft(eq(x.dim(d), 1))
    return cx.tensor(x.slice(0, d) @ x.slice(d + 1))


def r_diag(cx, x, diagonal):
    r = cx.need_rank(x)
    k = cx.simp(diagonal)
    kc = cx.const(k)
    if r == 1:
        n = x.dim(0)
        if kc is None:
            m = cx.num("diag")
            cx.hard(le(0, m))
            return Tensor(Shape((m, m)))
        return cx.tensor(Shape((n + abs(kc), n + abs(kc))))
    cx.soft(eq(Rank(x), 2))
    if r != 2:
        return Tensor(x)
    cx.soft(le(-x.dim(0), k))
    cx.soft(le(k, x.dim(0)))
    a, b = cx.simp(x.dim(0)), cx.simp(x.dim(1))
    ac, bc = cx.const(a), cx.const(b)
    if kc is not None and ac is not None and bc is not None:
        length = max(0, min(a.value, b.value - kc) if kc >= 0 else min(a.value + kc, b.value))
        return Tensor(Shape((length,)))
    iv = cx.intervals.get(k.sym) if hasattr(k, "sym") else None
    nonneg = (kc is not None and kc >= 0) or (iv is not None and iv.lo >= 0)
    nonpos = (kc is not None and kc <= 0) or (iv is not None and iv.hi <= 0)
    if a == b and nonneg:
        return cx.tensor(Shape((a - k,)))
    if a == b and nonpos:
        return cx.tensor(Shape((a + k,)))
    m = cx.num("diag")
    cx.hard(le(0, m))
    return Tensor(Shape((m,)))


def r_flatten(cx, x, start_dim, end_dim):
    cx.soft(le(1, Rank(x)))
    s = cx.norm_dim(x, start_dim)
    e = cx.norm_dim(x, end_dim)
    cx.soft(le(0, s))
    cx.soft(le(s, e))
    cx.soft(lt(e, Rank(x)))
    return cx.tensor(x.slice(0, s) @ Shape((Prod(x.slice(s, e + 1)),)) @ x.slice(e + 1))


def r_narrow(cx, x, dim, start, length):
    d = cx.norm_dim(x, dim)
    cx.soft(le(0, d))
    cx.soft(lt(d, Rank(x)))
    cx.soft(le(0, start))
    cx.soft(le(0, length))
    cx.soft(le(start + length, x.dim(d)))
    return cx.tensor(x.slice(0, d) @ Shape((length,)) @ x.slice(d + 1))


def r_pixel_shuffle(cx, x, upscale_factor):
    f = upscale_factor
    r = Rank(x)
    cx.soft(le(3, r))
    cx.soft(lt(0, f))
    c = x.dim(r - 3)
    cx.soft(eq(c % (f * f), 0))
    return cx.tensor(x.slice(0, r - 3) @ Shape((c // (f * f), x.dim(r - 2) * f, x.dim(r - 1) * f)))


def r_layer_norm(cx, x, normalized_shape):
    ns = _shape_of(normalized_shape)
    cx.soft(le(Rank(ns), Rank(x)))
    cx.soft(eq(x.slice(Rank(x) - Rank(ns)), ns))
    return Tensor(x)


def r_pad(cx, x, pad):
    if isinstance(pad, ShapeExpr):
        raise DontKnowRank(f"{cx.op}: padding of unknown length")
    n = len(pad)
    cx.soft(BoolVal(n % 2 == 0))
    if n % 2:
        return Tensor(x)
    cx.soft(le(n // 2, Rank(x)))
    r = cx.need_rank(x)
    if n // 2 > r:
        return Tensor(x)
    dims = cx.dims(x)
    for i in range(n // 2):
        j = r - 1 - i
        dims[j] = dims[j] + pad[2 * i] + pad[2 * i + 1]
        cx.soft(le(0, dims[j]))
    return cx.tensor(Shape(dims))


def r_interpolate(cx, x, size, scale_factor):
    cx.soft(le(3, Rank(x)))
    if size is not None:
        if isinstance(size, ShapeExpr):
            raise DontKnowRank(f"{cx.op}: size of unknown length")
        if len(size) == 1:
            size = size * (cx.need_rank(x) - 2)
        cx.soft(eq(Rank(x), len(size) + 2))
        for s in size:
            cx.soft(lt(0, s))
        return cx.tensor(x.slice(0, 2) @ Shape(size))
    if scale_factor is None:
        raise OpArgumentError(f"{cx.op}: either size or scale_factor is required")
    cx.soft(lt(0, scale_factor))
    dims = cx.dims(x)
    return cx.tensor(Shape(dims[:2] + [d * scale_factor for d in dims[2:]]))


def r_linear(cx, x, in_features, out_features):
    r = Rank(x)
    cx.soft(le(1, r))
    cx.soft(eq(x.dim(r - 1), in_features))
    return cx.tensor(x.slice(0, r - 1) @ Shape((out_features,)))


def r_embedding(cx, x, num_embeddings, embedding_dim):
    return cx.tensor(x @ Shape((embedding_dim,)))


def r_one_hot(cx, x, num_classes):
    cx.soft(lt(0, num_classes))
    return cx.tensor(x @ Shape((num_classes,)))


def r_fill(cx, sizes):
    if isinstance(sizes, ShapeExpr):
        return Tensor(sizes)
    for s in sizes:
        cx.soft(le(0, s))
    return cx.tensor(Shape(sizes))


def r_fill_like(cx, x):
    return Tensor(x)


def r_eye(cx, n, m):
    if m is None:
        m = n
    cx.soft(le(0, n))
    cx.soft(le(0, m))
    return cx.tensor(Shape((n, m)))


def r_arange(cx, n):
    cx.soft(le(0, n))
    return cx.tensor(Shape((n,)))


def r_read_image(cx, path):
    c, h, w = cx.num("channels"), cx.num("height"), cx.num("width")
    cx.hard(between(1, c, 4))
    cx.hard(lt(0, h))
    cx.hard(lt(0, w))
    return Tensor(Shape((c, h, w)))


def r_convert(channels):
    def rule(cx, img):
        cx.soft(eq(Rank(img), 3))
        return cx.tensor(Shape((channels,)) @ img.slice(1))
    return rule


def r_resize(cx, img, height, width):
    cx.soft(le(2, Rank(img)))
    cx.soft(lt(0, height))
    cx.soft(lt(0, width))
    return cx.tensor(img.slice(0, Rank(img) - 2) @ Shape((height, width)))


def r_randint(cx, low, high):
    n = cx.num("rand")
    cx.hard(le(low, n))
    cx.hard(le(n, high))
    return n


# dataset stubs: name -> (length, item shape, label shape)
DATASETS = {
    "mnist": (60000, (1, 28, 28), ()),
    "fashion_mnist": (60000, (1, 28, 28), ()),
    "cifar10": (50000, (3, 32, 32), ()),
}


def r_dataset(cx, name, batch_size, drop_last, length, item, label):
    stub = DATASETS.get(name.lower())
    over = cx.options.get("datasets", {}).get(name, {})
    if length is None and "length" in over:
        length = Num(over["length"])
    if item is None and "item" in over:
        item = [Num(d) for d in over["item"]]
    if label is None and "label" in over:
        label = [Num(d) for d in over["label"]]
    if stub is not None:
        length = Num(stub[0]) if length is None else length
        item = Shape(stub[1]) if item is None else _shape_of(item)
        label = Shape(stub[2]) if label is None else _shape_of(label)
    else:
        if length is None:
            length = cx.num(f"len_{name}")
            cx.hard(le(1, length))
        item = cx.shape_var(f"item_{name}") if item is None else _shape_of(item)
        label = Shape(()) if label is None else _shape_of(label)
    cx.soft(lt(0, batch_size))
    return DatasetV(name, cx.simp(length), cx.simp(batch_size), drop_last, item, label)


def r_size(cx, x, dim):
    if dim is None:
        return ShapeV(x)
    d = cx.norm_dim(x, dim)
    cx.soft(le(0, d))
    cx.soft(lt(d, Rank(x)))
    return cx.simp(x.dim(d))


def r_ndim(cx, x):
    return cx.simp(Rank(x))


def r_numel(cx, x):
    return cx.simp(Prod(x))


def r_len(cx, x):
    cx.soft(le(1, Rank(x)))
    return cx.simp(x.dim(0))


def _slice_len(cx, n, sl):
    """Length of ``range(n)[lo:hi:step]`` when decidable, else a fresh bounded symbol."""
    parts = [None if isinstance(v, NoneV) or v is None else _to_num(cx, v, "slice")
             for v in (sl.lo, sl.hi, sl.step)]
    consts = [None if p is None else cx.const(p) for p in parts]
    nc = cx.const(n)
    lo, hi, step = parts
    if step is not None and consts[2] == 0:
        cx.soft(BoolVal(False))
        return Num(0)
    if all(p is None or c is not None for p, c in zip(parts, consts)) and nc is not None:
        return Num(len(range(*slice(*consts).indices(nc))))
    if step is None or consts[2] == 1:
        if lo is None and hi is None:
            return n
        lc, hc = consts[0], consts[1]
        lo_ok = lo is None or (lc is not None and lc >= 0)
        if lo_ok and hi is None:
            lcv = lc or 0
            if _decided(cx, le(lcv, n)):
                return cx.simp(n - lcv)
        if lo_ok and hc is not None and hc >= 0 and _decided(cx, le(hc, n)):
            return Num(max(0, hc - (lc or 0)))
    m = cx.num("slice")
    cx.hard(le(0, m))
    cx.hard(le(m, n))
    return m


def _decided(cx, formula):
    s = cx.simp(formula)
    return type(s) is BoolVal and s.value


def r_getitem(cx, x, index):
    items = index.items if isinstance(index, TupleV) else (index,)
    p = 0
    out = []
    for it in items:
        if isinstance(it, NoneV):
            out.append(Num(1))
            continue
        if isinstance(it, SliceV):
            cx.soft(le(p + 1, Rank(x)))
            r = cx.rank(x)
            # past the last dim: the soft constraint above already fails; bounding a
            # fresh length by an undefined dim would wrongly make the path unreachable
            out.append(Num(0) if r is not None and p >= r else _slice_len(cx, x.dim(p), it))
            p += 1
            continue
        if isinstance(it, Tensor):
            # boolean mask: selects an unknown number of entries
            k = it.shape
            cx.soft(eq(x.slice(p, p + Rank(k)), k))
            m = cx.num("masked")
            cx.hard(le(0, m))
            cx.hard(le(m, Prod(k)))
            out.append(m)
            rk = cx.const(Rank(k))
            if rk is None:
                raise DontKnowRank(f"{cx.op}: mask of unknown rank")
            p += rk
            continue
        i = _to_num(cx, it, "index")
        cx.soft(le(p + 1, Rank(x)))
        cx.soft(le(-x.dim(p), i))
        cx.soft(lt(i, x.dim(p)))
        p += 1
    return cx.tensor(Shape(out) @ x.slice(p))


# ----------------------------------------------------------------------------
# catalog


T, N, D = "tensor", "num", "dims"


def P(name, kind, default=REQUIRED):
    return Param(name, kind, default)


_ELEMENTWISE = ("identity", "relu", "sigmoid", "tanh", "gelu", "elu", "leaky_relu", "dropout",
                "exp", "log", "abs", "neg", "sqrt", "clone", "contiguous", "detach", "float",
                "long", "int", "double", "half", "bool", "cuda", "cpu", "to", "normalize")

_RULES = [
    OpRule("identity", (P("x", T),), r_identity, "x: tensor", "x", "none",
           aliases=_ELEMENTWISE[1:]),
    OpRule("softmax", (P("x", T), P("dim", N, Num(-1))), r_elementwise_dim, "x: tensor, dim: num",
           "x", "0 <= dim < rank(x)", aliases=("log_softmax",)),
    OpRule("backward", (P("x", T),), r_no_result, "x: tensor", "None", "none"),
    OpRule("scalar", (P("value", "any"),), r_scalar, "value", "()", "none", aliases=("tensor",)),
    OpRule("isSameShape", (P("a", T), P("b", T)), r_same_shape, "a, b: tensor", "a", "a = b"),
    OpRule("broadcast", (P("a", T), P("b", T)), r_broadcast, "a, b: tensor",
           "right-aligned broadcast", "aligned dims equal unless one is constant 1",
           aliases=("add", "sub", "mul", "div", "maximum", "minimum", "pow")),
    OpRule("where", (P("cond", T), P("a", T), P("b", T)), r_where, "cond, a, b: tensor",
           "broadcast of all three", "as broadcast"),
    OpRule("mm", (P("a", T), P("b", T)), r_mm, "a, b: tensor", "(a[0], b[1])",
           "rank(a) = 2, rank(b) = 2, a[1] = b[0]"),
    OpRule("matmul", (P("a", T), P("b", T)), r_matmul, "a, b: tensor",
           "batch-broadcast @ (a[-2], b[-1])", "a[-1] = b[-2]; ranks must be known"),
    OpRule("bmm", (P("a", T), P("b", T)), r_bmm, "a, b: tensor", "(a[0], a[1], b[2])",
           "rank 3 both, a[0] = b[0], a[2] = b[1]"),
    OpRule("item", (P("x", T),), r_item, "x: tensor", "fresh number", "prod(x) = 1"),
    OpRule("repeat", (P("x", T), P("sizes", D)), r_repeat, "x: tensor, sizes...",
           "dimwise product", "rank(x) <= len(sizes)"),
    OpRule("expand", (P("x", T), P("sizes", D)), r_expand, "x: tensor, sizes...",
           "sizes (-1 keeps)", "each aligned dim of x is 1 or equal"),
    OpRule("expand_as", (P("x", T), P("other", T)), r_expand_as, "x, other: tensor",
           "other", "as expand"),
    OpRule("transpose", (P("x", T), P("dim0", N), P("dim1", N)), r_transpose,
           "x: tensor, dim0, dim1: num", "x with dims swapped", "0 <= dim0 < dim1 < rank(x)"),
    OpRule("permute", (P("x", T), P("dims", D)), r_permute, "x: tensor, dims...",
           "x reordered", "dims is a constant permutation of range(rank(x))"),
    OpRule("reduce", (P("x", T), P("dim", N, None), P("keepdim", "bool", False)), r_reduce,
           "x: tensor, dim?: num, keepdim?", "x without dim (or ())", "0 <= dim < rank(x)",
           aliases=("sum", "mean", "prod", "std", "var", "amax", "amin", "argmax", "argmin",
                    "logsumexp", "norm", "all", "any", "count_nonzero")),
    OpRule("max", (P("x", T), P("dim", N, None), P("keepdim", "bool", False)), r_reduce_pair,
           "x: tensor, dim?: num, keepdim?", "(values, indices) or ()", "0 <= dim < rank(x)",
           aliases=("min", "median", "mode")),
    OpRule("topk", (P("x", T), P("k", N), P("dim", N, Num(-1))), r_topk,
           "x: tensor, k: num, dim?: num", "(values, indices), dim replaced by k",
           "0 <= dim < rank(x), 0 <= k <= x[dim]", extrapolated=True),
    OpRule("reshape", (P("x", T), P("dims", D)), r_reshape, "x: tensor, dims...",
           "dims, one -1 inferred", "dims > 0, prod(x) = prod(dims) (or divisible with -1)",
           aliases=("view",)),
    OpRule("reshape_as", (P("x", T), P("other", T)), r_reshape_as, "x, other: tensor", "other",
           "prod(x) = prod(other)", aliases=("view_as",)),
    OpRule("conv2d", (P("x", T), P("in_channels", N), P("out_channels", N), P("kernel_size", N),
                      P("stride", N, Num(1)), P("padding", N, Num(0)), P("dilation", N, Num(1))),
           r_conv2d, "x: tensor, in, out, kernel, stride?, padding?, dilation?",
           "(x[0], out, H', W')", "rank(x) = 4, x[1] = in, H' >= 1, W' >= 1"),
    OpRule("conv_transpose2d",
           (P("x", T), P("in_channels", N), P("out_channels", N), P("kernel_size", N),
            P("stride", N, Num(1)), P("padding", N, Num(0)), P("output_padding", N, Num(0)),
            P("dilation", N, Num(1))),
           r_conv_transpose2d, "x: tensor, in, out, kernel, stride?, padding?, output_padding?, "
           "dilation?", "(x[0], out, H', W')", "rank(x) = 4, x[1] = in, H' >= 1, W' >= 1"),
    OpRule("pool2d", (P("x", T), P("kernel_size", N), P("stride", N, None),
                      P("padding", N, Num(0)), P("dilation", N, Num(1))),
           r_pool2d, "x: tensor, kernel, stride?, padding?, dilation?", "x[:-2] @ (H', W')",
           "3 <= rank(x) <= 4, 2*padding <= kernel, H' >= 1, W' >= 1",
           aliases=("max_pool2d", "avg_pool2d")),
    OpRule("adaptive_pool2d", (P("x", T), P("output_size", D)), r_adaptive_pool2d,
           "x: tensor, output_size", "x[:-2] @ output_size", "3 <= rank(x) <= 4",
           extrapolated=True, aliases=("adaptive_avg_pool2d", "adaptive_max_pool2d")),
    OpRule("batchnorm2d", (P("x", T), P("num_features", N)), r_batchnorm2d,
           "x: tensor, num_features", "x", "rank(x) = 4, x[1] = num_features",
           aliases=("batch_norm2d",)),
    OpRule("nll_loss", (P("output", T), P("target", T)), r_nll_loss, "output, target: tensor",
           "()", "rank(output) >= 2, output[0:1] @ output[2:] = target",
           aliases=("cross_entropy",)),
    OpRule("mse_loss", (P("a", T), P("b", T)), r_pair_loss, "a, b: tensor", "()", "a = b",
           aliases=("l1_loss", "binary_cross_entropy")),
    OpRule("cat", (P("tensors", "tensors"), P("dim", N, Num(0))), r_cat,
           "tensors: sequence, dim?: num", "first with dim summed",
           "equal ranks, dims equal off dim, 0 <= dim < rank", aliases=("concat",)),
    OpRule("stack", (P("tensors", "tensors"), P("dim", N, Num(0))), r_stack,
           "tensors: sequence, dim?: num", "new dim of size len(tensors)",
           "all shapes equal, 0 <= dim <= rank"),
    OpRule("unsqueeze", (P("x", T), P("dim", N)), r_unsqueeze, "x: tensor, dim: num",
           "x with 1 inserted", "0 <= dim <= rank(x)"),
    OpRule("squeeze", (P("x", T), P("dim", N, None)), r_squeeze, "x: tensor, dim?: num",
           "x without dim", "0 <= dim < rank(x), x[dim] = 1"),
    OpRule("diag", (P("x", T), P("diagonal", N, Num(0))), r_diag, "x: tensor, diagonal?: num",
           "diagonal vector (rank 2) or matrix (rank 1)", "-x[0] <= diagonal <= x[0] (rank 2)"),
    OpRule("flatten", (P("x", T), P("start_dim", N, Num(0)), P("end_dim", N, Num(-1))),
           r_flatten, "x: tensor, start_dim?, end_dim?", "dims start..end collapsed",
           "0 <= start <= end < rank(x)"),
    OpRule("narrow", (P("x", T), P("dim", N), P("start", N), P("length", N)), r_narrow,
           "x: tensor, dim, start, length", "x with dim = length",
           "0 <= start, start + length <= x[dim]"),
    OpRule("pixel_shuffle", (P("x", T), P("upscale_factor", N)), r_pixel_shuffle,
           "x: tensor, r: num", "(..., C/r^2, H*r, W*r)", "rank(x) >= 3, C % r^2 = 0"),
    OpRule("layer_norm", (P("x", T), P("normalized_shape", D)), r_layer_norm,
           "x: tensor, normalized_shape", "x", "trailing dims of x = normalized_shape"),
    OpRule("pad", (P("x", T), P("pad", D)), r_pad, "x: tensor, pad: tuple",
           "trailing dims grown by pads", "even length, len/2 <= rank(x), new dims >= 0",
           extrapolated=True),
    OpRule("interpolate", (P("x", T), P("size", D, None), P("scale_factor", N, None)),
           r_interpolate, "x: tensor, size? | scale_factor?", "x[0:2] @ size",
           "rank(x) = 2 + len(size)", extrapolated=True, aliases=("upsample",)),
    OpRule("linear", (P("x", T), P("in_features", N), P("out_features", N)), r_linear,
           "x: tensor, in, out", "x[:-1] @ (out,)", "rank(x) >= 1, x[-1] = in"),
    OpRule("embedding", (P("x", T), P("num_embeddings", N), P("embedding_dim", N)), r_embedding,
           "x: tensor, num, dim", "x @ (dim,)", "none"),
    OpRule("one_hot", (P("x", T), P("num_classes", N)), r_one_hot, "x: tensor, n", "x @ (n,)",
           "n > 0"),
    OpRule("ones", (P("sizes", D),), r_fill, "sizes...", "sizes", "sizes >= 0",
           aliases=("zeros", "randn", "rand", "empty", "full_shape")),
    OpRule("ones_like", (P("x", T),), r_fill_like, "x: tensor", "x", "none",
           aliases=("zeros_like", "randn_like", "rand_like", "empty_like")),
    OpRule("eye", (P("n", N), P("m", N, None)), r_eye, "n, m?: num", "(n, m)", "n, m >= 0"),
    OpRule("arange", (P("n", N),), r_arange, "n: num", "(n,)", "n >= 0",
           aliases=("randperm",)),
    OpRule("read_image", (P("path", "any", None),), r_read_image, "path?",
           "(c, h, w) fresh", "hard: 1 <= c <= 4, h > 0, w > 0", aliases=("readImage",)),
    OpRule("convert_monochrome", (P("img", T),), r_convert(1), "img: tensor", "(1,) @ img[1:]",
           "rank(img) = 3"),
    OpRule("convert_rgb", (P("img", T),), r_convert(3), "img: tensor", "(3,) @ img[1:]",
           "rank(img) = 3"),
    OpRule("resize", (P("img", T), P("height", N), P("width", N)), r_resize,
           "img: tensor, h, w", "img[:-2] @ (h, w)", "rank(img) >= 2, h, w > 0"),
    OpRule("to_tensor", (P("x", T),), r_identity, "img: tensor", "img", "none"),
    OpRule("randint", (P("low", N), P("high", N)), r_randint, "low, high: num",
           "fresh number", "hard: low <= n <= high", aliases=("randInt",)),
    OpRule("dataset", (P("name", "str"), P("batch_size", N), P("drop_last", "bool", False),
                       P("length", N, None), P("item", D, None), P("label", D, None)),
           r_dataset, "name, batch_size, drop_last?, length?, item?, label?",
           "epoch object", "batch_size > 0; hard N >= 1 for unknown datasets"),
    OpRule("size", (P("x", T), P("dim", N, None)), r_size, "x: tensor, dim?: num",
           "shape, or x[dim]", "0 <= dim < rank(x)", aliases=("shape_of",)),
    OpRule("ndim", (P("x", T),), r_ndim, "x: tensor", "rank(x)", "none", aliases=("dim",)),
    OpRule("numel", (P("x", T),), r_numel, "x: tensor", "prod(x)", "none"),
    OpRule("len", (P("x", T),), r_len, "x: tensor", "x[0]", "rank(x) >= 1"),
    OpRule("getitem", (P("x", T), P("index", "any")), r_getitem, "x: tensor, index",
           "indexed shape", "index in range per dim; masks match shape"),
]


class Catalog:
    """Immutable name -> rule table (aliases resolve to the same rule)."""

    def __init__(self, rules):
        table = {}
        for r in rules:
            for n in (r.name,) + tuple(r.aliases):
                if n in table:
                    raise ValueError(f"duplicate op name {n}")
                table[n] = r
        self._table = table
        self.rules = tuple(rules)

    def __contains__(self, name):
        return name in self._table

    def lookup(self, name):
        try:
            return self._table[name]
        except KeyError:
            raise UnknownOp(name) from None

    def names(self):
        return sorted(self._table)


CATALOG = Catalog(_RULES)


def catalog_lookup(name):
    return CATALOG.lookup(name)


def catalog_markdown():
    """The catalog as a markdown table."""
    lines = [
        "| op | aliases | arguments | result | soft/hard constraints | notes |",
        "|---|---|---|---|---|---|",
    ]
    for r in CATALOG.rules:
        aliases = ", ".join(r.aliases) or ""
        note = "extrapolated from framework docs" if r.extrapolated else ""
        lines.append(f"| `{r.name}` | {aliases} | {r.sig} | {r.result} | {r.requires} | {note} |")
    return "\n".join(lines) + "\n"


