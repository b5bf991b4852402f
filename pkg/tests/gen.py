"""Random expression and assignment generators shared by the property suites."""

import random

from shapecheck.constraints import (
    NUM, SHAPE, And, BinOp, BoolVal, Concat, Eq, Forall, Index, Lt, Not, Num, NumVar, Or,
    Prod, Rank, Shape, ShapeVar, Slice, Symbol,
)


class ExprGen:
    def __init__(self, seed, n_nums=3, n_shapes=2, allow_div=True):
        self.rng = random.Random(seed)
        self.nums = [Symbol(i, NUM, f"n{i}") for i in range(n_nums)]
        self.shapes = [Symbol(100 + i, SHAPE, f"S{i}") for i in range(n_shapes)]
        self.allow_div = allow_div
        self._binder = 1000

    def num(self, depth=3):
        r = self.rng.random()
        if depth <= 0 or r < 0.25:
            if self.rng.random() < 0.5:
                return Num(self.rng.randint(-3, 6))
            return NumVar(self.rng.choice(self.nums))
        if r < 0.7:
            ops = ["+", "-", "*"] + (["//", "%"] if self.allow_div else [])
            op = self.rng.choice(ops)
            rhs = self.num(depth - 1)
            if op in ("//", "%") and self.rng.random() < 0.6:
                rhs = Num(self.rng.choice([1, 2, 3, 4, -2]))
            return BinOp(op, self.num(depth - 1), rhs)
        if r < 0.8:
            return Rank(self.shape(depth - 1))
        if r < 0.92:
            i = Num(self.rng.randint(0, 3)) if self.rng.random() < 0.8 else self.num(0)
            return Index(self.shape(depth - 1), i)
        return Prod(self.shape(depth - 1))

    def shape(self, depth=3):
        r = self.rng.random()
        if depth <= 0 or r < 0.35:
            if self.rng.random() < 0.5:
                return Shape([self.num(0) for _ in range(self.rng.randint(0, 3))])
            return ShapeVar(self.rng.choice(self.shapes))
        if r < 0.65:
            lo = Num(self.rng.randint(0, 2)) if self.rng.random() < 0.7 else self.num(1)
            if self.rng.random() < 0.4:
                s = self.shape(depth - 1)
                return Slice(s, lo, Rank(s))
            hi = Num(self.rng.randint(0, 4)) if self.rng.random() < 0.7 else self.num(1)
            return Slice(self.shape(depth - 1), lo, hi)
        return Concat(self.shape(depth - 1), self.shape(depth - 1))

    def bool(self, depth=3):
        r = self.rng.random()
        if depth <= 0 or r < 0.35:
            k = self.rng.random()
            if k < 0.45:
                return Lt(self.num(2), self.num(2))
            if k < 0.8:
                return Eq(self.num(2), self.num(2))
            if k < 0.95:
                return Eq(self.shape(2), self.shape(2))
            return BoolVal(self.rng.random() < 0.5)
        if r < 0.55:
            return And([self.bool(depth - 1) for _ in range(self.rng.randint(1, 3))])
        if r < 0.75:
            return Or([self.bool(depth - 1) for _ in range(self.rng.randint(1, 3))])
        if r < 0.93:
            return Not(self.bool(depth - 1))
        var = Symbol(self._binder, NUM, "k")
        self._binder += 1
        body = Lt(NumVar(var), self.num(1)) if self.rng.random() < 0.5 else Eq(NumVar(var) % 2, self.num(1))
        return Forall(var, Num(self.rng.randint(-1, 2)), Num(self.rng.randint(0, 3)), body)

    def any(self, depth=3):
        k = self.rng.random()
        if k < 0.4:
            return self.num(depth)
        if k < 0.65:
            return self.shape(depth)
        return self.bool(depth)

    def assignment(self, lo=-4, hi=8):
        env = {s: self.rng.randint(lo, hi) for s in self.nums}
        for s in self.shapes:
            env[s] = tuple(self.rng.randint(0, 5) for _ in range(self.rng.randint(0, 4)))
        return env
