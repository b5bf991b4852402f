"""Random constraint sets over finite domains and a brute-force verdict oracle.

The oracle knows nothing about the solver: it enumerates every assignment in
the declared windows and evaluates constraints with the reference ground
semantics, where an evaluation error means the constraint does not hold.
"""

import itertools
import random

from shapecheck.constraints import (
    HARD, NUM, SOFT, And, BinOp, Concat, Constraint, Eq, Forall, Index, Lt, Not, Num, NumVar, Or, Prod,
    Rank, Shape, Slice, Symbol, between, concrete_eval,
)
from shapecheck.errors import ShapeCheckError

MAX_JOINT = 10**4


def ground_holds(formula, env):
    try:
        return concrete_eval(formula, env) is True
    except ShapeCheckError:
        return False


class ConstraintGen:
    """Constraint sets whose symbols all carry hard window bounds."""

    def __init__(self, seed):
        self.rng = random.Random(seed)
        n = self.rng.randint(1, 4)
        self.syms = [Symbol(i + 1, NUM, f"v{i}") for i in range(n)]
        self.windows = {}
        budget = MAX_JOINT
        for i, s in enumerate(self.syms):
            left = n - i
            cap = max(1, int(budget ** (1 / left)))
            width = self.rng.randint(1, min(cap, 40))
            lo = self.rng.randint(-6, 6)
            self.windows[s] = (lo, lo + width - 1)
            budget //= width
        self._binder = 100

    def var(self):
        return NumVar(self.rng.choice(self.syms))

    def num(self, depth=2):
        r = self.rng.random()
        if depth <= 0 or r < 0.3:
            return Num(self.rng.randint(-3, 8)) if self.rng.random() < 0.4 else self.var()
        if r < 0.75:
            op = self.rng.choice(["+", "-", "*", "//", "%"])
            rhs = self.num(depth - 1)
            if op in ("//", "%") and self.rng.random() < 0.5:
                rhs = Num(self.rng.choice([1, 2, 3, 4, 64, -3]))
            return BinOp(op, self.num(depth - 1), rhs)
        if r < 0.88:
            return Index(self.shape(depth - 1), self.num(0))
        if r < 0.94:
            return Rank(self.shape(depth - 1))
        return Prod(self.shape(depth - 1))

    def shape(self, depth=1):
        r = self.rng.random()
        if depth <= 0 or r < 0.6:
            return Shape([self.num(0) for _ in range(self.rng.randint(0, 3))])
        if r < 0.8:
            s = Shape([self.num(0) for _ in range(self.rng.randint(1, 4))])
            lo = self.rng.randint(0, 2)
            return Slice(s, Num(lo), Num(self.rng.randint(lo, 4)))
        return Concat(self.shape(depth - 1), self.shape(depth - 1))

    def atom(self):
        k = self.rng.random()
        if k < 0.4:
            return Lt(self.num(), self.num())
        if k < 0.75:
            return Eq(self.num(), self.num())
        if k < 0.92:
            n = self.rng.randint(0, 3)
            return Eq(Shape([self.num(1) for _ in range(n)]), self.shape())
        var = Symbol(self._binder, NUM, "j")
        self._binder += 1
        lo = self.rng.randint(-1, 2)
        body = Lt(NumVar(var), self.num(1)) if self.rng.random() < 0.5 else Not(Eq(NumVar(var), self.var()))
        return Forall(var, Num(lo), Num(lo + self.rng.randint(0, 4)), body)

    def formula(self, depth=2):
        r = self.rng.random()
        if depth <= 0 or r < 0.6:
            return self.atom()
        if r < 0.75:
            return And([self.formula(depth - 1) for _ in range(self.rng.randint(2, 3))])
        if r < 0.9:
            return Or([self.formula(depth - 1) for _ in range(self.rng.randint(2, 3))])
        return Not(self.formula(depth - 1))

    def constraint_set(self):
        out = []
        for s in self.syms:
            lo, hi = self.windows[s]
            out.append((between(lo, NumVar(s), hi), HARD))
        if self.rng.random() < 0.5:
            out.append((self.atom(), HARD))
        for _ in range(self.rng.randint(0, 3)):
            out.append((self.formula(), SOFT))
        # interleave so that hard and soft generation indices mix
        head, tail = out[:len(self.syms)], out[len(self.syms):]
        self.rng.shuffle(tail)
        return [Constraint(f, kind, i) for i, (f, kind) in enumerate(head + tail)]


def assignments(windows):
    syms = sorted(windows, key=lambda s: s.id)
    ranges = [range(windows[s][0], windows[s][1] + 1) for s in syms]
    for values in itertools.product(*ranges):
        yield dict(zip(syms, values))


def oracle_verdict(constraints, windows):
    """``(kind, witness)`` by enumeration: unreachable, valid or invalid."""
    hard = [c for c in constraints if c.kind == HARD]
    soft = [c for c in constraints if c.kind == SOFT]
    reachable = False
    for env in assignments(windows):
        if not all(ground_holds(c.formula, env) for c in hard):
            continue
        reachable = True
        if not soft:
            break
        if not all(ground_holds(c.formula, env) for c in soft):
            return "invalid", env
    if not reachable:
        return "unreachable", None
    return "valid", None


def verdict_problems(constraints, windows, verdict):
    """Differences between a solver verdict and the oracle (empty list: agreement)."""
    want, _ = oracle_verdict(constraints, windows)
    if verdict.kind != want:
        return [f"solver said {verdict.kind}, enumeration says {want}"]
    if want != "invalid":
        return []
    model = {s: verdict.model[s] for s in windows}
    problems = []
    for c in constraints:
        if c.kind == HARD and not ground_holds(c.formula, model):
            problems.append(f"model breaks hard constraint #{c.gen_index}")
    fv = verdict.first_violation
    if ground_holds(fv.formula, model):
        problems.append("first violation holds under the model")
    for c in constraints:
        if c.kind == SOFT and c.gen_index < fv.gen_index and not ground_holds(c.formula, model):
            problems.append(f"soft #{c.gen_index} is broken earlier than the reported first violation")
    return problems
