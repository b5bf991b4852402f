"""Using the solver directly: hard facts, soft preconditions, and an SMT-LIB export.

An image has c channels with 1 <= c <= 4 (hard), and a reshape to 784 needs
c * 28 * 28 = 784 (soft). The path is invalid and the model says which c breaks it.

Run from the repository root:  python demos/constraints_by_hand.py
"""

from shapecheck.constraints import HARD, NUM, SOFT, Constraint, NumVar, Prod, Shape, Symbol, between, eq
from shapecheck.solver import analyze_path, emit_smtlib

c = Symbol(1, NUM, "channels")
path = [
    Constraint(between(1, NumVar(c), 4), HARD, 0),
    Constraint(eq(Prod(Shape((NumVar(c), 28, 28))), 784), SOFT, 1, op_name="reshape"),
]

v = analyze_path(path)
print("verdict:", v.kind)
print("first violation:", v.first_violation.op_name, "#", v.first_violation.gen_index)
print("model:", {s.name: value for s, value in v.model.items()})

# pin the channel count to 1 and the same precondition always holds
mono = [Constraint(eq(NumVar(c), 1), HARD, 0), path[1]]
print("with c = 1:", analyze_path(mono).kind)

print()
print("SMT-LIB script for the first path (sat means a shape error exists):")
print(emit_smtlib(path))
