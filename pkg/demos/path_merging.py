"""Path merging on a stack of randomly skipped blocks.

Each block either applies a same-size linear layer or passes its input
through, so both arms leave the same shape and the executor can merge them.
Without merging the number of paths doubles with every block.

Run from the repository root:  python demos/path_merging.py
"""

import time

from shapecheck.solver import analyze_paths, summarize
from shapecheck.surface import lower, parse_source
from shapecheck.symexec import ExecOptions, Executor

PROGRAM = '''
def block(x):
    if random.randint(0, 1) == 1:
        x = F.linear(x, 64, 64)
    return x


x = torch.ones(8, 64)
for i in range(args.blocks):
    x = block(x)
out = F.linear(x, 64, 10)
'''

for blocks in (3, 6, 9):
    for merge in (True, False):
        t0 = time.perf_counter()
        ex = Executor(lower(parse_source(PROGRAM, "blocks.tsl"), {"blocks": blocks}),
                      ExecOptions(merge=merge))
        states = ex.run()
        verdict = summarize(analyze_paths([st.constraints for st in states]))
        secs = time.perf_counter() - t0
        print(f"blocks={blocks:2d} merge={str(merge):5s}  paths={len(states):5d}  "
              f"merges={ex.merges:2d}  verdict={verdict.kind:8s}  {secs:.2f} s")
