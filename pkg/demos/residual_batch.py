"""Walk through the residual-minibatch bug: find it, read the counterexample, fix it.

Run from the repository root:  python demos/residual_batch.py
"""

from shapecheck.cli import analyze
from shapecheck.config import AnalysisConfig

PROGRAM = '''
def net(x, batch_size):
    x = x.reshape(batch_size, -1)
    return F.linear(x, 784, 10)


loader = dataset("mnist", batch_size=64{extra})
for batch, label in loader:
    out = net(batch, 64)
'''


def show(title, text):
    report, code = analyze(AnalysisConfig(entry="demo.tsl"), text)
    print(f"== {title}: exit code {code}, {report['summary']['total']} paths")
    for path in report["paths"]:
        print(f"   path {path['pathId']} {path['trace']}: {path['verdict']}")
        if path["verdict"] == "invalid":
            fv = path["firstViolation"]
            print(f"     {fv['opName']} at line {fv['sourcePos']['line']}: {fv['constraintText']}")
            for name, value in path["counterexample"].items():
                print(f"     counterexample {name.split('@')[0]} = {value}")


# 60000 images in batches of 64 leave a last batch of 32; reshape(64, -1)
# then produces 392 features where the linear layer wants 784
show("fixed batch size in reshape", PROGRAM.format(extra=""))

# dropping the incomplete batch removes the residual path altogether
show("with drop_last", PROGRAM.format(extra=", drop_last=True"))
