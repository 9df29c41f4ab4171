"""Build the two-dimensional example manifold and print a few of its tensors."""

import numpy as np

from qsnm import QSManifold
from qsnm.fields import tensor_eval
from qsnm.manifold import E1_SPEC
from qsnm.verify import emit_report, run_suite

M = QSManifold.from_spec(E1_SPEC)
p = np.array([0.0, 0.0])

for name in ("g", "F", "pi", "P", "A", "T", "R1", "R5"):
    vals = tensor_eval(M.tensor(name), p)
    nz = {tuple(int(i) + 1 for i in idx): float(vals[idx]) for idx in zip(*np.nonzero(vals))}
    print(f"{name:>3}: {nz or 'all zero'}")

print()
print(emit_report(run_suite(M), "table"), end="")
