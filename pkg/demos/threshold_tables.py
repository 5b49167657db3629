"""
Sample-size thresholds
======================

How many matrix samples are needed before the likelihood is bounded, the
MLE exists, and the MLE is unique?  Tabulate both models on a small grid.
"""
from qmle.thresholds import Model, classify_mnm, thresholds

N = 8

for model in Model:
    print(f"\n{model.value}: mlt_b / mlt_u for p (rows) and q (columns)")
    print("     " + "".join(f"{q:>7}" for q in range(1, N + 1)))
    for p in range(1, N + 1):
        cells = []
        for q in range(1, N + 1):
            r = thresholds(model, p, q)
            cells.append(f"{r.mlt_b:>3}/{r.mlt_u:<3}")
        print(f"{p:>4} " + "".join(cells))

# boundedness and existence always coincide
assert all(thresholds(mo, p, q).mlt_b == thresholds(mo, p, q).mlt_e for mo in Model for p in range(1, 21) for q in range(1, 21))

# the verdict for a fixed shape strengthens as m grows
p, q = 4, 7
for m in range(1, 5):
    v = classify_mnm(p, q, m)
    print(f"({p},{q}) with m={m}: {v.verdict.label}")
