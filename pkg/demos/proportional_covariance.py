"""
Diagonal column covariance
==========================

When the column covariance is restricted to be diagonal, stability is
decided exactly by the ranks of the "arms": arm j collects column j of
every sample.  Compare the exact verdicts with the simple rule in m q
versus p, then run the flip-flop for the restricted model.
"""
import numpy as np

from qmle.decomposition import candec_star
from qmle.flipflop import classify_empirical
from qmle.representation import RepTuple
from qmle.stability import star_exact_stability
from qmle.thresholds import classify_propcov

rng = np.random.default_rng(11)

for p, q, m in [(5, 2, 2), (4, 2, 2), (3, 2, 2), (6, 3, 2), (2, 1, 2)]:
    Y = RepTuple.random(p, q, m, "real", rng)
    v = star_exact_stability(Y)
    theory = classify_propcov(p, q, m).verdict.label
    print(f"(p,q,m)=({p},{q},{m})  mq-p={m * q - p:+d}  exact: {v.level.label:<11} theory: {theory}")

print("\ncanonical decompositions")
for p, q, m in [(2, 2, 1), (2, 3, 1), (5, 2, 2)]:
    print(f"  ({p},{q},{m}):", candec_star(p, q, m, rng_seed=0))

# a rank-deficient input is unstable whatever the entries are when mq < p
Y = RepTuple(np.einsum("a,ib->iab", rng.standard_normal(6), rng.standard_normal((2, 2))), "real")
v = star_exact_stability(Y)
print("\nrank-one sample:", v.level.label, "with arm subset", v.subset_witness, "of span", v.diagnostics["d_S"])

print("\nempirical verdicts")
for p, q, m in [(7, 3, 2), (6, 3, 2), (5, 3, 2)]:
    Y = RepTuple.random(p, q, m, "real", rng)
    print(f"  ({p},{q},{m}):", classify_empirical(Y, "propcov", rng_seed=0).outcome.value)
