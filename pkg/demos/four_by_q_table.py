"""
Two samples of p x 4 matrices
=============================

With m = 2 and q = 4 the four shapes p = 5, 6, 7, 8 land in all three
regimes: a unique MLE at p = 5, an MLE that is not unique at p = 6 and
p = 8, and an unbounded likelihood at p = 7.  Here the theory is compared
with the flip-flop algorithm on real Gaussian samples.
"""
import sys
import time

import numpy as np

from qmle.flipflop import classify_empirical, flip_flop
from qmle.harness import dkh_table, format_table
from qmle.representation import RepTuple

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20

start = time.perf_counter()
report = dkh_table(trials=trials)
print(format_table(report))
print(f"{trials} trials per row in {time.perf_counter() - start:.1f} s\n")

# look inside one sample from each row
rng = np.random.default_rng(0)
for p in (5, 6, 7, 8):
    Y = RepTuple.random(p, 4, 2, "real", rng)
    res = flip_flop(Y)
    v = classify_empirical(Y, rng_seed=1)
    extra = ""
    if v.probe is not None:
        extra = f", spread of psi1 (x) psi2 over random starts {v.probe.max_distance:.1e}"
    print(f"p={p}: flip-flop {res.status.value} after {res.iterations} sweeps ({res.reason or 'ok'}){extra}")
    if v.stability.is_unstable:
        cert = v.stability.certificate
        print(f"       destabilizing weights {cert.row_weights} / {cert.col_weights}")
