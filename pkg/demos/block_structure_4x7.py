"""
A pair of 4 x 7 matrices
========================

Two generic 4 x 7 matrices can be brought simultaneously into a block form
with row blocks 1, 1, 2 and column blocks 2, 2, 3.  The blocks are the
indecomposable summands, and the block form also hands us a
one-parameter subgroup that drives the pair to zero.
"""
import numpy as np

from qmle.decomposition import candec_kronecker, decompose_representation
from qmle.representation import RepTuple
from qmle.stability import build_one_ps, scaling_semistability, verify_one_ps

np.set_printoptions(precision=2, suppress=True, linewidth=120)
rng = np.random.default_rng(3)
Y = RepTuple.random(4, 7, 2, "real", rng)

print("generic decomposition of (4,7) with two arrows:", candec_kronecker(2, 4, 7, rng_seed=0))

split = decompose_representation(Y, "complex", rng_seed=1)
print("summands of this sample:", [tuple(d) for d in split.dims])
print(f"off-block mass after the change of basis: {split.block_residual(Y):.1e}")
Z = split.transformed(Y)
print("first matrix in the new basis (magnitudes):")
print(np.abs(Z[0]))

# the scaling test finds the pair unstable and returns a certificate
v = scaling_semistability(Y)
print("\nscaling verdict:", v.level.label)
print("certificate weights:", v.certificate.row_weights, v.certificate.col_weights)

# hand-built certificate on the coordinate block pattern
Yb = np.zeros((2, 4, 7))
Yb[:, 0, 0:2] = rng.standard_normal((2, 2))
Yb[:, 1, 2:4] = rng.standard_normal((2, 2))
Yb[:, 2:4, 4:7] = rng.standard_normal((2, 2, 3))
Yb = RepTuple(Yb, "real")
cert = build_one_ps(Yb, np.eye(4)[:, :2], np.eye(7)[:, :4])
print("\nblock pattern weights:", cert.row_weights, cert.col_weights)
for t in (1.0, 0.5, 0.1):
    lam, mu = cert.evaluate(t)
    print(f"t={t}: |lambda Y mu^-1| = {np.linalg.norm(lam @ Yb.matrices @ np.linalg.inv(mu)):.3f}")
print("verified:", verify_one_ps(Yb, cert))
