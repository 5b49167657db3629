import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import golden_4x7_tuple, random_sl
from qmle.quiver import DimVec2, tits_form
from qmle.representation import RepTuple
from qmle.stability import (
    EnumerationLimit,
    NoDestabilizer,
    NotASubrepresentation,
    OnePSCertificate,
    StabilityLevel,
    build_one_ps,
    end_algebra,
    lr_stability,
    scaling_semistability,
    stabilizer_dimension,
    star_arm_ranks,
    star_exact_stability,
    verify_one_ps,
)


def identity_tuple():
    return RepTuple(np.eye(2)[None], "real")


# -- endomorphisms ------------------------------------------------------------


def test_end_algebra_identity():
    E = end_algebra(identity_tuple())
    assert E.dimension == 4
    for A, B in E.basis:
        np.testing.assert_allclose(A, B, atol=1e-12)
    assert stabilizer_dimension(identity_tuple()) == 3


@pytest.mark.parametrize("pqm, end_dim, stab_dim", [((5, 4, 2), 1, 0), ((6, 4, 2), 4, 3), ((4, 7, 2), 9, 7), ((3, 3, 2), 3, 2)])
def test_end_and_stabilizer_generic(pqm, end_dim, stab_dim, rng):
    for _ in range(3):
        Y = RepTuple.random(*pqm, "complex", rng)
        E = end_algebra(Y)
        assert E.dimension == end_dim
        assert stabilizer_dimension(Y) == stab_dim
        for A, B in E.basis:
            assert np.linalg.norm(A @ Y.matrices - Y.matrices @ B) < 1e-8 * Y.norm()


def generic_end_dim(p, q, m):
    """Oracle from the Euler form: generic tuples are bricks when <a,a> < 0,
    a direct sum of d pairwise non-isomorphic bricks when <a,a> = 0, and
    rigid (dim End = <a,a>) when <a,a> > 0."""
    from math import gcd

    value = tits_form(m, DimVec2(p, q))
    if value < 0:
        return 1
    if value == 0:
        return gcd(p, q)
    return value


@pytest.mark.parametrize("m", [1, 2, 3])
def test_end_dimension_oracle(m, rng):
    for p in range(1, 6):
        for q in range(1, 6):
            Y = RepTuple.random(p, q, m, "complex", rng)
            assert end_algebra(Y).dimension == generic_end_dim(p, q, m), (p, q, m)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_stabilizer_is_end_minus_trace_rank(p, q, m, seed):
    Y = RepTuple.random(p, q, m, "complex", np.random.default_rng(seed))
    E = end_algebra(Y)
    traces = np.array([[np.trace(A), np.trace(B)] for A, B in E.basis])
    rank = np.linalg.matrix_rank(traces, tol=1e-8 * max(1.0, np.abs(traces).max()))
    assert stabilizer_dimension(Y) == E.dimension - rank


# -- scaling -------------------------------------------------------------------


def test_zero_tuple_unstable():
    v = scaling_semistability(RepTuple(np.zeros((2, 3, 4)), "real"))
    assert v.is_unstable
    assert verify_one_ps(RepTuple(np.zeros((2, 3, 4)), "real"), v.certificate)


@pytest.mark.parametrize("pqm", [(7, 4, 2), (4, 7, 2), (2, 3, 1), (8, 2, 3)])
def test_generic_unstable_cells(pqm, rng):
    for field in ("real", "complex"):
        Y = RepTuple.random(*pqm, field, rng)
        v = scaling_semistability(Y)
        assert v.level is StabilityLevel.UNSTABLE
        assert verify_one_ps(Y, v.certificate)


@pytest.mark.parametrize("pqm", [(5, 4, 2), (6, 4, 2), (8, 4, 2), (3, 3, 2), (2, 2, 3)])
def test_generic_semistable_cells(pqm, rng):
    Y = RepTuple.random(*pqm, "real", rng)
    v = scaling_semistability(Y)
    assert v.level is StabilityLevel.SEMISTABLE
    assert v.diagnostics["residual"] < 1e-8 * (pqm[0] * pqm[1] * pqm[2]) ** 2


def test_gauge_invariance(rng):
    for pqm in [(5, 4, 2), (7, 4, 2)]:
        Y = RepTuple.random(*pqm, "real", rng)
        Z = Y.act(random_sl(Y.p, rng), random_sl(Y.q, rng))
        assert scaling_semistability(Y).level is scaling_semistability(Z).level


def test_linearly_independent_summands_unstable(rng):
    A = RepTuple.random(1, 1, 2, "real", rng)
    B = RepTuple.random(1, 2, 2, "real", rng)
    Y = RepTuple.block_diagonal([A, B])
    v = scaling_semistability(Y)
    assert v.is_unstable and verify_one_ps(Y, v.certificate)
    e = np.eye(2), np.eye(3)
    # the (1, 2) summand has positive weight and destabilizes; the (1, 1) one does not
    cert = build_one_ps(Y, e[0][:, [1]], e[1][:, [1, 2]])
    assert verify_one_ps(Y, cert)
    with pytest.raises(NoDestabilizer):
        build_one_ps(Y, e[0][:, [0]], e[1][:, [0]])


def test_lr_stability_levels(rng):
    assert lr_stability(RepTuple.random(5, 4, 2, "complex", rng), rng).level is StabilityLevel.STABLE
    assert lr_stability(RepTuple.random(6, 4, 2, "complex", rng), rng).level is StabilityLevel.POLYSTABLE
    assert lr_stability(RepTuple.random(7, 4, 2, "complex", rng), rng).level is StabilityLevel.UNSTABLE
    # a semistable tuple that is not polystable: (1,1) with a nonsplit extension of itself
    Y = RepTuple(np.array([[[1.0, 1.0], [0.0, 1.0]], [[2.0, 0.0], [0.0, 2.0]]]), "real")
    assert lr_stability(Y, rng).level is StabilityLevel.SEMISTABLE


# -- one-parameter subgroups ---------------------------------------------------


def test_golden_example_weights():
    Y = golden_4x7_tuple(0)
    cert = OnePSCertificate(np.eye(4), np.eye(7), [7, 7, -7, -7], [6, 6, 6, 6, -8, -8, -8])
    assert verify_one_ps(Y, cert)
    lam, mu = cert.evaluate(0.5)
    np.testing.assert_allclose(lam @ Y.matrices @ np.linalg.inv(mu), 0.5 * Y.matrices, atol=1e-12)
    flipped = OnePSCertificate(np.eye(4), np.eye(7), [-7, -7, 7, 7], [-6, -6, -6, -6, 8, 8, 8])
    assert not verify_one_ps(Y, flipped)
    zero = OnePSCertificate(np.eye(4), np.eye(7), [0] * 4, [0] * 7)
    assert not verify_one_ps(Y, zero)


def test_build_reproduces_golden_weights():
    Y = golden_4x7_tuple(1)
    U = np.eye(4)[:, :2]
    W = np.eye(7)[:, :4]
    cert = build_one_ps(Y, U, W)
    assert sorted(cert.row_weights) == sorted([7, 7, -7, -7])
    assert sorted(cert.col_weights) == sorted([6, 6, 6, 6, -8, -8, -8])
    gl, gr = cert.generators()
    np.testing.assert_allclose(gl, np.diag([7, 7, -7, -7]), atol=1e-10)
    np.testing.assert_allclose(gr, np.diag([6, 6, 6, 6, -8, -8, -8]), atol=1e-10)
    assert verify_one_ps(Y, cert)


def test_build_small_example():
    Y = RepTuple(np.array([[[1.0, 0.0], [1.0, 0.0]]]), "real")
    cert = build_one_ps(Y, np.zeros((2, 0)), np.array([[0.0], [1.0]]))
    gl, gr = cert.generators()
    np.testing.assert_allclose(gl, 0, atol=1e-12)
    np.testing.assert_allclose(np.diag(gr), [-1, 1], atol=1e-12)
    assert verify_one_ps(Y, cert)


def test_build_errors(rng):
    Y = RepTuple.random(5, 4, 2, "real", rng)
    with pytest.raises(NoDestabilizer):
        build_one_ps(Y, np.eye(5)[:, :3], np.eye(4)[:, :2])
    with pytest.raises(NotASubrepresentation):
        build_one_ps(Y, np.eye(5)[:, :1], np.eye(4)[:, :1])


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_certificates_sound(p, q, m, seed):
    Y = RepTuple.random(p, q, m, "real", np.random.default_rng(seed))
    v = scaling_semistability(Y)
    if v.is_unstable:
        assert verify_one_ps(Y, v.certificate)
    s = star_exact_stability(Y)
    if s.is_unstable:
        assert verify_one_ps(Y, s.certificate)


# -- star quiver ----------------------------------------------------------------


def test_star_identity_polystable():
    v = star_exact_stability(identity_tuple())
    assert v.level is StabilityLevel.POLYSTABLE
    assert sorted(v.split.blocks) == [(0,), (1,)]


def test_star_rank_one_unstable():
    Y = RepTuple(np.array([[[1.0, 1.0], [0.0, 0.0]]]), "real")
    v = star_exact_stability(Y)
    assert v.is_unstable
    assert v.subset_witness == (0, 1)
    assert v.diagnostics["d_S"] == 1
    assert verify_one_ps(Y, v.certificate)


def test_star_generic_stable(rng):
    assert star_exact_stability(RepTuple.random(2, 3, 1, "real", rng)).level is StabilityLevel.STABLE


def test_star_semistable_not_polystable():
    # arm 1 spans e1 only, arm 2 the whole plane: {1} is tight but {2} is not
    Y = RepTuple(np.array([[[1.0, 0.0], [0.0, 1.0]], [[1.0, 1.0], [0.0, 0.0]]]), "real")
    assert star_exact_stability(Y).level is StabilityLevel.SEMISTABLE


def test_star_ranks_and_limit(rng):
    Y = RepTuple.random(3, 3, 1, "real", rng)
    ranks = star_arm_ranks(Y)
    assert ranks[0b001] == 1 and ranks[0b011] == 2 and ranks[0b111] == 3
    with pytest.raises(EnumerationLimit):
        star_arm_ranks(RepTuple(np.ones((1, 1, 23)), "real"))
