"""Stability of sample tuples under ``SL_p x SL_q`` (left-right action) and
``SL_p x ST_q`` (proportional-covariance action).

Unstable verdicts come with a destabilizing subrepresentation ``(U, W)``,
i.e. subspaces with ``Y_i W ⊆ U`` for every ``i`` and positive canonical
weight on ``(dim U, dim W)``.  From such a pair :func:`build_one_ps` produces
an explicit one-parameter subgroup driving the tuple to zero.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from math import gcd
from functools import reduce

import numpy as np

from . import linalg
from .quiver import canonical_weight, weight_value
from .representation import RepTuple

TAU_RANK = 1e-8
TAU_END = 1e-8
TAU_BLOCK = 1e-8
TAU_COLLAPSE = 1e-12
STAR_MAX_Q = 22


class Inconclusive(RuntimeError):
    """Neither the semistability nor the instability criterion was met."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EnumerationLimit(ValueError):
    pass


class NoDestabilizer(ValueError):
    pass


class NotASubrepresentation(ValueError):
    pass


class StabilityLevel(enum.IntEnum):
    UNSTABLE = 0
    SEMISTABLE = 1  # semistable, polystability undetermined
    POLYSTABLE = 2
    STABLE = 3

    @property
    def label(self) -> str:
        return ["Unstable", "SemistableOnly?", "Polystable", "Stable"][int(self)]


@dataclass
class Subrepresentation:
    """Orthonormal bases ``U`` (p x a) and ``W`` (q x b) with ``Y_i W ⊆ U``."""

    U: np.ndarray
    W: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return (self.U.shape[1], self.W.shape[1])


@dataclass
class OnePSCertificate:
    """Integer weights in the bases given by the columns of ``row_basis``/``col_basis``.

    After ``Y_i -> row_basis^{-1} Y_i col_basis`` every entry ``(r, c)`` that
    is not numerically zero has degree ``row_weights[r] - col_weights[c] > 0``.
    """

    row_basis: np.ndarray
    col_basis: np.ndarray
    row_weights: list[int]
    col_weights: list[int]

    def generators(self) -> tuple[np.ndarray, np.ndarray]:
        """The diagonalizable generators of the subgroup in standard coordinates."""
        R, C = self.row_basis, self.col_basis
        gl = R @ np.diag(np.asarray(self.row_weights, dtype=float)) @ np.linalg.inv(R)
        gr = C @ np.diag(np.asarray(self.col_weights, dtype=float)) @ np.linalg.inv(C)
        return gl, gr

    def evaluate(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Group element ``(lambda(t), mu(t))`` for real ``t > 0``."""
        R, C = self.row_basis, self.col_basis
        lam = R @ np.diag(t ** np.asarray(self.row_weights, dtype=float)) @ np.linalg.inv(R)
        mu = C @ np.diag(t ** np.asarray(self.col_weights, dtype=float)) @ np.linalg.inv(C)
        return lam, mu

    def to_dict(self) -> dict:
        def mat(M):
            out = {"real": np.real(M).tolist()}
            if np.iscomplexobj(M) and np.any(np.imag(M) != 0):
                out["imag"] = np.imag(M).tolist()
            return out

        return {
            "row_weights": list(map(int, self.row_weights)),
            "col_weights": list(map(int, self.col_weights)),
            "row_basis": mat(self.row_basis),
            "col_basis": mat(self.col_basis),
        }


@dataclass
class StabilityVerdict:
    level: StabilityLevel
    certificate: OnePSCertificate | None = None
    witness: Subrepresentation | None = None
    subset_witness: tuple[int, ...] | None = None
    split: object | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_unstable(self) -> bool:
        return self.level is StabilityLevel.UNSTABLE

    def to_dict(self) -> dict:
        out = {"level": self.level.label, "diagnostics": _jsonable(self.diagnostics)}
        if self.witness is not None:
            out["witness_dims"] = list(self.witness.dims)
        if self.subset_witness is not None:
            out["subset_witness"] = [j + 1 for j in self.subset_witness]
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        if self.split is not None and hasattr(self.split, "to_dict"):
            out["split"] = self.split.to_dict()
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# -- endomorphisms -----------------------------------------------------------


@dataclass
class EndAlgebra:
    basis: list[tuple[np.ndarray, np.ndarray]]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def element(self, coeffs) -> tuple[np.ndarray, np.ndarray]:
        coeffs = np.asarray(coeffs)
        A = sum(c * b[0] for c, b in zip(coeffs, self.basis))
        B = sum(c * b[1] for c, b in zip(coeffs, self.basis))
        return A, B


def _commutation_matrix(mats: np.ndarray, diagonal_right: bool = False) -> np.ndarray:
    """Matrix of ``(A, B) -> (A Y_i - Y_i B)_i`` on column-major ``vec``.

    With ``diagonal_right`` the unknown ``B`` is restricted to diagonal
    matrices (the torus at the arms of the star quiver).
    """
    m, p, q = mats.shape
    Ip, Iq = np.eye(p), np.eye(q)
    rows = []
    for Yi in mats:
        left = np.kron(Yi.T, Ip)
        if diagonal_right:
            right = np.zeros((p * q, q), dtype=Yi.dtype)
            for j in range(q):
                right[j * p : (j + 1) * p, j] = -Yi[:, j]
        else:
            right = -np.kron(Iq, Yi)
        rows.append(np.hstack([left, right]))
    return np.vstack(rows)


def _unpack_pair(v: np.ndarray, p: int, q: int, diagonal_right: bool):
    A = v[: p * p].reshape(p, p, order="F")
    B = np.diag(v[p * p :]) if diagonal_right else v[p * p :].reshape(q, q, order="F")
    return A, B


def end_algebra(Y: RepTuple, diagonal_right: bool = False, rtol: float = TAU_RANK) -> EndAlgebra:
    """Pairs ``(A, B)`` with ``A Y_i = Y_i B`` for all ``i``, over the field of ``Y``."""
    return EndAlgebra(end_basis(Y.matrices, diagonal_right, rtol))


def end_basis(mats: np.ndarray, diagonal_right: bool = False, rtol: float = TAU_RANK):
    _, p, q = mats.shape
    K = linalg.null_space(_commutation_matrix(mats, diagonal_right), rtol)
    return [_unpack_pair(v, p, q, diagonal_right) for v in K.T]


def stabilizer_dimension(Y: RepTuple, diagonal_right: bool = False, rtol: float = TAU_RANK) -> int:
    """Dimension of the Lie algebra of the stabilizer in ``SL_p x SL_q``.

    Solved directly as the kernel of the commutation map augmented by the
    two trace functionals.
    """
    p, q = Y.p, Y.q
    M = _commutation_matrix(Y.matrices, diagonal_right)
    nb = q if diagonal_right else q * q
    scale = max(np.linalg.norm(M, 2) if M.size else 1.0, 1.0)
    tr_a = np.zeros(p * p + nb, dtype=M.dtype)
    tr_a[: p * p : p + 1] = scale
    tr_b = np.zeros(p * p + nb, dtype=M.dtype)
    if diagonal_right:
        tr_b[p * p :] = scale
    else:
        tr_b[p * p :: q + 1] = scale
    aug = np.vstack([M, tr_a, tr_b])
    return linalg.null_space(aug, rtol).shape[1]


# -- one-parameter subgroups ---------------------------------------------------


def _orthonormal(B: np.ndarray, n: int, dtype) -> np.ndarray:
    B = np.asarray(B, dtype=dtype).reshape(n, -1)
    if B.shape[1] == 0:
        return B
    return linalg.range_basis(B)


def subrep_residual(Y: RepTuple, U: np.ndarray, W: np.ndarray) -> float:
    """Frobenius norm of the part of ``Y_i W`` outside ``U``, relative to ``|Y|``."""
    if W.shape[1] == 0:
        return 0.0
    img = Y.matrices @ W
    if U.shape[1]:
        img = img - U @ (U.conj().T @ img)
    return float(np.linalg.norm(img)) / max(Y.norm(), np.finfo(float).tiny)


def build_one_ps(Y: RepTuple, U, W, tol: float = TAU_END) -> OnePSCertificate:
    """One-parameter subgroup of ``SL_p x SL_q`` destabilizing ``Y`` along ``(U, W)``.

    With ``a = dim U`` and ``b = dim W`` the weights are ``q(p-a)`` on ``U``,
    ``-qa`` off it, ``p(q-b)`` on ``W`` and ``-pb`` off it, divided by their
    common gcd.  All three nonzero blocks then have degree ``pb - qa > 0``
    or more.
    """
    p, q = Y.p, Y.q
    dtype = Y.dtype
    U = _orthonormal(U, p, dtype)
    W = _orthonormal(W, q, dtype)
    a, b = U.shape[1], W.shape[1]
    sigma = canonical_weight(p, q)
    if weight_value(sigma, (a, b)) <= 0:
        raise NoDestabilizer(f"weight of {(a, b)} is {weight_value(sigma, (a, b))}, not positive")
    res = subrep_residual(Y, U, W)
    if res > tol:
        raise NotASubrepresentation(f"relative residual {res:.3e} exceeds {tol:.1e}")
    x_on, x_off = q * (p - a), -q * a
    y_on, y_off = p * (q - b), -p * b
    g = reduce(gcd, [abs(x_on), abs(x_off), abs(y_on), abs(y_off)])
    g = g or 1
    row_w = [x_on // g] * a + [x_off // g] * (p - a)
    col_w = [y_on // g] * b + [y_off // g] * (q - b)
    return OnePSCertificate(linalg.complete_basis(U), linalg.complete_basis(W), row_w, col_w)


def verify_one_ps(Y: RepTuple, cert: OnePSCertificate, tol: float = TAU_BLOCK) -> bool:
    """Check that ``g(t) Y -> 0`` as ``t -> 0`` for the certificate's subgroup."""
    rw = np.asarray(cert.row_weights)
    cw = np.asarray(cert.col_weights)
    if rw.shape != (Y.p,) or cw.shape != (Y.q,):
        return False
    if rw.sum() != 0 or cw.sum() != 0:
        return False
    try:
        Z = np.linalg.solve(cert.row_basis, Y.matrices) @ cert.col_basis
    except np.linalg.LinAlgError:
        return False
    degree = rw[:, None] - cw[None, :]
    big = np.abs(Z) > tol * Y.norm()
    return not bool(np.any(big & (degree[None, :, :] <= 0)))


# -- operator scaling ----------------------------------------------------------


def _refine_witness(Y: RepTuple, W: np.ndarray, a: int, sweeps: int = 4, tol: float = TAU_END):
    """Alternate ``U = span(Y_i W)`` (top ``a`` directions) and ``W = preimage(U)``.

    Returns a verified :class:`Subrepresentation` or ``None``.
    """
    m, p, q = Y.matrices.shape
    k = W.shape[1]
    ynorm = Y.norm()
    U = np.zeros((p, 0), dtype=Y.dtype)
    for _ in range(sweeps):
        if a > 0:
            img = np.concatenate(list(Y.matrices @ W), axis=1)
            u, _, _ = np.linalg.svd(img, full_matrices=False)
            U = u[:, :a]
            proj = Y.matrices - U @ (U.conj().T @ Y.matrices)
        else:
            proj = Y.matrices
        M = proj.reshape(m * p, q)
        _, s, vh = np.linalg.svd(M)
        s_full = np.concatenate([s, np.zeros(q - s.size)])
        b = int(np.count_nonzero(s_full <= tol * ynorm))
        W = vh[q - max(b, k) :].conj().T
        if b >= k:
            break
    if W.shape[1] == 0:
        return None
    if weight_value(canonical_weight(p, q), (a, W.shape[1])) <= 0:
        return None
    if subrep_residual(Y, U, W) > tol:
        return None
    return Subrepresentation(U, W)


def _search_witness(Y: RepTuple, Z: np.ndarray, R: np.ndarray, loose: float = 1e-3):
    """Look for a destabilizing pair using the spectrum of the scaled tuple ``Z = L Y R``."""
    m, p, q = Z.shape
    T = linalg.hermitize(np.einsum("iab,iac->bc", Z.conj(), Z))
    _, V = np.linalg.eigh(T)
    znorm = np.linalg.norm(Z)
    for k in range(1, q + 1):
        a = -(-p * k // q) - 1  # largest a with p k - q a > 0
        if a < 0:
            continue
        Wk = V[:, :k]
        img = np.concatenate(list(Z @ Wk), axis=1)
        s = linalg.singular_values(img)
        if a < s.size and s[a] > loose * znorm:
            continue
        Worig = linalg.range_basis(R @ Wk)
        if Worig.shape[1] != k:
            continue
        wit = _refine_witness(Y, Worig, a)
        if wit is not None:
            return wit
    return None


def _trivial_witness(Y: RepTuple):
    """Rank-deficient ``sum Y_i Y_i^*`` or ``sum Y_i^* Y_i`` give immediate witnesses."""
    p, q = Y.p, Y.q
    Urange = linalg.range_basis(Y.stacked_columns())
    if Urange.shape[1] < p:
        return Subrepresentation(Urange, np.eye(q, dtype=Y.dtype))
    Wker = linalg.null_space(Y.stacked_rows())
    if Wker.shape[1] > 0:
        return Subrepresentation(np.zeros((p, 0), dtype=Y.dtype), Wker)
    return None


def _unstable(Y: RepTuple, wit: Subrepresentation, diagnostics: dict) -> StabilityVerdict:
    cert = build_one_ps(Y, wit.U, wit.W)
    return StabilityVerdict(StabilityLevel.UNSTABLE, certificate=cert, witness=wit, diagnostics=diagnostics)


def scaling_semistability(
    Y: RepTuple,
    eps: float | None = None,
    max_iter: int = 10_000,
    check_every: int = 5,
    collapse_tol: float = TAU_COLLAPSE,
) -> StabilityVerdict:
    """Decide semistability for the left-right action by alternating scaling.

    Each sweep normalizes ``S = sum Y_i Y_i^*`` to ``(N/p) I`` and then
    ``T = sum Y_i^* Y_i`` to ``(N/q) I`` with mass ``N = m p q``.  The tuple is
    reported semistable once ``|S - (N/p)I|^2 + |T - (N/q)I|^2 < eps``; when
    ``eps <= N^2/(p^2 q^3)`` (the default for ``p, q`` up to about 40) this
    rules out every destabilizing subspace.  Instability is reported only
    with a verified witness and one-parameter subgroup, searched for
    periodically among the low-mass eigenspaces of ``T``.
    """
    m, p, q = Y.matrices.shape
    N = float(m * p * q)
    if eps is None:
        eps = 1e-8 * N * N
    diagnostics = {"iterations": 0, "residual": None, "mass": N}
    ynorm = Y.norm()
    if ynorm == 0.0:
        wit = Subrepresentation(np.zeros((p, 0), dtype=Y.dtype), np.eye(q, dtype=Y.dtype))
        return _unstable(Y, wit, diagnostics)
    wit = _trivial_witness(Y)
    if wit is not None:
        return _unstable(Y, wit, diagnostics)

    Z = Y.matrices * (np.sqrt(N) / ynorm)
    L = np.eye(p, dtype=Y.dtype)
    R = np.eye(q, dtype=Y.dtype)
    Ip, Iq = np.eye(p), np.eye(q)
    ds = np.inf
    for it in range(1, max_iter + 1):
        S = linalg.hermitize(np.einsum("iab,icb->ac", Z, Z.conj()))
        Li = linalg.inv_sqrt_psd(S) * np.sqrt(N / p)
        Z = Li @ Z
        L = Li @ L
        S = linalg.hermitize(np.einsum("iab,icb->ac", Z, Z.conj()))
        T = linalg.hermitize(np.einsum("iab,iac->bc", Z.conj(), Z))
        ds = float(np.linalg.norm(S - (N / p) * Ip) ** 2 + np.linalg.norm(T - (N / q) * Iq) ** 2)
        diagnostics.update(iterations=it, residual=ds)
        if ds < eps:
            diagnostics["balancing_condition"] = float(np.linalg.cond(L) * np.linalg.cond(R))
            return StabilityVerdict(StabilityLevel.SEMISTABLE, diagnostics=diagnostics)
        if it == 1 or it % check_every == 0:
            wit = _search_witness(Y, Z, R)
            if wit is not None:
                return _unstable(Y, wit, diagnostics)
        Ri = linalg.inv_sqrt_psd(T) * np.sqrt(N / q)
        Z = Z @ Ri
        R = R @ Ri
        # keep the accumulated balancing matrices at determinant one
        L = L / abs(np.linalg.det(L)) ** (1.0 / p)
        R = R / abs(np.linalg.det(R)) ** (1.0 / q)
        smin = min(linalg.singular_values(L)[-1], linalg.singular_values(R)[-1])
        if smin < collapse_tol:
            diagnostics["collapsed"] = True
            wit = _search_witness(Y, Z, R)
            if wit is not None:
                return _unstable(Y, wit, diagnostics)
            raise Inconclusive("balancing collapsed without a verifiable witness", diagnostics)
    raise Inconclusive(f"no decision after {max_iter} sweeps (residual {ds:.3e})", diagnostics)


def lr_stability(Y: RepTuple, rng=None, **scaling_kwargs) -> StabilityVerdict:
    """Full stability level for the left-right action.

    Polystability is certified only through an explicit splitting into
    indecomposable summands of slope ``(p, q)``, each with a trivial
    stabilizer and balanced by scaling with bounded balancing matrices.
    Otherwise the level stays ``SEMISTABLE``.
    """
    from .decomposition import AmbiguousSplit, decompose_representation

    verdict = scaling_semistability(Y, **scaling_kwargs)
    if verdict.is_unstable:
        return verdict
    try:
        split = decompose_representation(Y, Y.field, rng)
    except AmbiguousSplit:
        return verdict
    verdict.split = split
    sigma = canonical_weight(Y.p, Y.q)
    for dims, block in zip(split.dims, split.blocks(Y)):
        if weight_value(sigma, dims) != 0:
            return verdict
        if stabilizer_dimension(block) != 0:
            return verdict
        try:
            sub = scaling_semistability(block, **scaling_kwargs)
        except Inconclusive:
            return verdict
        if sub.is_unstable or sub.diagnostics.get("balancing_condition", np.inf) > 1e8:
            return verdict
    verdict.level = StabilityLevel.STABLE if len(split.dims) == 1 else StabilityLevel.POLYSTABLE
    return verdict


# -- star quiver -----------------------------------------------------------------


def star_arm_ranks(Y: RepTuple, rtol: float = TAU_RANK) -> np.ndarray:
    """``ranks[mask]`` = dimension of the span of columns ``j in mask`` of all ``Y_i``."""
    m, p, q = Y.matrices.shape
    if q > STAR_MAX_Q:
        raise EnumerationLimit(f"q = {q} exceeds the subset enumeration bound {STAR_MAX_Q}")
    arms = np.transpose(Y.matrices, (2, 1, 0))  # arm j is the p x m matrix [Y_1 e_j ... Y_m e_j]
    smax = linalg.singular_values(Y.stacked_columns())
    thresh = rtol * smax[0] if smax.size else 0.0
    ranks = np.zeros(1 << q, dtype=int)
    for size in range(1, q + 1):
        combos = np.array(list(itertools.combinations(range(q), size)))
        batch = arms[combos]  # C x size x p x m
        batch = np.transpose(batch, (0, 2, 1, 3)).reshape(len(combos), p, size * m)
        sv = np.linalg.svd(batch, compute_uv=False)
        r = np.count_nonzero(sv > thresh, axis=1) if thresh > 0 else np.zeros(len(combos), int)
        masks = (1 << combos).sum(axis=1)
        ranks[masks] = r
    return ranks


@dataclass
class ArmSplit:
    """Partition of the arms into blocks spanning complementary subspaces."""

    blocks: list[tuple[int, ...]]
    ranks: list[int]

    def to_dict(self) -> dict:
        return {"arm_blocks": [[j + 1 for j in b] for b in self.blocks], "ranks": self.ranks}


def _submasks(mask: int):
    sub = (mask - 1) & mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _bits(mask: int) -> tuple[int, ...]:
    return tuple(j for j in range(mask.bit_length()) if mask >> j & 1)


def star_exact_stability(Y: RepTuple, rtol: float = TAU_RANK) -> StabilityVerdict:
    """Exact stability for ``SL_p x ST_q`` by enumerating arm subsets.

    With ``d_S`` the span dimension of the columns in ``S``, the tuple is
    unstable iff ``q d_S < p |S|`` for some ``S``, stable iff ``q d_S > p |S|``
    for every proper nonempty ``S`` (and ``d_[q] = p``), and polystable iff the
    arms split into tight blocks spanning complementary subspaces.
    """
    m, p, q = Y.matrices.shape
    ranks = star_arm_ranks(Y, rtol)
    full = (1 << q) - 1
    masks = np.arange(1, 1 << q)
    sizes = np.array([_popcount(int(s)) for s in masks])
    excess = p * sizes - q * ranks[1:]
    diagnostics = {"subsets_checked": int(masks.size)}
    worst = int(np.argmax(excess))
    if excess[worst] > 0:
        S = int(masks[worst])
        cols = _bits(S)
        arm_span = np.concatenate([Y.matrices[:, :, j].T for j in cols], axis=1)
        U = linalg.range_basis(arm_span, rtol)
        W = np.eye(q, dtype=Y.dtype)[:, list(cols)]
        wit = Subrepresentation(U, W)
        diagnostics["d_S"] = int(ranks[S])
        cert = build_one_ps(Y, U, W)
        return StabilityVerdict(
            StabilityLevel.UNSTABLE, certificate=cert, witness=wit, subset_witness=cols, diagnostics=diagnostics
        )
    tight = set(int(s) for s, e in zip(masks, excess) if e == 0)

    def split(S: int):
        inner = sorted((T for T in _submasks(S) if T in tight), key=_popcount)
        if not inner:
            return [S]
        for T in inner:
            C = S & ~T
            if C in tight and ranks[T] + ranks[C] == ranks[S]:
                left, right = split(T), split(C)
                if left is None or right is None:
                    return None
                return left + right
        return None

    parts = split(full)
    if parts is None:
        return StabilityVerdict(StabilityLevel.SEMISTABLE, diagnostics=diagnostics)
    arm_split = ArmSplit([_bits(S) for S in parts], [int(ranks[S]) for S in parts])
    level = StabilityLevel.STABLE if len(parts) == 1 else StabilityLevel.POLYSTABLE
    return StabilityVerdict(level, split=arm_split, diagnostics=diagnostics)
