"""Canonical decompositions of dimension vectors and direct-sum splittings of
concrete representations.

For the Kronecker quiver the canonical decomposition is exact whenever
``(p, q)`` is a multiple of a Schur root; in the remaining case it is found
numerically by splitting generic random samples and requiring replication.
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from math import gcd
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .quiver import DimVec2, RootClass, classify_root, is_schur_root
from .representation import RepTuple
from .stability import end_basis
from .thresholds import Field

TAU_EIG = 1e-6
TAU_BLOCK = 1e-8
REAL_ATTEMPTS = 30
COMPLEX_ATTEMPTS = 3


class AmbiguousSplit(RuntimeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InvalidCanDec(ValueError):
    pass


class StarDimVec(NamedTuple):
    """Dimension vector ``(x; y_1, ..., y_q)`` of the star quiver."""

    x: int
    arms: tuple[int, ...]

    def __str__(self) -> str:
        return f"({self.x};{','.join(map(str, self.arms))})"


class Exactness(str, enum.Enum):
    EXACT = "exact"
    NUMERIC_GENERIC = "numeric_generic"


@dataclass(frozen=True)
class CanDec:
    """Summands with multiplicities, kept sorted so equal decompositions compare equal."""

    summands: tuple[tuple[tuple, int], ...]
    exactness: Exactness = Exactness.EXACT
    confidence: int = 0

    @classmethod
    def from_dims(cls, dims, exactness=Exactness.EXACT, confidence=0) -> "CanDec":
        counts = Counter(dims)
        return cls(tuple(sorted(counts.items())), exactness, confidence)

    def multiset(self) -> list[tuple]:
        return sorted(d for d, k in self.summands for _ in range(k))

    def total(self) -> tuple[int, ...]:
        out = None
        for d, k in self.summands:
            flat = _flatten(d)
            out = [k * v for v in flat] if out is None else [o + k * v for o, v in zip(out, flat)]
        return tuple(out or ())

    def same_summands(self, other: "CanDec") -> bool:
        return self.summands == other.summands

    def __str__(self) -> str:
        parts = [f"{tuple(d) if not isinstance(d, StarDimVec) else d}" + (f"^{k}" if k > 1 else "") for d, k in self.summands]
        return " + ".join(parts)

    def to_dict(self) -> dict:
        return {
            "summands": [{"dim": list(_flatten(d)), "multiplicity": k} for d, k in self.summands],
            "exactness": self.exactness.value,
            "confidence": self.confidence,
        }


def _flatten(d) -> tuple[int, ...]:
    if isinstance(d, StarDimVec):
        return (d.x, *d.arms)
    return tuple(d)


# -- splitting concrete representations ------------------------------------------


@dataclass
class SummandSplit:
    """Direct-sum splitting ``P^{-1} Y_i Q = diag(blocks)``.

    ``row_blocks[k]`` and ``col_blocks[k]`` hold the basis vectors (in the
    original coordinates) of the k-th summand at the vertices x and y.
    """

    dims: list
    row_blocks: list[np.ndarray]
    col_blocks: list[np.ndarray]
    field: Field

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        return np.hstack(self.row_blocks), np.hstack(self.col_blocks)

    def transformed(self, Y: RepTuple) -> np.ndarray:
        P, Q = self.basis()
        return np.linalg.solve(P, Y.matrices) @ Q

    def block_residual(self, Y: RepTuple) -> float:
        """Largest off-block entry of the transformed tuple relative to ``|Y|``."""
        Z = self.transformed(Y)
        mask = np.zeros(Z.shape[1:], dtype=bool)
        i = j = 0
        for P, Q in zip(self.row_blocks, self.col_blocks):
            a, b = P.shape[1], Q.shape[1]
            mask[i : i + a, j : j + b] = True
            i += a
            j += b
        off = Z[:, ~mask]
        return float(np.abs(off).max() / Y.norm()) if off.size and Y.norm() else 0.0

    def blocks(self, Y: RepTuple) -> list[RepTuple | None]:
        """The summands as tuples (``None`` when a vertex dimension is zero)."""
        Z = self.transformed(Y)
        out = []
        i = j = 0
        for P, Q in zip(self.row_blocks, self.col_blocks):
            a, b = P.shape[1], Q.shape[1]
            out.append(RepTuple(Z[:, i : i + a, j : j + b], self.field) if a and b else None)
            i += a
            j += b
        return out

    def dim_multiset(self) -> list:
        return sorted(self.dims)

    def to_dict(self) -> dict:
        return {"field": self.field.value, "summand_dims": [list(_flatten(d)) for d in self.dims]}


def _cluster(values: np.ndarray, tol: float) -> list[list[complex]]:
    """Single-linkage clusters of points in the complex plane."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(values[i])
    return list(groups.values())


def _merge_conjugates(groups, tol):
    merged, used = [], set()
    for i, g in enumerate(groups):
        if i in used:
            continue
        used.add(i)
        g = list(g)
        target = np.conj(np.mean(g))
        if abs(target.imag) > tol:
            for j in range(i + 1, len(groups)):
                if j not in used and min(abs(np.asarray(groups[j]) - target)) <= 10 * tol:
                    g += groups[j]
                    used.add(j)
                    break
        merged.append(g)
    return merged


def _invariant_subspaces(M: np.ndarray, groups, real: bool):
    """For each eigenvalue group, a basis of the matching invariant subspace of ``M``."""
    n = M.shape[0]
    if n == 0:
        return [np.zeros((0, 0), dtype=M.dtype) for _ in groups]
    centres = [np.asarray(g) for g in groups]

    def nearest(z):
        return int(np.argmin([np.min(np.abs(c - z)) for c in centres]))

    out = []
    for k in range(len(groups)):
        if real:
            def sel(x, y=None, k=k):
                return nearest(x if y is None else complex(x, y)) == k

            _, Zs, sdim = sla.schur(M, output="real", sort=sel)
        else:
            def sel(x, k=k):
                return nearest(x) == k

            _, Zs, sdim = sla.schur(M.astype(complex), output="complex", sort=sel)
        out.append(Zs[:, :sdim])
    return out


def _split_once(Z: np.ndarray, A: np.ndarray, B: np.ndarray, real: bool, star: bool, tol_eig: float):
    """Split ``Z`` along the eigenvalue clusters of the endomorphism ``(A, B)``.

    Returns ``(P, Q, dims)`` or ``None`` when there is a single cluster;
    raises ``AmbiguousSplit`` when the split does not block-diagonalize ``Z``.
    """
    m, p, q = Z.shape
    eigs = np.concatenate([np.linalg.eigvals(A) if p else [], np.diag(B) if star else np.linalg.eigvals(B) if q else []])
    scale = max(1.0, float(np.abs(eigs).max()))
    tol = tol_eig * scale
    groups = _cluster(eigs.astype(complex), tol)
    if real:
        groups = _merge_conjugates(groups, tol)
    if len(groups) < 2:
        return None
    rows = _invariant_subspaces(A, groups, real)
    if star:
        centres = [np.asarray(g) for g in groups]
        lab = [int(np.argmin([np.min(np.abs(c - z)) for c in centres])) for z in np.diag(B)]
        eye = np.eye(q, dtype=Z.dtype)
        cols = [eye[:, [j for j in range(q) if lab[j] == k]] for k in range(len(groups))]
    else:
        cols = _invariant_subspaces(B, groups, real)
    if sum(r.shape[1] for r in rows) != p or sum(c.shape[1] for c in cols) != q:
        raise AmbiguousSplit("eigenvalue clusters could not be separated", {"clusters": len(groups)})
    P = np.hstack(rows).astype(Z.dtype, copy=False)
    Q = np.hstack(cols).astype(Z.dtype, copy=False)
    try:
        T = np.linalg.solve(P, Z) @ Q
    except np.linalg.LinAlgError as exc:
        raise AmbiguousSplit("singular change of basis") from exc
    mask = np.zeros((p, q), dtype=bool)
    i = j = 0
    dims = []
    for r, c in zip(rows, cols):
        a, b = r.shape[1], c.shape[1]
        mask[i : i + a, j : j + b] = True
        dims.append((a, b))
        i += a
        j += b
    znorm = max(np.linalg.norm(Z), np.finfo(float).tiny)
    off = T[:, ~mask]
    if off.size and np.abs(off).max() > TAU_BLOCK * znorm:
        raise AmbiguousSplit("off-block residual too large", {"residual": float(np.abs(off).max() / znorm)})
    return P, Q, dims, T


def _decompose(Z: np.ndarray, real: bool, star: bool, rng, tol_eig: float):
    """Recursive splitting; returns a list of ``(P_block, Q_block)`` in ``Z``'s coordinates."""
    m, p, q = Z.shape
    dtype = Z.dtype
    if p == 0 or q == 0:
        eye_p, eye_q = np.eye(p, dtype=dtype), np.eye(q, dtype=dtype)
        return [(eye_p[:, [i]], eye_q[:, :0]) for i in range(p)] + [
            (eye_p[:, :0], eye_q[:, [j]]) for j in range(q)
        ]
    basis = end_basis(Z, diagonal_right=star)
    if len(basis) <= 1:
        return [(np.eye(p, dtype=dtype), np.eye(q, dtype=dtype))]
    attempts = REAL_ATTEMPTS if real else COMPLEX_ATTEMPTS
    failure = None
    for _ in range(attempts):
        if real:
            c = rng.standard_normal(len(basis))
        else:
            c = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        A = sum(ci * b[0] for ci, b in zip(c, basis))
        B = sum(ci * b[1] for ci, b in zip(c, basis))
        try:
            res = _split_once(Z, A, B, real, star, tol_eig)
        except AmbiguousSplit as exc:
            failure = exc
            continue
        if res is None:
            continue
        P, Q, dims, T = res
        out = []
        i = j = 0
        for a, b in dims:
            for Ps, Qs in _decompose(np.ascontiguousarray(T[:, i : i + a, j : j + b]), real, star, rng, tol_eig):
                out.append((P[:, i : i + a] @ Ps, Q[:, j : j + b] @ Qs))
            i += a
            j += b
        return out
    if failure is not None:
        raise failure
    return [(np.eye(p, dtype=dtype), np.eye(q, dtype=dtype))]


def decompose_representation(
    Y: RepTuple, field: Field | str | None = None, rng_seed=None, star: bool = False, tol_eig: float = TAU_EIG
) -> SummandSplit:
    """Split ``Y`` into indecomposable summands.

    A random element of the endomorphism algebra is drawn and the tuple is
    split along its generalized eigenspaces, recursively.  Over the reals
    conjugate eigenvalue pairs stay together so that the splitting is real,
    and several random elements are tried before a summand is declared
    indecomposable.  With ``star`` the arm torus replaces ``GL_q`` and summand
    dimensions are star-quiver vectors.
    """
    field = Y.field if field is None else Field(field)
    if field is Field.REAL and not Y.is_real_valued():
        raise ValueError("a real splitting needs real-valued matrices")
    rng = np.random.default_rng(rng_seed)
    mats = Y.matrices.real.astype(float) if field is Field.REAL else Y.matrices.astype(complex)
    pieces = _decompose(mats, field is Field.REAL, star, rng, tol_eig)
    dims = []
    for P, Q in pieces:
        if star:
            arms = tuple(int(np.any(np.abs(Q[j]) > 0.5)) for j in range(Y.q))
            dims.append(StarDimVec(P.shape[1], arms))
        else:
            dims.append(DimVec2(P.shape[1], Q.shape[1]))
    split = SummandSplit(dims, [P for P, _ in pieces], [Q for _, Q in pieces], field)
    if split.block_residual(RepTuple(mats, field)) > TAU_BLOCK:
        raise AmbiguousSplit("accumulated splitting is not block diagonal")
    return split


# -- canonical decompositions ------------------------------------------------------


def _numeric_candec(sampler, check, rng_seed, n_agree: int, max_samples: int, star: bool) -> CanDec:
    seq = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    seeds = seq.spawn(max_samples)
    tally: Counter = Counter()
    for seq in seeds:
        rng = np.random.default_rng(seq)
        Y = sampler(rng)
        try:
            split = decompose_representation(Y, Field.COMPLEX, rng, star=star)
        except AmbiguousSplit:
            continue
        dims = tuple(sorted(split.dims))
        if not all(check(d) for d in dims):
            continue
        tally[dims] += 1
        best, count = tally.most_common(1)[0]
        if count >= n_agree:
            return CanDec.from_dims(best, Exactness.NUMERIC_GENERIC, count)
    raise AmbiguousSplit(
        f"fewer than {n_agree} of {max_samples} samples agree", {"tally": {str(k): v for k, v in tally.items()}}
    )


def candec_kronecker(
    m: int, p: int, q: int, rng_seed=None, numeric: bool = False, n_agree: int = 5, max_samples: int = 10
) -> CanDec:
    """Canonical decomposition of ``(p, q)`` for the m-Kronecker quiver."""
    if min(m, p, q) < 1:
        raise ValueError("m, p, q must be positive")
    d = gcd(p, q)
    value = p * p + q * q - m * p * q
    if not numeric:
        if value < 0:
            return CanDec.from_dims([DimVec2(p, q)])
        if value == 0 or value == d * d:
            return CanDec.from_dims([DimVec2(p // d, q // d)] * d)
    return _numeric_candec(
        lambda rng: RepTuple.random(p, q, m, Field.COMPLEX, rng),
        lambda beta: is_schur_root(m, beta),
        rng_seed,
        n_agree,
        max_samples,
        star=False,
    )


def scale_candec(m: int, base: CanDec, k: int) -> CanDec:
    """Canonical decomposition of ``k`` times the vector decomposed by ``base``.

    Real and isotropic Schur roots repeat; non-isotropic imaginary roots scale.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return base
    dims = []
    for beta, mult in base.summands:
        if beta == (0, 0) or not is_schur_root(m, beta):
            raise InvalidCanDec(f"{tuple(beta)} is not a Schur root for m={m}")
        kind = classify_root(m, beta)
        if kind is RootClass.IMAGINARY_NON_ISOTROPIC:
            if mult > 1:
                raise InvalidCanDec(f"imaginary root {tuple(beta)} cannot repeat")
            dims.append(DimVec2(k * beta[0], k * beta[1]))
        else:
            dims.extend([DimVec2(*beta)] * (mult * k))
    return CanDec.from_dims(dims, base.exactness, base.confidence)


def candec_star(p: int, q: int, m: int, rng_seed=None, numeric: bool = False, n_agree: int = 5, max_samples: int = 10) -> CanDec:
    """Canonical decomposition of ``(p; 1, ..., 1)`` for the star quiver with ``m`` arrows per arm."""
    if min(m, p, q) < 1:
        raise ValueError("m, p, q must be positive")
    if not numeric:
        if m * q == p:
            unit = np.eye(q, dtype=int)
            return CanDec.from_dims([StarDimVec(m, tuple(int(v) for v in unit[j])) for j in range(q)])
        if m * q > p:
            return CanDec.from_dims([StarDimVec(p, (1,) * q)])
    return _numeric_candec(
        lambda rng: RepTuple.random(p, q, m, Field.COMPLEX, rng),
        lambda beta: True,
        rng_seed,
        n_agree,
        max_samples,
        star=True,
    )
