"""Integer combinatorics of the m-Kronecker quiver.

The quiver has two vertices ``x`` and ``y`` and ``m`` arrows ``y -> x``, so a
representation of dimension ``(p, q)`` is an m-tuple of ``p x q`` matrices.
Everything here is exact integer arithmetic.
"""
from __future__ import annotations

import enum
from math import gcd
from typing import NamedTuple


class ZeroVectorError(ValueError):
    """Raised when the zero dimension vector is passed to a root classifier."""


class DimVec2(NamedTuple):
    a: int  # dimension at the sink vertex x
    b: int  # dimension at the source vertex y

    def __add__(self, other):  # type: ignore[override]
        return DimVec2(self.a + other[0], self.b + other[1])

    def scale(self, k: int) -> "DimVec2":
        return DimVec2(k * self.a, k * self.b)

    @property
    def primitive(self) -> "DimVec2":
        d = gcd(self.a, self.b)
        return DimVec2(self.a // d, self.b // d) if d else self


class Weight2(NamedTuple):
    sx: int
    sy: int


class RootClass(enum.Enum):
    REAL = "real"
    ISOTROPIC = "isotropic"
    IMAGINARY_NON_ISOTROPIC = "imaginary_non_isotropic"
    NOT_ROOT = "not_root"


def _as_dimvec(beta) -> DimVec2:
    a, b = int(beta[0]), int(beta[1])
    if a < 0 or b < 0:
        raise ValueError(f"dimension vector must be nonnegative, got {(a, b)}")
    return DimVec2(a, b)


def euler_form(m: int, beta, gamma) -> int:
    """Euler form of the m-Kronecker quiver.

    ``<beta, gamma> = beta.a*gamma.a + beta.b*gamma.b - m*beta.b*gamma.a``
    (one term per vertex, minus one term per arrow ``y -> x``).
    """
    if m < 1:
        raise ValueError("m must be positive")
    b1, b2 = _as_dimvec(beta), _as_dimvec(gamma)
    return b1.a * b2.a + b1.b * b2.b - m * b1.b * b2.a


def tits_form(m: int, beta) -> int:
    return euler_form(m, beta, beta)


def classify_root(m: int, beta) -> RootClass:
    beta = _as_dimvec(beta)
    if beta == (0, 0):
        raise ZeroVectorError("the zero vector is not a root")
    value = tits_form(m, beta)
    if value == 1:
        return RootClass.REAL
    if value == 0:
        return RootClass.ISOTROPIC
    if value < 0:
        return RootClass.IMAGINARY_NON_ISOTROPIC
    return RootClass.NOT_ROOT


def is_schur_root(m: int, beta) -> bool:
    """Whether a generic representation of dimension ``beta`` is indecomposable.

    Non-isotropic imaginary roots are always Schur; real and isotropic roots
    are Schur exactly when indivisible.
    """
    beta = _as_dimvec(beta)
    value = tits_form(m, beta) if beta != (0, 0) else None
    if value is None:
        raise ZeroVectorError("the zero vector is not a root")
    if value < 0:
        return True
    if value in (0, 1):
        return gcd(beta.a, beta.b) == 1
    return False


def canonical_weight(p: int, q: int) -> Weight2:
    """The indivisible weight ``(-q', p')`` vanishing on ``(p, q)``."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive")
    d = gcd(p, q)
    return Weight2(-q // d, p // d)


def weight_value(sigma, beta) -> int:
    return int(sigma[0]) * int(beta[0]) + int(sigma[1]) * int(beta[1])
