"""Exact sample-size classification for the matrix normal and
proportional-covariance models, and the three threshold functions.

``mlt_b``, ``mlt_e`` and ``mlt_u`` are the smallest sample counts from which
the log-likelihood is almost surely bounded, an MLE almost surely exists, and
a unique MLE almost surely exists.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from math import gcd


class Model(str, enum.Enum):
    MATRIX_NORMAL = "mnm"
    PROPORTIONAL_COVARIANCE = "propcov"


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


class Verdict(enum.IntEnum):
    """Ordered by strength: unbounded < exists-not-unique < exists-unique."""

    LIKELIHOOD_UNBOUNDED = 0
    MLE_EXISTS_NOT_UNIQUE = 1
    MLE_EXISTS_UNIQUE = 2

    @property
    def label(self) -> str:
        return {0: "Unbounded", 1: "ExistsNotUnique", 2: "ExistsUnique"}[int(self)]


@dataclass(frozen=True)
class MnmVerdict:
    verdict: Verdict
    # the (2,2,2) real cell: unique MLEs occur on a full-dimensional but
    # non-dense set, so generic non-uniqueness must not be asserted there
    indeterminate_real_case: bool = False
    # True when unboundedness holds for every sample, not just almost surely
    holds_for_all_inputs: bool = False

    def __post_init__(self):
        if self.indeterminate_real_case and self.verdict is not Verdict.MLE_EXISTS_NOT_UNIQUE:
            raise ValueError("indeterminate_real_case requires MLE_EXISTS_NOT_UNIQUE")

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.label,
            "indeterminate_real_case": self.indeterminate_real_case,
            "holds_for_all_inputs": self.holds_for_all_inputs,
        }


@dataclass(frozen=True)
class ThresholdReport:
    p: int
    q: int
    mlt_b: int
    mlt_e: int
    mlt_u: int
    model: Model

    def __post_init__(self):
        if not (1 <= self.mlt_b <= self.mlt_e <= self.mlt_u):
            raise ValueError(f"thresholds out of order: {self}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.mlt_b, self.mlt_e, self.mlt_u)

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "p": self.p,
            "q": self.q,
            "mlt_b": self.mlt_b,
            "mlt_e": self.mlt_e,
            "mlt_u": self.mlt_u,
        }


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")


def classify_mnm(p: int, q: int, m: int, field: Field | str = Field.REAL) -> MnmVerdict:
    """Generic MLE behaviour of the matrix normal model with ``m`` samples."""
    _check_positive(p=p, q=q, m=m)
    field = Field(field)
    d = gcd(p, q)
    value = p * p + q * q - m * p * q
    if value < 0:
        return MnmVerdict(Verdict.MLE_EXISTS_UNIQUE)
    if value == 0 or value == d * d:
        if d == 1:
            return MnmVerdict(Verdict.MLE_EXISTS_UNIQUE)
        flag = field is Field.REAL and (p, q, m) == (2, 2, 2)
        return MnmVerdict(Verdict.MLE_EXISTS_NOT_UNIQUE, indeterminate_real_case=flag)
    return MnmVerdict(Verdict.LIKELIHOOD_UNBOUNDED, holds_for_all_inputs=True)


def thresholds_mnm(p: int, q: int) -> ThresholdReport:
    _check_positive(p=p, q=q)
    model = Model.MATRIX_NORMAL
    if p == q == 1:
        return ThresholdReport(p, q, 1, 1, 1, model)
    if p == q:
        return ThresholdReport(p, q, 1, 1, 3, model)
    d = gcd(p, q)
    num = p * p + q * q - d * d
    if num % (p * q) == 0:
        r = num // (p * q)
        return ThresholdReport(p, q, r, r, r if d == 1 else r + 1, model)
    c = -(-(p * p + q * q) // (p * q))
    return ThresholdReport(p, q, c, c, c, model)


def classify_propcov(p: int, q: int, m: int, field: Field | str = Field.REAL) -> MnmVerdict:
    """Generic MLE behaviour of the proportional-covariance model."""
    _check_positive(p=p, q=q, m=m)
    Field(field)
    if m * q < p:
        return MnmVerdict(Verdict.LIKELIHOOD_UNBOUNDED, holds_for_all_inputs=True)
    if m * q == p:
        return MnmVerdict(Verdict.MLE_EXISTS_UNIQUE if q == 1 else Verdict.MLE_EXISTS_NOT_UNIQUE)
    return MnmVerdict(Verdict.MLE_EXISTS_UNIQUE)


def thresholds_propcov(p: int, q: int) -> ThresholdReport:
    _check_positive(p=p, q=q)
    model = Model.PROPORTIONAL_COVARIANCE
    if p % q == 0:
        r = p // q
        return ThresholdReport(p, q, r, r, r if q == 1 else r + 1, model)
    c = -(-p // q)
    return ThresholdReport(p, q, c, c, c, model)


def classify(model: Model | str, p: int, q: int, m: int, field: Field | str = Field.REAL) -> MnmVerdict:
    if Model(model) is Model.MATRIX_NORMAL:
        return classify_mnm(p, q, m, field)
    return classify_propcov(p, q, m, field)


def thresholds(model: Model | str, p: int, q: int) -> ThresholdReport:
    if Model(model) is Model.MATRIX_NORMAL:
        return thresholds_mnm(p, q)
    return thresholds_propcov(p, q)
