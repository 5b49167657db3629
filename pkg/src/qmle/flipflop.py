"""Maximum likelihood estimation for Kronecker-structured concentration
matrices by alternating exact maximization (the flip-flop algorithm).

The objective for a sample tuple ``Y`` and concentration pair
``(psi1, psi2)`` is::

    l(psi1, psi2) = 1/2 [ m q logdet psi1 + m p logdet psi2
                          - sum_i tr(psi1 Y_i psi2 Y_i^*) ]

which corresponds to ``Psi = psi1 (x) psi2`` acting on ``vec(Y_i)`` with the
convention ``tr(Psi vec(Y) vec(Y)^*) = tr(psi1 Y psi2 Y^*)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .decomposition import AmbiguousSplit, decompose_representation
from .linalg import hermitize
from .representation import RepTuple
from .stability import (
    Inconclusive,
    StabilityVerdict,
    scaling_semistability,
    stabilizer_dimension,
    star_exact_stability,
)
from .thresholds import Field, Model, Verdict

TOL = 1e-10
TAU_STAT = 1e-8
TAU_UNIQUE = 1e-6
TAU_POLISH = 1e-12
STALL_WINDOW = 200
TAU_COLLAPSE = 1e-12
MAX_ITER = 5000
OBJECTIVE_GUARD = 1e12
COND_GUARD = 1e14


class DomainError(ValueError):
    pass


class DegenerateSample(ValueError):
    pass


def _is_pd(M: np.ndarray) -> bool:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    if not np.allclose(M, M.conj().T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(M).max(initial=0.0))):
        return False
    try:
        np.linalg.cholesky(hermitize(M))
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass
class ConcentrationPair:
    psi1: np.ndarray
    psi2: np.ndarray

    def __post_init__(self):
        self.psi1 = np.atleast_2d(np.asarray(self.psi1))
        self.psi2 = np.atleast_2d(np.asarray(self.psi2))
        if not (_is_pd(self.psi1) and _is_pd(self.psi2)):
            raise DomainError("concentration factors must be Hermitian positive definite")

    @classmethod
    def identity(cls, p: int, q: int, dtype=float) -> "ConcentrationPair":
        return cls(np.eye(p, dtype=dtype), np.eye(q, dtype=dtype))

    @classmethod
    def random(cls, p: int, q: int, rng=None, diagonal: bool = False, dtype=float) -> "ConcentrationPair":
        rng = np.random.default_rng(rng)

        def draw(n):
            W = rng.standard_normal((n, n))
            if np.issubdtype(dtype, np.complexfloating):
                W = (W + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
            return W @ W.conj().T + 1e-2 * np.eye(n)

        psi2 = draw(q)
        if diagonal:
            psi2 = np.diag(np.diag(psi2).real)
        return cls(draw(p), psi2)

    @property
    def is_diagonal_right(self) -> bool:
        return np.count_nonzero(self.psi2 - np.diag(np.diag(self.psi2))) == 0

    def normalized(self) -> "ConcentrationPair":
        """Move the scale into ``psi2`` so that ``det psi1 = 1``."""
        p = self.psi1.shape[0]
        _, logdet = np.linalg.slogdet(self.psi1)
        c = np.exp(logdet / p)
        return ConcentrationPair(self.psi1 / c, self.psi2 * c)

    def product(self) -> np.ndarray:
        """The full ``pq x pq`` concentration matrix, free of the scalar gauge."""
        return np.kron(self.psi1, self.psi2)

    def distance(self, other: "ConcentrationPair") -> float:
        A, B = self.product(), other.product()
        return float(np.linalg.norm(A - B) / max(np.linalg.norm(A), np.linalg.norm(B)))

    def to_dict(self) -> dict:
        def enc(M):
            return M.real.tolist() if np.isrealobj(M) or not np.iscomplexobj(M) else {"real": M.real.tolist(), "imag": M.imag.tolist()}

        return {"psi1": enc(self.psi1), "psi2": enc(self.psi2)}


def _cholesky(M: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise DomainError("matrix is not positive definite") from None


def _loglik(mats: np.ndarray, psi1: np.ndarray, psi2: np.ndarray) -> float:
    # with psi = L L^H the trace term is a sum of squares |L1^H Y_i L2|^2; the plain
    # trace of psi1 Y psi2 Y^H cancels badly once the factors are ill conditioned
    m, p, q = mats.shape
    L1, L2 = _cholesky(psi1), _cholesky(psi2)
    quad = np.sum(np.abs(L1.conj().T @ mats @ L2) ** 2)
    logdet1 = 2.0 * np.sum(np.log(np.diag(L1).real))
    logdet2 = 2.0 * np.sum(np.log(np.diag(L2).real))
    return float(0.5 * (m * q * logdet1 + m * p * logdet2 - quad))


def log_likelihood(Y: RepTuple, pair: ConcentrationPair) -> float:
    if pair.psi1.shape[0] != Y.p or pair.psi2.shape[0] != Y.q:
        raise ValueError("concentration pair does not match the sample shape")
    if not (_is_pd(pair.psi1) and _is_pd(pair.psi2)):
        raise DomainError("concentration factors must be Hermitian positive definite")
    return _loglik(Y.matrices, pair.psi1, pair.psi2)


class MleStatus(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    MAX_ITER = "MaxIterReached"


@dataclass
class MleResult:
    status: MleStatus
    pair: ConcentrationPair | None
    loglik: float
    iterations: int
    history: list[float] = field(default_factory=list)
    stationarity_residual: float = np.inf
    reason: str = ""
    iterate: ConcentrationPair | None = None

    @property
    def converged(self) -> bool:
        return self.status is MleStatus.CONVERGED

    def to_dict(self) -> dict:
        out = {
            "status": self.status.value,
            "loglik": self.loglik,
            "iterations": self.iterations,
            "stationarity_residual": self.stationarity_residual,
        }
        if self.reason:
            out["reason"] = self.reason
        if self.pair is not None:
            out.update(self.pair.to_dict())
        return out


def _row_moment(mats, psi2):
    return hermitize(np.einsum("iab,bc,idc->ad", mats, psi2, mats.conj()))


def _col_moment(mats, psi1):
    return hermitize(np.einsum("iba,bc,icd->ad", mats.conj(), psi1, mats))


def _collapsed(M: np.ndarray, collapse_tol: float) -> bool:
    w = np.linalg.eigvalsh(M)
    return w[0] <= collapse_tol * max(w.sum(), np.finfo(float).tiny)


def stationarity_residuals(Y: RepTuple, pair: ConcentrationPair, model=Model.MATRIX_NORMAL) -> tuple[float, float]:
    """Relative residuals of both likelihood equations at ``pair``."""
    model = Model(model)
    mats = Y.matrices
    m, p, q = mats.shape
    M1 = _row_moment(mats, pair.psi2)
    G1 = m * q * np.linalg.inv(pair.psi1)
    r1 = np.linalg.norm(G1 - M1) / np.linalg.norm(G1)
    M2 = _col_moment(mats, pair.psi1)
    G2 = m * p * np.linalg.inv(pair.psi2)
    if model is Model.PROPORTIONAL_COVARIANCE:
        r2 = np.linalg.norm(np.diag(G2) - np.diag(M2)) / np.linalg.norm(np.diag(G2))
    else:
        r2 = np.linalg.norm(G2 - M2) / np.linalg.norm(G2)
    return float(r1), float(r2)


def flip_flop(
    Y: RepTuple,
    model: Model | str = Model.MATRIX_NORMAL,
    init: ConcentrationPair | None = None,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    tau_stat: float = TAU_STAT,
    collapse_tol: float = TAU_COLLAPSE,
    objective_guard: float = OBJECTIVE_GUARD,
    cond_guard: float = COND_GUARD,
    stall_window: int | None = None,
) -> MleResult:
    """Block coordinate ascent on the log-likelihood.

    Each sweep maximizes exactly over ``psi1`` and then over ``psi2``
    (diagonal for the proportional-covariance model), then fixes
    ``det psi1 = 1``.  ``iterations`` counts the sweeps that moved the
    estimate; a final confirming sweep is not counted.  With
    ``stall_window`` the run also stops (as ``MaxIterReached``, reason
    ``"stalled"``) once the best stationarity residual has not improved by
    ten percent over that many sweeps, i.e. it sits at the rounding floor.
    """
    model = Model(model)
    mats = Y.matrices
    m, p, q = mats.shape
    diag = model is Model.PROPORTIONAL_COVARIANCE
    if init is None:
        init = ConcentrationPair.identity(p, q)
    if init.psi1.shape != (p, p) or init.psi2.shape != (q, q):
        raise ValueError("initial pair does not match the sample shape")
    if diag and not init.is_diagonal_right:
        raise ValueError("proportional-covariance model needs a diagonal psi2")
    psi1, psi2 = init.psi1, init.psi2
    history = [_loglik(mats, psi1, psi2)]
    residual = np.inf
    best, best_at = np.inf, 0

    def stop(status, reason=""):
        last = ConcentrationPair(psi1, psi2)
        pair = last if status is MleStatus.CONVERGED else None
        return MleResult(status, pair, history[-1], len(history) - 1, history, residual, reason, last)

    for it in range(max_iter):
        M1 = _row_moment(mats, psi2)
        if _collapsed(M1, collapse_tol):
            if it == 0:
                raise DegenerateSample("row moment matrix is singular for the initial estimate")
            return stop(MleStatus.DIVERGED, "row update singular")
        new1 = hermitize(m * q * np.linalg.inv(M1))
        M2 = _col_moment(mats, new1)
        if diag:
            d = np.diag(M2).real
            if d.min() <= collapse_tol * d.sum():
                if it == 0:
                    raise DegenerateSample("column moments vanish for the initial estimate")
                return stop(MleStatus.DIVERGED, "column update singular")
            new2 = np.diag(m * p / d)
        else:
            if _collapsed(M2, collapse_tol):
                if it == 0:
                    raise DegenerateSample("column moment matrix is singular for the initial estimate")
                return stop(MleStatus.DIVERGED, "column update singular")
            new2 = hermitize(m * p * np.linalg.inv(M2))
        _, logdet = np.linalg.slogdet(new1)
        c = np.exp(logdet / p)
        new1, new2 = new1 / c, new2 * c
        try:
            value = _loglik(mats, new1, new2)
        except DomainError:
            return stop(MleStatus.DIVERGED, "lost positive definiteness")
        prev = history[-1]
        change = abs(value - prev) / max(1.0, abs(value))
        # the psi2 equation holds exactly after its update; measure the psi1 equation
        # psi1^{-1} = c M1 / (m q) exactly, which avoids inverting psi1
        G1 = c * M1
        M1 = _row_moment(mats, new2)
        new_residual = float(np.linalg.norm(G1 - M1) / np.linalg.norm(G1))
        if change < tol and new_residual < tau_stat:
            # keep the iterate the residual was measured at; a sweep that left the
            # objective unchanged is not counted
            psi1, psi2, residual = new1, new2, new_residual
            if change > 0.0 or it == 0:
                history.append(value)
            return stop(MleStatus.CONVERGED)
        psi1, psi2, residual = new1, new2, new_residual
        history.append(value)
        if residual < 0.9 * best:
            best, best_at = residual, it
        elif stall_window and it - best_at >= stall_window:
            return stop(MleStatus.MAX_ITER, "stalled")
        if value > objective_guard:
            return stop(MleStatus.DIVERGED, "objective exceeded guard")
        if np.linalg.cond(psi1) > cond_guard or np.linalg.cond(psi2) > cond_guard:
            return stop(MleStatus.DIVERGED, "condition number exceeded guard")
    return stop(MleStatus.MAX_ITER)


class ProbeOutcome(str, enum.Enum):
    ALL_AGREE = "AllAgree"
    DISAGREE = "Disagree"
    NOT_APPLICABLE = "NotApplicable"


@dataclass
class ProbeResult:
    outcome: ProbeOutcome
    representative: ConcentrationPair | None = None
    witnesses: tuple[ConcentrationPair, ConcentrationPair] | None = None
    max_distance: float = 0.0
    results: list[MleResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"outcome": self.outcome.value, "max_distance": self.max_distance, "starts": len(self.results)}
        if self.representative is not None:
            out["representative"] = self.representative.to_dict()
        if self.witnesses is not None:
            out["witnesses"] = [w.to_dict() for w in self.witnesses]
        return out


def uniqueness_probe(
    Y: RepTuple,
    model: Model | str = Model.MATRIX_NORMAL,
    n_starts: int = 20,
    rng_seed=None,
    tau_unique: float = TAU_UNIQUE,
    tau_polish: float = TAU_POLISH,
    escalate: int = 10,
    **ff_kwargs,
) -> ProbeResult:
    """Run the flip-flop from random starts and compare the products ``psi1 (x) psi2``.

    The runs are driven to the stationarity level ``tau_polish``, well below
    ``tau_unique``: the error in the estimate is the residual amplified by
    the inverse convergence rate, which is large for slowly converging samples.
    A run that stalls at the rounding floor below the ordinary stationarity
    level is accepted; one that is still making progress when the budget
    runs out is repeated once with ``escalate`` times the budget.
    """
    if n_starts < 2:
        raise ValueError("n_starts must be at least 2")
    tau_stat = ff_kwargs.get("tau_stat", TAU_STAT)
    ff_kwargs["tau_stat"] = min(tau_stat, tau_polish)
    budget = ff_kwargs.pop("max_iter", MAX_ITER)
    model = Model(model)
    rng = np.random.default_rng(rng_seed)
    dtype = complex if np.iscomplexobj(Y.matrices) else float
    results = []
    for _ in range(n_starts):
        init = ConcentrationPair.random(Y.p, Y.q, rng, model is Model.PROPORTIONAL_COVARIANCE, dtype)
        res = flip_flop(Y, model, init, max_iter=budget, stall_window=STALL_WINDOW, **ff_kwargs)
        if res.status is MleStatus.MAX_ITER and res.reason != "stalled" and escalate > 1:
            res = flip_flop(Y, model, init, max_iter=escalate * budget, stall_window=STALL_WINDOW, **ff_kwargs)
        if res.reason == "stalled" and res.stationarity_residual < tau_stat:
            res.status, res.pair, res.reason = MleStatus.CONVERGED, res.iterate, "stalled at rounding floor"
        results.append(res)
        if not res.converged:
            return ProbeResult(ProbeOutcome.NOT_APPLICABLE, results=results)
    pairs = [r.pair for r in results]
    worst, wpair = 0.0, None
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            dist = pairs[i].distance(pairs[j])
            if dist > worst:
                worst, wpair = dist, (pairs[i], pairs[j])
    if worst > tau_unique:
        return ProbeResult(ProbeOutcome.DISAGREE, witnesses=wpair, max_distance=worst, results=results)
    return ProbeResult(ProbeOutcome.ALL_AGREE, representative=pairs[0], max_distance=worst, results=results)


class EmpiricalOutcome(str, enum.Enum):
    UNBOUNDED = "Unbounded"
    BOUNDED_NO_MLE = "BoundedNoMle"
    EXISTS_NOT_UNIQUE = "ExistsNotUnique"
    EXISTS_UNIQUE = "ExistsUnique"

    @property
    def verdict(self) -> Verdict | None:
        return {
            EmpiricalOutcome.UNBOUNDED: Verdict.LIKELIHOOD_UNBOUNDED,
            EmpiricalOutcome.EXISTS_NOT_UNIQUE: Verdict.MLE_EXISTS_NOT_UNIQUE,
            EmpiricalOutcome.EXISTS_UNIQUE: Verdict.MLE_EXISTS_UNIQUE,
        }.get(self)


@dataclass
class EmpiricalVerdict:
    outcome: EmpiricalOutcome
    stability: StabilityVerdict
    mle: MleResult | None = None
    probe: ProbeResult | None = None
    real_summands: int | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def verdict(self) -> Verdict | None:
        return self.outcome.verdict

    @property
    def consistent(self) -> bool:
        """A unique real MLE must come with a real-indecomposable tuple."""
        return self.real_summands is None or self.real_summands == 1

    def to_dict(self) -> dict:
        out = {"verdict": self.outcome.value, "stability": self.stability.to_dict()}
        if self.mle is not None:
            out["mle"] = self.mle.to_dict()
        if self.probe is not None:
            out["uniqueness"] = self.probe.to_dict()
        if self.real_summands is not None:
            out["real_summands"] = self.real_summands
        out["diagnostics"] = self.diagnostics
        return out


def classify_empirical(
    Y: RepTuple,
    model: Model | str = Model.MATRIX_NORMAL,
    rng_seed=None,
    n_starts: int = 5,
    tau_unique: float = TAU_UNIQUE,
    scaling_kwargs: dict | None = None,
    escalate: int = 10,
    **ff_kwargs,
) -> EmpiricalVerdict:
    """Empirical existence/uniqueness verdict for a single sample.

    Unboundedness is decided by the stability test (scaling for the
    left-right action, the exact subset test for the star quiver), existence
    by the flip-flop, and uniqueness by agreement across random starts.
    Observed uniqueness over the reals is never read as stability.  A
    flip-flop run that exhausts its iteration budget is repeated once with
    ``escalate`` times the budget before the verdict is left inconclusive.
    """
    model = Model(model)
    seq = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    probe_seed, split_seed = seq.spawn(2)
    if model is Model.PROPORTIONAL_COVARIANCE:
        stab = star_exact_stability(Y)
    else:
        stab = scaling_semistability(Y, **(scaling_kwargs or {}))
    if stab.is_unstable:
        return EmpiricalVerdict(EmpiricalOutcome.UNBOUNDED, stab)
    try:
        mle = flip_flop(Y, model, **ff_kwargs)
        if mle.status is MleStatus.MAX_ITER and escalate > 1:
            # slow linear convergence near a repeated spectrum; grant a larger budget once
            ff_kwargs = {**ff_kwargs, "max_iter": escalate * ff_kwargs.get("max_iter", MAX_ITER)}
            mle = flip_flop(Y, model, **ff_kwargs)
            escalate = 1
    except DegenerateSample as exc:
        raise Inconclusive(f"semistable tuple with degenerate moments: {exc}") from exc
    if mle.status is MleStatus.DIVERGED:
        return EmpiricalVerdict(EmpiricalOutcome.BOUNDED_NO_MLE, stab, mle)
    if mle.status is MleStatus.MAX_ITER:
        raise Inconclusive("flip-flop reached the iteration limit", {"iterations": mle.iterations})
    probe = uniqueness_probe(Y, model, n_starts, probe_seed, tau_unique, escalate=escalate, **ff_kwargs)
    if probe.outcome is ProbeOutcome.NOT_APPLICABLE:
        raise Inconclusive("some random starts did not converge", {"starts": len(probe.results)})
    diagnostics = {"stabilizer_dimension": stabilizer_dimension(Y, model is Model.PROPORTIONAL_COVARIANCE)}
    if probe.outcome is ProbeOutcome.DISAGREE:
        return EmpiricalVerdict(EmpiricalOutcome.EXISTS_NOT_UNIQUE, stab, mle, probe, diagnostics=diagnostics)
    out = EmpiricalVerdict(EmpiricalOutcome.EXISTS_UNIQUE, stab, mle, probe, diagnostics=diagnostics)
    if Y.field is Field.REAL:
        try:
            split = decompose_representation(Y, Field.REAL, split_seed, star=model is Model.PROPORTIONAL_COVARIANCE)
            out.real_summands = len(split.dims)
        except AmbiguousSplit as exc:
            out.diagnostics["real_split"] = str(exc)
    return out
