"""Monte Carlo sweeps comparing the theoretical verdicts with empirical ones."""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
import dataclasses
from dataclasses import asdict, dataclass

import numpy as np

from .flipflop import EmpiricalOutcome, classify_empirical
from .representation import RepTuple
from .stability import Inconclusive
from .thresholds import Field, Model, classify

FORMAT_VERSION = "1"
DEFAULT_SEED = 20240601
ALARM_RATE = 0.01
INCONCLUSIVE = "Inconclusive"
OUTCOME_LABELS = [o.value for o in EmpiricalOutcome] + [INCONCLUSIVE]

# flip-flop / probe settings a config may override
TOLERANCE_KEYS = {"tol", "tau_stat", "tau_unique", "max_iter", "n_starts"}


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    model: Model = Model.MATRIX_NORMAL
    p_range: list[int] = dataclasses.field(default_factory=lambda: [1, 2, 3, 4])
    q_range: list[int] = dataclasses.field(default_factory=lambda: [1, 2, 3, 4])
    m_range: list[int] = dataclasses.field(default_factory=lambda: [1, 2, 3, 4])
    trials: int = 50
    master_seed: int = DEFAULT_SEED
    field: Field = Field.COMPLEX
    tolerances: dict = dataclasses.field(default_factory=dict)
    alarm_rate: float = ALARM_RATE
    workers: int = 1
    include_runtime: bool = False
    diagnostics_path: str | None = None

    def __post_init__(self):
        try:
            self.model = Model(self.model)
            self.field = Field(self.field)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("p_range", "q_range", "m_range"):
            vals = [int(v) for v in getattr(self, name)]
            if any(v < 1 for v in vals):
                raise ConfigError(f"{name} entries must be positive")
            setattr(self, name, vals)
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        unknown = set(self.tolerances) - TOLERANCE_KEYS
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
        if not 0 <= self.alarm_rate <= 1:
            raise ConfigError("alarm_rate must lie in [0, 1]")
        if int(self.workers) < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "SweepConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def cells(self) -> list[tuple[int, int, int]]:
        return [(p, q, m) for m in self.m_range for p in self.p_range for q in self.q_range]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["model"] = self.model.value
        out["field"] = self.field.value
        for key in ("workers", "diagnostics_path", "include_runtime"):
            out.pop(key)
        return out


@dataclass
class CellRecord:
    p: int
    q: int
    m: int
    theory: str
    informational: bool
    counts: dict
    match_rate: float
    mean_iterations: float | None
    runtime: float | None = None
    mismatches: list = dataclasses.field(default_factory=list)

    @property
    def trials(self) -> int:
        return sum(self.counts.values())

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "p": self.p,
            "q": self.q,
            "m": self.m,
            "theory": self.theory,
            "informational": self.informational,
            "counts": self.counts,
            "match_rate": self.match_rate,
            "mean_iterations": self.mean_iterations,
        }
        if include_runtime:
            out["runtime"] = self.runtime
        return out


@dataclass
class SweepReport:
    config: dict
    cells: list[CellRecord]
    include_runtime: bool = False
    format_version: str = FORMAT_VERSION

    def scored(self) -> list[CellRecord]:
        return [c for c in self.cells if not c.informational]

    def mismatch_rate(self) -> float:
        """Fraction of mismatching trials over all cells that are scored."""
        scored = self.scored()
        total = sum(c.trials for c in scored)
        if total == 0:
            return 0.0
        bad = sum(c.trials * (1 - c.match_rate) for c in scored)
        return float(bad / total)

    def worst_cell_mismatch(self) -> float:
        return max((1 - c.match_rate for c in self.scored()), default=0.0)

    def alarm(self, rate: float | None = None) -> bool:
        rate = self.config.get("alarm_rate", ALARM_RATE) if rate is None else rate
        return self.worst_cell_mismatch() > rate

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "config": self.config,
            "cells": [c.to_dict(self.include_runtime) for c in self.cells],
            "summary": {
                "cells": len(self.cells),
                "scored_cells": len(self.scored()),
                "mismatch_rate": self.mismatch_rate(),
                "worst_cell_mismatch": self.worst_cell_mismatch(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["p", "q", "m", "theory", "informational", *OUTCOME_LABELS, "match_rate", "mean_iterations"]
        if self.include_runtime:
            cols.append("runtime")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for c in self.cells:
            row = [c.p, c.q, c.m, c.theory, c.informational, *(c.counts.get(k, 0) for k in OUTCOME_LABELS)]
            row += [f"{c.match_rate:.6f}", "" if c.mean_iterations is None else f"{c.mean_iterations:.3f}"]
            if self.include_runtime:
                row.append(f"{c.runtime:.4f}")
            writer.writerow(row)
        return buf.getvalue()

    def write(self, path, fmt: str = "json") -> None:
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w") as fh:
            fh.write(text)


def trial_seed(master_seed: int, p: int, q: int, m: int, trial: int) -> np.random.SeedSequence:
    """Per-trial seed, independent of the order in which trials run."""
    return np.random.SeedSequence([master_seed, p, q, m, trial])


def _run_cell(args, observer=None):
    cfg, (p, q, m) = args
    start = time.perf_counter()
    theory = classify(cfg.model, p, q, m, cfg.field)
    tol = dict(cfg.tolerances)
    n_starts = tol.pop("n_starts", 5)
    tau_unique = tol.pop("tau_unique", None)
    kwargs = dict(n_starts=n_starts, **tol)
    if tau_unique is not None:
        kwargs["tau_unique"] = tau_unique
    counts = {label: 0 for label in OUTCOME_LABELS}
    iterations, mismatches = [], []
    for trial in range(cfg.trials):
        seq = trial_seed(cfg.master_seed, p, q, m, trial)
        sample_seq, classify_seq = seq.spawn(2)
        Y = RepTuple.random(p, q, m, cfg.field, np.random.default_rng(sample_seq))
        try:
            res = classify_empirical(Y, cfg.model, rng_seed=classify_seq, **kwargs)
            label = res.outcome.value
            if res.mle is not None:
                iterations.append(res.mle.iterations)
        except Inconclusive as exc:
            res, label = exc, INCONCLUSIVE
        if observer is not None:
            observer((p, q, m), trial, Y, res)
        counts[label] += 1
        if label != theory.verdict.label:
            if isinstance(res, Inconclusive):
                detail = {"error": str(res), "diagnostics": res.diagnostics}
            else:
                detail = res.to_dict()
            mismatches.append({"trial": trial, "outcome": label, "sample": Y.to_json_dict(), "detail": detail})
    match = counts[theory.verdict.label] / cfg.trials
    return CellRecord(
        p,
        q,
        m,
        theory.verdict.label,
        theory.indeterminate_real_case,
        counts,
        match,
        float(np.mean(iterations)) if iterations else None,
        time.perf_counter() - start,
        mismatches,
    )


def _run_jobs(jobs, workers: int, observer=None):
    if observer is None and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(job, observer) for job in jobs]


def run_sweep(cfg: SweepConfig, observer=None) -> SweepReport:
    """Tally empirical verdicts against the theoretical ones on every cell.

    Cells whose theoretical verdict is flagged as indeterminate over the
    reals are reported but not scored.  Samples that disagree with theory are
    written to ``cfg.diagnostics_path`` when one is given.  ``observer``, if
    given, is called as ``observer((p, q, m), trial, Y, result)`` for every
    trial (``result`` is the empirical verdict or the ``Inconclusive``
    raised); it forces in-process execution.
    """
    cells = _run_jobs([(cfg, cell) for cell in cfg.cells()], cfg.workers, observer)
    report = SweepReport(cfg.to_dict(), cells, cfg.include_runtime)
    if cfg.diagnostics_path:
        dump = [{"p": c.p, "q": c.q, "m": c.m, "theory": c.theory, "mismatches": c.mismatches} for c in cells if c.mismatches]
        with open(cfg.diagnostics_path, "w") as fh:
            json.dump(dump, fh, indent=1, default=float)
    return report


DKH_CELLS = [(5, 4, 2), (6, 4, 2), (7, 4, 2), (8, 4, 2)]


def dkh_table(
    trials: int = 100, master_seed: int = DEFAULT_SEED, field: Field | str = Field.REAL, workers: int = 1, observer=None
) -> SweepReport:
    """The four (p, 4) cells with two samples, for p = 5, 6, 7, 8."""
    reports = [SweepConfig(Model.MATRIX_NORMAL, [p], [q], [m], trials, master_seed, field) for p, q, m in DKH_CELLS]
    cells = _run_jobs([(c, c.cells()[0]) for c in reports], workers, observer)
    base = reports[0].to_dict()
    base.update(p_range=[c[0] for c in DKH_CELLS], q_range=[4], m_range=[2])
    return SweepReport(base, cells)


def format_table(report: SweepReport) -> str:
    lines = [f"{'(p,q,m)':<10} {'theory':<16} {'empirical (majority)':<22} {'agreement':>9}"]
    for c in report.cells:
        majority = max(c.counts, key=c.counts.get)
        note = "  (informational)" if c.informational else ""
        lines.append(f"({c.p},{c.q},{c.m}){'':<3} {c.theory:<16} {majority:<22} {c.match_rate:>9.2%}{note}")
    return "\n".join(lines)
