"""Existence and uniqueness of maximum likelihood estimates for Kronecker
structured covariance models, read off from quiver representations."""

from .decomposition import (
    AmbiguousSplit,
    CanDec,
    Exactness,
    InvalidCanDec,
    StarDimVec,
    SummandSplit,
    candec_kronecker,
    candec_star,
    decompose_representation,
    scale_candec,
)
from .flipflop import (
    ConcentrationPair,
    DegenerateSample,
    DomainError,
    EmpiricalOutcome,
    MleResult,
    MleStatus,
    ProbeOutcome,
    classify_empirical,
    flip_flop,
    log_likelihood,
    uniqueness_probe,
)
from .harness import SweepConfig, SweepReport, dkh_table, run_sweep
from .quiver import (
    DimVec2,
    RootClass,
    Weight2,
    canonical_weight,
    classify_root,
    euler_form,
    is_schur_root,
    tits_form,
)
from .representation import RepTuple
from .stability import (
    Inconclusive,
    OnePSCertificate,
    StabilityLevel,
    StabilityVerdict,
    build_one_ps,
    end_algebra,
    lr_stability,
    scaling_semistability,
    stabilizer_dimension,
    star_exact_stability,
    verify_one_ps,
)
from .thresholds import (
    Field,
    Model,
    MnmVerdict,
    ThresholdReport,
    Verdict,
    classify_mnm,
    classify_propcov,
    thresholds_mnm,
    thresholds_propcov,
)

__version__ = "0.1.0"
