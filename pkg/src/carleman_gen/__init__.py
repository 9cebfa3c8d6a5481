"""Numerical toolkit for Carleman-class generation criteria of diagonal semigroups."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CarlemanError,
    ConfigError,
    DivergenceError,
    IndexExhaustedError,
    MissingWitnessError,
    NoDivergenceError,
    OrbitOverflowError,
    UnsupportedPresetError,
)
from .sequence_kernel import (  # noqa: E402
    DefiningSequence,
    MandelbrojtEvaluator,
    ProxyEvaluator,
    SequenceKind,
    eval_log_P,
    eval_log_S,
    eval_log_T,
    eval_M,
    invert_M,
    make_evaluator,
    proxy_envelope,
    proxy_M,
)
from .growth_conditions import (  # noqa: E402
    Condition,
    ConditionReport,
    Verdict,
    check_binomial,
    check_growth,
    recheck_witnesses,
    verify_inequality,
)
from .spectral_region import (  # noqa: E402
    CriterionVerdict,
    GenerationVerdict,
    Mode,
    SpectrumModel,
    a_star,
    boundary_sample,
    decide,
    region_member,
)
from .diagonal_semigroup import (  # noqa: E402
    DiagonalOperator,
    OrbitSample,
    Vector,
    basket,
    classify_orbit,
    derivative_log_norm,
    domain_T_test,
    orbit,
    spectral_projection,
)
from .counterexample_lab import (  # noqa: E402
    ViolationConstruction,
    build_violation,
    conclude_not_beurling,
    divergence_demo,
)

__all__ = [
    "__version__",
    "CarlemanError", "ConfigError", "DivergenceError", "IndexExhaustedError", "MissingWitnessError",
    "NoDivergenceError", "OrbitOverflowError", "UnsupportedPresetError",
    "DefiningSequence", "MandelbrojtEvaluator", "ProxyEvaluator", "SequenceKind", "eval_log_P",
    "eval_log_S", "eval_log_T", "eval_M", "invert_M", "make_evaluator", "proxy_envelope", "proxy_M",
    "Condition", "ConditionReport", "Verdict", "check_binomial", "check_growth", "recheck_witnesses",
    "verify_inequality",
    "CriterionVerdict", "GenerationVerdict", "Mode", "SpectrumModel", "a_star", "boundary_sample",
    "decide", "region_member",
    "DiagonalOperator", "OrbitSample", "Vector", "basket", "classify_orbit", "derivative_log_norm",
    "domain_T_test", "orbit", "spectral_projection",
    "ViolationConstruction", "build_violation", "conclude_not_beurling", "divergence_demo",
]
