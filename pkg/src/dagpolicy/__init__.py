"""Linear equilibria of a static monetary-policy game in which the private
sector forecasts inflation with a causal model fitted to the data."""

from .analysis import (
    ClassificationReport,
    StructuralClass,
    SweepResult,
    ValidationReport,
    classify_dag,
    invariance_test,
    sweep,
    validate,
)
from .bayesnet import (
    LABELS,
    PRESETS,
    Dag,
    GaussianBN,
    LinearGaussianCPD,
    bn_joint,
    fit,
    forecast_rule,
    is_consistent,
    load_dag,
    preset,
)
from .economy import (
    ForecastRule,
    ModelParams,
    Policy,
    SignalSpec,
    best_response,
    build_joint,
    expected_loss,
)
from .equilibrium import (
    Equilibrium,
    SolverConfig,
    case1_closed_form,
    case2_closed_form,
    re_benchmark,
    solve,
    uninformed_closed_form,
)
from .linalg_gauss import AffineFunction, GaussianJoint, condition, sample, signal_extraction_weight

__version__ = "0.1.0"
