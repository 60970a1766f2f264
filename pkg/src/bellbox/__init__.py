"""Two-party correlation behaviors driven by common-cause models.

Exact probability tables, CHSH analysis, no-signaling residuals,
local-polytope membership with explicit proofs, seeded Monte Carlo
sampling, and the ``.bellbox`` document format.
"""

from .analysis import (
    AnalysisReport,
    Classification,
    DeterministicStrategy,
    InfeasibilityCertificate,
    LocalDecomposition,
    MembershipResult,
    arrangement_str,
    chsh_arrangements,
    chsh_max,
    chsh_value,
    classify,
    enumerate_strategies,
    local_membership,
    nosignaling_residual,
    strategy_behavior,
)
from .document import (
    BUILTIN_NAMES,
    ModelDocument,
    ParseDiagnostic,
    ParseResult,
    SingletSpec,
    builtin_document,
    parse_document,
    serialize_document,
)
from .errors import (
    BellboxError,
    InvalidBehaviorError,
    MembershipError,
    MixtureError,
    ModelError,
    SamplerError,
    ScenarioShapeError,
    UnknownBuiltinError,
)
from .models import (
    Cause,
    ContextBlock,
    ContextualModel,
    NonContextualModel,
    QuantumDirections,
    ResponseFunction,
    condition_on_cause,
    deterministic_row,
    exact_behavior,
    exact_behavior_contextual,
    exact_behavior_noncontextual,
    random_noncontextual_model,
    singlet_behavior,
    singlet_optimal_directions,
    socks_color,
    socks_off,
    socks_on,
    validate_model,
)
from .sampler import (
    EmpiricalBehavior,
    ExperimentPlan,
    ExperimentRun,
    Schedule,
    TrialRecord,
    empirical_deviation,
    run_experiment,
    sample_trial,
    trial_lines,
    unit_draw,
    write_trials,
)
from .scenario import (
    Behavior,
    Context,
    MarginalTable,
    Prob,
    Scenario,
    Validation,
    expectation,
    marginals,
    mix,
    outcome_sign,
    require_valid,
    validate_behavior,
)

__version__ = "0.1.0"
