"""Growth-fragmentation dynamics with renewal boundary conditions.

The package simulates size-structured populations whose members grow,
split into fragments, and re-enter at size zero through a nonlocal
renewal condition.  It ships a closed-form solver for the constant-rate
binary family, an upwind finite-volume solver for general coefficients,
resolvent machinery with an inverse-iteration eigensolver for the
dominant growth rate, and a support calculus deciding semigroup
irreducibility.  ``gfrag.cli`` exposes all of it as the ``gfrag``
console command.
"""

from .closed_form import (
    BinaryModelParams,
    ClosedFormSolution,
    MomentState,
    asymptotic_profile,
    binary_params_from_model,
    evaluate_solution,
    is_binary_model,
    lambda_pm,
    left_eigenfunction_cf,
    left_eigenpair_cf,
    moments_from_grid,
    propagate_moments,
    right_eigenfunction_cf,
    right_eigenpair_cf,
    tail_bound_check,
)
from .errors import (
    ConvergenceError,
    DegenerateModelError,
    GfragError,
    InvalidInputError,
    InvalidModelError,
    LambdaOutOfRangeError,
    MissingTailError,
    SeriesDivergenceError,
    StepSizeError,
)
from .irreducibility import (
    CbarResult,
    EnvelopeSegment,
    IntervalUnion,
    IrreducibilityDecision,
    SupportModel,
    TailRule,
    compute_c_bar,
    decide_irreducibility,
    envelope_value,
    iterate_c,
    reachability_oracle,
    support_model_from_config,
    tail_infimum_c,
)
from .model import (
    AssumptionReport,
    Constant,
    GridFunction,
    Linear,
    ModelDefinition,
    Power,
    PowerLaw,
    ShrinkingBinary,
    Tabulated,
    UniformBinary,
    coefficient_from_config,
    kernel_from_config,
    load_model,
    midpoint_grid,
    model_from_config,
    quad_weights,
    validate_assumptions,
    xm_norm,
)
from .pde import SolverConfig, SolverState, moment_balance_residual, solve, stable_step, step
from .resolvent import (
    ResolventContext,
    apply_E_lambda,
    apply_fragmentation_gain,
    apply_resolvent_K,
    apply_resolvent_Z0,
    apply_resolvent_Zbeta,
    apply_shifted_generator_K,
    apply_shifted_generator_Zbeta,
    e_lambda_fn,
    fragmentation_gain_matrix,
)
from .spectral import (
    AEGReport,
    Eigenpair,
    aeg_diagnostics,
    closed_form_eigenpair,
    perron_eigenpair,
    spectral_projection,
)

__version__ = "0.1.0"

__all__ = [
    "AEGReport",
    "AssumptionReport",
    "BinaryModelParams",
    "CbarResult",
    "ClosedFormSolution",
    "Constant",
    "ConvergenceError",
    "DegenerateModelError",
    "Eigenpair",
    "EnvelopeSegment",
    "GfragError",
    "GridFunction",
    "IntervalUnion",
    "InvalidInputError",
    "InvalidModelError",
    "IrreducibilityDecision",
    "LambdaOutOfRangeError",
    "Linear",
    "MissingTailError",
    "ModelDefinition",
    "MomentState",
    "Power",
    "PowerLaw",
    "ResolventContext",
    "SeriesDivergenceError",
    "ShrinkingBinary",
    "SolverConfig",
    "SolverState",
    "StepSizeError",
    "SupportModel",
    "Tabulated",
    "TailRule",
    "UniformBinary",
    "__version__",
    "aeg_diagnostics",
    "apply_E_lambda",
    "apply_fragmentation_gain",
    "apply_resolvent_K",
    "apply_resolvent_Z0",
    "apply_resolvent_Zbeta",
    "apply_shifted_generator_K",
    "apply_shifted_generator_Zbeta",
    "asymptotic_profile",
    "binary_params_from_model",
    "closed_form_eigenpair",
    "coefficient_from_config",
    "compute_c_bar",
    "decide_irreducibility",
    "e_lambda_fn",
    "envelope_value",
    "evaluate_solution",
    "fragmentation_gain_matrix",
    "is_binary_model",
    "iterate_c",
    "kernel_from_config",
    "lambda_pm",
    "left_eigenfunction_cf",
    "left_eigenpair_cf",
    "load_model",
    "midpoint_grid",
    "model_from_config",
    "moment_balance_residual",
    "moments_from_grid",
    "perron_eigenpair",
    "propagate_moments",
    "quad_weights",
    "reachability_oracle",
    "right_eigenfunction_cf",
    "right_eigenpair_cf",
    "solve",
    "spectral_projection",
    "stable_step",
    "step",
    "support_model_from_config",
    "tail_bound_check",
    "tail_infimum_c",
    "validate_assumptions",
    "xm_norm",
]
