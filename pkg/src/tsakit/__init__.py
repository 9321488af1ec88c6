"""Quasi-static modeling toolkit for two-phase twisted string actuators.

A twisted string actuator converts motor rotation into linear contraction.
Driven far enough, the twisted bundle wraps onto itself and forms coils;
that second regime roughly doubles the stroke at a higher transmission
ratio. This package models both regimes with a shared parameter set,
calibrates the parameters from endpoint measurements, simulates twist
profiles (optionally with hysteresis and self-sensing), and solves the
sizing and linkage problems that come up when building actuators.
"""

from .bicep import (
    BicepFit,
    BicepGeometry,
    angle_from_length,
    bicep_grid_oracle,
    dlength_dangle,
    fit_bicep,
    gravity_torque,
    length_from_angle,
    string_tension,
    sweep,
)
from .calibration import (
    FitResult,
    ObservedEndpoints,
    ParamBounds,
    endpoints_from_params,
    fit_two_phase,
    grid_oracle,
    predict_endpoints,
    residual,
)
from .errors import (
    CoilCapacityError,
    ConfigError,
    ConvergenceError,
    CsvFormatError,
    DomainError,
    GridCapError,
    InputError,
    KinkError,
    NonInvertibleError,
    ParameterError,
    SingularConfigurationError,
    TrainingGateError,
    TriangleRangeError,
    TsaError,
    UnderdeterminedError,
)
from .hysteresis import (
    PIModel,
    PlayOperator,
    default_thresholds,
    hysteretic_length,
    identify_length_correction,
    pi_apply,
    pi_identify,
    play,
)
from .model import (
    ActuatorState,
    LoadCase,
    Material,
    Phase,
    StringSpec,
    TwoPhaseParams,
    bundle_diameter,
    contraction,
    effective_length,
    length,
    length_overtwist,
    length_regular,
    linear_speed,
    max_theta,
    required_torque,
    size_for_displacement,
    state_at,
    strain,
    transmission_ratio,
)
from .sensing import (
    ResistanceParams,
    creep_component,
    detrend_creep,
    estimate_strain,
    length_baseline,
    resistance_forward,
)
from .training import (
    TrainingStage,
    TrainingState,
    advance_cycle,
    coiling_available,
    operating_length,
    stage_of,
)

__version__ = "0.1.0"

__all__ = [
    "ActuatorState",
    "BicepFit",
    "BicepGeometry",
    "CoilCapacityError",
    "ConfigError",
    "ConvergenceError",
    "CsvFormatError",
    "DomainError",
    "FitResult",
    "GridCapError",
    "InputError",
    "KinkError",
    "LoadCase",
    "Material",
    "NonInvertibleError",
    "ObservedEndpoints",
    "PIModel",
    "ParamBounds",
    "ParameterError",
    "Phase",
    "PlayOperator",
    "ResistanceParams",
    "SingularConfigurationError",
    "StringSpec",
    "TrainingGateError",
    "TrainingStage",
    "TrainingState",
    "TriangleRangeError",
    "TsaError",
    "TwoPhaseParams",
    "UnderdeterminedError",
    "advance_cycle",
    "angle_from_length",
    "bicep_grid_oracle",
    "bundle_diameter",
    "coiling_available",
    "contraction",
    "creep_component",
    "default_thresholds",
    "detrend_creep",
    "dlength_dangle",
    "effective_length",
    "endpoints_from_params",
    "estimate_strain",
    "fit_bicep",
    "fit_two_phase",
    "gravity_torque",
    "grid_oracle",
    "hysteretic_length",
    "identify_length_correction",
    "length",
    "length_baseline",
    "length_from_angle",
    "length_overtwist",
    "length_regular",
    "linear_speed",
    "max_theta",
    "operating_length",
    "pi_apply",
    "pi_identify",
    "play",
    "predict_endpoints",
    "required_torque",
    "resistance_forward",
    "residual",
    "size_for_displacement",
    "stage_of",
    "state_at",
    "strain",
    "string_tension",
    "sweep",
    "transmission_ratio",
]
