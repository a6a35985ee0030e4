"""Semi-analytical temperature profiles and boilover-onset predictors for burning fuel layers."""

from .corephys import (
    CharacteristicScales,
    DimensionlessGroups,
    FlameEnvironment,
    FuelProperties,
    Scenario,
    characteristic_scales,
    dimensionless_groups,
    flame_feedback,
    flux_balance,
    get_fuel,
    load_fuel_db,
    regression_velocity,
)
from .datasets import ExperimentRecord, compare_report, load_bundled, load_experiments
from .errors import (
    BoiloverError,
    Conflict,
    DomainError,
    Instability,
    InvalidInput,
    InvalidRegime,
    MissingInput,
    NonConvergence,
    SchemaError,
    UnitError,
)
from .fdoracle import FDConfig, fd_probe_boilover, fd_solve, fd_steady_check
from .hbi import ablation, ablation_profile, hbi_delta, penetration_delta, wave_pulse
from .predict import (
    classify_regime,
    conduction_t_B0,
    koseki_velocity,
    predict_auto,
    predict_problem_A,
    predict_problem_B,
    radiation_t_B0,
    scaled_problem_A,
)

__all__ = [
    "BoiloverError", "CharacteristicScales", "Conflict", "DimensionlessGroups", "DomainError",
    "ExperimentRecord", "FDConfig", "FlameEnvironment", "FuelProperties", "Instability",
    "InvalidInput", "InvalidRegime", "MissingInput", "NonConvergence", "Scenario", "SchemaError",
    "UnitError", "ablation", "ablation_profile", "characteristic_scales", "classify_regime",
    "compare_report", "conduction_t_B0", "dimensionless_groups", "fd_probe_boilover", "fd_solve",
    "fd_steady_check", "flame_feedback", "flux_balance", "get_fuel", "hbi_delta", "koseki_velocity",
    "load_bundled", "load_experiments", "load_fuel_db", "penetration_delta", "predict_auto",
    "predict_problem_A", "predict_problem_B", "radiation_t_B0", "regression_velocity",
    "scaled_problem_A", "wave_pulse",
]
