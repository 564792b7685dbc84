"""Daily preference-based tuning of an economic MPC building controller.

A binary "was today better than yesterday?" answer is the only signal;
a kernelized confidence-set optimizer turns it into day-by-day tuning
of the controller's price threshold and comfort setpoint, optionally
conditioned on the day's mean outdoor temperature.  The package ships
the surrogate building plant, synthetic occupants, system
identification, the horizon LP controller, the tuner, and the
experiment harness that ties them together.
"""

from .arx import ArxModel, FitReport, IdentificationError, IoWindow, fit_arx, \
    predict_one_step, rollout_open_loop
from .config import ExperimentConfig, default_config, load_config, save_config
from .harness import (
    MethodRun,
    MetricSeries,
    ResultsBundle,
    compute_metrics,
    emit_artifacts,
    improvement_table,
    load_experiment,
    run_experiment,
    run_identification_phase,
    run_tuning_loop,
)
from .kernels import (
    ConfigurationError,
    Context,
    DomainBounds,
    EvalPoint,
    KernelConfig,
    ParamPoint,
    gram_matrix,
    kernel_eval,
)
from .mpc import HorizonForecasts, MpcConfig, MpcSolveError, build_lp, \
    mpc_step, solve_lp
from .occupants import OccupantConfig, default_occupant, evaluate_day, pmv, \
    ppd, preference_feedback
from .plant import BaselineController, PlantParams, PlantState, WeatherDay, \
    generate_weather, plant_step, simulate_day
from .preference import ConfidenceState, PreferenceDataset, log_likelihood, \
    solve_mle
from .tuner import TunerState, acquisition_value, create_tuner, \
    make_theta_grid, predict_optimal_theta2, propose, update

__version__ = "1.0.0"

__all__ = [
    "ArxModel", "BaselineController", "ConfidenceState", "ConfigurationError",
    "Context", "DomainBounds", "EvalPoint", "ExperimentConfig", "FitReport",
    "HorizonForecasts", "IdentificationError", "IoWindow", "KernelConfig",
    "MethodRun", "MetricSeries", "MpcConfig", "MpcSolveError",
    "OccupantConfig", "ParamPoint", "PlantParams", "PlantState",
    "PreferenceDataset", "ResultsBundle", "TunerState", "WeatherDay",
    "acquisition_value", "build_lp", "compute_metrics", "create_tuner",
    "default_config", "default_occupant", "emit_artifacts", "evaluate_day",
    "fit_arx", "generate_weather", "gram_matrix", "improvement_table",
    "kernel_eval", "load_config", "load_experiment", "log_likelihood",
    "make_theta_grid", "mpc_step", "plant_step", "pmv", "ppd",
    "predict_one_step", "predict_optimal_theta2", "preference_feedback",
    "propose", "rollout_open_loop", "run_experiment",
    "run_identification_phase", "run_tuning_loop", "save_config",
    "simulate_day", "solve_lp", "solve_mle", "update",
]
