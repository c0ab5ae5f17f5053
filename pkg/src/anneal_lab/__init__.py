"""Expected hitting times of Metropolis walkers on piecewise-linear basins.

Closed-form predictions on the discretised birth-death chain, an exact
linear-system oracle, continuous Metropolis simulation, radius calibration
and a two-temperature switching study.
"""
from .analytic import (
    SaturationError,
    exit_time_single,
    exit_times_single,
    hit_time_two,
    hit_times_two,
)
from .calibrate import DegenerateFitError, CalibrationPoint, fit_k, predicted_time
from .chain import build_single, build_two, exact_hitting_times, simulate_discrete
from .config import ConfigError, ExperimentConfig, parse_config
from .landscape import (
    ChainParamsSingle,
    ChainParamsTwo,
    GeometryError,
    SingleBasinGeometry,
    TwoBasinGeometry,
    discretize_single,
    discretize_two,
)
from .metropolis import AllTimeoutError, TemperatureSchedule, TrialBatch, continuous_mean

__version__ = "0.1.0"

__all__ = [
    "AllTimeoutError", "CalibrationPoint", "ChainParamsSingle", "ChainParamsTwo",
    "ConfigError", "DegenerateFitError", "ExperimentConfig", "GeometryError",
    "SaturationError", "SingleBasinGeometry", "TemperatureSchedule", "TrialBatch",
    "TwoBasinGeometry", "build_single", "build_two", "continuous_mean", "discretize_single",
    "discretize_two", "exact_hitting_times", "exit_time_single", "exit_times_single",
    "fit_k", "hit_time_two", "hit_times_two", "parse_config", "predicted_time",
    "simulate_discrete",
]
