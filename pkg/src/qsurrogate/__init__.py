"""Fourier surrogates of data re-uploading quantum models."""

__version__ = "0.1.0"

from .errors import DatasetError, OptimizerError, PropertyViolation, ResourceError, SurrogateError
from .fourier_model import RealFourierModel, condition_lower_bound, linear_best_fit
from .model import ModelSpec, QuantumModel, evaluate_exact, estimate_with_shots, random_parameters
from .spectrum import FrequencySet, build_grid, frequency_set
from .statevector import Gate, Observable, StateVector, apply_gate, expectation, init_zero_state
from .surrogation import (
    FourierSurrogate,
    SurrogationBudget,
    shot_budget,
    sup_error_estimate,
    surrogate_exact,
    surrogate_with_shots,
)
from .training import LossTrace, OptimizerConfig, train

__all__ = [
    "DatasetError", "OptimizerError", "PropertyViolation", "ResourceError", "SurrogateError",
    "RealFourierModel", "condition_lower_bound", "linear_best_fit",
    "ModelSpec", "QuantumModel", "evaluate_exact", "estimate_with_shots", "random_parameters",
    "FrequencySet", "build_grid", "frequency_set",
    "Gate", "Observable", "StateVector", "apply_gate", "expectation", "init_zero_state",
    "FourierSurrogate", "SurrogationBudget", "shot_budget", "sup_error_estimate",
    "surrogate_exact", "surrogate_with_shots",
    "LossTrace", "OptimizerConfig", "train",
]
