"""Spread of a stage-structured population with a seasonal maturation delay.

Submodules: ``model`` (parameters and derived quantities), ``kinetics``
(spatially constant yearly map), ``speed`` (variational spreading speed),
``spatial`` (yearly operator on a grid), ``immature`` (juvenile density) and
``cli``.
"""

from .config import canonical_params, load_params
from .errors import ConfigError, DiagnosticError, InvalidParamsError, SpeedUndefinedError
from .kinetics import compute_L, fixed_point, qbar
from .model import ModelParams, constant_params, validate
from .speed import cstar, mgf_K, phi

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "constant_params", "validate", "canonical_params", "load_params",
    "compute_L", "fixed_point", "qbar", "cstar", "mgf_K", "phi",
    "ConfigError", "DiagnosticError", "InvalidParamsError", "SpeedUndefinedError",
]
