"""Laplace-noised histograms with pointwise maximal leakage (PML) accounting."""
from ._core import BACKEND
from .bounds import (
    AlphaFloor,
    CalibrationResult,
    calibrate_dp,
    calibrate_pml,
    eps_dp,
    eps_pml_composition,
    eps_pml_simplified,
    eps_pml_tight,
    pml_cap,
)
from .errors import (
    CalibrationError,
    DomainError,
    EnumerationTooLarge,
    NoNoiseNeeded,
)
from .rng import RandomStream

__all__ = [
    "BACKEND",
    "AlphaFloor",
    "CalibrationResult",
    "CalibrationError",
    "DomainError",
    "EnumerationTooLarge",
    "NoNoiseNeeded",
    "RandomStream",
    "calibrate_dp",
    "calibrate_pml",
    "eps_dp",
    "eps_pml_composition",
    "eps_pml_simplified",
    "eps_pml_tight",
    "pml_cap",
]

__version__ = "0.1.0"
