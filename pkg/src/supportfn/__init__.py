"""Extremal L2 problems for plurisubharmonic weights and their support functions.

Submodules: ``model`` (weights, jets, level sets), ``cutoffs`` (class-P
densities), ``quadrature``, ``extremal`` (the minimisation problems C and
G), ``analysis`` (h, concavity, the ODE pair), ``verify`` (the record
catalog), ``report``/``config``/``cli`` (front end).
"""
from .cutoffs import Constant, CtnFamily, Custom, ExpRate, PowerDecay, parse_cutoff
from .errors import (
    ConstraintViolationError,
    DomainError,
    EvaluationError,
    InvalidParameterError,
    SolverConditioningError,
    SupportFnError,
)
from .extremal import ExtremalProblem, ExtremalSolution, c_value, g_function, solve
from .model import HolPoly, JetConstraint, Orientation, SuperlevelSet, Weight, jet_order, psi_eval
from .verify import CatalogConfig, VerificationRecord, run_catalog

__version__ = "0.1.0"

__all__ = [
    "Constant", "CtnFamily", "Custom", "ExpRate", "PowerDecay", "parse_cutoff",
    "ConstraintViolationError", "DomainError", "EvaluationError", "InvalidParameterError",
    "SolverConditioningError", "SupportFnError",
    "ExtremalProblem", "ExtremalSolution", "c_value", "g_function", "solve",
    "HolPoly", "JetConstraint", "Orientation", "SuperlevelSet", "Weight", "jet_order", "psi_eval",
    "CatalogConfig", "VerificationRecord", "run_catalog",
]
