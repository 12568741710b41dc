"""Numerical laboratory for the type of rotationally symmetric model manifolds.

Parabolic/hyperbolic classification via end capacities, first Dirichlet
eigenvalues of balls, volume growth rates, and a battery of inequalities
relating them.
"""
from .asymptotics import AsymptoticProfile, RadiusGrid, SampleCurve, profile, sample_curve
from .bounds import Thresholds, chi_opt, g_function, prop61_bound, solve_t0, upper_bound_U
from .model import Annulus, Ball, Exterior, WeightModel, classify_type, make_model, volume
from .slsolve import EigenSample, TestFunction, lambda1_region, rayleigh
from .verify import CheckResult, run_battery

__version__ = "0.1.0"

__all__ = [
    "AsymptoticProfile",
    "Annulus",
    "Ball",
    "CheckResult",
    "EigenSample",
    "Exterior",
    "RadiusGrid",
    "SampleCurve",
    "TestFunction",
    "Thresholds",
    "WeightModel",
    "chi_opt",
    "classify_type",
    "g_function",
    "lambda1_region",
    "make_model",
    "profile",
    "prop61_bound",
    "rayleigh",
    "run_battery",
    "sample_curve",
    "solve_t0",
    "upper_bound_U",
    "volume",
]
