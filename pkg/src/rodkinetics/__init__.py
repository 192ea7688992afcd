"""Kinetic and agent-based models of rod-shaped cells with nematic alignment and reversals."""
from .grid import GridSpec, KineticField, ScalarField, integrate_theta, shift_pi, spectral_derivative
from .interaction import AlignmentSpec, clamp, local_rate, nonlocal_rate, nematic_current
from .models import ModelParams, SimState, Toggles, run, step_chemo

__version__ = "0.1.0"

__all__ = [
    "AlignmentSpec",
    "GridSpec",
    "KineticField",
    "ModelParams",
    "ScalarField",
    "SimState",
    "Toggles",
    "clamp",
    "integrate_theta",
    "local_rate",
    "nematic_current",
    "nonlocal_rate",
    "run",
    "shift_pi",
    "spectral_derivative",
    "step_chemo",
]
