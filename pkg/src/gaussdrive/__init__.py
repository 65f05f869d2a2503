"""Gaussian-state dynamics of a linearly driven, generically damped quantum oscillator.

Closed-form first and second moments (``propagator``), time-dependent forcing
(``driving``), Gaussian states and Wigner functions (``gaussian``), and a dense
truncated-Fock-space oracle (``fock``) that checks the closed forms.
"""

from .model import ModelParams, ParameterError, Regime, liouvillian_eigenvalue, renormalized_frequency
from .gaussian import GaussianState, Grid2D, StateError, second_moments, wigner
from .propagator import (CovarianceError, EPDegeneracyError, drive_from_force, drive_from_target,
                         driven_displacement, evolve_covariance, free_displacement,
                         stationary_state)
from .driving import (Constant, Harmonic, Heaviside, Impulse, Sampled, forced_trajectory,
                      harmonic_response, steady_ellipse)

__version__ = "0.1.0"

__all__ = [
    "Constant", "CovarianceError", "EPDegeneracyError", "GaussianState", "Grid2D", "Harmonic",
    "Heaviside", "Impulse", "ModelParams", "ParameterError", "Regime", "Sampled", "StateError",
    "drive_from_force", "drive_from_target", "driven_displacement", "evolve_covariance",
    "forced_trajectory", "free_displacement", "harmonic_response", "liouvillian_eigenvalue",
    "renormalized_frequency", "second_moments", "stationary_state", "steady_ellipse", "wigner",
]
