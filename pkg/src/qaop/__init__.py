"""A-optimal projection: classical iterations, closed-form gains, and a
simulated quantum circuit for the gain update."""

from qaop.classical import AopState, fit_iterative, objective, objective_aux, update_A, update_B
from qaop.spectral import SpectralModel, beta_step, fit_spectral, init_spectral

__all__ = [
    "AopState",
    "SpectralModel",
    "beta_step",
    "fit_iterative",
    "fit_spectral",
    "init_spectral",
    "objective",
    "objective_aux",
    "update_A",
    "update_B",
]

__version__ = "0.1.0"
