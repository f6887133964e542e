"""Emission spectra of two distant qubits strongly coupled to a 1D waveguide."""

__version__ = "0.1.0"

from .model import ModelParams, initial_amplitudes, spectral_density
from .bath import DiscretizedBath, discretize
from .state import MultiD1State, emission_spectrum_snapshot, photon_numbers, populations
from .dynamics import IntegratorConfig, build_context, initial_state, propagate
from .spectra import SpKernels, TrwaKernels, solve_eta, sp_spectrum, trwa_spectrum
from .analysis import SpectrumSeries, compare, find_peaks, splitting_estimate

__all__ = [
    "ModelParams", "initial_amplitudes", "spectral_density",
    "DiscretizedBath", "discretize",
    "MultiD1State", "emission_spectrum_snapshot", "photon_numbers", "populations",
    "IntegratorConfig", "build_context", "initial_state", "propagate",
    "SpKernels", "TrwaKernels", "solve_eta", "sp_spectrum", "trwa_spectrum",
    "SpectrumSeries", "compare", "find_peaks", "splitting_estimate",
]
