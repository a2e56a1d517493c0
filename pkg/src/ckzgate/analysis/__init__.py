"""Spectra, symmetry sectors, error models and thermal Monte Carlo."""

from .errors import (
    DecayError,
    ErrorBudget,
    ExcitationStats,
    FitQualityWarning,
    LeakageFit,
    OptimalDuration,
    RegimeError,
    decay_error,
    decay_error_from_run,
    landau_zener_estimate,
    leakage_fit,
    leakage_model,
    mean_excitation,
    mean_field_excitation,
    minimize_sampled,
    minimize_total_error,
    optimal_duration,
)
from .spectrum import SpectrumScan, TrackingWarning, bright_gap, spectrum_scan
from .symmetry import SymmetryBrokenError, SymmetryReport, SymmetrySector, block_diagonalize, classify_symmetry
from .thermal import ThermalResult, thermal_monte_carlo, thermal_speed
