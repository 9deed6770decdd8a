"""Energy decay of Maxwell fields in Drude-Lorentz media, mode by mode."""

from .errors import CertificationError, LorentzDecayError
from .material import (
    MaterialParams,
    Oscillator,
    classify_dissipation,
    complex_response,
    drude_toy,
    gamma,
    load_material,
    lorentz_toy,
)
from .mode_dynamics import ModeState, build_generator, energy_curve, propagate

__all__ = [
    "CertificationError",
    "LorentzDecayError",
    "MaterialParams",
    "ModeState",
    "Oscillator",
    "build_generator",
    "classify_dissipation",
    "complex_response",
    "drude_toy",
    "energy_curve",
    "gamma",
    "load_material",
    "lorentz_toy",
    "propagate",
]
