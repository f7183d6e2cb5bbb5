"""Cavity opto-electromechanical system (COEMS) simulation and analysis.

Subpackages by role:

- :mod:`coems.mechmodel`: closed-form mode physics (susceptibility, thermal
  and zero-point spectra, derived quantities)
- :mod:`coems.synth`: synthetic data (Langevin trajectories, periodograms,
  noisy thermal spectra, coherently driven responses)
- :mod:`coems.fitting`: parameter recovery (multi-Lorentzian fits,
  displacement calibration, power-law and dissipation regressions)
- :mod:`coems.actuation`: gradient-force calibration and the dipole
  scaling model
- :mod:`coems.microscopy`: scanning-probe imaging of mode structure
- :mod:`coems.presets`: the bundled reference microtoroid device
- :mod:`coems.cli`: the ``coems`` command-line pipeline
"""

from .mechmodel import (
    Crown,
    Environment,
    MechanicalMode,
    RadialFlexural,
    SpectrumModel,
    noise_to_zp_ratio,
    quantum_temperature,
    susceptibility,
    thermal_psd,
    total_psd,
    zero_point_peak,
)
from .presets import reference_mode, reference_model

__version__ = "0.1.0"

__all__ = [
    "Crown",
    "Environment",
    "MechanicalMode",
    "RadialFlexural",
    "SpectrumModel",
    "susceptibility",
    "thermal_psd",
    "total_psd",
    "zero_point_peak",
    "noise_to_zp_ratio",
    "quantum_temperature",
    "reference_mode",
    "reference_model",
    "__version__",
]
