"""Reference microtoroid device parameters.

The bundled device is a silica microtoroid (60 um major / 6 um minor
diameter) read out at room temperature.  Its three dominant mechanical
modes are the lowest-order crown mode (j=1), the lowest-order radial
flexural mode (j=2) and the second-order crown mode (j=3).

Resonance frequencies are not independently specified for this device;
they are back-solved from the zero-point peak relation
w_m = hbar / (m Gamma S_zp) using the calibrated masses, linewidths and
zero-point amplitude densities.  Treat them as derived values with the
few-percent uncertainty inherited from two-significant-figure inputs.
"""

from __future__ import annotations

import math

from .mechmodel import Crown, Environment, MechanicalMode, RadialFlexural, SpectrumModel

__all__ = [
    "REFERENCE_TEMPERATURE_K",
    "REFERENCE_NOISE_FLOOR_ASD",
    "MAJOR_RADIUS_M",
    "MINOR_RADIUS_M",
    "PROBE_HEIGHT_M",
    "PROBE_TIP_DIAMETER_M",
    "reference_mode",
    "reference_model",
]

REFERENCE_TEMPERATURE_K = 300.0
# flat transduction noise floor, amplitude density in m/sqrt(Hz)
REFERENCE_NOISE_FLOOR_ASD = 1.5e-18

MAJOR_RADIUS_M = 30e-6
MINOR_RADIUS_M = 3e-6
PROBE_HEIGHT_M = 15e-6
PROBE_TIP_DIAMETER_M = 2e-6

# per mode: (mass kg, linewidth Gamma/2pi Hz, zero-point amplitude m/sqrt(Hz), shape)
_MODE_TABLE = {
    1: (280e-9, 9.5e3, 1.4e-20, Crown(azimuthal_order=2)),
    2: (410e-9, 11.5e3, 1.1e-20, RadialFlexural()),
    3: (33e-9, 6.8e3, 4.6e-20, Crown(azimuthal_order=3)),
}


def reference_mode(index: int, env: Environment | None = None) -> MechanicalMode:
    """One of the three calibrated modes, with its derived resonance frequency."""
    env = env or Environment(temperature_k=REFERENCE_TEMPERATURE_K)
    try:
        mass_kg, linewidth_hz, zp_asd, shape = _MODE_TABLE[index]
    except KeyError:
        raise KeyError(f"reference device has modes 1..3, not {index}") from None
    gamma = 2.0 * math.pi * linewidth_hz
    omega_m = env.hbar / (mass_kg * gamma * zp_asd**2)
    return MechanicalMode(
        index=index, mass_kg=mass_kg, omega_m=omega_m, gamma=gamma, shape=shape
    )


def reference_model(temperature_k: float = REFERENCE_TEMPERATURE_K) -> SpectrumModel:
    """Three-mode spectrum model of the reference device."""
    env = Environment(temperature_k=temperature_k)
    modes = tuple(reference_mode(j, env) for j in (1, 2, 3))
    return SpectrumModel(
        modes=modes, noise_floor=REFERENCE_NOISE_FLOOR_ASD**2, environment=env
    )
