"""Closed-form physics of damped mechanical resonator modes.

Conventions
-----------
Angular frequencies (resonance, damping, evaluation) are rad/s internally;
conversion from Hz happens at the I/O boundary.  Spectral densities are
double-sided in angular frequency: the variance of a stationary signal is
(1/2pi) * integral of S_x(w) dw over the full real line, which makes the
values directly comparable to analyzer readings in m^2/Hz.  Amplitude
(square-root) densities in m/sqrt(Hz) are derived views; the power density
is canonical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

__all__ = [
    "RadialFlexural",
    "Crown",
    "MechanicalMode",
    "Environment",
    "SpectrumModel",
    "ZeroPointPeak",
    "susceptibility",
    "thermal_psd",
    "total_psd",
    "zero_point_peak",
    "noise_to_zp_ratio",
    "quantum_temperature",
]


@dataclass(frozen=True)
class RadialFlexural:
    """Axisymmetric flexural mode tag (displacement independent of azimuth)."""


@dataclass(frozen=True)
class Crown:
    """Crown mode tag: rim displacement varies as cos(n * theta)."""

    azimuthal_order: int

    def __post_init__(self) -> None:
        if self.azimuthal_order < 1:
            raise ValueError("crown azimuthal order must be >= 1")


ModeShapeTag = Union[RadialFlexural, Crown]


@dataclass(frozen=True)
class MechanicalMode:
    """One damped mechanical mode of the resonator.

    Parameters
    ----------
    index : int
        Small integer label, unique within a model.
    mass_kg : float
        Effective mass m (kg).
    omega_m : float
        Angular resonance frequency (rad/s).
    gamma : float
        Damping rate (rad/s), the FWHM of the displacement power spectrum.
    shape : RadialFlexural | Crown
        Mode-shape descriptor.
    """

    index: int
    mass_kg: float
    omega_m: float
    gamma: float
    shape: ModeShapeTag = RadialFlexural()

    def __post_init__(self) -> None:
        if not self.mass_kg > 0:
            raise ValueError("effective mass must be positive")
        if not self.omega_m > 0:
            raise ValueError("resonance frequency must be positive")
        if not self.gamma > 0:
            raise ValueError("damping rate must be positive")
        if not self.gamma < self.omega_m:
            raise ValueError(
                "mode must be underdamped (gamma < omega_m); "
                f"got gamma={self.gamma:g}, omega_m={self.omega_m:g}"
            )

    @property
    def frequency_hz(self) -> float:
        return self.omega_m / (2.0 * math.pi)

    @property
    def linewidth_hz(self) -> float:
        """Power-spectrum FWHM in Hz (gamma / 2pi)."""
        return self.gamma / (2.0 * math.pi)

    @property
    def quality_factor(self) -> float:
        return self.omega_m / self.gamma


@dataclass(frozen=True)
class Environment:
    """Thermal bath temperature plus fixed physical constants (SI)."""

    temperature_k: float = 300.0
    k_b: float = field(default=1.380649e-23, init=False)
    hbar: float = field(default=1.054572e-34, init=False)
    c: float = field(default=2.99792458e8, init=False)
    epsilon_0: float = field(default=8.8541878e-12, init=False)

    def __post_init__(self) -> None:
        if self.temperature_k < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class SpectrumModel:
    """A set of mechanical modes over a flat transduction-noise floor.

    noise_floor is the flat background power density S_N (m^2/Hz).
    """

    modes: tuple[MechanicalMode, ...]
    noise_floor: float
    environment: Environment = Environment()

    def __post_init__(self) -> None:
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.noise_floor < 0:
            raise ValueError("noise floor must be >= 0")
        indices = [m.index for m in self.modes]
        if len(set(indices)) != len(indices):
            raise ValueError("mode indices must be unique")

    def mode(self, index: int) -> MechanicalMode:
        for m in self.modes:
            if m.index == index:
                return m
        raise KeyError(f"no mode with index {index}")


def susceptibility(mode: MechanicalMode, omega):
    """Mechanical susceptibility chi(w) = 1 / [m (w_m^2 - w^2 - i Gamma w)].

    Returns the complex displacement response per unit force (m/N).  Accepts
    a scalar or array of angular frequencies, all >= 0.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("angular frequency must be >= 0")
    denom = mode.mass_kg * (mode.omega_m**2 - w**2 - 1j * mode.gamma * w)
    out = 1.0 / denom
    return complex(out) if np.isscalar(omega) else out


def thermal_psd(mode: MechanicalMode, env: Environment, omega):
    """Brownian-motion displacement spectral density of one mode (m^2/Hz).

    S_x(w) = 2 k_B T Gamma m |chi(w)|^2, a Lorentzian peaking at
    2 k_B T / (m Gamma w_m^2) on resonance.
    """
    chi = susceptibility(mode, omega)
    s = 2.0 * env.k_b * env.temperature_k * mode.gamma * mode.mass_kg
    out = s * np.abs(chi) ** 2
    return float(out) if np.isscalar(omega) else out


def total_psd(model: SpectrumModel, omega):
    """Sum of all modes' Brownian spectra plus the flat noise floor."""
    w = np.asarray(omega, dtype=float)
    out = np.full_like(w, model.noise_floor, dtype=float)
    for m in model.modes:
        out = out + thermal_psd(m, model.environment, w)
    return float(out) if np.isscalar(omega) else out


class ZeroPointPeak(NamedTuple):
    """On-resonance zero-point spectral peak, as power and amplitude density."""

    psd: float  # m^2/Hz
    asd: float  # m/sqrt(Hz)


def zero_point_peak(mode: MechanicalMode, env: Environment) -> ZeroPointPeak:
    """Peak spectral density due to zero-point motion: hbar / (m Gamma w_m)."""
    psd = env.hbar / (mode.mass_kg * mode.gamma * mode.omega_m)
    return ZeroPointPeak(psd=psd, asd=math.sqrt(psd))


def noise_to_zp_ratio(model: SpectrumModel, mode_index: int) -> float:
    """Noise floor over zero-point peak, in amplitude (square-root) units.

    This is the factor by which the transduction sensitivity misses the
    mode's zero-point motion.
    """
    if not model.noise_floor > 0:
        raise ValueError("noise floor must be positive to form the ratio")
    mode = model.mode(mode_index)
    zp = zero_point_peak(mode, model.environment)
    return math.sqrt(model.noise_floor) / zp.asd


def quantum_temperature(mode: MechanicalMode, env: Environment) -> float:
    """Temperature scale hbar * w_m / k_B below which T puts the mode in the
    quantum regime (T << T_q required)."""
    return env.hbar * mode.omega_m / env.k_b
