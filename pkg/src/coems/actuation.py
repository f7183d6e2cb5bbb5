"""Gradient-force actuation physics and force calibration.

Covers the driven-oscillator amplitude, extraction of rms and peak-to-peak
forces from a driven spectral peak at a known resolution bandwidth, the
separable dipole gradient-force model (linear in RF amplitude, affine in DC
bias, cubic decay with probe height), the DC bias that switches the response
off, and the intracavity power a radiation-pressure drive would need to
match a given rms force.

The dipole model is anchored by a reference force at a reference state
rather than by absolute electrostatics: the intrinsic dipole moment, the
induced-polarizability coefficient and the field strength at the resonator
are not separately measurable here, only their combined scaling behaviour.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .mechmodel import Environment, MechanicalMode, susceptibility

__all__ = [
    "MissingRBWError",
    "NoSwitchOffError",
    "DipoleModel",
    "ForceCalibration",
    "steady_state_amplitude",
    "force_from_peak",
    "peak_density_from_force",
    "backsolve_rbw",
    "response_amplitude",
    "switch_off_voltage",
    "radiation_pressure_power",
    "force_report_json",
]

_PP_OVER_RMS = 2.0 * math.sqrt(2.0)


class MissingRBWError(ValueError):
    """A force extraction was requested without a resolution bandwidth."""


class NoSwitchOffError(ValueError):
    """No DC bias can null the dipole when the induced coefficient is zero."""


@dataclass(frozen=True)
class DipoleModel:
    """Separable gradient-force scaling model.

    force(V_rf, V_dc, z) = reference_force
                           * (V_rf / reference_rf_voltage)
                           * (p_int + alpha_v * V_dc) / (p_int + alpha_v * V_ref)
                           * (z_ref / z)**3

    intrinsic_dipole_cm is the z-component of the dipole moment frozen into
    the dielectric (C m); induced_coefficient_cm_per_v adds the part
    proportional to the applied DC bias.  The overall force scale is pinned
    by reference_force_n measured at (reference_height_m, reference_dc_volts,
    reference_rf_voltage).
    """

    intrinsic_dipole_cm: float
    induced_coefficient_cm_per_v: float
    probe_height_m: float
    probe_tip_diameter_m: float = 2e-6
    reference_force_n: float = 1.0
    reference_height_m: float = 15e-6
    reference_dc_volts: float = 0.0
    reference_rf_voltage: float = 1.0

    def __post_init__(self) -> None:
        if not self.probe_height_m > 0:
            raise ValueError("probe height must be positive")
        if not self.reference_height_m > 0:
            raise ValueError("reference height must be positive")
        if not self.reference_rf_voltage > 0:
            raise ValueError("reference RF voltage must be positive")

    def dipole_z(self, v_dc: float) -> float:
        """Net z dipole moment at a DC bias (C m)."""
        return self.intrinsic_dipole_cm + self.induced_coefficient_cm_per_v * v_dc


@dataclass(frozen=True)
class ForceCalibration:
    """rms and peak-to-peak drive force inferred from a spectral peak."""

    f_rms_n: float
    f_pp_n: float
    mass_kg: float
    omega_m: float
    gamma: float
    peak_asd_m_per_rthz: float
    rbw_hz: float

    def __post_init__(self) -> None:
        if not math.isclose(self.f_pp_n, _PP_OVER_RMS * self.f_rms_n, rel_tol=1e-12):
            raise ValueError("peak-to-peak force must equal 2*sqrt(2) times rms force")


def steady_state_amplitude(mode: MechanicalMode, force_amplitude_n: float, omega: float) -> float:
    """Displacement amplitude f0 * |chi(w)| of the harmonically driven mode.

    On resonance this reduces to f0 / (m Gamma w_m).
    """
    if force_amplitude_n < 0:
        raise ValueError("force amplitude must be >= 0")
    return force_amplitude_n * abs(susceptibility(mode, omega))


def force_from_peak(
    mode: MechanicalMode, peak_asd_m_per_rthz: float, rbw_hz: float | None
) -> ForceCalibration:
    """Drive force from the peak amplitude density of a driven resonance.

    F_rms = (2/sqrt(pi)) * m Gamma w_m * S^(1/2) * rbw^(1/2), with
    F_pp = 2*sqrt(2) * F_rms.  The resolution bandwidth converts the
    displayed density back into a tone power and must be supplied.
    """
    if rbw_hz is None:
        raise MissingRBWError("resolution bandwidth required to convert a peak density to a force")
    if not rbw_hz > 0:
        raise ValueError("resolution bandwidth must be positive")
    if peak_asd_m_per_rthz < 0:
        raise ValueError("peak amplitude density must be >= 0")
    f_rms = (
        (2.0 / math.sqrt(math.pi))
        * mode.mass_kg
        * mode.gamma
        * mode.omega_m
        * peak_asd_m_per_rthz
        * math.sqrt(rbw_hz)
    )
    return ForceCalibration(
        f_rms_n=f_rms,
        f_pp_n=_PP_OVER_RMS * f_rms,
        mass_kg=mode.mass_kg,
        omega_m=mode.omega_m,
        gamma=mode.gamma,
        peak_asd_m_per_rthz=peak_asd_m_per_rthz,
        rbw_hz=rbw_hz,
    )


def peak_density_from_force(mode: MechanicalMode, f_rms_n: float, rbw_hz: float) -> float:
    """Inverse of :func:`force_from_peak`: peak amplitude density for an rms force."""
    if not rbw_hz > 0:
        raise ValueError("resolution bandwidth must be positive")
    return f_rms_n * math.sqrt(math.pi) / (
        2.0 * mode.mass_kg * mode.gamma * mode.omega_m * math.sqrt(rbw_hz)
    )


def backsolve_rbw(mode: MechanicalMode, peak_asd_m_per_rthz: float, f_pp_n: float) -> float:
    """Resolution bandwidth implied by a (peak density, peak-to-peak force) pair.

    Useful when the analyzer bandwidth behind a quoted force figure was not
    recorded; the result should be treated as a derived artifact of that
    figure, not an independent measurement.
    """
    denom = 4.0 / math.sqrt(math.pi) * mode.mass_kg * mode.omega_m * mode.gamma * peak_asd_m_per_rthz
    return (f_pp_n / denom) ** 2


def response_amplitude(dipole: DipoleModel, v_rf: float, v_dc: float, z_m: float) -> float:
    """Drive force (N) of the separable dipole model at the given operating point.

    Linear in the RF amplitude, affine in the DC bias through the net dipole
    moment, and falling off as the inverse cube of the probe height.
    """
    if not z_m > 0:
        raise ValueError("probe height must be positive")
    dipole_ratio = dipole.dipole_z(v_dc) / dipole.dipole_z(dipole.reference_dc_volts)
    return (
        dipole.reference_force_n
        * (v_rf / dipole.reference_rf_voltage)
        * dipole_ratio
        * (dipole.reference_height_m / z_m) ** 3
    )


def switch_off_voltage(dipole: DipoleModel) -> float:
    """DC bias that nulls the net z dipole and extinguishes the RF response."""
    if dipole.induced_coefficient_cm_per_v == 0.0:
        raise NoSwitchOffError("induced coefficient is zero; the dipole cannot be nulled")
    return -dipole.intrinsic_dipole_cm / dipole.induced_coefficient_cm_per_v


def radiation_pressure_power(f_rms_n: float, env: Environment) -> float:
    """Intracavity power c * F_rms / pi equivalent to an rms drive force."""
    if f_rms_n < 0:
        raise ValueError("rms force must be >= 0")
    return env.c * f_rms_n / math.pi


def force_report_json(cal: ForceCalibration, provenance: dict | None = None) -> str:
    """JSON force-calibration report: inputs, F_rms and F_pp in N and uN."""
    record = {
        "mass_kg": cal.mass_kg,
        "frequency_hz": cal.omega_m / (2.0 * math.pi),
        "linewidth_hz": cal.gamma / (2.0 * math.pi),
        "peak_asd_m_per_rthz": cal.peak_asd_m_per_rthz,
        "rbw_hz": cal.rbw_hz,
        "f_rms_n": cal.f_rms_n,
        "f_rms_un": cal.f_rms_n * 1e6,
        "f_pp_n": cal.f_pp_n,
        "f_pp_un": cal.f_pp_n * 1e6,
    }
    record.update(provenance or {})
    return json.dumps(record, sort_keys=True, indent=2) + "\n"
