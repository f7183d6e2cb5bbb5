"""Closed-form mode physics against hand-computed values and limits."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from coems.mechmodel import (
    Crown,
    Environment,
    MechanicalMode,
    SpectrumModel,
    noise_to_zp_ratio,
    quantum_temperature,
    susceptibility,
    thermal_psd,
    total_psd,
    zero_point_peak,
)


def simple_mode(q=10.0, omega=1.0, mass=1.0, index=1):
    return MechanicalMode(index=index, mass_kg=mass, omega_m=omega, gamma=omega / q)


class TestTypes:
    def test_rejects_nonpositive_parameters(self):
        with pytest.raises(ValueError):
            MechanicalMode(index=1, mass_kg=0.0, omega_m=1.0, gamma=0.1)
        with pytest.raises(ValueError):
            MechanicalMode(index=1, mass_kg=1.0, omega_m=-1.0, gamma=0.1)
        with pytest.raises(ValueError):
            MechanicalMode(index=1, mass_kg=1.0, omega_m=1.0, gamma=0.0)

    def test_rejects_overdamped(self):
        with pytest.raises(ValueError):
            MechanicalMode(index=1, mass_kg=1.0, omega_m=1.0, gamma=1.0)

    def test_rejects_negative_temperature(self):
        with pytest.raises(ValueError):
            Environment(temperature_k=-1.0)

    def test_constants_fixed(self):
        env = Environment()
        assert env.k_b == 1.380649e-23
        assert env.hbar == 1.054572e-34
        assert env.c == 2.99792458e8
        assert env.epsilon_0 == 8.8541878e-12
        with pytest.raises(TypeError):
            Environment(temperature_k=4.0, k_b=1.0)

    def test_duplicate_mode_indices_rejected(self):
        with pytest.raises(ValueError):
            SpectrumModel(
                modes=(simple_mode(index=1), simple_mode(index=1)),
                noise_floor=0.0,
            )

    def test_crown_order_validated(self):
        with pytest.raises(ValueError):
            Crown(azimuthal_order=0)


class TestSusceptibility:
    def test_static_compliance(self):
        mode = MechanicalMode(index=1, mass_kg=1.0, omega_m=1.0, gamma=0.1)
        assert susceptibility(mode, 0.0) == pytest.approx(1.0 + 0.0j)

    def test_purely_imaginary_on_resonance(self):
        mode = simple_mode(q=50.0, omega=2e6, mass=3e-9)
        chi = susceptibility(mode, mode.omega_m)
        assert chi.real == pytest.approx(0.0, abs=1e-30)
        assert abs(chi) == pytest.approx(1.0 / (mode.mass_kg * mode.gamma * mode.omega_m))

    def test_reference_mode_peak_magnitude(self, model):
        # |chi| on resonance for the 33 ug mode, value worked out by hand
        m3 = model.mode(3)
        assert abs(susceptibility(m3, m3.omega_m)) == pytest.approx(2.0065e-5, rel=1e-3)

    def test_rejects_negative_frequency(self, model):
        with pytest.raises(ValueError):
            susceptibility(model.mode(1), -1.0)

    @pytest.mark.parametrize("q", [15.0, 100.0, 540.0])
    def test_peak_location_near_resonance(self, q):
        mode = simple_mode(q=q, omega=1e6)
        w = np.linspace(mode.omega_m * 0.98, mode.omega_m * 1.02, 200001)
        w_peak = w[np.argmax(np.abs(susceptibility(mode, w)))]
        # true maximum sits gamma/(4 Q) below resonance, plus O(1/Q^3)
        assert abs(w_peak - mode.omega_m) <= mode.gamma / (4.0 * q) * 1.05


class TestThermalPsd:
    def test_zero_temperature_is_zero(self, model):
        cold = Environment(temperature_k=0.0)
        w = np.linspace(1e6, 1e8, 7)
        assert np.all(thermal_psd(model.mode(1), cold, w) == 0.0)

    def test_reference_peak_amplitude_density(self, model, env):
        # peak value 2 kB T / (m Gamma w^2), hand-computed for the 33 ug mode
        m3 = model.mode(3)
        peak = thermal_psd(m3, env, m3.omega_m)
        assert math.sqrt(peak) == pytest.approx(6.857e-17, rel=1e-3)

    def test_fwhm_equals_gamma_at_high_q(self, model, env):
        m1 = model.mode(1)  # Q ~ 540
        peak = thermal_psd(m1, env, m1.omega_m)
        for sign in (-1.0, 1.0):
            half = thermal_psd(m1, env, m1.omega_m + sign * m1.gamma / 2.0)
            assert half == pytest.approx(peak / 2.0, rel=1e-2)

    def test_locally_even_and_positive(self, model, env):
        m1 = model.mode(1)
        d = m1.gamma  # first-order symmetric within the linewidth
        up = thermal_psd(m1, env, m1.omega_m + d)
        dn = thermal_psd(m1, env, m1.omega_m - d)
        assert up == pytest.approx(dn, rel=5e-3)
        assert up > 0 and dn > 0

    @pytest.mark.parametrize("j", [1, 2, 3])
    def test_equipartition_integral(self, model, env, j):
        # (1/2pi) * integral of S_x over the real line = kB T / (m w^2)
        mode = model.mode(j)
        integral, _ = quad(
            lambda w: thermal_psd(mode, env, w),
             0.0,
            20.0 * mode.omega_m,
            points=[mode.omega_m],
            limit=400,
        )
        var = 2.0 * integral / (2.0 * math.pi)  # even integrand
        expected = env.k_b * env.temperature_k / (mode.mass_kg * mode.omega_m**2)
        assert var == pytest.approx(expected, rel=1e-3)


class TestTotalPsd:
    def test_floor_only(self):
        model = SpectrumModel(modes=(), noise_floor=2.25e-36)
        w = np.linspace(0.0, 1e8, 11)
        assert np.all(total_psd(model, w) == 2.25e-36)
        assert math.sqrt(total_psd(model, 1e7)) == pytest.approx(1.5e-18)

    def test_far_from_resonance_approaches_floor(self, model):
        far = total_psd(model, 100.0 * max(m.omega_m for m in model.modes))
        assert far == pytest.approx(model.noise_floor, rel=1e-3)

    def test_on_resonance_dominated_by_that_mode(self, model, env):
        m3 = model.mode(3)
        total = total_psd(model, m3.omega_m)
        own = thermal_psd(m3, env, m3.omega_m)
        others = total - own - model.noise_floor
        assert others < 0.01 * own
        assert total == pytest.approx(own + model.noise_floor, rel=1e-2)

    def test_never_below_floor(self, model):
        w = np.linspace(0.0, 1e8, 1001)
        assert np.all(total_psd(model, w) >= model.noise_floor)


class TestZeroPoint:
    @pytest.mark.parametrize("j,expected", [(1, 1.4e-20), (2, 1.1e-20), (3, 4.6e-20)])
    def test_reference_amplitudes(self, model, env, j, expected):
        assert zero_point_peak(model.mode(j), env).asd == pytest.approx(expected, rel=2e-2)

    def test_inverse_mass_scaling(self, env):
        a = simple_mode(q=100.0, omega=1e6, mass=1e-9)
        b = simple_mode(q=100.0, omega=1e6, mass=2e-9)
        # doubling the mass at fixed w, Gamma halves the zero-point peak
        assert zero_point_peak(a, env).psd == pytest.approx(
            2.0 * zero_point_peak(b, env).psd, rel=1e-12
        )

    def test_literal_relation(self, model, env):
        for mode in model.modes:
            zp = zero_point_peak(mode, env)
            assert zp.psd * mode.mass_kg * mode.gamma * mode.omega_m == pytest.approx(
                env.hbar, rel=1e-12
            )


class TestNoiseToZp:
    @pytest.mark.parametrize("j,expected", [(1, 107.0), (2, 136.0), (3, 32.0)])
    def test_reference_ratios(self, model, j, expected):
        assert noise_to_zp_ratio(model, j) == pytest.approx(expected, abs=1.0)

    def test_unity_when_floor_matches_zero_point(self, env):
        mode = simple_mode(q=100.0, omega=1e6, mass=1e-9)
        zp = zero_point_peak(mode, env)
        model = SpectrumModel(modes=(mode,), noise_floor=zp.psd, environment=env)
        assert noise_to_zp_ratio(model, 1) == pytest.approx(1.0, rel=1e-12)

    def test_missing_index(self, model):
        with pytest.raises(KeyError):
            noise_to_zp_ratio(model, 9)


class TestQuantumTemperature:
    def test_5p5_mhz(self, env):
        mode = MechanicalMode(
            index=1, mass_kg=1e-9, omega_m=2.0 * math.pi * 5.5e6, gamma=1e3
        )
        assert quantum_temperature(mode, env) == pytest.approx(2.6396e-4, rel=1e-3)

    def test_vanishes_with_frequency(self, env):
        lo = MechanicalMode(index=1, mass_kg=1e-9, omega_m=1e-6, gamma=1e-9)
        assert quantum_temperature(lo, env) < 1e-15

    def test_reference_lowest_crown(self, model, env):
        assert quantum_temperature(model.mode(1), env) == pytest.approx(2.459e-4, rel=1e-3)
