"""Synthetic-data generators against Parseval, equipartition and the
closed-form spectra they must reproduce."""

from __future__ import annotations

import math

import numpy as np
import pytest

from coems.mechmodel import thermal_psd, total_psd
from coems.synth import (
    DriveTone,
    SpectrumData,
    TimeSeries,
    coherent_amplitude,
    driven_response,
    integrated_power,
    langevin_trajectory,
    read_spectrum_csv,
    synth_thermal_spectrum,
    welch_psd,
    with_periodogram_noise,
    write_spectrum_csv,
)


class TestTypes:
    def test_spectrum_data_validation(self):
        with pytest.raises(ValueError):
            SpectrumData(frequencies=np.array([1.0, 1.0]), values=np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            SpectrumData(frequencies=np.array([1.0, 2.0]), values=np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            SpectrumData(
                frequencies=np.array([1.0, 2.0]), values=np.array([1.0, 1.0]), rbw_hz=0.0
            )
        with pytest.raises(ValueError):
            SpectrumData(
                frequencies=np.array([1.0, 2.0]), values=np.array([1.0, 1.0]), kind="bogus"
            )

    def test_drive_tone_needs_a_force(self):
        with pytest.raises(ValueError):
            DriveTone(omega=1e6, modal_forces_n=(0.0, 0.0))

    def test_time_series_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            TimeSeries(sample_rate_hz=1.0, samples=np.array([0.0, np.inf]))


class TestLangevin:
    def test_zero_temperature_is_identically_zero(self, model):
        from coems.mechmodel import Environment

        m3 = model.mode(3)
        cold = Environment(temperature_k=0.0)
        ts = langevin_trajectory(m3, cold, 2000.0 / m3.gamma, 20.0 * m3.frequency_hz, seed=1)
        assert np.all(ts.samples == 0.0)

    def test_reproducible_and_seed_sensitive(self, model, env):
        m3 = model.mode(3)
        dur = 80.0 / m3.linewidth_hz
        a = langevin_trajectory(m3, env, dur, 15.0 * m3.frequency_hz, seed=42)
        b = langevin_trajectory(m3, env, dur, 15.0 * m3.frequency_hz, seed=42)
        c = langevin_trajectory(m3, env, dur, 15.0 * m3.frequency_hz, seed=43)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_sampling_preconditions(self, model, env):
        m3 = model.mode(3)
        with pytest.raises(ValueError):
            langevin_trajectory(m3, env, 1.0, 5.0 * m3.frequency_hz, seed=0)
        with pytest.raises(ValueError):
            langevin_trajectory(m3, env, 1.0 / m3.gamma, 20.0 * m3.frequency_hz, seed=0)

    def test_equipartition_variance(self, model, env):
        m3 = model.mode(3)
        ts = langevin_trajectory(m3, env, 400.0 / m3.gamma, 20.0 * m3.frequency_hz, seed=123)
        expected = env.k_b * env.temperature_k / (m3.mass_kg * m3.omega_m**2)
        # 400 damping times: statistical scatter sqrt(2/400) ~ 7% per run
        assert np.var(ts.samples) == pytest.approx(expected, rel=0.2)

    def test_periodogram_matches_analytic_spectrum(self, model, env):
        m3 = model.mode(3)
        ts = langevin_trajectory(m3, env, 2000.0 / m3.gamma, 20.0 * m3.frequency_hz, seed=7)
        spec = welch_psd(ts, segment_length=1 << 17)
        band = (np.abs(spec.frequencies - m3.frequency_hz) < 5.0 * m3.linewidth_hz)
        analytic = thermal_psd(m3, env, 2.0 * math.pi * spec.frequencies[band])
        z = (spec.values[band] - analytic) / (analytic / math.sqrt(spec.averages))
        assert np.mean(np.abs(z) < 3.0) >= 0.95


class TestWelch:
    def test_tone_parseval(self):
        fs, amp, f0 = 1.0e4, 3e-9, 1234.5
        t = np.arange(1 << 16) / fs
        ts = TimeSeries(fs, amp * np.cos(2.0 * math.pi * f0 * t))
        spec = welch_psd(ts, segment_length=4097)
        assert integrated_power(spec) == pytest.approx(amp**2 / 2.0, rel=1e-2)

    def test_white_noise_parseval_and_flatness(self):
        rng = np.random.default_rng(5)
        fs = 1.0e4
        ts = TimeSeries(fs, rng.standard_normal(1 << 16) * 2e-9)
        spec = welch_psd(ts, segment_length=1024)
        assert integrated_power(spec) == pytest.approx(np.var(ts.samples), rel=0.05)
        mid = spec.values[10:-10]
        assert np.std(mid) / np.mean(mid) < 0.3  # flat up to averaging noise

    def test_constant_series_power_at_dc(self):
        level = 2.5e-9
        ts = TimeSeries(1.0e4, np.full(8192, level))
        spec = welch_psd(ts, segment_length=1024)
        df = spec.frequencies[1]
        assert integrated_power(spec, f_hi=3.0 * df) == pytest.approx(level**2, rel=1e-6)
        assert integrated_power(spec, f_lo=10.0 * df) < 1e-12 * level**2

    def test_rbw_is_window_enbw(self):
        ts = TimeSeries(1.0e4, np.zeros(4096))
        spec = welch_psd(ts, segment_length=1024)
        assert spec.rbw_hz == pytest.approx(1.5 * 1.0e4 / 1024, rel=1e-3)  # Hann ENBW

    def test_empty_and_bad_arguments(self):
        ts = TimeSeries(1.0, np.array([]))
        with pytest.raises(ValueError):
            welch_psd(ts, segment_length=1)
        ts2 = TimeSeries(1.0, np.zeros(16))
        with pytest.raises(ValueError):
            welch_psd(ts2, segment_length=32)
        with pytest.raises(ValueError):
            welch_psd(ts2, segment_length=8, overlap_fraction=1.0)


class TestSynthThermal:
    def test_many_averages_approach_model(self, model):
        grid = np.linspace(4.2e6, 6.2e6, 2500)
        spec = synth_thermal_spectrum(model, grid, averages=10**6, seed=9)
        clean = total_psd(model, 2.0 * math.pi * grid)
        assert np.max(np.abs(spec.values / clean - 1.0)) < 5e-3

    def test_single_average_fluctuates_fully(self, model):
        grid = np.linspace(4.2e6, 6.2e6, 2500)
        spec = synth_thermal_spectrum(model, grid, averages=1, seed=9)
        clean = total_psd(model, 2.0 * math.pi * grid)
        rel = spec.values / clean
        assert 0.85 < np.std(rel) < 1.15  # exponential statistics
        assert np.mean(rel) == pytest.approx(1.0, abs=0.1)

    def test_deterministic_per_seed(self, model):
        grid = np.linspace(4.2e6, 6.2e6, 100)
        a = synth_thermal_spectrum(model, grid, averages=10, seed=3)
        b = synth_thermal_spectrum(model, grid, averages=10, seed=3)
        assert np.array_equal(a.values, b.values)

    def test_noise_helper_scales_existing_spectrum(self, model):
        grid = np.linspace(4.2e6, 6.2e6, 500)
        clean = SpectrumData(
            frequencies=grid, values=total_psd(model, 2.0 * math.pi * grid), rbw_hz=1.0
        )
        noisy = with_periodogram_noise(clean, averages=100, seed=2)
        assert noisy.averages == 100
        assert np.std(noisy.values / clean.values) == pytest.approx(0.1, rel=0.2)


class TestDrivenResponse:
    def test_single_mode_peak_amplitude(self, model, env):
        from coems.mechmodel import SpectrumModel

        m3 = model.mode(3)
        single = SpectrumModel(modes=(m3,), noise_floor=model.noise_floor, environment=env)
        rbw = 1.0e3
        force = 1e-10
        grid = m3.frequency_hz + np.linspace(-5e4, 5e4, 2001)
        spec = driven_response(single, [force], grid, rbw)
        i_res = np.argmin(np.abs(grid - m3.frequency_hz))
        tone_amp = math.sqrt((spec.values[i_res] - total_psd(single, m3.omega_m)) * rbw)
        expected = force / (m3.mass_kg * m3.gamma * m3.omega_m)
        assert tone_amp == pytest.approx(expected, rel=1e-4)

    def test_linearity_in_drive(self, model):
        rbw = 1.0e3
        grid = np.linspace(4.5e6, 5.8e6, 501)
        base = driven_response(model, [1e-10, 1e-10, 1e-10], grid, rbw)
        scaled = driven_response(model, [3e-10, 3e-10, 3e-10], grid, rbw)
        coherent_base = base.values - total_psd(model, 2.0 * math.pi * grid)
        coherent_scaled = scaled.values - total_psd(model, 2.0 * math.pi * grid)
        assert np.allclose(coherent_scaled, 9.0 * coherent_base, rtol=1e-9)

    def test_intermode_interference_notch(self, model, env):
        """One relative drive phase cancels the response between the two lowest
        modes (the inverted lineshape); the other reinforces it."""
        from coems.mechmodel import SpectrumModel

        m1, m2 = model.mode(1), model.mode(2)
        pair = SpectrumModel(modes=(m1, m2), noise_floor=0.0, environment=env)
        f = 1e-10
        between = np.linspace(4.75e6, 5.05e6, 601)
        w = 2.0 * math.pi * between

        def coherent(f1, f2):
            return np.array([abs(coherent_amplitude(pair, [f1, f2], wi)) for wi in w])

        both = coherent(f, f)
        only1 = coherent(f, 0.0)
        only2 = coherent(0.0, f)
        notch = (both < only1) & (both < only2)
        assert notch.any()
        assert both.min() < 0.1 * np.minimum(only1, only2)[notch.argmax()]
        # antiphase drive shows no cancellation between the resonances
        anti = coherent(f, -f)
        assert not ((anti < only1) & (anti < only2)).any()

    def test_reference_maximum_oscillation(self, model, env):
        # drive sized to the observed 2.4e-14 m/rtHz maximum on the 33 ug mode
        from coems.mechmodel import SpectrumModel

        m3 = model.mode(3)
        single = SpectrumModel(modes=(m3,), noise_floor=model.noise_floor, environment=env)
        rbw = 21958.68
        target_asd = 2.4e-14
        force = target_asd * math.sqrt(rbw) * m3.mass_kg * m3.gamma * m3.omega_m
        grid = m3.frequency_hz + np.linspace(-4e4, 4e4, 1601)
        spec = driven_response(single, [force], grid, rbw)
        assert math.sqrt(spec.values.max()) == pytest.approx(target_asd, rel=1e-3)

    def test_requires_modes_and_matching_forces(self, model):
        from coems.mechmodel import SpectrumModel

        empty = SpectrumModel(modes=(), noise_floor=1e-36)
        with pytest.raises(ValueError):
            driven_response(empty, [], np.linspace(1e6, 2e6, 10), 1.0)
        with pytest.raises(ValueError):
            driven_response(model, [1e-10], np.linspace(1e6, 2e6, 10), 1.0)


class TestSerialization:
    def test_csv_roundtrip(self, model, tmp_path):
        grid = np.linspace(4.2e6, 6.2e6, 64)
        spec = synth_thermal_spectrum(model, grid, averages=10, seed=3)
        path = tmp_path / "spec.csv"
        write_spectrum_csv(spec, path, provenance={"seed": 3})
        back = read_spectrum_csv(path, averages=10, rbw_hz=spec.rbw_hz)
        assert np.allclose(back.frequencies, spec.frequencies, rtol=1e-12)
        assert np.allclose(back.values, spec.values, rtol=1e-10)
        text = path.read_text()
        assert text.splitlines()[0].startswith("# seed=3")
        assert "frequency_hz,psd_m2_per_hz" in text
