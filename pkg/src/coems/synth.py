"""Synthetic data generation: Langevin trajectories, periodogram estimates,
noisy thermal spectra and coherently driven frequency responses.

The Langevin integrator is the package's independent time-domain oracle for
the closed-form spectra in :mod:`coems.mechmodel`: a trajectory's averaged
periodogram must reproduce the analytic Lorentzian without shared code paths.

Spectral data use the same double-sided-in-angular-frequency convention as
the model: stored values are true two-sided power densities sampled at
nonnegative frequencies (Hz), so integrated power doubles every bin except
DC and Nyquist.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .mechmodel import Environment, MechanicalMode, SpectrumModel, susceptibility, total_psd

__all__ = [
    "TimeSeries",
    "SpectrumData",
    "DriveTone",
    "langevin_trajectory",
    "welch_psd",
    "synth_thermal_spectrum",
    "driven_response",
    "coherent_amplitude",
    "with_periodogram_noise",
    "integrated_power",
    "write_spectrum_csv",
    "read_spectrum_csv",
    "spectrum_metadata",
]


@dataclass(frozen=True)
class TimeSeries:
    """Sampled displacement record (m) with the RNG seed that produced it."""

    sample_rate_hz: float
    samples: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if not self.sample_rate_hz > 0:
            raise ValueError("sample rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class SpectrumData:
    """Sampled spectral density series.

    frequencies are in Hz, strictly increasing; values are two-sided power
    densities (m^2/Hz for calibrated data, arbitrary units otherwise).
    kind is one of "thermal", "driven", "raw-uncalibrated".  averages counts
    the averaged periodogram segments behind each bin (0 for noiseless model
    evaluations); rbw_hz is the resolution bandwidth of the estimate.
    """

    frequencies: np.ndarray
    values: np.ndarray
    kind: str = "thermal"
    averages: int = 0
    rbw_hz: float = 1.0
    seed: int | None = None

    _KINDS = ("thermal", "driven", "raw-uncalibrated")

    def __post_init__(self) -> None:
        f = np.asarray(self.frequencies, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)
        if f.shape != v.shape or f.ndim != 1:
            raise ValueError("frequencies and values must be 1-d arrays of equal length")
        if f.size and np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("spectral densities must be >= 0")
        if not self.rbw_hz > 0:
            raise ValueError("resolution bandwidth must be positive")
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")

    @property
    def asd(self) -> np.ndarray:
        """Amplitude (square-root) density view, m/sqrt(Hz)."""
        return np.sqrt(self.values)

    def bin_width_hz(self) -> float:
        return float(np.median(np.diff(self.frequencies)))


@dataclass(frozen=True)
class DriveTone:
    """A coherent drive: one angular frequency and a signed force per mode.

    Signs carry the relative phase of the modal forces: equal signs drive the
    modes in phase and opposite signs in antiphase.
    """

    omega: float
    modal_forces_n: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "modal_forces_n", tuple(self.modal_forces_n))
        if not any(f != 0.0 for f in self.modal_forces_n):
            raise ValueError("at least one modal force must be nonzero")


def langevin_trajectory(
    mode: MechanicalMode,
    env: Environment,
    duration_s: float,
    sample_rate_hz: float,
    seed: int,
) -> TimeSeries:
    """Integrate m x'' + m Gamma x' + m w_m^2 x = F_T(t) for white thermal force.

    The force has two-sided spectral density S_F = 2 k_B T Gamma m and is held
    constant over each integration step (redrawn per step); the propagation
    between steps uses the exact matrix exponential of the damped-oscillator
    state matrix, so there is no numerical damping at high Q.  The step is at
    most 1/(20 f_m); the output is decimated back to sample_rate_hz.  A
    lead-in of 12 damping times is integrated and discarded so the recorded
    window starts in thermal equilibrium.

    Deterministic for a fixed seed.
    """
    f_m = mode.omega_m / (2.0 * math.pi)
    if not sample_rate_hz > 10.0 * f_m:
        raise ValueError(
            f"sample rate {sample_rate_hz:g} Hz does not resolve the oscillation; "
            f"need > {10.0 * f_m:g} Hz"
        )
    if not duration_s * mode.gamma / (2.0 * math.pi) > 10.0:
        raise ValueError("duration must span more than 10 correlation times (2pi/Gamma)")

    n_sub = max(1, math.ceil(20.0 * f_m / sample_rate_hz))
    dt = 1.0 / (sample_rate_hz * n_sub)
    n_out = int(round(duration_s * sample_rate_hz))
    n_steps = n_out * n_sub

    # zero-order-hold discretization of xdot = A x + B u, y = x[0]
    a = np.array([[0.0, 1.0], [-mode.omega_m**2, -mode.gamma]])
    b = np.array([[0.0], [1.0 / mode.mass_kg]])
    c = np.array([[1.0, 0.0]])
    d = np.array([[0.0]])
    ad, bd, cd, dd, _ = signal.cont2discrete((a, b, c, d), dt, method="zoh")
    num, den = signal.ss2tf(ad, bd, cd, dd)

    s_force = 2.0 * env.k_b * env.temperature_k * mode.gamma * mode.mass_kg
    rng = np.random.default_rng(seed)

    if s_force == 0.0:
        x = np.zeros(n_out)
        return TimeSeries(sample_rate_hz=sample_rate_hz, samples=x, seed=seed)

    # lead-in reaching equilibrium before the recorded window
    n_burn = math.ceil(12.0 / (mode.gamma * dt))
    force = rng.standard_normal(n_steps + n_burn) * math.sqrt(s_force / dt)
    x = signal.lfilter(num[0], den, force)
    samples = x[n_burn::n_sub][:n_out]
    return TimeSeries(sample_rate_hz=sample_rate_hz, samples=samples, seed=seed)


def welch_psd(
    ts: TimeSeries,
    segment_length: int,
    overlap_fraction: float = 0.5,
    window: str = "hann",
) -> SpectrumData:
    """Averaged windowed periodogram of a time series.

    Returns two-sided power densities on a nonnegative-frequency grid (the
    canonical convention), with rbw_hz set to the window's equivalent noise
    bandwidth and averages set to the segment count.
    """
    n = ts.samples.size
    if n == 0:
        raise ValueError("cannot estimate a spectrum from an empty series")
    if not 1 <= segment_length <= n:
        raise ValueError("segment_length must be in [1, len(samples)]")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError("overlap_fraction must be in [0, 1)")

    noverlap = int(overlap_fraction * segment_length)
    freqs, pxx = signal.welch(
        ts.samples,
        fs=ts.sample_rate_hz,
        window=window,
        nperseg=segment_length,
        noverlap=noverlap,
        detrend=False,
        scaling="density",
        return_onesided=True,
    )
    # one-sided -> two-sided: interior bins were doubled, DC (and Nyquist for
    # even segment lengths) were not
    values = pxx.copy()
    interior = np.ones_like(values, dtype=bool)
    interior[0] = False
    if segment_length % 2 == 0:
        interior[-1] = False
    values[interior] /= 2.0

    w = signal.get_window(window, segment_length)
    enbw_hz = ts.sample_rate_hz * np.sum(w**2) / np.sum(w) ** 2
    n_segments = 1 + (n - segment_length) // max(1, segment_length - noverlap)
    return SpectrumData(
        frequencies=freqs,
        values=values,
        kind="thermal",
        averages=int(n_segments),
        rbw_hz=float(enbw_hz),
        seed=ts.seed,
    )


def synth_thermal_spectrum(
    model: SpectrumModel,
    freq_grid_hz: np.ndarray,
    averages: int,
    seed: int,
) -> SpectrumData:
    """Model spectrum with averaged-periodogram noise on each bin.

    Each bin of the noiseless model evaluation is multiplied by an
    independent Gamma(k=averages, mean=1) variate, the exact distribution of
    a k-segment averaged periodogram of Gaussian noise.
    """
    if averages < 1:
        raise ValueError("averages must be >= 1")
    f = np.asarray(freq_grid_hz, dtype=float)
    clean = total_psd(model, 2.0 * math.pi * f)
    rng = np.random.default_rng(seed)
    mult = rng.gamma(shape=averages, scale=1.0 / averages, size=f.size)
    df = float(np.median(np.diff(f))) if f.size > 1 else 1.0
    return SpectrumData(
        frequencies=f,
        values=clean * mult,
        kind="thermal",
        averages=averages,
        rbw_hz=df,
        seed=seed,
    )


def with_periodogram_noise(spec: SpectrumData, averages: int, seed: int) -> SpectrumData:
    """Apply k-average periodogram statistics to an existing (clean) spectrum."""
    if averages < 1:
        raise ValueError("averages must be >= 1")
    rng = np.random.default_rng(seed)
    mult = rng.gamma(shape=averages, scale=1.0 / averages, size=spec.values.size)
    return replace(spec, values=spec.values * mult, averages=averages, seed=seed)


def driven_response(
    model: SpectrumModel,
    modal_forces_n,
    freq_grid_hz: np.ndarray,
    rbw_hz: float,
) -> SpectrumData:
    """Swept coherent response over the thermal background.

    The coherent displacement amplitude at drive frequency w is
    X(w) = sum_j f_j chi_j(w) with the given signed force amplitudes.  The
    displayed density is |X|^2 / rbw_hz added to the incoherent background,
    the way a spectrum analyzer shows a driven resonance over Brownian
    noise: a tone of displacement amplitude x appears as a peak of height
    x^2 / rbw_hz above the background.
    """
    if not model.modes:
        raise ValueError("model must contain at least one mode")
    forces = tuple(float(f) for f in modal_forces_n)
    if len(forces) != len(model.modes):
        raise ValueError("need one signed force amplitude per mode")
    if not rbw_hz > 0:
        raise ValueError("resolution bandwidth must be positive")

    f = np.asarray(freq_grid_hz, dtype=float)
    w = 2.0 * math.pi * f
    x = np.zeros(f.size, dtype=complex)
    for amp, mode in zip(forces, model.modes):
        if amp != 0.0:
            x += amp * susceptibility(mode, w)
    values = np.abs(x) ** 2 / rbw_hz + total_psd(model, w)
    return SpectrumData(
        frequencies=f, values=values, kind="driven", averages=0, rbw_hz=rbw_hz
    )


def coherent_amplitude(model: SpectrumModel, modal_forces_n, omega: float) -> complex:
    """Complex displacement amplitude sum_j f_j chi_j(w) at one frequency."""
    forces = tuple(float(f) for f in modal_forces_n)
    if len(forces) != len(model.modes):
        raise ValueError("need one signed force amplitude per mode")
    return complex(
        sum(a * susceptibility(m, omega) for a, m in zip(forces, model.modes) if a)
    )


def integrated_power(
    spec: SpectrumData, f_lo: float | None = None, f_hi: float | None = None
) -> float:
    """Total signal power (variance, m^2) in a band of a spectrum.

    Rectangle rule over the selected bins, doubling every bin except DC to
    account for the negative-frequency half of the two-sided density.  (A
    Nyquist bin of an even-length estimate is also doubled; the error is one
    part in the bin count.)
    """
    f = spec.frequencies
    v = spec.values
    if f.size < 2:
        raise ValueError("need at least two bins to integrate")
    df = spec.bin_width_hz()
    lo = f_lo if f_lo is not None else -math.inf
    hi = f_hi if f_hi is not None else math.inf
    sel = (f >= lo) & (f <= hi)
    weights = np.full(f.size, 2.0)
    weights[f == 0.0] = 1.0
    return float(np.sum(v[sel] * weights[sel]) * df)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_CSV_HEADER = "frequency_hz,psd_m2_per_hz"


def write_spectrum_csv(spec: SpectrumData, path: str | Path, provenance: dict | None = None) -> None:
    """Write the (frequency_hz, psd_m2_per_hz) table, with provenance comments."""
    lines = []
    for key, val in (provenance or {}).items():
        lines.append(f"# {key}={val}")
    lines.append(_CSV_HEADER)
    for f, v in zip(spec.frequencies, spec.values):
        lines.append(f"{f:.12e},{v:.12e}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrum_csv(path: str | Path, **metadata) -> SpectrumData:
    """Read a spectrum CSV written by :func:`write_spectrum_csv`.

    Extra keyword arguments (kind, averages, rbw_hz, seed) override defaults.
    """
    freqs: list[float] = []
    vals: list[float] = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("frequency_hz"):
            continue
        f_s, v_s = line.split(",")
        freqs.append(float(f_s))
        vals.append(float(v_s))
    return SpectrumData(frequencies=np.array(freqs), values=np.array(vals), **metadata)


def spectrum_metadata(spec: SpectrumData) -> dict:
    """JSON-ready metadata record for a spectrum."""
    return {
        "kind": spec.kind,
        "averages": spec.averages,
        "rbw_hz": spec.rbw_hz,
        "seed": spec.seed,
        "n_bins": int(spec.frequencies.size),
        "f_min_hz": float(spec.frequencies[0]) if spec.frequencies.size else None,
        "f_max_hz": float(spec.frequencies[-1]) if spec.frequencies.size else None,
    }


def write_spectrum_json(spec: SpectrumData, path: str | Path, provenance: dict | None = None) -> None:
    record = spectrum_metadata(spec)
    record.update(provenance or {})
    Path(path).write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")
