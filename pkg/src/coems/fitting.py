"""Parameter recovery from spectra.

Multi-Lorentzian plus flat-floor least squares, reference-tone displacement
calibration, log-log power-law fits and the dissipation-versus-drive
regression.  The Lorentzian fit is Levenberg-Marquardt on log-parameters
(which enforces positivity) with a forward-difference Jacobian; per-bin
inverse-variance weights follow averaged-periodogram statistics
(sigma = value / sqrt(averages)) when the data carry an averages count.

The mass/temperature degeneracy of the thermal model is resolved by treating
the bath temperature as known (it enters only through the product T/m), so
the fitted masses are reported at the supplied environment temperature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .mechmodel import Environment, MechanicalMode, SpectrumModel, zero_point_peak
from .synth import SpectrumData

__all__ = [
    "FitError",
    "NotConvergedError",
    "DegenerateDataError",
    "ToneNotFoundError",
    "ModeFit",
    "FitResult",
    "CalibrationResult",
    "PowerLawFit",
    "DissipationSlope",
    "fit_spectrum",
    "calibrate_displacement",
    "apply_calibration",
    "fit_power_law",
    "dissipation_slope",
    "fit_result_to_json",
    "format_mode_table",
]


class FitError(RuntimeError):
    """Base class for fitting failures."""


class NotConvergedError(FitError):
    """The optimizer hit its iteration cap before meeting tolerances."""


class DegenerateDataError(FitError):
    """Fewer distinct peaks than requested modes and no initial guess given."""


class ToneNotFoundError(FitError):
    """No local peak near the stated reference-tone frequency."""


@dataclass(frozen=True)
class ModeFit:
    """Recovered parameters of one mode, with 1-sigma uncertainties."""

    mass_kg: float
    omega_m: float
    gamma: float
    mass_sigma: float = 0.0
    omega_sigma: float = 0.0
    gamma_sigma: float = 0.0

    @property
    def frequency_hz(self) -> float:
        return self.omega_m / (2.0 * math.pi)

    @property
    def linewidth_hz(self) -> float:
        return self.gamma / (2.0 * math.pi)


@dataclass(frozen=True)
class FitResult:
    """Converged multi-Lorentzian fit: per-mode parameters plus the floor."""

    modes: tuple[ModeFit, ...]
    noise_floor: float
    noise_floor_sigma: float
    residual_norm: float
    converged: bool
    iterations: int
    temperature_k: float = 300.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.converged:
            for m in self.modes:
                if min(m.mass_kg, m.omega_m, m.gamma) <= 0:
                    raise ValueError("converged fit must have positive parameters")
        if self.noise_floor_sigma < 0:
            raise ValueError("uncertainties must be >= 0")

    def to_model(self, env: Environment | None = None) -> SpectrumModel:
        """Rebuild a SpectrumModel from the fitted parameters."""
        env = env or Environment(temperature_k=self.temperature_k)
        modes = tuple(
            MechanicalMode(index=j + 1, mass_kg=m.mass_kg, omega_m=m.omega_m, gamma=m.gamma)
            for j, m in enumerate(self.modes)
        )
        return SpectrumModel(modes=modes, noise_floor=self.noise_floor, environment=env)


@dataclass(frozen=True)
class CalibrationResult:
    """Raw-unit to m^2/Hz scale factor from a known reference tone."""

    scale_factor: float
    reference_frequency_hz: float
    reference_displacement_m: float

    def __post_init__(self) -> None:
        if not self.scale_factor > 0:
            raise ValueError("scale factor must be positive")


@dataclass(frozen=True)
class PowerLawFit:
    """response = prefactor * x**exponent, fitted on log-log axes."""

    exponent: float
    prefactor: float
    exponent_uncertainty: float

    def __post_init__(self) -> None:
        if not self.prefactor > 0:
            raise ValueError("prefactor must be positive")


@dataclass(frozen=True)
class DissipationSlope:
    """Linewidth-versus-drive regression result."""

    slope_hz_per_db: float
    ci95_hz_per_db: tuple[float, float]
    linewidths_hz: tuple[float, ...]
    linewidth_sigmas_hz: tuple[float, ...]


# ---------------------------------------------------------------------------
# multi-Lorentzian fit
# ---------------------------------------------------------------------------

_MAX_ITER = 200
_DIFF_STEP = 1e-6
_XTOL = 1e-8


def _model_values(theta: np.ndarray, omega: np.ndarray, kbt2: float) -> np.ndarray:
    """Spectrum for packed log-parameters [ln m, ln w, ln g]*n + [ln S_N]."""
    p = np.exp(theta)
    out = np.full(omega.size, p[-1])
    for j in range((p.size - 1) // 3):
        m, wm, g = p[3 * j : 3 * j + 3]
        out += (kbt2 * g / m) / ((wm**2 - omega**2) ** 2 + (g * omega) ** 2)
    return out


def _seed_from_peaks(
    freq: np.ndarray, vals: np.ndarray, n_modes: int, env: Environment
) -> list[tuple[float, float, float]]:
    """Initial (m, w, g) per mode from local maxima over the median floor."""
    floor = float(np.median(vals))
    # a peak must clear 3x the median floor and beat its immediate neighbours
    idx = [
        i
        for i in range(1, len(vals) - 1)
        if vals[i] >= 3.0 * floor and vals[i] > vals[i - 1] and vals[i] >= vals[i + 1]
    ]
    # collapse runs of neighbouring candidates to the locally strongest bin
    peaks: list[int] = []
    for i in sorted(idx, key=lambda k: vals[k], reverse=True):
        if all(abs(i - p) > 5 for p in peaks):
            peaks.append(i)
    if len(peaks) < n_modes:
        raise DegenerateDataError(
            f"found {len(peaks)} distinct peaks, need {n_modes}; supply an initial guess"
        )
    peaks = sorted(peaks[:n_modes], key=lambda k: freq[k])

    seeds = []
    for p in peaks:
        half = floor + 0.5 * (vals[p] - floor)
        i_lo = p
        while i_lo > 0 and vals[i_lo] > half:
            i_lo -= 1
        i_hi = p
        while i_hi < len(vals) - 1 and vals[i_hi] > half:
            i_hi += 1
        width_hz = max(freq[i_hi] - freq[i_lo], 2.0 * (freq[1] - freq[0]))
        w0 = 2.0 * math.pi * freq[p]
        g0 = 2.0 * math.pi * width_hz
        # invert the on-resonance peak value 2 kB T / (m g w^2)
        m0 = 2.0 * env.k_b * env.temperature_k / (max(vals[p] - floor, floor) * g0 * w0**2)
        seeds.append((m0, w0, g0))
    return seeds


def _pack(seeds, floor: float) -> np.ndarray:
    theta = []
    for m, w, g in seeds:
        theta.extend([math.log(m), math.log(w), math.log(g)])
    theta.append(math.log(floor))
    return np.array(theta)


def fit_spectrum(
    data: SpectrumData,
    n_modes: int,
    env: Environment,
    initial_guess: SpectrumModel | None = None,
) -> FitResult:
    """Least-squares fit of a sum of thermal Lorentzians plus a flat floor.

    Free parameters are {m_j, w_mj, Gamma_j} per mode and the floor S_N, all
    optimized as logarithms.  Peaks are auto-seeded from local maxima when no
    guess is given.  When ``data.averages`` is set, bins are weighted by the
    averaged-periodogram sigma; the weights are refined once from the first
    converged model so that the noise on strong bins does not bias the fit.

    Raises NotConvergedError on hitting the iteration cap and
    DegenerateDataError when auto-seeding cannot find enough peaks.
    """
    if n_modes < 0:
        raise ValueError("n_modes must be >= 0")
    freq = data.frequencies
    vals = data.values
    if n_modes > 0 and freq.size < 10:
        raise ValueError("too few bins to resolve a resonance")
    omega = 2.0 * math.pi * freq
    kbt2 = 2.0 * env.k_b * env.temperature_k

    if initial_guess is not None:
        seeds = [(m.mass_kg, m.omega_m, m.gamma) for m in initial_guess.modes]
        floor0 = max(initial_guess.noise_floor, np.min(vals[vals > 0], initial=1e-300))
        if len(seeds) != n_modes:
            raise ValueError("initial guess must contain n_modes modes")
    elif n_modes > 0:
        seeds = _seed_from_peaks(freq, vals, n_modes, env)
        floor0 = float(np.median(vals))
    else:
        seeds = []
        floor0 = float(np.median(vals))
    theta0 = _pack(seeds, floor0)

    weighted = bool(data.averages and data.averages > 0)
    tiny = float(np.max(vals)) * 1e-30 + 1e-300

    def run(theta_start: np.ndarray, sigma: np.ndarray | None):
        def residuals(theta):
            r = _model_values(theta, omega, kbt2) - vals
            return r / sigma if sigma is not None else r

        return optimize.least_squares(
            residuals,
            theta_start,
            method="lm",
            diff_step=_DIFF_STEP,
            xtol=_XTOL,
            ftol=_XTOL,
            gtol=_XTOL,
            max_nfev=_MAX_ITER * (theta_start.size + 1),
        )

    sigma = np.maximum(vals, tiny) / math.sqrt(data.averages) if weighted else None
    res = run(theta0, sigma)
    nfev = res.nfev
    if weighted:
        # refine once with model-based sigmas (removes the small-sample bias
        # of weighting by the noisy data themselves)
        model1 = _model_values(res.x, omega, kbt2)
        sigma = np.maximum(model1, tiny) / math.sqrt(data.averages)
        res = run(res.x, sigma)
        nfev += res.nfev
    if res.status == 0:
        raise NotConvergedError(f"iteration cap reached after {nfev} evaluations")

    theta = res.x
    n_par = theta.size
    dof = max(freq.size - n_par, 1)
    s2 = 2.0 * res.cost / dof
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.inv(jtj) * s2
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj) * s2
    sig_theta = np.sqrt(np.maximum(np.diag(cov), 0.0))

    p = np.exp(theta)
    sig_p = p * sig_theta  # log-parameter sigma maps multiplicatively
    mode_fits = []
    for j in range(n_modes):
        m, w, g = p[3 * j : 3 * j + 3]
        sm, sw, sg = sig_p[3 * j : 3 * j + 3]
        mode_fits.append(
            ModeFit(mass_kg=m, omega_m=w, gamma=g, mass_sigma=sm, omega_sigma=sw, gamma_sigma=sg)
        )
    mode_fits.sort(key=lambda mf: mf.omega_m)
    return FitResult(
        modes=tuple(mode_fits),
        noise_floor=p[-1],
        noise_floor_sigma=sig_p[-1],
        residual_norm=float(np.linalg.norm(res.fun)),
        converged=True,
        iterations=int(nfev),
        temperature_k=env.temperature_k,
    )


# ---------------------------------------------------------------------------
# reference-tone calibration
# ---------------------------------------------------------------------------


def calibrate_displacement(
    raw: SpectrumData, reference_frequency_hz: float, reference_displacement_m: float
) -> CalibrationResult:
    """Absolute displacement calibration from a known coherent tone.

    Locates the tone within +/-2 bins of the stated frequency, integrates its
    power above the local floor and scales so the calibrated tone power
    equals x_ref^2 / 2 (the mean square of a coherent tone).
    """
    freq = raw.frequencies
    vals = raw.values
    if freq.size < 16:
        raise ValueError("spectrum too short to locate a tone")
    df = raw.bin_width_hz()
    center = int(np.argmin(np.abs(freq - reference_frequency_hz)))
    lo = max(center - 2, 1)
    hi = min(center + 2, freq.size - 2)
    p = lo + int(np.argmax(vals[lo : hi + 1]))
    if not (vals[p] > vals[p - 1] and vals[p] >= vals[p + 1]):
        raise ToneNotFoundError(
            f"no local peak within 2 bins of {reference_frequency_hz:g} Hz"
        )

    guard = 4
    span = 20
    nbhd = [
        i
        for i in range(max(p - span, 0), min(p + span + 1, freq.size))
        if abs(i - p) > guard
    ]
    local_floor = float(np.median(vals[nbhd]))
    if not vals[p] > 3.0 * local_floor:
        raise ToneNotFoundError(
            f"peak near {reference_frequency_hz:g} Hz does not stand above the local floor"
        )

    sel = slice(max(p - 3, 0), min(p + 4, freq.size))
    tone_power_raw = 2.0 * float(np.sum(np.maximum(vals[sel] - local_floor, 0.0))) * df
    scale = (reference_displacement_m**2 / 2.0) / tone_power_raw
    return CalibrationResult(
        scale_factor=scale,
        reference_frequency_hz=float(freq[p]),
        reference_displacement_m=reference_displacement_m,
    )


def apply_calibration(raw: SpectrumData, calibration: CalibrationResult) -> SpectrumData:
    """Scale a raw spectrum into absolute m^2/Hz units."""
    return SpectrumData(
        frequencies=raw.frequencies,
        values=raw.values * calibration.scale_factor,
        kind="thermal" if raw.kind == "raw-uncalibrated" else raw.kind,
        averages=raw.averages,
        rbw_hz=raw.rbw_hz,
        seed=raw.seed,
    )


# ---------------------------------------------------------------------------
# power-law and dissipation regressions
# ---------------------------------------------------------------------------


def fit_power_law(pairs) -> PowerLawFit:
    """Least-squares exponent of response = c * x**a on log-log axes.

    ``pairs`` is a sequence of (x, response) with x > 0 and response > 0;
    at least three points are required.
    """
    arr = np.asarray(list(pairs), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ValueError("need at least three (x, response) pairs")
    if np.any(arr <= 0):
        raise ValueError("power-law fit requires positive x and response values")
    lx = np.log(arr[:, 0])
    ly = np.log(arr[:, 1])
    n = lx.size
    a = np.vstack([lx, np.ones(n)]).T
    coef, res_ss, *_ = np.linalg.lstsq(a, ly, rcond=None)
    slope, intercept = coef
    fitted = a @ coef
    ssr = float(np.sum((ly - fitted) ** 2))
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    se = math.sqrt(ssr / (n - 2) / sxx) if n > 2 and sxx > 0 else 0.0
    return PowerLawFit(exponent=float(slope), prefactor=float(math.exp(intercept)), exponent_uncertainty=se)


def dissipation_slope(
    drive_levels_db, spectra, env: Environment | None = None
) -> DissipationSlope:
    """Linewidth change per dB of drive, from single-Lorentzian fits.

    Fits one Lorentzian plus floor to each spectrum, extracts Gamma/2pi, then
    regresses it on the drive level in dB (weighted by the per-fit linewidth
    uncertainties when available).  Returns the slope in Hz/dB with a 95%
    confidence interval; a CI containing zero means the actuation adds no
    measurable dissipation.
    """
    levels = np.asarray(list(drive_levels_db), dtype=float)
    spectra = list(spectra)
    if levels.size != len(spectra) or levels.size < 3:
        raise ValueError("need matching lists of at least three levels and spectra")
    env = env or Environment()

    linewidths = []
    sigmas = []
    for spec in spectra:
        fit = fit_spectrum(spec, n_modes=1, env=env)
        linewidths.append(fit.modes[0].linewidth_hz)
        sigmas.append(fit.modes[0].gamma_sigma / (2.0 * math.pi))
    y = np.array(linewidths)
    sig = np.array(sigmas)

    # inverse-variance weights, unless any per-fit sigma is degenerate
    if np.all(sig > 0) and np.all(np.isfinite(1.0 / sig**2)):
        w = 1.0 / sig**2
    else:
        w = np.ones_like(y)
    sw = w.sum()
    xbar = float((w * levels).sum() / sw)
    ybar = float((w * y).sum() / sw)
    sxx = float((w * (levels - xbar) ** 2).sum())
    slope = float((w * (levels - xbar) * (y - ybar)).sum() / sxx)
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * levels)
    dof = levels.size - 2
    s2 = float((w * resid**2).sum() / dof)
    se = math.sqrt(s2 / sxx)
    t = float(stats.t.ppf(0.975, dof))
    return DissipationSlope(
        slope_hz_per_db=slope,
        ci95_hz_per_db=(slope - t * se, slope + t * se),
        linewidths_hz=tuple(linewidths),
        linewidth_sigmas_hz=tuple(sigmas),
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def fit_result_to_json(fit: FitResult, provenance: dict | None = None) -> str:
    record = {
        "converged": fit.converged,
        "iterations": fit.iterations,
        "residual_norm": fit.residual_norm,
        "temperature_k": fit.temperature_k,
        "noise_floor_m2_per_hz": fit.noise_floor,
        "noise_floor_sigma": fit.noise_floor_sigma,
        "noise_floor_asd_m_per_rthz": math.sqrt(fit.noise_floor),
        "modes": [
            {
                "mass_kg": m.mass_kg,
                "mass_sigma_kg": m.mass_sigma,
                "frequency_hz": m.frequency_hz,
                "frequency_sigma_hz": m.omega_sigma / (2.0 * math.pi),
                "linewidth_hz": m.linewidth_hz,
                "linewidth_sigma_hz": m.gamma_sigma / (2.0 * math.pi),
            }
            for m in fit.modes
        ],
    }
    record.update(provenance or {})
    return json.dumps(record, sort_keys=True, indent=2) + "\n"


def format_mode_table(fit: FitResult, env: Environment | None = None) -> str:
    """Human-readable per-mode summary table.

    Columns: mode label, effective mass in micrograms, linewidth in kHz,
    zero-point amplitude density, and the floor-to-zero-point ratio.
    """
    env = env or Environment(temperature_k=fit.temperature_k)
    lines = [
        "mode   m (ug)   Gamma/2pi (kHz)   S_zp^1/2 (m/rtHz)   S_N^1/2/S_zp^1/2"
    ]
    for j, m in enumerate(fit.modes, start=1):
        mode = MechanicalMode(index=j, mass_kg=m.mass_kg, omega_m=m.omega_m, gamma=m.gamma)
        zp = zero_point_peak(mode, env)
        ratio = math.sqrt(fit.noise_floor) / zp.asd
        lines.append(
            f"j={j}    {m.mass_kg * 1e9:6.0f}   {m.linewidth_hz / 1e3:10.2f}        "
            f"{zp.asd:.2e}            {ratio:6.1f}"
        )
    return "\n".join(lines) + "\n"
