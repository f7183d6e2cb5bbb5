"""Scanning-probe microscopy of mechanical mode structure.

A parametric mode shape (axisymmetric radial flexural or sinusoidal crown),
a bell-shaped spatial footprint for the gradient force under the probe tip,
their overlap integral (the effective modal drive force at one probe
position), and the full 2D scan image of driven peak response versus lateral
probe position.

The imaging model: the probe drives the mode through the overlap of the
force footprint with the mode displacement field, so the scan image is the
mode pattern blurred by the footprint; a crown mode nulls exactly at the
center because forces on out-of-phase rim segments cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .mechmodel import Crown, MechanicalMode, ModeShapeTag, RadialFlexural, SpectrumModel, susceptibility

__all__ = [
    "QuadratureError",
    "ModeShape",
    "ForceFootprint",
    "ScanDrive",
    "ScanImage",
    "mode_displacement",
    "footprint_weight",
    "effective_modal_force",
    "simulate_scan",
    "write_scan_csv",
    "write_scan_pgm",
    "write_cross_section_csv",
]


class QuadratureError(RuntimeError):
    """The overlap quadrature failed to converge under step halving."""


@dataclass(frozen=True)
class ModeShape:
    """Geometric mode shape on the resonator, normalized to max |u_z| = 1.

    kind selects the displacement field: RadialFlexural gives the
    axisymmetric profile (r/R)^2 inside the rim, Crown(n) gives a rim-bound
    Gaussian ridge exp(-(r-R)^2 / 2 sigma_r^2) modulated by cos(n theta).
    """

    kind: ModeShapeTag
    major_radius_m: float = 30e-6
    rim_width_m: float = 3e-6

    def __post_init__(self) -> None:
        if not self.major_radius_m > 0:
            raise ValueError("major radius must be positive")
        if not self.rim_width_m > 0:
            raise ValueError("rim width must be positive")


@dataclass(frozen=True)
class ForceFootprint:
    """Normalized isotropic Gaussian force footprint under the probe tip.

    lateral_width_m is the per-axis Gaussian scale; the weight integrates to
    one over the plane, so it is a pure spatial distribution with the force
    magnitude carried separately.
    """

    center_m: tuple[float, float] = (0.0, 0.0)
    height_m: float = 15e-6
    lateral_width_m: float = 15e-6

    def __post_init__(self) -> None:
        if not self.height_m > 0:
            raise ValueError("probe height must be positive")
        if not self.lateral_width_m > 0:
            raise ValueError("lateral width must be positive")


@dataclass(frozen=True)
class ScanDrive:
    """Fixed-frequency drive applied during a scan."""

    frequency_hz: float
    amplitude_volts: float
    newtons_per_volt: float = 1.0
    rbw_hz: float = 1.0

    @property
    def force_scale_n(self) -> float:
        return self.amplitude_volts * self.newtons_per_volt


@dataclass(frozen=True)
class ScanImage:
    """Peak driven response (amplitude density) versus probe position.

    values[iy, ix] corresponds to probe position (x_m[ix], y_m[iy]).
    """

    x_m: np.ndarray
    y_m: np.ndarray
    values: np.ndarray
    drive: ScanDrive
    mode_index: int

    def __post_init__(self) -> None:
        x = np.asarray(self.x_m, dtype=float)
        y = np.asarray(self.y_m, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "x_m", x)
        object.__setattr__(self, "y_m", y)
        object.__setattr__(self, "values", v)
        if v.shape != (y.size, x.size):
            raise ValueError("values must have shape (len(y), len(x))")
        if np.any(v < 0):
            raise ValueError("scan values are magnitudes and must be >= 0")

    def cross_section(self, axis: str = "x") -> tuple[np.ndarray, np.ndarray]:
        """Profile through the row or column nearest the scan center."""
        if axis == "x":
            iy = int(np.argmin(np.abs(self.y_m)))
            return self.x_m, self.values[iy, :]
        if axis == "y":
            ix = int(np.argmin(np.abs(self.x_m)))
            return self.y_m, self.values[:, ix]
        raise ValueError("axis must be 'x' or 'y'")


def mode_displacement(shape: ModeShape, x_m, y_m):
    """Signed normalized vertical displacement of the mode at (x, y)."""
    x = np.asarray(x_m, dtype=float)
    y = np.asarray(y_m, dtype=float)
    r = np.hypot(x, y)
    if isinstance(shape.kind, RadialFlexural):
        out = np.where(r <= shape.major_radius_m, (r / shape.major_radius_m) ** 2, 0.0)
    elif isinstance(shape.kind, Crown):
        theta = np.arctan2(y, x)
        ridge = np.exp(-((r - shape.major_radius_m) ** 2) / (2.0 * shape.rim_width_m**2))
        out = ridge * np.cos(shape.kind.azimuthal_order * theta)
    else:
        raise TypeError(f"unknown mode shape kind {shape.kind!r}")
    return float(out) if np.isscalar(x_m) and np.isscalar(y_m) else out


def footprint_weight(fp: ForceFootprint, x_m, y_m):
    """Footprint weight at (x, y); integrates to one over the plane."""
    x = np.asarray(x_m, dtype=float)
    y = np.asarray(y_m, dtype=float)
    w = fp.lateral_width_m
    cx, cy = fp.center_m
    out = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * w**2)) / (2.0 * math.pi * w**2)
    return float(out) if np.isscalar(x_m) and np.isscalar(y_m) else out


def _feature_scale(shape: ModeShape) -> float:
    if isinstance(shape.kind, Crown):
        azim = math.pi * shape.major_radius_m / (2.0 * shape.kind.azimuthal_order)
        return min(shape.rim_width_m, azim)
    return shape.major_radius_m / 5.0


def _mode_reach(shape: ModeShape) -> float:
    """Radius beyond which the displacement field is (numerically) zero."""
    if isinstance(shape.kind, Crown):
        return shape.major_radius_m + 6.0 * shape.rim_width_m
    return shape.major_radius_m


def _lattice(shape: ModeShape, h: float) -> np.ndarray:
    """Midpoint lattice coordinates covering the mode's support.

    The grid only needs to span where the displacement field is nonzero (the
    overlap integrand vanishes outside it regardless of the footprint
    position) and is kept symmetric about the mode center so the lattice
    symmetries cancel crown overlaps exactly on axis.
    """
    reach = _mode_reach(shape)
    n = math.ceil(reach / h)
    return (np.arange(-n, n) + 0.5) * h


def _overlap_on_grid(shape: ModeShape, fp: ForceFootprint, h: float) -> float:
    """Midpoint-rule overlap integral of footprint weight times displacement."""
    pts = _lattice(shape, h)
    xg, yg = np.meshgrid(pts, pts, sparse=True)
    integrand = footprint_weight(fp, xg, yg) * mode_displacement(shape, xg, yg)
    return float(np.sum(integrand) * h * h)


def _base_step(shape: ModeShape, fp: ForceFootprint) -> float:
    return min(fp.lateral_width_m, _feature_scale(shape)) / 8.0


def effective_modal_force(
    shape: ModeShape,
    fp: ForceFootprint,
    force_scale_n: float,
    tol: float = 5e-4,
    max_halvings: int = 3,
) -> float:
    """Signed modal drive force: force_scale times the footprint/mode overlap.

    Midpoint tensor-product quadrature with at least 8 points per footprint
    width (finer when the mode features are smaller); the step is halved
    until two successive estimates agree within ``tol`` (Richardson check).
    ``tol`` is absolute on the normalized overlap, which the unit-integral
    footprint and unit-peak displacement bound by one.  Raises
    QuadratureError if the estimates do not settle.
    """
    h = _base_step(shape, fp)
    prev = _overlap_on_grid(shape, fp, h)
    for _ in range(max_halvings):
        h /= 2.0
        cur = _overlap_on_grid(shape, fp, h)
        if abs(cur - prev) <= tol:
            return force_scale_n * cur
        prev = cur
    raise QuadratureError(
        f"overlap quadrature did not converge to {tol:g} after {max_halvings} halvings"
    )


def simulate_scan(
    shape: ModeShape,
    fp_template: ForceFootprint,
    model: SpectrumModel,
    drive: ScanDrive,
    x_grid_m,
    y_grid_m,
) -> ScanImage:
    """Scan the probe over a lateral grid and record the driven peak response.

    The drive frequency must sit on the target mode's resonance (the scan
    reads the peak of the driven response); each pixel converts the local
    modal force to an amplitude density via |chi(w_m)| / sqrt(rbw) and
    stores the magnitude.
    """
    x = np.asarray(x_grid_m, dtype=float)
    y = np.asarray(y_grid_m, dtype=float)
    target = min(model.modes, key=lambda m: abs(m.frequency_hz - drive.frequency_hz))
    if abs(target.frequency_hz - drive.frequency_hz) > 0.5 * target.linewidth_hz:
        raise ValueError(
            "drive frequency must coincide with a mode resonance; nearest mode "
            f"j={target.index} is at {target.frequency_hz:g} Hz"
        )
    chi_mag = abs(susceptibility(target, 2.0 * math.pi * drive.frequency_hz))
    to_density = chi_mag / math.sqrt(drive.rbw_hz)

    # Same midpoint sums effective_modal_force evaluates, but with the mode
    # field cached on the (probe-independent) lattice and the isotropic
    # footprint factored into 1-d Gaussians, so each pixel costs two
    # matrix-vector products.  Pixels failing the Richardson check fall back
    # to the reference path with deeper halvings.
    w = fp_template.lateral_width_m
    tol = 5e-4
    levels = []
    h = _base_step(shape, fp_template)
    for hh in (h, h / 2.0):
        pts = _lattice(shape, hh)
        xg, yg = np.meshgrid(pts, pts, sparse=True)
        field = mode_displacement(shape, xg, yg)
        levels.append((hh, pts, field))

    def separable_overlap(level, cx: float, cy: float) -> float:
        hh, pts, field = level
        gx = np.exp(-((pts - cx) ** 2) / (2.0 * w**2)) * hh
        gy = np.exp(-((pts - cy) ** 2) / (2.0 * w**2)) * hh
        return float(gy @ field @ gx) / (2.0 * math.pi * w**2)

    values = np.empty((y.size, x.size))
    for iy, yc in enumerate(y):
        for ix, xc in enumerate(x):
            coarse = separable_overlap(levels[0], xc, yc)
            fine = separable_overlap(levels[1], xc, yc)
            if abs(fine - coarse) <= tol:
                force = drive.force_scale_n * fine
            else:
                fp = replace(fp_template, center_m=(float(xc), float(yc)))
                force = effective_modal_force(shape, fp, drive.force_scale_n, tol=tol)
            values[iy, ix] = abs(force) * to_density
    return ScanImage(x_m=x, y_m=y, values=values, drive=drive, mode_index=target.index)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def write_scan_csv(image: ScanImage, path: str | Path, provenance: dict | None = None) -> None:
    """Write (x_m, y_m, value) rows, row-major in y."""
    lines = [f"# {k}={v}" for k, v in (provenance or {}).items()]
    lines.append("x_m,y_m,value")
    for iy, yc in enumerate(image.y_m):
        for ix, xc in enumerate(image.x_m):
            lines.append(f"{xc:.9e},{yc:.9e},{image.values[iy, ix]:.12e}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_scan_pgm(image: ScanImage, path: str | Path, provenance: dict | None = None) -> None:
    """Write a plain (ASCII P2) PGM, values linearly mapped to 0..65535."""
    vmax = float(np.max(image.values))
    scaled = (
        np.zeros_like(image.values, dtype=np.uint32)
        if vmax == 0.0
        else np.rint(image.values / vmax * 65535.0).astype(np.uint32)
    )
    lines = ["P2"]
    for k, v in (provenance or {}).items():
        lines.append(f"# {k}={v}")
    lines.append(f"{image.x_m.size} {image.y_m.size}")
    lines.append("65535")
    for row in scaled:
        lines.append(" ".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_cross_section_csv(image: ScanImage, path: str | Path, axis: str = "x") -> None:
    coord, profile = image.cross_section(axis)
    lines = [f"{axis}_m,value"]
    for c, v in zip(coord, profile):
        lines.append(f"{c:.9e},{v:.12e}")
    Path(path).write_text("\n".join(lines) + "\n")
