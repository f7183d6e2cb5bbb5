"""Command-line front end: reproducible pipelines over config files.

Config files are flat ``key = value`` text with ``[section]`` headers; any
value can be overridden on the command line with ``section.key=value``
tokens (flags win over the file).  All physical quantities carry explicit
SI unit suffixes in their key names.  Every output file embeds the digest
of the effective config and the seed, so identical (config, seed) pairs
reproduce byte-identical outputs.

Exit codes: 0 success, 1 data error, 2 usage error; errors print a one-line
machine-parsable diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import actuation, fitting, microscopy, presets, synth
from .mechmodel import (
    Crown,
    Environment,
    MechanicalMode,
    RadialFlexural,
    SpectrumModel,
    noise_to_zp_ratio,
    quantum_temperature,
    zero_point_peak,
)

__all__ = ["RunConfig", "run_command", "main", "default_config_text"]

_COMMANDS = ("synth", "fit", "force", "scan", "calibrate", "report")


class UsageError(Exception):
    """Bad invocation or unusable config; exits with status 2."""


@dataclass
class RunConfig:
    """Effective configuration of one command invocation."""

    command: str
    entries: dict[str, str]  # "section.key" -> raw string value
    out_dir: Path
    seed: int | None

    def get(self, key: str, default: str | None = None) -> str:
        if key in self.entries:
            return self.entries[key]
        if default is not None:
            return default
        raise UsageError(f"missing config key '{key}'")

    def get_float(self, key: str, default: float | None = None) -> float:
        raw = self.get(key, None if default is None else repr(default))
        try:
            return float(raw)
        except ValueError:
            raise UsageError(f"config key '{key}' must be a number, got '{raw}'") from None

    def get_int(self, key: str, default: int | None = None) -> int:
        raw = self.get(key, None if default is None else str(default))
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"config key '{key}' must be an integer, got '{raw}'") from None

    def has(self, key: str) -> bool:
        return key in self.entries

    def sections(self) -> set[str]:
        return {k.split(".", 1)[0] for k in self.entries}

    def digest(self) -> str:
        canon = "\n".join(f"{k}={self.entries[k]}" for k in sorted(self.entries))
        canon += f"\nseed={self.seed}"
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"config_sha256": self.digest(), "seed": self.seed}


def default_config_text() -> str:
    """Starter config for the bundled reference device.

    Mode frequencies are derived (back-solved from the zero-point peak
    relation), not independently measured; see :mod:`coems.presets`.
    """
    model = presets.reference_model()
    lines = [
        "[model]",
        f"temperature_k = {model.environment.temperature_k}",
        f"noise_floor_m2_per_hz = {model.noise_floor:.6e}",
        "",
    ]
    shapes = {1: ("crown", 2), 2: ("radial_flexural", 0), 3: ("crown", 3)}
    for m in model.modes:
        kind, order = shapes[m.index]
        lines += [
            f"[mode.{m.index}]",
            f"mass_kg = {m.mass_kg:.6e}",
            f"linewidth_hz = {m.linewidth_hz:.6e}",
            f"frequency_hz = {m.frequency_hz:.6e}  # derived: zero-point back-solve",
            f"shape = {kind}",
        ]
        if kind == "crown":
            lines.append(f"azimuthal_order = {order}")
        lines.append("")
    lines += [
        "[synth]",
        "f_min_hz = 4.2e6",
        "f_max_hz = 6.2e6",
        "n_bins = 2500",
        "averages = 100",
        "seed = 1",
        "",
        "[fit]",
        "input = spectrum.csv",
        "n_modes = 3",
        "",
        "[force]",
        "mode = 3",
        "peak_asd_m_per_rthz = 2.4e-14",
        "rbw_hz = 2.195868e4  # derived: back-solved from the 0.40 uN calibration",
        "",
        "[calibrate]",
        "input = raw.csv",
        "reference_frequency_hz = 4.0e6",
        "reference_displacement_m = 1.0e-15",
        "",
        "[scan]",
        "mode = 2",
        "footprint_width_m = 15e-6",
        "height_m = 15e-6",
        "half_extent_m = 40e-6",
        "n_pixels = 33",
        "rf_volts = 3.0",
        "newtons_per_volt = 1e-9",
        "rbw_hz = 1.0e3",
        "",
        "[report]",
        "mode = 3",
        "peak_asd_m_per_rthz = 2.4e-14",
        "rbw_hz = 2.195868e4",
        "",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# config assembly
# ---------------------------------------------------------------------------


def _load_config(path: Path) -> dict[str, str]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from None
    entries: dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            entries[f"{section}.{key}"] = value.strip()
    return entries


def _apply_overrides(entries: dict[str, str], overrides: list[str]) -> None:
    for token in overrides:
        if "=" not in token or "." not in token.split("=", 1)[0]:
            raise UsageError(f"override '{token}' is not of the form section.key=value")
        key, value = token.split("=", 1)
        entries[key.strip()] = value.strip()


def _model_from_config(cfg: RunConfig) -> SpectrumModel:
    env = Environment(temperature_k=cfg.get_float("model.temperature_k", 300.0))
    indices = sorted(
        int(s.split(".", 1)[1]) for s in cfg.sections() if s.startswith("mode.")
    )
    if not indices:
        raise UsageError("config defines no [mode.N] sections")
    modes = []
    for j in indices:
        base = f"mode.{j}"
        shape_name = cfg.get(f"{base}.shape", "radial_flexural")
        if shape_name == "crown":
            shape = Crown(azimuthal_order=cfg.get_int(f"{base}.azimuthal_order", 2))
        elif shape_name == "radial_flexural":
            shape = RadialFlexural()
        else:
            raise UsageError(f"unknown shape '{shape_name}' for mode {j}")
        modes.append(
            MechanicalMode(
                index=j,
                mass_kg=cfg.get_float(f"{base}.mass_kg"),
                omega_m=2.0 * math.pi * cfg.get_float(f"{base}.frequency_hz"),
                gamma=2.0 * math.pi * cfg.get_float(f"{base}.linewidth_hz"),
                shape=shape,
            )
        )
    return SpectrumModel(
        modes=tuple(modes),
        noise_floor=cfg.get_float("model.noise_floor_m2_per_hz"),
        environment=env,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_synth(cfg: RunConfig) -> int:
    model = _model_from_config(cfg)
    seed = cfg.seed if cfg.seed is not None else (
        cfg.get_int("synth.seed") if cfg.has("synth.seed") else None
    )
    if seed is None:
        raise UsageError("stochastic synthesis needs a seed (--seed or [synth] seed)")
    grid = np.linspace(
        cfg.get_float("synth.f_min_hz"),
        cfg.get_float("synth.f_max_hz"),
        cfg.get_int("synth.n_bins"),
    )
    spec = synth.synth_thermal_spectrum(model, grid, cfg.get_int("synth.averages"), seed)
    prov = cfg.provenance() | {"seed": seed}
    synth.write_spectrum_csv(spec, cfg.out_dir / "spectrum.csv", prov)
    synth.write_spectrum_json(spec, cfg.out_dir / "spectrum.json", prov)
    print(f"wrote {cfg.out_dir / 'spectrum.csv'} ({grid.size} bins)")
    return 0


def _read_input_spectrum(cfg: RunConfig, section: str) -> synth.SpectrumData:
    path = Path(cfg.get(f"{section}.input"))
    if not path.is_absolute():
        path = cfg.out_dir / path
    if not path.exists():
        raise FileNotFoundError(f"input spectrum {path} does not exist")
    meta = {}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        rec = json.loads(sidecar.read_text())
        meta = {
            "kind": rec.get("kind", "thermal"),
            "averages": rec.get("averages", 0),
            "rbw_hz": rec.get("rbw_hz", 1.0),
        }
    if cfg.has(f"{section}.averages"):
        meta["averages"] = cfg.get_int(f"{section}.averages")
    if cfg.has(f"{section}.kind"):
        meta["kind"] = cfg.get(f"{section}.kind")
    return synth.read_spectrum_csv(path, **meta)


def _cmd_fit(cfg: RunConfig) -> int:
    spec = _read_input_spectrum(cfg, "fit")
    env = Environment(temperature_k=cfg.get_float("model.temperature_k", 300.0))
    fit = fitting.fit_spectrum(spec, n_modes=cfg.get_int("fit.n_modes"), env=env)
    (cfg.out_dir / "fit.json").write_text(fitting.fit_result_to_json(fit, cfg.provenance()))
    table = fitting.format_mode_table(fit, env)
    (cfg.out_dir / "fit_table.txt").write_text(
        f"# config_sha256={cfg.digest()} seed={cfg.seed}\n" + table
    )
    print(table, end="")
    return 0


def _cmd_force(cfg: RunConfig) -> int:
    fit_path = Path(cfg.get("force.fit_input", "fit.json"))
    if not fit_path.is_absolute():
        fit_path = cfg.out_dir / fit_path
    mode_no = cfg.get_int("force.mode")
    if fit_path.exists():
        rec = json.loads(fit_path.read_text())
        try:
            mrec = rec["modes"][mode_no - 1]
        except IndexError:
            raise UsageError(f"fit result has no mode #{mode_no}") from None
        mode = MechanicalMode(
            index=mode_no,
            mass_kg=mrec["mass_kg"],
            omega_m=2.0 * math.pi * mrec["frequency_hz"],
            gamma=2.0 * math.pi * mrec["linewidth_hz"],
        )
    else:
        mode = _model_from_config(cfg).mode(mode_no)
    if not cfg.has("force.rbw_hz"):
        raise actuation.MissingRBWError("config key 'force.rbw_hz' is required")
    cal = actuation.force_from_peak(
        mode,
        peak_asd_m_per_rthz=cfg.get_float("force.peak_asd_m_per_rthz"),
        rbw_hz=cfg.get_float("force.rbw_hz"),
    )
    (cfg.out_dir / "force.json").write_text(
        actuation.force_report_json(cal, cfg.provenance())
    )
    print(f"F_rms = {cal.f_rms_n:.4e} N, F_pp = {cal.f_pp_n:.4e} N ({cal.f_pp_n * 1e6:.3f} uN)")
    return 0


def _cmd_scan(cfg: RunConfig) -> int:
    model = _model_from_config(cfg)
    mode = model.mode(cfg.get_int("scan.mode"))
    if isinstance(mode.shape, Crown):
        kind = mode.shape
    else:
        kind = RadialFlexural()
    shape = microscopy.ModeShape(
        kind=kind,
        major_radius_m=cfg.get_float("scan.major_radius_m", presets.MAJOR_RADIUS_M),
        rim_width_m=cfg.get_float("scan.rim_width_m", presets.MINOR_RADIUS_M),
    )
    fp = microscopy.ForceFootprint(
        center_m=(0.0, 0.0),
        height_m=cfg.get_float("scan.height_m", presets.PROBE_HEIGHT_M),
        lateral_width_m=cfg.get_float("scan.footprint_width_m", presets.PROBE_HEIGHT_M),
    )
    drive = microscopy.ScanDrive(
        frequency_hz=mode.frequency_hz,
        amplitude_volts=cfg.get_float("scan.rf_volts", 1.0),
        newtons_per_volt=cfg.get_float("scan.newtons_per_volt", 1.0),
        rbw_hz=cfg.get_float("scan.rbw_hz", 1.0),
    )
    half = cfg.get_float("scan.half_extent_m")
    n_px = cfg.get_int("scan.n_pixels")
    grid = np.linspace(-half, half, n_px)
    image = microscopy.simulate_scan(shape, fp, model, drive, grid, grid)
    prov = cfg.provenance()
    microscopy.write_scan_csv(image, cfg.out_dir / "scan.csv", prov)
    microscopy.write_scan_pgm(image, cfg.out_dir / "scan.pgm", prov)
    microscopy.write_cross_section_csv(image, cfg.out_dir / "scan_xsection.csv")
    print(f"wrote {cfg.out_dir / 'scan.csv'} ({n_px}x{n_px} pixels, mode j={mode.index})")
    return 0


def _cmd_calibrate(cfg: RunConfig) -> int:
    raw = _read_input_spectrum(cfg, "calibrate")
    cal = fitting.calibrate_displacement(
        raw,
        reference_frequency_hz=cfg.get_float("calibrate.reference_frequency_hz"),
        reference_displacement_m=cfg.get_float("calibrate.reference_displacement_m"),
    )
    calibrated = fitting.apply_calibration(raw, cal)
    prov = cfg.provenance()
    synth.write_spectrum_csv(calibrated, cfg.out_dir / "calibrated.csv", prov)
    record = {
        "scale_factor": cal.scale_factor,
        "reference_frequency_hz": cal.reference_frequency_hz,
        "reference_displacement_m": cal.reference_displacement_m,
    } | prov
    (cfg.out_dir / "calibration.json").write_text(
        json.dumps(record, sort_keys=True, indent=2) + "\n"
    )
    print(f"scale_factor = {cal.scale_factor:.6e}")
    return 0


def _cmd_report(cfg: RunConfig) -> int:
    model = _model_from_config(cfg)
    env = model.environment
    modes_out = []
    for m in model.modes:
        zp = zero_point_peak(m, env)
        modes_out.append(
            {
                "mode": m.index,
                "frequency_hz": m.frequency_hz,
                "mass_kg": m.mass_kg,
                "linewidth_hz": m.linewidth_hz,
                "zp_asd_m_per_rthz": zp.asd,
                "noise_to_zp_ratio": noise_to_zp_ratio(model, m.index),
                "quantum_temperature_k": quantum_temperature(m, env),
            }
        )
    record: dict = {"modes": modes_out, "noise_floor_asd_m_per_rthz": math.sqrt(model.noise_floor)}

    if cfg.has("report.peak_asd_m_per_rthz") and cfg.has("report.rbw_hz"):
        mode = model.mode(cfg.get_int("report.mode"))
        cal = actuation.force_from_peak(
            mode,
            peak_asd_m_per_rthz=cfg.get_float("report.peak_asd_m_per_rthz"),
            rbw_hz=cfg.get_float("report.rbw_hz"),
        )
        power = actuation.radiation_pressure_power(cal.f_rms_n, env)
        record["force"] = {
            "mode": mode.index,
            "f_rms_n": cal.f_rms_n,
            "f_pp_n": cal.f_pp_n,
            "f_pp_un": cal.f_pp_n * 1e6,
            "rbw_hz": cal.rbw_hz,
            "radiation_pressure_equivalent_w": power,
            "note": (
                "c*F_rms/pi evaluated at F_rms = F_pp/(2*sqrt(2)) gives "
                f"{power:.1f} W; the 36 W figure quoted for this device implies "
                "a different F_rms input, which is not recorded. Reported as "
                "computed, discrepancy documented rather than reconciled."
            ),
        }
    record.update(cfg.provenance())
    (cfg.out_dir / "report.json").write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")
    for m in modes_out:
        print(
            f"j={m['mode']}: f={m['frequency_hz'] / 1e6:.4f} MHz  "
            f"S_zp^1/2={m['zp_asd_m_per_rthz']:.2e}  "
            f"S_N/S_zp={m['noise_to_zp_ratio']:.0f}  "
            f"T_q={m['quantum_temperature_k'] * 1e3:.3f} mK"
        )
    if "force" in record:
        print(
            f"F_pp = {record['force']['f_pp_un']:.3f} uN, radiation-pressure "
            f"equivalent {record['force']['radiation_pressure_equivalent_w']:.1f} W"
        )
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "force": _cmd_force,
    "scan": _cmd_scan,
    "calibrate": _cmd_calibrate,
    "report": _cmd_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coems",
        description="Cavity opto-electromechanical system pipelines",
    )
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", required=True, help="path to the key=value config file")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed override")
    parser.add_argument(
        "overrides",
        nargs="*",
        metavar="section.key=value",
        help="config overrides; flags win over the file",
    )
    return parser


def run_command(arguments: list[str]) -> int:
    """Parse arguments, run one subcommand, return the exit status."""
    parser = _build_parser()
    if not arguments:
        parser.print_usage(sys.stderr)
        print("coems: usage error: no command given", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(arguments)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        entries = _load_config(Path(args.config))
        _apply_overrides(entries, args.overrides)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg = RunConfig(
            command=args.command, entries=entries, out_dir=out_dir, seed=args.seed
        )
        return _HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"coems: usage error: {exc}", file=sys.stderr)
        return 2
    except (fitting.FitError, microscopy.QuadratureError, ValueError, KeyError,
            FileNotFoundError, OSError) as exc:
        print(f"coems: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
