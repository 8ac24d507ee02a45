"""Command-line front end wiring crystals, spectra, circuits, and scans.

Subcommands: ``spectra``, ``hom``, ``bunching``, ``fringe``, ``budget``.
All outputs are plain CSV / ``key = value`` text and are byte-identical
across reruns with the same config and seed.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import experiments as xp
from . import spectral as sp

_DEFAULT_STAGES = (
    ("collection", 0.24),
    ("filter_transmission", 0.80),
    ("optics_transmission", 0.86),
    ("fiber_coupling_525nm", 0.60),
    ("conversion_and_overlap", 0.064),
    ("detector_efficiency", 0.50),
    ("air_gap", 0.8),
    ("interferometer", 0.51),
)

# Same chain with the conversion stage split into its internal-conversion and
# spectral-overlap factors, for sensitivity studies.
_DECOMPOSED_STAGES = (
    ("collection", 0.24),
    ("filter_transmission", 0.80),
    ("optics_transmission", 0.86),
    ("fiber_coupling_525nm", 0.60),
    ("internal_conversion", 0.16),
    ("spectral_overlap", 0.39),
    ("detector_efficiency", 0.50),
    ("air_gap", 0.8),
    ("interferometer", 0.51),
)


@dataclass
class RunConfig:
    """Typed run configuration; defaults reproduce the reference experiment."""

    seed: int = 12345
    noiseless: bool = False

    sellmeier_file: str | None = None

    spdc_length_mm: float = 20.0
    spdc_pump_nm: float = 773.5
    spdc_signal_nm: float = 1547.0
    spdc_poling_um: float | None = None
    spdc_pump_axis: str = "ny"
    spdc_signal_axis: str = "ny"
    spdc_idler_axis: str = "nz"

    sfg_length_mm: float = 20.0
    sfg_pump_nm: float = 795.0
    sfg_signal_nm: float = 1547.0
    sfg_poling_um: float | None = None
    sfg_sfg_axis: str = "nz"
    sfg_pump_axis: str = "nz"
    sfg_signal_axis: str = "nz"

    grid_points: int = 4096
    grid_span_nm: float = 16.0
    unit_acceptance: bool = False

    hom_gamma: float = 0.979
    hom_gamma_upconverted: float = 0.9672
    hom_delay_min_mm: float = -6.0
    hom_delay_max_mm: float = 6.0
    hom_delay_points: int = 121
    hom_up_delay_min_mm: float = -12.0
    hom_up_delay_max_mm: float = 12.0
    hom_up_delay_points: int = 121
    hom_rate_hz: float = 600.0
    hom_t_bin_s: float = 1.0

    bunching_gamma: float = 1.0
    bunching_delay_min_mm: float = -6.0
    bunching_delay_max_mm: float = 6.0
    bunching_delay_points: int = 121
    bunching_rate_hz: float = 2400.0
    bunching_t_bin_s: float = 1.0

    fringe_visibility_n1: float = 0.9751
    fringe_visibility_n2: float = 0.8493
    fringe_phase_min_rad: float = 0.0
    fringe_phase_max_rad: float = 2.0 * math.pi
    fringe_points: int = 96
    fringe_rate_hz: float = 600.0
    fringe_t_bin_s: float = 1.0
    fringe_axis: str = "phase"
    fringe_wavelength_nm: float = 525.1345
    plate_thickness_mm: float = 0.2
    plate_index: float = 1.5
    plate_tilt_min_rad: float = 0.02
    plate_tilt_max_rad: float = 0.25

    budget_stages: tuple[tuple[str, float], ...] = _DEFAULT_STAGES
    budget_quoted_overall: float | None = 2.0e-6
    budget_decompose_conversion: bool = False


_SECTION_PREFIXES = {
    "run": ("seed", "noiseless"),
    "sellmeier": ("sellmeier_file",),
    "source_crystal": (
        "spdc_length_mm",
        "spdc_pump_nm",
        "spdc_signal_nm",
        "spdc_poling_um",
        "spdc_pump_axis",
        "spdc_signal_axis",
        "spdc_idler_axis",
    ),
    "converter_crystal": (
        "sfg_length_mm",
        "sfg_pump_nm",
        "sfg_signal_nm",
        "sfg_poling_um",
        "sfg_sfg_axis",
        "sfg_pump_axis",
        "sfg_signal_axis",
    ),
    "grid": ("grid_points", "grid_span_nm", "unit_acceptance"),
    "hom": (
        "hom_gamma",
        "hom_gamma_upconverted",
        "hom_delay_min_mm",
        "hom_delay_max_mm",
        "hom_delay_points",
        "hom_up_delay_min_mm",
        "hom_up_delay_max_mm",
        "hom_up_delay_points",
        "hom_rate_hz",
        "hom_t_bin_s",
    ),
    "bunching": (
        "bunching_gamma",
        "bunching_delay_min_mm",
        "bunching_delay_max_mm",
        "bunching_delay_points",
        "bunching_rate_hz",
        "bunching_t_bin_s",
    ),
    "fringe": (
        "fringe_visibility_n1",
        "fringe_visibility_n2",
        "fringe_phase_min_rad",
        "fringe_phase_max_rad",
        "fringe_points",
        "fringe_rate_hz",
        "fringe_t_bin_s",
        "fringe_axis",
        "fringe_wavelength_nm",
        "plate_thickness_mm",
        "plate_index",
        "plate_tilt_min_rad",
        "plate_tilt_max_rad",
    ),
}

# [budget] is handled separately: `quoted_overall` and `decompose_conversion`
# are reserved keys, every other key is an ordered chain stage.
_BUDGET_RESERVED = ("quoted_overall", "decompose_conversion")


class ConfigError(Exception):
    """A config file problem the user can act on."""


def _config_key_map() -> dict[str, dict[str, str]]:
    """section -> {short key in file: RunConfig field name}."""
    out: dict[str, dict[str, str]] = {}
    for section, names in _SECTION_PREFIXES.items():
        prefix = {
            "run": "",
            "sellmeier": "sellmeier_",
            "source_crystal": "spdc_",
            "converter_crystal": "sfg_",
            "grid": "grid_",
            "hom": "hom_",
            "bunching": "bunching_",
            "fringe": "fringe_",
        }[section]
        out[section] = {name.removeprefix(prefix): name for name in names}
    return out


def load_config(path: str | None) -> RunConfig:
    """Build a RunConfig from defaults plus an optional INI-style file."""
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    key_map = _config_key_map()
    field_types = {f.name: f.type for f in fields(RunConfig)}
    for section in parser.sections():
        if section == "budget":
            stages = []
            for key, raw in parser.items(section):
                if key == "quoted_overall":
                    cfg.budget_quoted_overall = None if raw.lower() == "none" else float(raw)
                elif key == "decompose_conversion":
                    cfg.budget_decompose_conversion = raw.lower() in ("1", "true", "yes", "on")
                else:
                    stages.append((key, float(raw)))
            if stages:
                cfg.budget_stages = tuple(stages)
            elif cfg.budget_decompose_conversion:
                cfg.budget_stages = _DECOMPOSED_STAGES
            continue
        if section not in key_map:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in key_map[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            name = key_map[section][key]
            try:
                setattr(cfg, name, _coerce(raw, field_types[name], name))
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
    if cfg.budget_decompose_conversion and cfg.budget_stages == _DEFAULT_STAGES:
        cfg.budget_stages = _DECOMPOSED_STAGES
    return cfg


def _coerce(raw: str, annotation: str, name: str):
    raw = raw.strip()
    if annotation in ("int", int):
        return int(raw)
    if annotation in ("bool", bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if "float | None" in str(annotation):
        return None if raw.lower() in ("", "none") else float(raw)
    if "str | None" in str(annotation):
        return None if raw.lower() in ("", "none") else raw
    if annotation in ("float", float):
        return float(raw)
    return raw


# ---------------------------------------------------------------------------
# Shared assembly
# ---------------------------------------------------------------------------


def _build_crystals(cfg: RunConfig) -> tuple[sp.CrystalSpec, sp.CrystalSpec, float, float]:
    """SPDC and SFG crystals with poling solved unless pinned in config.

    Returns (spdc, sfg, idler_nm, sfg_nm) with the slaved wavelengths.
    """
    dispersion = sp.load_sellmeier(cfg.sellmeier_file)

    idler_nm = 1.0 / (1.0 / cfg.spdc_pump_nm - 1.0 / cfg.spdc_signal_nm)
    spdc = sp.CrystalSpec(
        length_mm=cfg.spdc_length_mm,
        poling_period_um=1.0 if cfg.spdc_poling_um is None else cfg.spdc_poling_um,
        process="spdc",
        crystal_type="type-II",
        axes={
            "pump": cfg.spdc_pump_axis,
            "signal": cfg.spdc_signal_axis,
            "idler": cfg.spdc_idler_axis,
        },
        dispersion=dispersion,
    )
    if cfg.spdc_poling_um is None:
        spdc = sp.with_solved_poling(spdc, (cfg.spdc_pump_nm, cfg.spdc_signal_nm, idler_nm))

    sfg_nm = 1.0 / (1.0 / cfg.sfg_pump_nm + 1.0 / cfg.sfg_signal_nm)
    sfg = sp.CrystalSpec(
        length_mm=cfg.sfg_length_mm,
        poling_period_um=1.0 if cfg.sfg_poling_um is None else cfg.sfg_poling_um,
        process="sfg",
        crystal_type="type-I",
        axes={
            "sfg": cfg.sfg_sfg_axis,
            "pump": cfg.sfg_pump_axis,
            "signal": cfg.sfg_signal_axis,
        },
        dispersion=dispersion,
    )
    if cfg.sfg_poling_um is None:
        sfg = sp.with_solved_poling(sfg, (sfg_nm, cfg.sfg_pump_nm, cfg.sfg_signal_nm))
    return spdc, sfg, idler_nm, sfg_nm


def _grid(cfg: RunConfig) -> np.ndarray:
    half = cfg.grid_span_nm / 2.0
    return np.linspace(cfg.spdc_signal_nm - half, cfg.spdc_signal_nm + half, cfg.grid_points)


def _spectra(cfg: RunConfig) -> tuple[sp.Spectrum, sp.Spectrum, sp.Spectrum, sp.CrystalSpec, sp.CrystalSpec]:
    spdc, sfg, _, _ = _build_crystals(cfg)
    grid = _grid(cfg)
    emission = sp.emission_spectrum(spdc, cfg.spdc_pump_nm, grid)
    if cfg.unit_acceptance:
        acceptance = sp.Spectrum(grid, np.ones_like(grid))
    else:
        acceptance = sp.acceptance_spectrum(sfg, cfg.sfg_pump_nm, grid)
    filtered = sp.filtered_spectrum(emission, acceptance)
    return emission, acceptance, filtered, spdc, sfg


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def _summary(pairs: list[tuple[str, object]]) -> str:
    lines = []
    for key, value in pairs:
        if isinstance(value, float):
            lines.append(f"{key} = {value:.12g}")
        elif isinstance(value, bool):
            lines.append(f"{key} = {str(value).lower()}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def read_summary(text: str) -> dict[str, str]:
    """Parse a ``key = value`` summary block back into a dict."""
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ValueError(f"not a 'key = value' line: {line!r}")
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_spectra(cfg: RunConfig, out_dir: Path) -> int:
    emission, acceptance, filtered, spdc, sfg = _spectra(cfg)
    _write(out_dir, "emission.csv", emission.to_csv())
    _write(out_dir, "acceptance.csv", acceptance.to_csv())
    _write(out_dir, "filtered.csv", filtered.to_csv())
    summary = _summary(
        [
            ("emission_fwhm_nm", sp.fwhm(emission)),
            ("acceptance_fwhm_nm", sp.fwhm(acceptance) if not cfg.unit_acceptance else float("nan")),
            ("filtered_fwhm_nm", sp.fwhm(filtered)),
            ("emission_clipped", emission.clipped),
            ("acceptance_clipped", acceptance.clipped),
            ("filtered_clipped", filtered.clipped),
            ("spdc_poling_period_um", spdc.poling_period_um),
            ("sfg_poling_period_um", sfg.poling_period_um),
        ]
    )
    _write(out_dir, "spectra_summary.txt", summary)
    return 0


def cmd_hom(cfg: RunConfig, out_dir: Path) -> int:
    emission, _, filtered, _, _ = _spectra(cfg)
    delays = np.linspace(cfg.hom_delay_min_mm, cfg.hom_delay_max_mm, cfg.hom_delay_points)
    source = xp.hom_scan(
        emission, cfg.hom_gamma, delays, cfg.hom_rate_hz, cfg.hom_t_bin_s, cfg.seed, cfg.noiseless
    )
    up_delays = np.linspace(cfg.hom_up_delay_min_mm, cfg.hom_up_delay_max_mm, cfg.hom_up_delay_points)
    upconverted = xp.hom_scan(
        filtered,
        cfg.hom_gamma_upconverted,
        up_delays,
        cfg.hom_rate_hz,
        cfg.hom_t_bin_s,
        cfg.seed + 1,
        cfg.noiseless,
    )
    _write(out_dir, "hom_source.csv", source.to_csv())
    _write(out_dir, "hom_upconverted.csv", upconverted.to_csv())
    summary = _summary(
        [
            ("gamma_source", cfg.hom_gamma),
            ("gamma_upconverted", cfg.hom_gamma_upconverted),
            ("visibility_source", xp.dip_visibility(source)),
            ("visibility_upconverted", xp.dip_visibility(upconverted)),
        ]
    )
    _write(out_dir, "hom_summary.txt", summary)
    return 0


def cmd_bunching(cfg: RunConfig, out_dir: Path) -> int:
    emission, _, _, _, _ = _spectra(cfg)
    delays = np.linspace(cfg.bunching_delay_min_mm, cfg.bunching_delay_max_mm, cfg.bunching_delay_points)
    scan = xp.bunching_scan(
        cfg.bunching_gamma,
        delays,
        cfg.bunching_rate_hz,
        cfg.bunching_t_bin_s,
        cfg.seed,
        spectrum=emission,
        noiseless=cfg.noiseless,
    )
    _write(out_dir, "bunching.csv", scan.to_csv())
    summary = _summary(
        [
            ("gamma", cfg.bunching_gamma),
            ("peak_to_baseline_ratio", xp.peak_to_baseline_ratio(scan)),
        ]
    )
    _write(out_dir, "bunching_summary.txt", summary)
    return 0


def cmd_fringe(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.fringe_axis == "phase":
        axis = np.linspace(cfg.fringe_phase_min_rad, cfg.fringe_phase_max_rad, cfg.fringe_points)
        phases = axis
        param_name = "phase_rad"
    elif cfg.fringe_axis == "plate":
        axis = np.linspace(cfg.plate_tilt_min_rad, cfg.plate_tilt_max_rad, cfg.fringe_points)
        phases = np.array(
            [
                xp.plate_phase(
                    tilt,
                    cfg.plate_thickness_mm * 1e-3,
                    cfg.plate_index,
                    cfg.fringe_wavelength_nm * 1e-9,
                )
                for tilt in axis
            ]
        )
        param_name = "plate_tilt_rad"
    else:
        raise ConfigError(f"fringe axis must be 'phase' or 'plate', got {cfg.fringe_axis!r}")

    reports = {}
    for n, vis, seed_shift in ((1, cfg.fringe_visibility_n1, 0), (2, cfg.fringe_visibility_n2, 1)):
        scan = xp.noon_fringe(
            n, vis, phases, cfg.fringe_rate_hz, cfg.fringe_t_bin_s, cfg.seed + seed_shift, cfg.noiseless
        )
        reports[n] = xp.fit_visibility(scan, n)
        scan = replace(scan, param=axis, param_name=param_name)
        _write(out_dir, f"fringe_n{n}.csv", scan.to_csv())

    ratio = reports[2].frequency / reports[1].frequency
    verdict = xp.sql_verdict(reports[2].visibility, reports[2].visibility_sigma, 2)
    pairs: list[tuple[str, object]] = []
    for n in (1, 2):
        rep = reports[n]
        pairs.extend(
            [
                (f"n{n}_visibility", rep.visibility),
                (f"n{n}_visibility_sigma", rep.visibility_sigma),
                (f"n{n}_frequency", rep.frequency),
                (f"n{n}_frequency_sigma", rep.frequency_sigma),
                (f"n{n}_phase_offset_rad", rep.phase_offset),
                (f"n{n}_amplitude", rep.amplitude),
                (f"n{n}_residual_norm", rep.residual_norm),
                (f"n{n}_clamped", rep.clamped),
            ]
        )
    pairs.append(("period_ratio_n2_over_n1", ratio))
    pairs.append(("sql_threshold", verdict.threshold))
    pairs.append(("beats_sql", verdict.beats_sql))
    pairs.append(("sql_margin_sigma", verdict.margin_sigma))
    pairs.append(("sql_verdict", verdict.verdict_line()))
    _write(out_dir, "fringe_summary.txt", _summary(pairs))
    return 0


def cmd_budget(cfg: RunConfig, out_dir: Path) -> int:
    chain = xp.EfficiencyChain(cfg.budget_stages)
    report = xp.efficiency_budget(chain, cfg.budget_quoted_overall)
    _write(out_dir, "budget.txt", "\n".join(report.report_lines()) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "spectra": cmd_spectra,
    "hom": cmd_hom,
    "bunching": cmd_bunching,
    "fringe": cmd_fringe,
    "budget": cmd_budget,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noonsim",
        description="Few-photon interferometry and frequency-conversion simulator",
    )
    parser.add_argument("--config", help="INI-style run configuration file")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--out", default="noonsim-out", help="output directory")
    parser.add_argument(
        "--noiseless", action="store_true", help="disable Poisson sampling for exact regression output"
    )
    parser.add_argument("command", choices=sorted(_COMMANDS), help="what to run")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.noiseless:
            cfg.noiseless = True
        return _COMMANDS[args.command](cfg, Path(args.out))
    except (ConfigError, sp.SpectralError, xp.FitError, ValueError, OSError) as exc:
        print(f"noonsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
