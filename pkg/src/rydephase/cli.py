"""``rydephase <scenario> --config <file> [--out <dir>] [--seed <u64>] [--plot]``.

Exit status: 0 ok, 2 configuration error, 3 numerical failure. Every run
writes ``manifest.json`` into the output directory; failed runs also write
``error.json`` and print the same record to stderr.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import io as rio
from .analysis import (
    DEFAULT_WINDOW,
    DephasingPoint,
    DephasingSource,
    dephasing_point,
    eit_fit_curve,
    fit_eit_spectrum,
    fit_power_law,
)
from .blockade import DEFAULT_KAPPA, DEFAULT_MAX_DIMENSION, MAX_ATOMS
from .errors import ConfigError, InvalidArgument, RydephaseError
from .lindblad import ScanAxis, ThreeLevelParams, scan_spectrum
from .manybody import DEFAULT_GRID_POINTS, DEFAULT_TOL, echo_study
from .units import format_unit_table, parse_frequency

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SCENARIOS = ("echo-sim", "echo-analyze", "eit-probe-scan", "eit-coupling-scan", "eit-fit", "powerlaw")
U64_MAX = 2**64 - 1
BUNDLED = "bundled"

REQUIRED = object()


# --- schema -----------------------------------------------------------------
# Each key maps to (kind, default). Kinds: int, float, freq, bool, str, path,
# int_list, float_list, choice:<a|b>. A default of None means optional.

_PARAMS_3LEVEL = {
    "omega_p": ("freq", REQUIRED),
    "omega_c": ("freq", REQUIRED),
    "gamma_eg": ("freq", REQUIRED),
    "gamma_re": ("freq", "0rad_s"),
    "gamma_ed": ("freq", "0rad_s"),
    "gamma_rd": ("freq", "0rad_s"),
}

SCHEMAS = {
    "echo-sim": {
        "n_atoms": ("int_list", REQUIRED),
        "c6": ("float", REQUIRED),
        "omega_tau": ("float_list", None),
        "omega_tau_p": ("float_list", None),
        "n_realizations": ("int", 1),
        "grid_points": ("int", DEFAULT_GRID_POINTS),
        "cutoff_kappa": ("float", DEFAULT_KAPPA),
        "max_excitations": ("int", None),
        "max_dimension": ("int", DEFAULT_MAX_DIMENSION),
        "tol": ("float", DEFAULT_TOL),
        "window": ("float", DEFAULT_WINDOW),
    },
    "echo-analyze": {
        "curves": ("path", REQUIRED),
        "window": ("float", DEFAULT_WINDOW),
        "source": ("choice:echo_simulated|echo_experimental", "echo_simulated"),
    },
    "eit-probe-scan": {
        **_PARAMS_3LEVEL,
        "delta_c": ("freq", "0rad_s"),
        "scan_start": ("freq", REQUIRED),
        "scan_stop": ("freq", REQUIRED),
        "scan_points": ("int", 201),
        "mode": ("choice:full_steady_state|perturbative", "full_steady_state"),
    },
    "eit-coupling-scan": {
        **_PARAMS_3LEVEL,
        "delta_p": ("freq", "0rad_s"),
        "scan_start": ("freq", REQUIRED),
        "scan_stop": ("freq", REQUIRED),
        "scan_points": ("int", 201),
        "mode": ("choice:full_steady_state|perturbative", "full_steady_state"),
    },
    "eit-fit": {
        "spectrum": ("path", REQUIRED),
        "scan_axis": ("choice:probe_detuning|coupling_detuning", None),
        "omega_p": ("freq", REQUIRED),
        "omega_c": ("freq", REQUIRED),
        "gamma_eg": ("freq", REQUIRED),
        "gamma_re": ("freq", "0rad_s"),
        "gamma_ed": ("freq", "0rad_s"),
        "delta_p": ("freq", "0rad_s"),
        "delta_c": ("freq", "0rad_s"),
    },
    "powerlaw": {
        "points": ("path", REQUIRED),
        "fixed_exponent": ("float", None),
        "source": ("choice:echo_experimental|echo_simulated|eit", None),
    },
}

# keys every scenario accepts besides its own
_COMMON = {"scenario", "seed", "out", "plot"}


def _convert(kind, value):
    """Convert one raw document value; frequencies come back in rad/s."""
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected a number, got {value!r}")
        return float(value)
    if kind == "freq":
        if not isinstance(value, str):
            raise ValueError(f"frequencies need a unit suffix, e.g. '6 2pi_MHz'; got {value!r}")
        return parse_frequency(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValueError(f"expected true/false, got {value!r}")
        return value
    if kind in ("str", "path"):
        if not isinstance(value, str) or not value:
            raise ValueError(f"expected a non-empty string, got {value!r}")
        return value
    if kind in ("int_list", "float_list"):
        items = value if isinstance(value, list) else [value]
        if not items:
            raise ValueError("expected a non-empty list")
        return [_convert(kind.split("_")[0], v) for v in items]
    if kind.startswith("choice:"):
        options = kind.split(":", 1)[1].split("|")
        if value not in options:
            raise ValueError(f"expected one of {options}, got {value!r}")
        return value
    raise AssertionError(kind)


@dataclass
class ScenarioConfig:
    """Validated scenario configuration.

    ``raw`` keeps the unit-suffixed document as given (after CLI overrides);
    ``values`` holds converted values, frequencies in rad/s.
    """

    scenario: str
    raw: dict
    values: dict
    out: Path
    seed: int = 0
    plot: bool = False
    base_dir: Path = field(default_factory=Path.cwd)

    def resolved(self) -> dict:
        doc = {"scenario": self.scenario, **self.raw, "seed": self.seed, "plot": self.plot, "out": str(self.out)}
        return doc

    def path(self, key) -> Path:
        return Path(self.raw[key])


def build_config(scenario, document, out=None, seed=None, plot=None, overrides=None, base_dir=None):
    """Validate ``document`` (plus CLI overrides) into a :class:`ScenarioConfig`."""
    if scenario not in SCHEMAS:
        raise ConfigError(f"unknown scenario {scenario!r}", {"scenario": f"expected one of {list(SCENARIOS)}"})
    if not isinstance(document, dict):
        raise ConfigError("config document must be a JSON object", {"<document>": "not an object"})
    doc = dict(document)
    errors = {}
    if "scenario" in doc and doc["scenario"] != scenario:
        errors["scenario"] = f"document is for {doc['scenario']!r}, command line asks for {scenario!r}"
    doc.update(overrides or {})
    if out is not None:
        doc["out"] = str(out)
    if seed is not None:
        doc["seed"] = seed
    if plot:
        doc["plot"] = True

    schema = SCHEMAS[scenario]
    for key in doc:
        if key not in schema and key not in _COMMON:
            errors[key] = "unknown key for scenario " + scenario
    values = {}
    for key, (kind, default) in schema.items():
        if key in doc and doc[key] is not None:
            raw = doc[key]
        elif default is REQUIRED:
            errors[key] = "required key missing"
            continue
        elif default is None:
            values[key] = None
            continue
        else:
            raw = default
        try:
            values[key] = _convert(kind, raw)
        except (ValueError, InvalidArgument) as exc:
            errors[key] = str(exc)

    s = doc.get("seed", 0)
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s <= U64_MAX:
        errors["seed"] = f"seed must be an integer in [0, 2^64-1], got {s!r}"
        s = 0
    p = doc.get("plot", False)
    if not isinstance(p, bool):
        errors["plot"] = f"expected true/false, got {p!r}"
    out_dir = doc.get("out", "rydephase-out")
    if not isinstance(out_dir, str) or not out_dir:
        errors["out"] = "output directory must be a non-empty string"
        out_dir = "rydephase-out"

    if scenario == "echo-sim" and not errors:
        if (values["omega_tau"] is None) == (values["omega_tau_p"] is None):
            errors["omega_tau"] = "give exactly one of omega_tau or omega_tau_p"
        for key in ("omega_tau", "omega_tau_p"):
            if values[key] is not None and any(t <= 0 for t in values[key]):
                errors[key] = "pulse lengths must be > 0"
        if any(n < 1 or n > MAX_ATOMS for n in values["n_atoms"]):
            errors["n_atoms"] = f"atom numbers must be in [1, {MAX_ATOMS}]"
        if values["c6"] < 0:
            errors["c6"] = "c6 must be >= 0"
    if scenario in ("eit-probe-scan", "eit-coupling-scan") and not errors:
        if values["scan_points"] < 2:
            errors["scan_points"] = "need at least 2 scan points"
        elif values["scan_stop"] <= values["scan_start"]:
            errors["scan_stop"] = "scan_stop must exceed scan_start"

    if errors:
        raise ConfigError("invalid configuration", errors)
    raw = {k: v for k, v in doc.items() if k not in _COMMON}
    base = Path(base_dir or Path.cwd())
    for key, (kind, default) in schema.items():
        if key not in raw and default is not REQUIRED:
            raw[key] = default
        if kind == "path" and raw.get(key) not in (None, BUNDLED):
            # absolute, so the resolved document works from anywhere
            p = Path(raw[key])
            raw[key] = str(p if p.is_absolute() else (base / p).resolve())
    return ScenarioConfig(scenario, raw, values, Path(out_dir), int(s), bool(p), base)


# --- scenarios --------------------------------------------------------------


def _three_level(v, **extra) -> ThreeLevelParams:
    keys = ("omega_p", "omega_c", "gamma_eg", "gamma_re", "gamma_ed", "gamma_rd", "delta_p", "delta_c")
    kwargs = {k: v[k] for k in keys if v.get(k) is not None}
    kwargs.update(extra)
    return ThreeLevelParams(**kwargs)


def _curves_json(curves):
    return {"curves": [c.to_dict() for c in curves]}


def _dephasing_rows(curves, window, source):
    points, fits = [], []
    for c in curves:
        point, vis = dephasing_point(c, window)
        point.source = DephasingSource(source)
        points.append(point)
        fits.append({"n_atoms": c.n_atoms, "tau": c.tau, **vis.to_dict(), "gamma_d": point.gamma_d})
    rows = [{**p.row(), "n_atoms": p.meta.get("n_atoms"), "tau": p.meta["tau"], "visibility": p.meta["visibility"]}
            for p in points]
    return rows, fits


DEPHASING_COLUMNS = ["max_nr", "gamma_d", "source", "n_atoms", "tau", "visibility"]


def run_echo_sim(cfg: ScenarioConfig):
    v = cfg.values
    taus = v["omega_tau"] if v["omega_tau"] is not None else [2 * t for t in v["omega_tau_p"]]
    curves = []
    for n in v["n_atoms"]:
        study = echo_study(
            n, v["c6"], taus, v["n_realizations"], cfg.seed, v["grid_points"], v["cutoff_kappa"],
            v["max_excitations"], v["tol"], v["max_dimension"],
        )
        curves.extend(study[float(t)] for t in taus)
    out = cfg.out
    files = [
        rio.write_csv(out / "echo_curves.csv", rio.curves_to_rows(curves), rio.CURVE_COLUMNS),
        rio.write_json(out / "echo_curves.json", _curves_json(curves)),
    ]
    rows, fits = _dephasing_rows(curves, v["window"], "echo_simulated")
    files.append(rio.write_csv(out / "dephasing_points.csv", rows, DEPHASING_COLUMNS))
    files.append(rio.write_json(out / "visibility.json", {"fits": fits}))
    if cfg.plot:
        from .plotting import plot_echo_curves

        files.append(plot_echo_curves(curves, out / "echo_curves.svg"))
    return files


def run_echo_analyze(cfg: ScenarioConfig):
    v = cfg.values
    try:
        curves = rio.read_curves(cfg.path("curves"))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError("cannot read echo curves", {"curves": str(exc)}) from exc
    rows, fits = _dephasing_rows(curves, v["window"], v["source"])
    out = cfg.out
    files = [
        rio.write_csv(out / "dephasing_points.csv", rows, DEPHASING_COLUMNS),
        rio.write_json(out / "visibility.json", {"fits": fits}),
    ]
    if cfg.plot:
        from .plotting import plot_echo_curves

        files.append(plot_echo_curves(curves, out / "echo_curves.svg"))
    return files


def run_eit_scan(cfg: ScenarioConfig):
    v = cfg.values
    axis = ScanAxis.probe_detuning if cfg.scenario == "eit-probe-scan" else ScanAxis.coupling_detuning
    template = _three_level(v)
    grid = np.linspace(v["scan_start"], v["scan_stop"], v["scan_points"])
    spec = scan_spectrum(template, axis, grid, v["mode"])
    out = cfg.out
    files = [
        rio.write_csv(out / "spectrum.csv", spec.rows(), ["detuning_rad_s", "im_rho_ge"]),
        rio.write_json(out / "spectrum.json", spec.to_dict()),
    ]
    if cfg.plot:
        from .plotting import plot_spectrum

        files.append(plot_spectrum(spec, out / "spectrum.svg"))
    return files


def run_eit_fit(cfg: ScenarioConfig):
    v = cfg.values
    try:
        spec = rio.read_spectrum(cfg.path("spectrum"), v["scan_axis"])
    except InvalidArgument as exc:
        raise ConfigError("cannot read spectrum", {"spectrum": str(exc)}) from exc
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError("cannot read spectrum", {"spectrum": str(exc)}) from exc
    fixed = _three_level(v)
    result = fit_eit_spectrum(spec, fixed)
    fit = eit_fit_curve(spec, fixed, result)
    out = cfg.out
    payload = {
        "scan_axis": spec.scan_axis.value,
        "gamma_r_rad_s": result.gamma_r,
        "gamma_r_minus_gamma_re_rad_s": result.gamma_r - fixed.gamma_re,
        "delta_offset_rad_s": result.delta_offset,
        "amplitude": result.amplitude,
        "residual_rms": result.residual_rms,
        "at_bounds": result.at_bounds,
        "nfev": result.nfev,
        "stage1": result.stage1,
        "fixed": fixed.to_dict(),
    }
    rows = ({"detuning_rad_s": x, "im_rho_ge": y, "fit": f} for x, y, f in zip(spec.detuning, spec.im_rho_ge, fit))
    files = [
        rio.write_json(out / "eit_fit.json", payload),
        rio.write_csv(out / "eit_fit.csv", rows, ["detuning_rad_s", "im_rho_ge", "fit"]),
    ]
    if cfg.plot:
        from .plotting import plot_spectrum

        files.append(plot_spectrum(spec, out / "eit_fit.svg", fit))
    return files


def bundled_points_path() -> Path:
    return Path(str(resources.files("rydephase") / "data" / "simulated_dephasing.csv"))


def read_points(path, source=None):
    rows = rio.read_csv(path)
    points = []
    for i, r in enumerate(rows):
        try:
            p = DephasingPoint(float(r["max_nr"]), float(r["gamma_d"]), r.get("source") or "echo_simulated")
        except (KeyError, ValueError) as exc:
            raise ConfigError("malformed dephasing-point file", {"points": f"row {i + 1}: {exc}"}) from exc
        if source is None or p.source.value == source:
            points.append(p)
    return points


def run_powerlaw(cfg: ScenarioConfig):
    v = cfg.values
    path = bundled_points_path() if v["points"] == BUNDLED else cfg.path("points")
    try:
        points = read_points(path, v["source"])
    except OSError as exc:
        raise ConfigError("cannot read dephasing points", {"points": str(exc)}) from exc
    if not points:
        raise ConfigError("no dephasing points selected", {"points": "empty after source filter"})
    positive = [p for p in points if p.gamma_d > 0]
    fit = fit_power_law(positive, v["fixed_exponent"])
    out = cfg.out
    payload = {
        **fit.to_dict(),
        "n_dropped_zero_rate": len(points) - len(positive),
        "points_file": str(path),
        "points_sha256": rio.digest(rio.read_csv(path)),
    }
    files = [rio.write_json(out / "powerlaw.json", payload)]
    if cfg.plot:
        from .plotting import plot_power_law

        files.append(plot_power_law(positive, fit, out / "powerlaw.svg"))
    return files


RUNNERS = {
    "echo-sim": run_echo_sim,
    "echo-analyze": run_echo_analyze,
    "eit-probe-scan": run_eit_scan,
    "eit-coupling-scan": run_eit_scan,
    "eit-fit": run_eit_fit,
    "powerlaw": run_powerlaw,
}


def run_scenario(cfg: ScenarioConfig) -> list[Path]:
    """Run one scenario and write its manifest; returns the files written."""
    start = time.perf_counter()
    files = RUNNERS[cfg.scenario](cfg)
    manifest = {
        "status": "ok",
        "scenario": cfg.scenario,
        "config": cfg.resolved(),
        "config_sha256": rio.digest(cfg.resolved()),
        "seed": cfg.seed,
        "tool": "rydephase",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "wall_time_s": time.perf_counter() - start,
        "outputs": sorted(p.name for p in files),
        "rerun": f"rydephase {cfg.scenario} --config {cfg.out / 'resolved_config.json'}",
    }
    rio.write_json(cfg.out / "resolved_config.json", cfg.resolved())
    rio.write_json(cfg.out / "manifest.json", manifest)
    return files + [cfg.out / "resolved_config.json", cfg.out / "manifest.json"]


# --- entry point ------------------------------------------------------------


def _parse_override(text):
    if "=" not in text:
        raise ConfigError("bad --set value", {text: "expected key=value"})
    key, value = text.split("=", 1)
    try:
        return key.strip(), json.loads(value)
    except json.JSONDecodeError:
        return key.strip(), value


def make_parser():
    parser = argparse.ArgumentParser(
        prog="rydephase",
        description="Rydberg echo and EIT dephasing simulations.",
        epilog="Frequencies in configs carry unit suffixes; see --help-units.",
    )
    parser.add_argument("--version", action="version", version=f"rydephase {__version__}")
    parser.add_argument("--help-units", action="store_true", help="print the frequency unit table and exit")
    parser.add_argument("scenario", nargs="?", choices=SCENARIOS)
    parser.add_argument("--config", type=Path, help="JSON scenario document")
    parser.add_argument("--out", help="output directory (default: rydephase-out)")
    parser.add_argument("--seed", type=int, help="base seed, 0 <= seed < 2^64")
    parser.add_argument("--plot", action="store_true", help="also write SVG figures")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a document key; VALUE is parsed as JSON when possible")
    return parser


def _error_record(kind, exc, exit_code):
    rec = {"status": "error", "kind": kind, "error": type(exc).__name__, "message": str(exc), "exit_code": exit_code}
    if isinstance(exc, ConfigError):
        rec["fields"] = exc.fields
    cause = getattr(exc, "cause", None)
    if cause is not None:
        rec["cause"] = {"error": type(cause).__name__, "message": str(cause)}
    if getattr(exc, "size", None) is not None:
        rec["size"] = exc.size
    return rec


def _fail(record, out_dir):
    print(json.dumps(rio.to_jsonable(record), sort_keys=True), file=sys.stderr)
    if out_dir is not None:
        try:
            rio.write_json(Path(out_dir) / "error.json", record)
        except OSError:
            pass
    return record["exit_code"]


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.help_units:
        print(format_unit_table())
        return EXIT_OK
    if args.scenario is None:
        parser.print_usage(sys.stderr)
        return _fail({"status": "error", "kind": "config", "message": "scenario is required",
                      "fields": {"scenario": "missing"}, "exit_code": EXIT_CONFIG}, None)

    cfg = None
    try:
        document = {}
        base_dir = Path.cwd()
        if args.config is not None:
            try:
                document = json.loads(args.config.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError("cannot read config file", {"--config": str(exc)}) from exc
            except json.JSONDecodeError as exc:
                raise ConfigError("config file is not valid JSON", {"--config": str(exc)}) from exc
            base_dir = args.config.resolve().parent
        overrides = dict(_parse_override(s) for s in args.set)
        cfg = build_config(args.scenario, document, args.out, args.seed, args.plot, overrides, base_dir)
        run_scenario(cfg)
    except (ConfigError, InvalidArgument) as exc:
        if not isinstance(exc, ConfigError):
            exc = ConfigError(str(exc), {"<parameters>": str(exc)})
        out_dir = cfg.out if cfg is not None else args.out
        return _fail(_error_record("config", exc, EXIT_CONFIG), out_dir)
    except (RydephaseError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(_error_record("numerical", exc, EXIT_NUMERICAL), cfg.out if cfg else args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
