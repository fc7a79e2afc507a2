"""Command-line front end.

Runs are described by a sectioned key-value file::

    [material]          plate (and, by default, the second body)
    model = drude
    plasma_frequency_ev = 9.0
    relaxation_ev = 0.035
    carrier_concentration_cm3 = 5.9e22
    screening = n0

    [sphere]            optional second body (sphere or second plate)

    [geometry]
    d_nm = 200, 300, 400        (or d_min_nm, d_max_nm, d_points)
    radius_um = 100             (force only)

    [run]
    temperature = 300
    tolerance = 1e-10
    screening_channels = te_only

    [entropy]
    temperatures = 4, 2, 1, 0.5
    verdict = yes
    closed_form = no

    [compare]
    dataset = data.csv
    kind = pressure

Command-line flags override the file. Exit codes: 0 success, 2 configuration
or parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import compare as cmp
from . import lifshitz as lf
from . import quadrature as quad
from . import thermo
from .constants import format_constants
from .materials import MaterialError, Material, material_from_mapping

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SWEEP_HEADER = "d_nm,F_te,F_tm,F_total,P_pa_or_F_newton,n_max,err_estimate"
NUMERICAL_ERRORS = (
    lf.NonConvergence,
    quad.QuadratureFailure,
    thermo.StepTooLarge,
    thermo.ExtrapolationError,
    FloatingPointError,
)


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


@dataclass
class RunConfig:
    material: Material
    other: Material | None
    gaps: list[float]
    radius: float | None
    temperature: float
    tolerance: float
    screening_channels: str
    out: str | None
    temperatures: list[float] = field(default_factory=list)
    verdict: bool = False
    closed_form: bool = False
    basis: str = "low-t"
    dataset: str | None = None
    dataset_kind: str | None = None

    def configuration(self, gap: float, geometry: lf.Geometry | None = None) -> lf.ThermalConfiguration:
        return lf.ThermalConfiguration(
            gap,
            self.temperature,
            self.material,
            geometry=geometry or lf.ParallelPlates(),
            other=self.other,
            screening_channels=self.screening_channels,
        )


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {text!r}") from None


def _float(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key: {key}")
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {section[key]!r}") from None


def _bool(section, key):
    value = section.get(key, "no").strip().lower()
    if value in ("yes", "true", "1", "on"):
        return True
    if value in ("no", "false", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected yes or no, got {value!r}")


def _material(parser, name, args):
    section = dict(parser[name])
    if args.model is not None:
        section["model"] = args.model
    if args.screening is not None:
        section["screening"] = args.screening
    return material_from_mapping(section)


def _gaps(geo) -> list[float]:
    if "d_nm" in geo:
        gaps = _floats(geo["d_nm"], "d_nm")
    elif "d_min_nm" in geo:
        lo, hi = _float(geo, "d_min_nm"), _float(geo, "d_max_nm")
        count = int(_float(geo, "d_points"))
        if count < 1 or hi < lo:
            raise ConfigError("d range needs d_min_nm <= d_max_nm and d_points >= 1")
        gaps = np.linspace(lo, hi, count).tolist() if count > 1 else [lo]
    else:
        raise ConfigError("missing key: d_nm (or d_min_nm, d_max_nm, d_points)")
    if not gaps or any(g <= 0 for g in gaps):
        raise ConfigError("separations must be positive")
    return [g * 1e-9 for g in gaps]


def load_config(args) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    for name in ("material", "geometry"):
        if name not in parser:
            raise ConfigError(f"missing config section [{name}] (key: {name})")
    material = _material(parser, "material", args)
    other = _material(parser, "sphere", args) if "sphere" in parser else None
    geo = parser["geometry"]
    run = parser["run"] if "run" in parser else {}
    radius = _float(geo, "radius_um", 0.0) * 1e-6 or None
    tolerance = args.tolerance if args.tolerance is not None else _float(run, "tolerance", 1e-10)
    try:
        lf.check_tolerance(tolerance)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ent = parser["entropy"] if "entropy" in parser else {}
    cmpsec = parser["compare"] if "compare" in parser else {}
    cfg = RunConfig(
        material=material,
        other=other,
        gaps=_gaps(geo),
        radius=radius,
        temperature=_float(run, "temperature", 300.0),
        tolerance=tolerance,
        screening_channels=run.get("screening_channels", "te_only"),
        out=args.out if args.out is not None else run.get("out"),
        temperatures=_floats(ent.get("temperatures", ""), "temperatures"),
        verdict=_bool(ent, "verdict"),
        closed_form=_bool(ent, "closed_form"),
        basis=ent.get("basis", "low-t"),
        dataset=getattr(args, "dataset", None) or cmpsec.get("dataset"),
        dataset_kind=cmpsec.get("kind"),
    )
    if getattr(args, "verdict", False):
        cfg.verdict = True
    if getattr(args, "closed_form", False):
        cfg.closed_form = True
    if cfg.screening_channels not in ("te_only", "both"):
        raise ConfigError("screening_channels must be te_only or both")
    if cfg.temperature < 0:
        raise ConfigError("temperature must be >= 0")
    return cfg


def _sci(x: float) -> str:
    return f"{x:.11e}"


def _sweep_row(d, fe, value, err):
    return ",".join(
        [_sci(d * 1e9), _sci(fe.te_value), _sci(fe.tm_value), _sci(fe.total), _sci(value), str(fe.n_max), _sci(err)]
    )


def _at_each_gap(cfg: RunConfig, fn):
    rows = [SWEEP_HEADER]
    for d in cfg.gaps:
        try:
            rows.append(fn(d))
        except NUMERICAL_ERRORS as exc:
            raise NumericalError(f"d = {d * 1e9:g} nm: {exc}") from exc
    return "\n".join(rows) + "\n"


def cmd_pressure(cfg: RunConfig) -> str:
    def row(d):
        c = cfg.configuration(d)
        fe = lf.free_energy(c, cfg.tolerance)
        p = lf.pressure(c, cfg.tolerance)
        return _sweep_row(d, fe, p.total, p.error)

    return _at_each_gap(cfg, row)


def cmd_force(cfg: RunConfig) -> str:
    if cfg.radius is None:
        raise ConfigError("missing key: radius_um")

    def row(d):
        f = lf.sphere_plate_force(cfg.configuration(d, lf.SpherePlate(cfg.radius)), cfg.tolerance)
        return _sweep_row(d, lf.CasimirResult(lf.FREE_ENERGY, f.te, f.tm), f.total, f.error)

    return _at_each_gap(cfg, row)


def cmd_entropy(cfg: RunConfig) -> str:
    if len(cfg.gaps) != 1:
        raise ConfigError("entropy needs exactly one separation in d_nm")
    if not cfg.temperatures and not cfg.closed_form:
        raise ConfigError("missing key: temperatures")
    if any(t <= 0 for t in cfg.temperatures):
        raise ConfigError("temperatures must be positive")
    if cfg.basis not in thermo.EXTRAPOLATION_BASES:
        raise ConfigError(f"basis must be one of {sorted(thermo.EXTRAPOLATION_BASES)}")
    c = cfg.configuration(cfg.gaps[0]).at(temperature=max(cfg.temperatures, default=1.0))
    try:
        if cfg.verdict:
            result = thermo.nernst_verdict(c, cfg.temperatures, cfg.basis)
            points = list(result.points)
        else:
            result = None
            points = [thermo.entropy_finite_difference(c, T) for T in cfg.temperatures]
        if cfg.closed_form:
            points.append(thermo.zero_temperature_entropy(c))
    except NUMERICAL_ERRORS as exc:
        raise NumericalError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    text = thermo.format_entropy_sweep(points)
    if result is not None:
        text += "# " + result.format() + "\n"
    return text


def cmd_compare(cfg: RunConfig) -> str:
    if cfg.dataset is None:
        raise ConfigError("missing key: dataset")
    kind = cfg.dataset_kind or ("force" if cfg.radius is not None else "pressure")
    if kind not in ("pressure", "force"):
        raise ConfigError("kind must be pressure or force")
    try:
        records = cmp.load_dataset(cfg.dataset, kind)
    except OSError as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from None
    if kind == "force":
        if cfg.radius is None:
            raise ConfigError("missing key: radius_um")
        template = cfg.configuration(records[0].separation if records else 1e-7, lf.SpherePlate(cfg.radius))
    else:
        template = cfg.configuration(records[0].separation if records else 1e-7)
    theory = cmp.lifshitz_curve(template, kind, cfg.tolerance)
    diffs = []
    for r in records:
        try:
            diffs.append(theory(r.separation) - r.value)
        except NUMERICAL_ERRORS as exc:
            raise NumericalError(f"d = {r.separation * 1e9:g} nm: {exc}") from exc
    return cmp.write_report(cmp.build_report(diffs, records))


COMMANDS = {
    "pressure": cmd_pressure,
    "force": cmd_force,
    "entropy": cmd_entropy,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermocasimir", description="Thermal Casimir interaction between metals.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="sectioned key-value run file")
        p.add_argument("--tolerance", type=float, help="relative tolerance of every sum and integral")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--screening", choices=("none", "n0", "all"))
        p.add_argument("--model", choices=("ideal", "plasma", "drude", "drude-core"))
        if name == "entropy":
            p.add_argument("--verdict", action="store_true", help="append a Nernst verdict record")
            p.add_argument("--closed-form", action="store_true", help="append the T = 0 closed-form entropy")
        if name == "compare":
            p.add_argument("--dataset", help="dataset path (overrides [compare] dataset)")
    p = sub.add_parser("print-constants")
    p.add_argument("--out")
    return parser


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.command == "print-constants":
        _emit(format_constants(), args.out)
        return EXIT_OK
    try:
        cfg = load_config(args)
        text = COMMANDS[args.command](cfg)
        _emit(text, cfg.out)
    except (ConfigError, MaterialError, cmp.DatasetError, cmp.RangeError, lf.GeometryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
