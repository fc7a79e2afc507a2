"""Theory-experiment comparison against confidence bands.

Datasets are comma-separated text with the header ``d_nm,value,ci95,ci70,unit``
(``ci70`` may be empty). A point is outside a band when the magnitude of
theory minus experiment strictly exceeds the half-width. An excluded interval is a
maximal run of consecutive outside points; no interpolation between points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from . import lifshitz as lf

HEADER = ("d_nm", "value", "ci95", "ci70", "unit")
# divisors to SI; dividing by an exact power of ten rounds correctly
UNITS = {"mPa": ("pressure", 1e3), "Pa": ("pressure", 1.0), "pN": ("force", 1e12), "nN": ("force", 1e9), "N": ("force", 1.0)}
LEVELS = (95, 70)
CONVENTION = "all-points-outside"
REPORT_COLUMNS = "d_nm,diff,outside95,outside70"


class DatasetError(ValueError):
    """Malformed dataset; the message names the line."""


class RangeError(ValueError):
    """Theory curve does not cover a requested separation."""


@dataclass(frozen=True)
class ComparisonRecord:
    separation: float
    value: float
    ci95: float
    ci70: float | None = None
    kind: str = "pressure"

    def half_width(self, level: int) -> float | None:
        if level == 95:
            return self.ci95
        if level == 70:
            return self.ci70
        raise ValueError("level must be 70 or 95")


def _nm(separation: float) -> float:
    # separations are stored in metres; report them in nm without the
    # binary noise of the conversion
    return float(f"{separation * 1e9:.12g}")


def _parse_float(text, what, lineno):
    try:
        x = float(text)
    except ValueError:
        raise DatasetError(f"line {lineno}: bad {what} {text!r}") from None
    if not math.isfinite(x):
        raise DatasetError(f"line {lineno}: {what} is not finite")
    return x


def parse_dataset(text: str, kind: str) -> list[ComparisonRecord]:
    """Records from dataset text, sorted by separation, in SI units."""
    if kind not in ("pressure", "force"):
        raise ValueError("kind must be 'pressure' or 'force'")
    rows = [(i, line) for i, line in enumerate(text.splitlines(), 1) if line.strip()]
    if not rows:
        return []
    lineno, head = rows[0]
    if tuple(c.strip() for c in head.split(",")) != HEADER:
        raise DatasetError(f"line {lineno}: header must be {','.join(HEADER)}")
    records = []
    for lineno, line in rows[1:]:
        cells = [c.strip() for c in next(csv.reader([line]))]
        if len(cells) != 5:
            raise DatasetError(f"line {lineno}: expected 5 fields, got {len(cells)}")
        d_nm, value, ci95, ci70, unit = cells
        if not unit:
            raise DatasetError(f"line {lineno}: unit tag missing")
        if unit not in UNITS:
            raise DatasetError(f"line {lineno}: unknown unit {unit!r}")
        unit_kind, div = UNITS[unit]
        if unit_kind != kind:
            raise DatasetError(f"line {lineno}: unit {unit} is not a {kind} unit")
        d = _parse_float(d_nm, "separation", lineno)
        if not d > 0:
            raise DatasetError(f"line {lineno}: separation must be positive")
        v = _parse_float(value, "value", lineno) / div
        w95 = _parse_float(ci95, "ci95", lineno) / div
        w70 = None if ci70 == "" else _parse_float(ci70, "ci70", lineno) / div
        if not w95 > 0 or (w70 is not None and not w70 > 0):
            raise DatasetError(f"line {lineno}: half-widths must be positive")
        if w70 is not None and w70 > w95:
            raise DatasetError(f"line {lineno}: ci70 exceeds ci95")
        records.append((d, lineno, ComparisonRecord(d / 1e9, v, w95, w70, kind)))
    records.sort(key=lambda r: r[0])
    for (d0, l0, _), (d1, l1, _) in zip(records, records[1:]):
        if d0 == d1:
            raise DatasetError(f"line {l1}: duplicate separation {d1:g} nm (also on line {l0})")
    return [r for _, _, r in records]


def load_dataset(path: str | Path, kind: str) -> list[ComparisonRecord]:
    return parse_dataset(Path(path).read_text(encoding="utf-8"), kind)


def format_dataset(records: Sequence[ComparisonRecord], unit: str) -> str:
    """Dataset text for ``records`` in ``unit`` (shortest round-trip floats)."""
    div = UNITS[unit][1]
    out = [",".join(HEADER)]
    for r in records:
        ci70 = "" if r.ci70 is None else repr(r.ci70 * div)
        out.append(f"{_nm(r.separation)!r},{r.value * div!r},{r.ci95 * div!r},{ci70},{unit}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------ theory


@dataclass
class TheoryCurve:
    """Theory value (SI) as a function of separation in metres.

    Either wraps an evaluator (the full Lifshitz pipeline) or a cached
    mapping from separation to value. ``domain`` limits the evaluator.
    """

    evaluator: Callable[[float], float] | None = None
    cache: Mapping[float, float] = field(default_factory=dict)
    domain: tuple[float, float] = (0.0, math.inf)

    def __call__(self, d: float) -> float:
        if d in self.cache:
            return self.cache[d]
        if self.evaluator is None:
            raise RangeError(f"no cached theory value at d = {d * 1e9:g} nm")
        lo, hi = self.domain
        if not lo <= d <= hi:
            raise RangeError(f"d = {d * 1e9:g} nm outside theory range [{lo * 1e9:g}, {hi * 1e9:g}] nm")
        return self.evaluator(d)


def lifshitz_curve(cfg: lf.ThermalConfiguration, kind: str, tolerance: float = 1e-10) -> TheoryCurve:
    """Pressure (plates) or PFA force (sphere-plate) at the gap of each call."""
    compute = lf.pressure if kind == "pressure" else lf.sphere_plate_force

    def evaluate(d):
        return compute(cfg.at(gap=d), tolerance).total

    return TheoryCurve(evaluate)


def differences(theory: Callable[[float], float], records: Sequence[ComparisonRecord]) -> list[float]:
    """Theory minus measurement at every record, in SI units."""
    return [theory(r.separation) - r.value for r in records]


# --------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class LevelVerdict:
    level: int
    outside: tuple[bool, ...]
    intervals: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class ExclusionReport:
    d_nm: tuple[float, ...]
    diff: tuple[float, ...]
    outside95: tuple[bool, ...]
    outside70: tuple[bool, ...] | None
    excluded95: tuple[tuple[float, float], ...]
    excluded70: tuple[tuple[float, float], ...] | None
    convention: str = CONVENTION


def excluded_intervals(d_nm: Sequence[float], outside: Sequence[bool]) -> tuple[tuple[float, float], ...]:
    """Maximal runs of consecutive outside points as closed ``(first, last)`` spans."""
    runs = []
    start = None
    for i, flag in enumerate(outside):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            runs.append((d_nm[start], d_nm[i - 1]))
            start = None
    if start is not None:
        runs.append((d_nm[start], d_nm[len(outside) - 1]))
    return tuple(runs)


def exclusion_verdict(diffs: Sequence[float], records: Sequence[ComparisonRecord], level: int) -> LevelVerdict:
    """Outside flags and excluded intervals at one confidence level.

    ``|diff| == half-width`` counts as inside.
    """
    if len(diffs) != len(records):
        raise ValueError("differences and records differ in length")
    widths = [r.half_width(level) for r in records]
    if any(w is None for w in widths):
        raise ValueError(f"level {level} needs ci{level} on every record")
    outside = tuple(abs(x) > w for x, w in zip(diffs, widths))
    d_nm = [_nm(r.separation) for r in records]
    return LevelVerdict(level, outside, excluded_intervals(d_nm, outside))


def build_report(diffs: Sequence[float], records: Sequence[ComparisonRecord]) -> ExclusionReport:
    v95 = exclusion_verdict(diffs, records, 95)
    has70 = all(r.ci70 is not None for r in records)
    v70 = exclusion_verdict(diffs, records, 70) if has70 else None
    return ExclusionReport(
        tuple(_nm(r.separation) for r in records),
        tuple(float(x) for x in diffs),
        v95.outside,
        None if v70 is None else v70.outside,
        v95.intervals,
        None if v70 is None else v70.intervals,
    )


def _fmt_intervals(intervals):
    if intervals is None:
        return "n/a"
    if not intervals:
        return "none"
    return "; ".join(f"[{a!r}, {b!r}]" for a, b in intervals)


def _parse_intervals(text):
    text = text.strip()
    if text == "n/a":
        return None
    if text == "none":
        return ()
    out = []
    for part in text.split(";"):
        a, b = part.strip().strip("[]").split(",")
        out.append((float(a), float(b)))
    return tuple(out)


def write_report(report: ExclusionReport) -> str:
    """Report text; floats use the shortest round-trip representation."""
    lines = [f"# exclusion convention: {report.convention}; |diff| == half-width counts as inside", REPORT_COLUMNS]
    o70 = report.outside70 if report.outside70 is not None else [None] * len(report.d_nm)
    for d, x, a, b in zip(report.d_nm, report.diff, report.outside95, o70):
        lines.append(f"{d!r},{x!r},{int(a)},{'' if b is None else int(b)}")
    lines.append("# summary")
    lines.append(f"# excluded95: {_fmt_intervals(report.excluded95)}")
    lines.append(f"# excluded70: {_fmt_intervals(report.excluded70)}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> ExclusionReport:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# exclusion convention: "):
        raise ValueError("not an exclusion report")
    convention = lines[0][len("# exclusion convention: "):].split(";")[0]
    if lines[1] != REPORT_COLUMNS:
        raise ValueError("bad report column header")
    d_nm, diff, o95, o70 = [], [], [], []
    i = 2
    while not lines[i].startswith("#"):
        d, x, a, b = lines[i].split(",")
        d_nm.append(float(d))
        diff.append(float(x))
        o95.append(a == "1")
        o70.append(None if b == "" else b == "1")
        i += 1
    summary = {}
    for line in lines[i + 1:]:
        key, _, value = line[2:].partition(":")
        summary[key] = _parse_intervals(value)
    has70 = all(v is not None for v in o70)
    return ExclusionReport(
        tuple(d_nm), tuple(diff), tuple(o95), tuple(o70) if has70 else None,
        summary["excluded95"], summary["excluded70"], convention,
    )


def compare(theory: Callable[[float], float], records: Sequence[ComparisonRecord]) -> ExclusionReport:
    return build_report(differences(theory, records), records)
