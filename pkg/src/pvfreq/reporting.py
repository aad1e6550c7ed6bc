"""CSV artifacts and the scheme-comparison report.

Every CSV starts with a versioned comment line, ``# pvfreq-csv v1 <kind>``,
so downstream tooling can refuse files written by an incompatible build
instead of misparsing them.  Floats are written with ``repr`` (shortest
round-tripping form): re-reading an artifact recovers bit-identical values,
and two runs of the same experiment produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .simulation import SimResult, Trace

CSV_VERSION = 1

TRACE_COLUMNS = ("t_s", "frequency_hz", "governor_mw", "shed_mw")
METRICS_COLUMNS = (
    "nadir_hz",
    "settling_hz",
    "shed_total_mw",
    "true_imbalance_mw",
    "estimated_imbalance_mw",
    "rocof_hzps",
)
COMPARISON_COLUMNS = (
    "penetration",
    "scheme",
    "nadir_hz",
    "shed_mw",
    "true_imbalance_mw",
    "shed_error_pct",
    "rocof_hzps",
)


def _fmt(x: float) -> str:
    return repr(float(x))


def _header_line(kind: str) -> str:
    return f"# pvfreq-csv v{CSV_VERSION} {kind}"


def _open_versioned(path: Path, kind: str, columns: tuple[str, ...]):
    """Read a versioned CSV; returns the data rows as lists of strings."""
    with open(path, newline="") as f:
        first = f.readline().rstrip("\n")
        if first != _header_line(kind):
            raise ValidationError(
                f"{path}: expected header {_header_line(kind)!r}, got {first!r} "
                "(version or kind mismatch)"
            )
        reader = csv.reader(f)
        cols = next(reader, None)
        if cols is None:
            raise ValidationError(f"{path}: missing column row")
        if tuple(cols) != columns:
            for got, want in zip(cols, columns):
                if got != want:
                    raise ValidationError(
                        f"{path}: bad column {got!r} (expected {want!r})"
                    )
            raise ValidationError(
                f"{path}: expected columns {list(columns)}, got {cols}"
            )
        return [row for row in reader if row]


def _write_versioned(path: Path, kind: str, columns: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="") as f:
        f.write(_header_line(kind) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def write_trace_csv(path: str | Path, trace: Trace) -> None:
    rows = (
        (_fmt(t), _fmt(f), _fmt(g), _fmt(s))
        for t, f, g, s in trace.rows()
    )
    _write_versioned(Path(path), "trace", TRACE_COLUMNS, rows)


def read_trace_csv(path: str | Path) -> Trace:
    raw = _open_versioned(Path(path), "trace", TRACE_COLUMNS)
    if not raw:
        raise ValidationError(f"{path}: trace has no rows")
    data = np.array([[float(v) for v in row] for row in raw])
    return Trace(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


def write_metrics_csv(path: str | Path, result: SimResult) -> None:
    row = (
        _fmt(result.nadir),
        _fmt(result.settling_frequency),
        _fmt(result.shed_total),
        _fmt(result.true_imbalance_at_trigger),
        _fmt(result.estimated_imbalance),
        _fmt(result.rocof_at_trigger),
    )
    _write_versioned(Path(path), "metrics", METRICS_COLUMNS, [row])


def read_metrics_csv(path: str | Path) -> dict[str, float]:
    raw = _open_versioned(Path(path), "metrics", METRICS_COLUMNS)
    if len(raw) != 1:
        raise ValidationError(f"{path}: expected exactly one metrics row, got {len(raw)}")
    return {col: float(v) for col, v in zip(METRICS_COLUMNS, raw[0])}


@dataclass(frozen=True)
class ComparisonRow:
    """One (penetration level, scheme) outcome in a sweep comparison."""

    penetration: float
    scheme: str
    nadir_hz: float
    shed_mw: float
    true_imbalance_mw: float  # signed; negative means generation deficit
    shed_error_pct: float
    rocof_hzps: float

    def __post_init__(self) -> None:
        true_mag = abs(self.true_imbalance_mw)
        if math.isfinite(true_mag) and true_mag > 0:
            expected = (self.shed_mw - true_mag) / true_mag * 100.0
            if abs(self.shed_error_pct - expected) > 1e-9 * max(abs(expected), 1.0):
                raise ValidationError(
                    f"shed_error_pct {self.shed_error_pct} does not match "
                    f"(shed - |true|)/|true| * 100 = {expected}"
                )
        elif math.isfinite(self.shed_error_pct):
            raise ValidationError(
                "shed_error_pct must be NaN when no contingency imbalance was "
                "recorded"
            )


@dataclass(frozen=True)
class SchemeSummary:
    scheme: str
    max_abs_shed_error_pct: float
    nadir_spread_hz: float  # highest minus lowest nadir across levels


@dataclass(frozen=True)
class ComparisonReport:
    """All sweep rows plus per-scheme aggregates."""

    rows: tuple[ComparisonRow, ...]
    summaries: tuple[SchemeSummary, ...]

    @classmethod
    def from_rows(cls, rows: list[ComparisonRow]) -> "ComparisonReport":
        summaries = []
        for scheme in sorted({r.scheme for r in rows}):
            sub = [r for r in rows if r.scheme == scheme]
            errs = [abs(r.shed_error_pct) for r in sub if math.isfinite(r.shed_error_pct)]
            nadirs = [r.nadir_hz for r in sub]
            summaries.append(
                SchemeSummary(
                    scheme=scheme,
                    max_abs_shed_error_pct=max(errs) if errs else float("nan"),
                    nadir_spread_hz=max(nadirs) - min(nadirs),
                )
            )
        return cls(tuple(rows), tuple(summaries))

    def summary_for(self, scheme: str) -> SchemeSummary:
        for s in self.summaries:
            if s.scheme == scheme:
                return s
        raise KeyError(scheme)


def comparison_row(penetration: float, scheme: str, result: SimResult) -> ComparisonRow:
    true_mag = abs(result.true_imbalance_at_trigger)
    if math.isfinite(true_mag) and true_mag > 0:
        err_pct = (result.shed_total - true_mag) / true_mag * 100.0
    else:
        err_pct = float("nan")
    return ComparisonRow(
        penetration=penetration,
        scheme=scheme,
        nadir_hz=result.nadir,
        shed_mw=result.shed_total,
        true_imbalance_mw=result.true_imbalance_at_trigger,
        shed_error_pct=err_pct,
        rocof_hzps=result.rocof_at_trigger,
    )


def write_comparison_csv(path: str | Path, report: ComparisonReport) -> None:
    rows = (
        (
            _fmt(r.penetration),
            r.scheme,
            _fmt(r.nadir_hz),
            _fmt(r.shed_mw),
            _fmt(r.true_imbalance_mw),
            _fmt(r.shed_error_pct),
            _fmt(r.rocof_hzps),
        )
        for r in report.rows
    )
    _write_versioned(Path(path), "comparison", COMPARISON_COLUMNS, rows)


def read_comparison_csv(path: str | Path) -> ComparisonReport:
    raw = _open_versioned(Path(path), "comparison", COMPARISON_COLUMNS)
    rows = []
    for i, row in enumerate(raw):
        if len(row) != len(COMPARISON_COLUMNS):
            raise ValidationError(
                f"{path}: row {i + 1} has {len(row)} fields, expected "
                f"{len(COMPARISON_COLUMNS)}"
            )
        rows.append(
            ComparisonRow(
                penetration=float(row[0]),
                scheme=row[1],
                nadir_hz=float(row[2]),
                shed_mw=float(row[3]),
                true_imbalance_mw=float(row[4]),
                shed_error_pct=float(row[5]),
                rocof_hzps=float(row[6]),
            )
        )
    return ComparisonReport.from_rows(rows)


def summary_text(report: ComparisonReport) -> str:
    """Plain-text digest of a comparison report (a pure function of it)."""
    lines = ["scheme comparison", "=" * 17, ""]
    header = (
        f"{'penetration':>11}  {'scheme':<12}  {'nadir_hz':>9}  {'shed_mw':>10}  "
        f"{'true_mw':>10}  {'err_pct':>8}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for r in report.rows:
        lines.append(
            f"{r.penetration * 100:>10.4g}%  {r.scheme:<12}  {r.nadir_hz:>9.4f}  "
            f"{r.shed_mw:>10.1f}  {abs(r.true_imbalance_mw):>10.1f}  "
            f"{r.shed_error_pct:>8.2f}"
        )
    lines.append("")
    for s in report.summaries:
        lines.append(
            f"{s.scheme}: max |shed error| = {s.max_abs_shed_error_pct:.2f} %, "
            f"nadir spread = {s.nadir_spread_hz:.4f} Hz"
        )
    lines.append("")
    return "\n".join(lines)
