"""Command-line interface: run one scenario, sweep many, re-render reports.

Verbs:

* ``pvfreq run <scenario.yaml> -o <dir>`` — simulate once; write the trace
  CSV, metrics CSV, and a frequency-trace SVG.
* ``pvfreq sweep <sweep.yaml> -o <dir>`` — build and run a penetration
  sweep; per-scenario artifacts plus a comparison CSV, per-level overlay
  SVGs, a shed-error bar chart, and a plain-text summary.
* ``pvfreq report <dir>`` — re-render every SVG and the summary from the
  CSVs already in the directory, without re-simulating.

All SVGs and the summary are derived from the CSV files (never from
in-memory state), so ``report`` reproduces the sweep's plots byte for byte.

Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 numeric abort.
A sweep worker pool is used when more than one CPU is available; cap it with
the ``PVFREQ_WORKERS`` environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .errors import PvfreqError, SimulationAbort, ValidationError
from .plotting import render_frequency_svg, render_overlay_svg, render_shed_error_svg
from .reporting import (
    ComparisonReport,
    comparison_row,
    read_comparison_csv,
    read_trace_csv,
    summary_text,
    write_comparison_csv,
    write_metrics_csv,
    write_trace_csv,
)
from .scenario import (
    ScenarioConfig,
    build_sweep,
    load_scenario,
    load_sweep,
    scenario_label,
)
from .simulation import SCHEMES, SimResult, run_simulation

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

WORKERS_ENV = "PVFREQ_WORKERS"


def _worker_count(n_tasks: int) -> int:
    limit = os.cpu_count() or 1
    raw = os.environ.get(WORKERS_ENV)
    if raw is not None:
        try:
            cap = int(raw)
        except ValueError:
            raise ValidationError(
                f"{WORKERS_ENV} must be a positive integer, got {raw!r}"
            ) from None
        if cap < 1:
            raise ValidationError(
                f"{WORKERS_ENV} must be a positive integer, got {raw!r}"
            )
        limit = min(limit, cap)
    return max(1, min(limit, n_tasks))


def _run_scenario(config: ScenarioConfig) -> SimResult:
    """Worker body: run one scenario, tagging failures with its name."""
    try:
        return run_simulation(config)
    except PvfreqError as exc:
        label = config.name or "<unnamed>"
        raise type(exc)(f"scenario {label}: {exc}") from exc


def _pct(level: float) -> str:
    return f"{round(level * 100, 4):g}"


def _render_trace_svgs(out_dir: Path, names: list[str]) -> None:
    """Per-run frequency SVGs, each a pure function of its trace CSV."""
    for name in names:
        trace = read_trace_csv(out_dir / f"{name}_trace.csv")
        render_frequency_svg(
            out_dir / f"{name}_frequency.svg",
            trace.t_s,
            trace.frequency_hz,
            title=name,
        )
        print(f"wrote {out_dir / f'{name}_frequency.svg'}")


def _render_comparison_artifacts(out_dir: Path, report: ComparisonReport) -> None:
    """Overlays, bar chart, and text summary — all derived from CSVs."""
    (out_dir / "summary.txt").write_text(summary_text(report))
    print(f"wrote {out_dir / 'summary.txt'}")

    render_shed_error_svg(
        out_dir / "shed_error_bars.svg",
        [(r.penetration, r.scheme, r.shed_error_pct) for r in report.rows],
    )
    print(f"wrote {out_dir / 'shed_error_bars.svg'}")

    levels: list[float] = []
    for r in report.rows:
        if r.penetration not in levels:
            levels.append(r.penetration)
    for level in levels:
        series = []
        for r in report.rows:
            if r.penetration != level:
                continue
            name = scenario_label(level, r.scheme)
            trace_path = out_dir / f"{name}_trace.csv"
            if not trace_path.exists():
                raise FileNotFoundError(
                    f"missing trace artifact {trace_path} needed for the "
                    f"{_pct(level)}% overlay"
                )
            trace = read_trace_csv(trace_path)
            series.append((r.scheme, trace.t_s, trace.frequency_hz))
        path = out_dir / f"overlay_pen{_pct(level)}.svg"
        render_overlay_svg(
            path, series, title=f"frequency response at {_pct(level)}% penetration"
        )
        print(f"wrote {path}")


def cmd_run(args: argparse.Namespace) -> int:
    config = load_scenario(args.scenario)
    result = run_simulation(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = config.name or Path(args.scenario).stem
    write_trace_csv(out_dir / f"{name}_trace.csv", result.trace)
    print(f"wrote {out_dir / f'{name}_trace.csv'}")
    write_metrics_csv(out_dir / f"{name}_metrics.csv", result)
    print(f"wrote {out_dir / f'{name}_metrics.csv'}")
    _render_trace_svgs(out_dir, [name])
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_sweep(args.sweep)
    if args.seed is not None:
        spec = replace(spec, base=replace(spec.base, seed=args.seed))
    if args.schemes is not None:
        schemes = tuple(dict.fromkeys(s.strip() for s in args.schemes.split(",")))
        for s in schemes:
            if s not in SCHEMES:
                raise ValidationError(
                    f"--schemes: unknown scheme {s!r} (choose from {SCHEMES})"
                )
        spec = replace(spec, scheme_pair=schemes)
    scenarios = build_sweep(spec)

    workers = _worker_count(len(scenarios))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_scenario, scenarios))
    else:
        results = [_run_scenario(sc) for sc in scenarios]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = [
        (level, scheme)
        for level in spec.penetration_levels
        for scheme in spec.scheme_pair
    ]
    rows = []
    for (level, scheme), config, result in zip(pairs, scenarios, results):
        write_trace_csv(out_dir / f"{config.name}_trace.csv", result.trace)
        write_metrics_csv(out_dir / f"{config.name}_metrics.csv", result)
        print(f"wrote {out_dir / config.name}_{{trace,metrics}}.csv")
        rows.append(comparison_row(level, scheme, result))

    write_comparison_csv(out_dir / "comparison.csv", ComparisonReport.from_rows(rows))
    print(f"wrote {out_dir / 'comparison.csv'}")

    # Re-read what was just written so every rendered artifact is a pure
    # function of the CSV files; `report` then reproduces them bit-for-bit.
    report = read_comparison_csv(out_dir / "comparison.csv")
    _render_trace_svgs(out_dir, [sc.name for sc in scenarios])
    _render_comparison_artifacts(out_dir, report)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.dir)
    if not out_dir.is_dir():
        raise FileNotFoundError(f"{out_dir} is not a directory")
    trace_names = sorted(
        p.name[: -len("_trace.csv")] for p in out_dir.glob("*_trace.csv")
    )
    comparison_path = out_dir / "comparison.csv"
    if not trace_names and not comparison_path.exists():
        raise FileNotFoundError(
            f"{out_dir} holds no renderable artifacts; expected at least one of: "
            f"<name>_trace.csv, comparison.csv"
        )
    _render_trace_svgs(out_dir, trace_names)
    if comparison_path.exists():
        _render_comparison_artifacts(out_dir, read_comparison_csv(comparison_path))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvfreq",
        description="Grid frequency-response simulation with irradiance-aware "
        "distributed demand response.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario file")
    p_run.add_argument("scenario", help="scenario YAML file")
    p_run.add_argument("-o", "--out", required=True, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a penetration sweep")
    p_sweep.add_argument("sweep", help="sweep-spec YAML file")
    p_sweep.add_argument("-o", "--out", required=True, help="output directory")
    p_sweep.add_argument(
        "--schemes",
        default=None,
        help="comma-separated subset of schemes to run (default: as configured)",
    )
    p_sweep.add_argument(
        "--seed", type=int, default=None, help="override the base scenario seed"
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = sub.add_parser(
        "report", help="re-render SVGs and the summary from existing CSVs"
    )
    p_report.add_argument("dir", help="directory holding sweep/run artifacts")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
