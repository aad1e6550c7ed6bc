"""Solar-irradiance handling and PV output conversion.

Raw irradiance samples are smoothed with a trailing moving average (the
default window is ten minutes, wide enough to suppress fast-moving-cloud
transients) and mapped to per-unit plant output through a piecewise-linear
output curve that is zero at zero irradiance and saturates at the plant's
rated irradiance.  Plant power is then simply

    P(t) = capacity * curve(mean of irradiance over (t - window, t])

All operations here are pure functions of their inputs and safe to call
concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

#: Physical plausibility ceiling for ground-level irradiance.  Values above
#: this almost always mean a kW/m² series was loaded as W/m².
MAX_IRRADIANCE_WM2 = 1500.0

#: Trailing averaging window applied to raw irradiance before it enters any
#: output or estimation formula.
DEFAULT_AVERAGING_WINDOW_S = 600.0

_SPACING_RTOL = 1e-9


@dataclass
class IrradianceSeries:
    """Uniformly sampled irradiance time series in W/m².

    Invariants, enforced at construction: times strictly increasing with
    uniform spacing equal to ``sample_interval``, and every value within
    [0, 1500] W/m².  An empty series is representable (so that loaders can
    report "no samples" at use time) but unusable.
    """

    times: np.ndarray
    values: np.ndarray
    sample_interval: float
    _cumsum: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.values.ndim != 1:
            raise ValidationError("irradiance series must be one-dimensional")
        if self.times.shape != self.values.shape:
            raise ValidationError(
                f"times ({self.times.size}) and values ({self.values.size}) differ in length"
            )
        if self.sample_interval <= 0:
            raise ValidationError(f"sample_interval must be > 0, got {self.sample_interval}")
        if self.times.size > 1:
            spacing = np.diff(self.times)
            if np.any(spacing <= 0):
                raise ValidationError("sample times must be strictly increasing")
            tol = _SPACING_RTOL * max(abs(self.sample_interval), 1.0)
            if np.any(np.abs(spacing - self.sample_interval) > tol):
                worst = float(spacing[np.argmax(np.abs(spacing - self.sample_interval))])
                raise ValidationError(
                    f"non-uniform sample spacing: found {worst} s, declared "
                    f"{self.sample_interval} s"
                )
        if self.values.size:
            if np.any(self.values < 0):
                raise ValidationError("irradiance values must be >= 0")
            if np.any(self.values > MAX_IRRADIANCE_WM2):
                worst = float(self.values.max())
                raise ValidationError(
                    f"irradiance {worst} W/m2 exceeds plausibility bound "
                    f"{MAX_IRRADIANCE_WM2} W/m2 (kW/m2 loaded as W/m2?)"
                )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IrradianceSeries):
            return NotImplemented
        return (
            self.sample_interval == other.sample_interval
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    @classmethod
    def from_samples(
        cls, samples: list[tuple[float, float]], sample_interval: float
    ) -> "IrradianceSeries":
        times = np.array([t for t, _ in samples], dtype=float)
        values = np.array([v for _, v in samples], dtype=float)
        return cls(times, values, sample_interval)

    @classmethod
    def uniform(cls, t0: float, sample_interval: float, values) -> "IrradianceSeries":
        values = np.asarray(values, dtype=float)
        times = t0 + sample_interval * np.arange(values.size)
        return cls(times, values, sample_interval)

    @classmethod
    def constant(
        cls, level: float, duration: float, sample_interval: float = 1.0, t0: float = 0.0
    ) -> "IrradianceSeries":
        n = int(np.floor(duration / sample_interval)) + 1
        return cls.uniform(t0, sample_interval, np.full(n, float(level)))

    @classmethod
    def from_csv(cls, path: str | Path) -> "IrradianceSeries":
        """Load a series from a CSV with header ``time_s,irradiance_wm2``."""
        path = Path(path)
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != ["time_s", "irradiance_wm2"]:
                raise ValidationError(
                    f"{path}: expected CSV header 'time_s,irradiance_wm2', got {header}"
                )
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        if not rows:
            raise ValidationError(f"{path}: no samples")
        times = np.array([r[0] for r in rows])
        if times.size > 1:
            interval = float(times[1] - times[0])
        else:
            interval = 1.0
        return cls(times, np.array([r[1] for r in rows]), interval)

    def _prefix_sums(self) -> np.ndarray:
        if self._cumsum is None or self._cumsum.size != self.values.size + 1:
            self._cumsum = np.concatenate(([0.0], np.cumsum(self.values)))
        return self._cumsum

    def window_mean_at(self, ts: np.ndarray, window: float) -> np.ndarray:
        """Vectorised trailing-window mean at each query time in ``ts``.

        Shared kernel behind :func:`moving_average`; query times must all be
        at or after the first sample and within the series' coverage.
        """
        if window <= 0:
            raise ValidationError(f"window must be > 0, got {window}")
        if self.values.size == 0:
            raise ValidationError("no samples")
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < self.times[0]):
            bad = float(ts[ts < self.times[0]][0])
            raise ValidationError(
                f"time out of range: t={bad} precedes first sample at {self.times[0]}"
            )
        end = self.times[-1] + self.sample_interval
        if np.any(ts > end):
            bad = float(ts[ts > end][0])
            raise ValidationError(
                f"time out of range: t={bad} is past series coverage ending at {end}"
            )
        hi = np.searchsorted(self.times, ts, side="right")
        lo = np.searchsorted(self.times, ts - window, side="right")
        if np.any(hi <= lo):
            bad = float(ts[hi <= lo][0])
            raise ValidationError(f"no samples in window ending at t={bad}")
        csum = self._prefix_sums()
        return (csum[hi] - csum[lo]) / (hi - lo)


def moving_average(
    series: IrradianceSeries, t: float, window: float = DEFAULT_AVERAGING_WINDOW_S
) -> float:
    """Mean irradiance over the trailing window ``(t - window, t]``.

    Early in a series, when the full window is not yet populated, the mean is
    taken over whatever samples exist (warm-up rule), so simulations can start
    at t=0 without pre-roll data.
    """
    return float(series.window_mean_at(np.array([t]), window)[0])


@dataclass(frozen=True)
class PvCurve:
    """Per-unit PV output versus averaged irradiance.

    Piecewise linear through ``knots`` (irradiance W/m² -> per-unit output),
    pinned to 0 at zero irradiance and to 1 at and above ``rated_irradiance``.
    """

    rated_irradiance: float
    knots: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.rated_irradiance <= 0:
            raise ValidationError(f"rated_irradiance must be > 0, got {self.rated_irradiance}")
        knots = tuple((float(x), float(y)) for x, y in self.knots)
        object.__setattr__(self, "knots", knots)
        if len(knots) < 2:
            raise ValidationError("curve needs at least 2 knots")
        xs = [x for x, _ in knots]
        ys = [y for _, y in knots]
        if knots[0] != (0.0, 0.0):
            raise ValidationError(f"first knot must be (0, 0), got {knots[0]}")
        if xs[-1] != self.rated_irradiance or ys[-1] != 1.0:
            raise ValidationError(
                f"last knot must be (rated_irradiance, 1.0) = ({self.rated_irradiance}, 1.0), "
                f"got {knots[-1]}"
            )
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValidationError("knot irradiances must be strictly increasing")
        if any(b < a for a, b in zip(ys, ys[1:])):
            raise ValidationError("curve must be monotone nondecreasing")
        if any(y < 0 or y > 1 for y in ys):
            raise ValidationError("per-unit outputs must lie in [0, 1]")

    @classmethod
    def linear(cls, rated_irradiance: float = 1000.0) -> "PvCurve":
        """Single-segment default: 0 at 0, 1 at the rated irradiance."""
        return cls(rated_irradiance, ((0.0, 0.0), (rated_irradiance, 1.0)))

    def per_unit_many(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValidationError("negative irradiance")
        xs = np.array([x for x, _ in self.knots])
        ys = np.array([y for _, y in self.knots])
        return np.interp(r, xs, ys)


def pv_per_unit_output(curve: PvCurve, r_bar: float) -> float:
    """Per-unit PV output for an averaged irradiance value."""
    return float(curve.per_unit_many(np.array([r_bar]))[0])


@dataclass(frozen=True)
class PVPlant:
    """Utility-scale PV plant: installed capacity plus its local irradiance."""

    id: str
    capacity: float  # MW installed
    irradiance: IrradianceSeries

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("plant id must be non-empty")
        if self.capacity <= 0:
            raise ValidationError(f"plant {self.id}: capacity must be > 0, got {self.capacity}")


def plant_output(
    plant: PVPlant,
    curve: PvCurve,
    t: float,
    window: float = DEFAULT_AVERAGING_WINDOW_S,
) -> float:
    """Plant power in MW at time t: capacity times the curve applied to the
    windowed irradiance average."""
    r_bar = moving_average(plant.irradiance, t, window)
    return plant.capacity * pv_per_unit_output(curve, r_bar)
