"""Aggregate frequency-dynamics simulation with relay-driven load shedding.

The grid is a single equivalent bus.  Frequency obeys the swing equation

    df/dt = f_n * P_net / (2 * H(t) * P_system(t))

with ``P_net = -loss + governor + shed - D * (f - f_n)/f_n * P_system``.
System inertia ``H(t)`` is recomputed every step from the instantaneous PV
output (PV displaces synchronous generation but contributes no rotating
mass), so the same contingency produces faster frequency decay at higher PV
penetration.

A single under-frequency relay arms on the first crossing below its
threshold, measures ROCOF over a short trailing window, sizes the shed
amount under the configured scheme, and actuates it as one step change after
a breaker delay expressed in cycles:

* ``proposed`` — every substation evaluates its own shed amount from purely
  local measurements (see :mod:`pvfreq.estimation`) and the relay actuates
  their sum.
* ``conventional`` — one system-wide amount computed with an inertia value
  frozen at a benchmark PV penetration, regardless of actual conditions.

Integration is fixed-step classical Runge-Kutta (RK4).  Within a step the
slowly-varying inputs (loss, inertia, system load, shed) are frozen, which
keeps the per-step problem autonomous and the integrator at full order
between event boundaries.  Events (contingency onset, relay arming,
actuation) are applied only at step boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from .errors import SimulationAbort, ValidationError
from .estimation import (
    DrDecision,
    SystemParams,
    decide_dr,
    imbalance_expanded,
    imbalance_from_rocof,
)
from .pv import DEFAULT_AVERAGING_WINDOW_S, PvCurve

if TYPE_CHECKING:  # pragma: no cover
    from .estimation import Substation
    from .scenario import ScenarioConfig

#: Hard stability guard for the explicit integrator.
MAX_STEP_S = 0.01

#: Abort band: a trajectory leaving f_n +/- this many Hz is numerically or
#: physically implausible for the modeled class of events.
ABORT_BAND_HZ = 5.0

#: Slack when comparing simulation times against event times, to absorb
#: accumulated floating-point error in the time grid.
_EVENT_TOL_S = 1e-9

SCHEMES = ("proposed", "conventional")


@dataclass(frozen=True)
class GovernorParams:
    """First-order-lag droop governor with deadband and finite headroom."""

    droop: float  # per-unit (0.05 = 5 %)
    deadband: float  # Hz, symmetric about f_n
    time_constant: float  # s
    headroom: float  # MW; 0 disables the governor entirely

    def __post_init__(self) -> None:
        if self.droop <= 0:
            raise ValidationError(f"droop must be > 0, got {self.droop}")
        if self.deadband < 0:
            raise ValidationError(f"deadband must be >= 0, got {self.deadband}")
        if self.time_constant <= 0:
            raise ValidationError(
                f"time_constant must be > 0, got {self.time_constant}"
            )
        if self.headroom < 0:
            raise ValidationError(f"headroom must be >= 0, got {self.headroom}")


@dataclass(frozen=True)
class RelayConfig:
    """Under-frequency relay: threshold, breaker delay in cycles, scheme."""

    threshold: float  # Hz
    delay_cycles: float
    scheme: str

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValidationError(f"threshold must be > 0 Hz, got {self.threshold}")
        if self.delay_cycles < 0:
            raise ValidationError(
                f"delay_cycles must be >= 0, got {self.delay_cycles}"
            )
        if self.scheme not in SCHEMES:
            raise ValidationError(
                f"scheme must be one of {SCHEMES}, got {self.scheme!r}"
            )


@dataclass(frozen=True)
class Contingency:
    """A generation trip: at ``time`` seconds, ``generation_loss`` MW drops."""

    time: float  # s
    generation_loss: float  # MW

    def __post_init__(self) -> None:
        if self.generation_loss <= 0:
            raise ValidationError(
                f"generation_loss must be > 0, got {self.generation_loss}"
            )
        if self.time < 0:
            raise ValidationError(f"contingency time must be >= 0, got {self.time}")


@dataclass(frozen=True)
class GridState:
    """Instantaneous simulation state, including relay bookkeeping."""

    t: float
    frequency: float  # Hz
    governor_response: float  # MW
    shed_total: float  # MW
    pending_dr: tuple[float, DrDecision] | None = None  # (trigger_time, decision)
    triggered: bool = False

    def __post_init__(self) -> None:
        if self.shed_total < 0:
            raise ValidationError(f"shed_total must be >= 0, got {self.shed_total}")
        if self.frequency <= 0:
            raise ValidationError(f"frequency must be > 0, got {self.frequency}")
        if self.pending_dr is not None and not self.triggered:
            raise ValidationError(
                "pending_dr may only be set after the relay has triggered"
            )


@dataclass(frozen=True)
class TriggerEvent:
    """Relay arming record: when it armed and when it will actuate."""

    armed_at: float
    actuate_at: float


@dataclass(frozen=True)
class SystemSnapshot:
    """Per-step frozen inputs for :func:`step`.

    ``h_system`` and ``p_system`` are the instantaneous inertia and total
    load; ``generation_loss`` is the MW currently tripped (0 before the
    contingency).
    """

    params: SystemParams
    governor: GovernorParams
    damping: float  # per-unit load-frequency sensitivity
    p_system: float  # MW
    h_system: float  # s
    generation_loss: float = 0.0  # MW

    def __post_init__(self) -> None:
        if self.damping < 0:
            raise ValidationError(f"damping must be >= 0, got {self.damping}")
        if self.p_system <= 0:
            raise ValidationError(f"p_system must be > 0, got {self.p_system}")
        if self.h_system <= 0:
            raise ValidationError(f"h_system must be > 0, got {self.h_system}")
        if self.generation_loss < 0:
            raise ValidationError(
                f"generation_loss must be >= 0, got {self.generation_loss}"
            )


@dataclass
class Trace:
    """Column-oriented simulation trace."""

    t_s: np.ndarray
    frequency_hz: np.ndarray
    governor_mw: np.ndarray
    shed_mw: np.ndarray

    def __len__(self) -> int:
        return int(self.t_s.size)

    def rows(self):
        """Iterate ``(t, frequency, governor_response, shed_total)`` tuples."""
        return zip(self.t_s, self.frequency_hz, self.governor_mw, self.shed_mw)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            np.array_equal(self.t_s, other.t_s)
            and np.array_equal(self.frequency_hz, other.frequency_hz)
            and np.array_equal(self.governor_mw, other.governor_mw)
            and np.array_equal(self.shed_mw, other.shed_mw)
        )


def _settling_frequency(frequency_hz: np.ndarray) -> float:
    """Mean frequency over the final tenth of the trace."""
    n = frequency_hz.size
    k = max(1, -(-n // 10))  # ceil(n / 10)
    return float(frequency_hz[n - k :].mean())


@dataclass
class SimResult:
    """Outcome of one simulation run.

    ``true_imbalance_at_trigger`` is the net power balance (MW, negative for
    a deficit) at the instant the relay armed, i.e. the residual the shed
    decision should cancel; ``estimated_imbalance`` is the global
    ROCOF-based estimate formed at the same instant.  All trigger-dependent
    fields are NaN when the relay never armed.
    """

    trace: Trace
    nadir: float  # Hz
    settling_frequency: float  # Hz
    shed_total: float  # MW
    true_imbalance_at_trigger: float  # MW, signed
    estimated_imbalance: float  # MW, signed
    rocof_at_trigger: float  # Hz/s
    armed_at: float = float("nan")  # s
    actuated_at: float = float("nan")  # s
    decision: DrDecision | None = None

    def __post_init__(self) -> None:
        if len(self.trace) == 0:
            raise ValidationError("trace must be non-empty")
        lowest = float(self.trace.frequency_hz.min())
        if self.nadir != lowest:
            raise ValidationError(
                f"nadir {self.nadir} Hz does not match trace minimum {lowest} Hz"
            )
        settling = _settling_frequency(self.trace.frequency_hz)
        if self.settling_frequency != settling:
            raise ValidationError(
                f"settling_frequency {self.settling_frequency} Hz does not match "
                f"the final-10% trace mean {settling} Hz"
            )
        if self.shed_total < 0:
            raise ValidationError(f"shed_total must be >= 0, got {self.shed_total}")


def _governor_demand(
    f: float, f_n: float, p_sys: float, droop: float, deadband: float, headroom: float
) -> float:
    """Deadbanded droop demand in MW, clipped to +/- headroom."""
    if headroom <= 0.0:
        return 0.0
    df = f - f_n
    if df > deadband:
        x = df - deadband
    elif df < -deadband:
        x = df + deadband
    else:
        return 0.0
    demand = -x / (f_n * droop) * p_sys
    if demand > headroom:
        return headroom
    if demand < -headroom:
        return -headroom
    return demand


def _rk4_step(
    f: float,
    g: float,
    dt: float,
    f_n: float,
    h: float,
    p_sys: float,
    loss: float,
    shed: float,
    damping: float,
    droop: float,
    deadband: float,
    tc: float,
    headroom: float,
) -> tuple[float, float]:
    """One classical RK4 step of the (frequency, governor) pair.

    All inputs besides the two state variables are held constant across the
    substeps; this is the shared kernel behind both :func:`step` and
    :func:`run_simulation`, so single-step tests exercise exactly the
    integrator the engine uses.
    """
    k = f_n / (2.0 * h * p_sys)
    dpu = damping * p_sys / f_n
    base = shed - loss
    inv_tc = 1.0 / tc

    k1f = k * (base + g - dpu * (f - f_n))
    k1g = (_governor_demand(f, f_n, p_sys, droop, deadband, headroom) - g) * inv_tc

    f2 = f + 0.5 * dt * k1f
    g2 = g + 0.5 * dt * k1g
    k2f = k * (base + g2 - dpu * (f2 - f_n))
    k2g = (_governor_demand(f2, f_n, p_sys, droop, deadband, headroom) - g2) * inv_tc

    f3 = f + 0.5 * dt * k2f
    g3 = g + 0.5 * dt * k2g
    k3f = k * (base + g3 - dpu * (f3 - f_n))
    k3g = (_governor_demand(f3, f_n, p_sys, droop, deadband, headroom) - g3) * inv_tc

    f4 = f + dt * k3f
    g4 = g + dt * k3g
    k4f = k * (base + g4 - dpu * (f4 - f_n))
    k4g = (_governor_demand(f4, f_n, p_sys, droop, deadband, headroom) - g4) * inv_tc

    sixth = dt / 6.0
    return (
        f + sixth * (k1f + 2.0 * (k2f + k3f) + k4f),
        g + sixth * (k1g + 2.0 * (k2g + k3g) + k4g),
    )


def step(state: GridState, snapshot: SystemSnapshot, dt: float) -> GridState:
    """Advance the dynamic state by one integration step.

    Relay bookkeeping (``pending_dr``, ``triggered``, ``shed_total``) passes
    through unchanged; event handling happens between steps, not inside
    them.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if dt > MAX_STEP_S:
        raise ValidationError(
            f"dt {dt} s exceeds the explicit-integration guard of {MAX_STEP_S} s"
        )
    gov = snapshot.governor
    f, g = _rk4_step(
        state.frequency,
        state.governor_response,
        dt,
        snapshot.params.f_n,
        snapshot.h_system,
        snapshot.p_system,
        snapshot.generation_loss,
        state.shed_total,
        snapshot.damping,
        gov.droop,
        gov.deadband,
        gov.time_constant,
        gov.headroom,
    )
    if not abs(f - snapshot.params.f_n) <= ABORT_BAND_HZ:
        raise SimulationAbort(
            f"frequency diverged to {f} Hz at t={state.t + dt} s "
            f"(outside f_n +/- {ABORT_BAND_HZ} Hz)"
        )
    return replace(state, t=state.t + dt, frequency=f, governor_response=g)


def measure_rocof(
    times: np.ndarray, frequencies: np.ndarray, t_trigger: float, window: float = 0.25
) -> float:
    """Least-squares frequency slope over the trailing ``window`` seconds.

    A fitted slope rejects zero-mean measurement noise far better than a
    two-point difference over the same span.
    """
    if window <= 0:
        raise ValidationError(f"window must be > 0, got {window}")
    times = np.asarray(times, dtype=float)
    frequencies = np.asarray(frequencies, dtype=float)
    mask = (times >= t_trigger - window - _EVENT_TOL_S) & (
        times <= t_trigger + _EVENT_TOL_S
    )
    t = times[mask]
    f = frequencies[mask]
    if t.size < 2:
        raise ValidationError(
            f"window underpopulated: {t.size} sample(s) in the {window} s "
            f"window ending at t={t_trigger} s (need >= 2)"
        )
    tc = t - t.mean()
    return float((tc * (f - f.mean())).sum() / (tc * tc).sum())


def relay_check(
    state: GridState, relay: RelayConfig, f_n: float
) -> TriggerEvent | None:
    """Arm the relay on the first crossing below threshold.

    Returns the arming event (with its actuation time ``delay_cycles / f_n``
    seconds later) or None if already armed or still above threshold.  The
    caller freezes the shed amount using the ROCOF measured at arming.
    """
    if state.triggered:
        return None
    if state.frequency < relay.threshold:
        return TriggerEvent(
            armed_at=state.t, actuate_at=state.t + relay.delay_cycles / f_n
        )
    return None


def proposed_dr_total(
    substations: list["Substation"],
    params: SystemParams,
    curve: PvCurve,
    rocof: float,
    t: float,
) -> DrDecision:
    """Sum of the per-substation locally-computed shed amounts."""
    return decide_dr(substations, params, curve, rocof, t)


def conventional_ufls_total(
    params: SystemParams, benchmark_h: float, rocof: float, system_load: float
) -> float:
    """Shed magnitude under the frozen-inertia benchmark scheme.

    Identical to the ROCOF imbalance formula, except the inertia is the
    value at the benchmark PV penetration rather than the actual one — that
    frozen assumption is precisely what makes the conventional scheme over-
    or under-shed away from the benchmark operating point.
    """
    return abs(imbalance_from_rocof(params, benchmark_h, rocof, system_load))


def _system_series(
    config: "ScenarioConfig", ts: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """True total PV output and total system load at each grid time.

    Substation net loads are constant by definition (they are the measured
    quantity), so gross system load inherits the time variation of the
    distributed PV it masks.
    """
    curve = config.curve
    pv = np.zeros_like(ts)
    p_sys = np.zeros_like(ts)
    for plant in config.plants:
        r = plant.irradiance.window_mean_at(ts, DEFAULT_AVERAGING_WINDOW_S)
        pv += plant.capacity * curve.per_unit_many(r)
    for sub in config.substations:
        p_sys += sub.net_load
        if sub.dist_pv_capacity > 0:
            r = sub.irradiance.window_mean_at(ts, DEFAULT_AVERAGING_WINDOW_S)
            out = sub.dist_pv_capacity * curve.per_unit_many(r)
            pv += out
            p_sys += out
    return pv, p_sys


def run_simulation(config: "ScenarioConfig") -> SimResult:
    """Run one scenario end to end and return its trace and metrics.

    Deterministic: the result is a pure function of the (already seeded)
    scenario contents.
    """
    from .scenario import effective_substations  # local import breaks the cycle

    config.validate()
    params = config.system
    gov = config.governor
    dt = config.sim.dt_s
    f_n = params.f_n
    n = int(round(config.sim.horizon_s / dt))
    ts = dt * np.arange(n + 1)

    pv_true, p_sys_arr = _system_series(config, ts)
    if np.any(p_sys_arr <= 0):
        raise ValidationError("nonpositive system load within the horizon")
    mu = pv_true / p_sys_arr
    if np.any(mu > 1.0):
        t_bad = float(ts[np.argmax(mu > 1.0)])
        raise ValidationError(f"PV output exceeds load at t={t_bad} s")
    h_arr = params.h_g0 * (1.0 - mu) + params.h_l0
    loss_arr = np.where(
        ts >= config.contingency.time - _EVENT_TOL_S,
        config.contingency.generation_loss,
        0.0,
    )

    sensed_subs = effective_substations(config)

    freq = np.empty(n + 1)
    gov_arr = np.empty(n + 1)
    shed_arr = np.empty(n + 1)
    f = f_n
    g = 0.0
    shed = 0.0
    freq[0] = f
    gov_arr[0] = g

    armed = False
    actuated = False
    armed_at = float("nan")
    actuate_at = float("nan")
    rocof_meas = float("nan")
    est_imb = float("nan")
    true_imb = float("nan")
    decision: DrDecision | None = None

    damping = config.damping
    threshold = config.relay.threshold
    delay_s = config.relay.delay_cycles / f_n
    droop, deadband, tc, headroom = gov.droop, gov.deadband, gov.time_constant, gov.headroom

    for i in range(n + 1):
        t = ts[i]
        if armed and not actuated and t >= actuate_at - _EVENT_TOL_S:
            shed += decision.total
            actuated = True
        if not armed and f < threshold:
            armed = True
            armed_at = t
            rocof_meas = measure_rocof(
                ts[: i + 1], freq[: i + 1], t, config.sim.rocof_window_s
            )
            p_now = float(p_sys_arr[i])
            est_imb = imbalance_expanded(params, rocof_meas, p_now, float(pv_true[i]))
            true_imb = (
                -float(loss_arr[i]) + g + shed - damping * (f - f_n) / f_n * p_now
            )
            if config.relay.scheme == "proposed":
                decision = proposed_dr_total(
                    sensed_subs, params, config.curve, rocof_meas, t
                )
            else:
                total = conventional_ufls_total(
                    params, config.benchmark_h, rocof_meas, p_now
                )
                decision = DrDecision((("system", total),), total)
            if delay_s == 0.0:
                shed += decision.total
                actuated = True
                actuate_at = t
            else:
                actuate_at = t + delay_s
        shed_arr[i] = shed
        if i == n:
            break
        f, g = _rk4_step(
            f,
            g,
            dt,
            f_n,
            float(h_arr[i]),
            float(p_sys_arr[i]),
            float(loss_arr[i]),
            shed,
            damping,
            droop,
            deadband,
            tc,
            headroom,
        )
        if not abs(f - f_n) <= ABORT_BAND_HZ:
            raise SimulationAbort(
                f"frequency diverged to {f} Hz at t={ts[i + 1]} s "
                f"(outside f_n +/- {ABORT_BAND_HZ} Hz)"
            )
        freq[i + 1] = f
        gov_arr[i + 1] = g

    trace = Trace(ts, freq, gov_arr, shed_arr)
    return SimResult(
        trace=trace,
        nadir=float(freq.min()),
        settling_frequency=_settling_frequency(freq),
        shed_total=shed,
        true_imbalance_at_trigger=true_imb,
        estimated_imbalance=est_imb,
        rocof_at_trigger=rocof_meas,
        armed_at=armed_at,
        actuated_at=actuate_at if actuated else float("nan"),
        decision=decision,
    )
