"""Swing-equation integration, ROCOF measurement, and relay behaviour."""

import dataclasses
import math

import numpy as np
import pytest

from pvfreq import (
    ABORT_BAND_HZ,
    MAX_STEP_S,
    Contingency,
    GovernorParams,
    GridState,
    RelayConfig,
    SimResult,
    SimulationAbort,
    SystemParams,
    SystemSnapshot,
    Trace,
    ValidationError,
    conventional_ufls_total,
    measure_rocof,
    relay_check,
    run_simulation,
    step,
)
from pvfreq.estimation import DrDecision
from conftest import bare_scenario

PARAMS = SystemParams(h_g0=5.0, h_l0=1.0, f_n=60.0, total_installed_pv=0.0)
GOV_OFF = GovernorParams(droop=0.05, deadband=0.036, time_constant=8.0, headroom=0.0)


def snapshot(*, damping=0.0, loss=0.0, h=6.0, p=60000.0, governor=GOV_OFF):
    return SystemSnapshot(
        params=PARAMS,
        governor=governor,
        damping=damping,
        p_system=p,
        h_system=h,
        generation_loss=loss,
    )


def idle_state(f: float = 60.0) -> GridState:
    return GridState(t=0.0, frequency=f, governor_response=0.0, shed_total=0.0)


# ------------------------------------------------------------------ invariants


def test_governor_params_validation():
    with pytest.raises(ValidationError, match="droop"):
        GovernorParams(droop=0.0, deadband=0.036, time_constant=8.0, headroom=100.0)
    with pytest.raises(ValidationError, match="deadband"):
        GovernorParams(droop=0.05, deadband=-0.1, time_constant=8.0, headroom=100.0)
    with pytest.raises(ValidationError, match="time_constant"):
        GovernorParams(droop=0.05, deadband=0.036, time_constant=0.0, headroom=100.0)
    with pytest.raises(ValidationError, match="headroom"):
        GovernorParams(droop=0.05, deadband=0.036, time_constant=8.0, headroom=-1.0)


def test_relay_config_validation():
    RelayConfig(threshold=59.3, delay_cycles=40, scheme="proposed")
    with pytest.raises(ValidationError, match="threshold"):
        RelayConfig(threshold=0.0, delay_cycles=40, scheme="proposed")
    with pytest.raises(ValidationError, match="delay_cycles"):
        RelayConfig(threshold=59.3, delay_cycles=-1, scheme="proposed")
    with pytest.raises(ValidationError, match="scheme"):
        RelayConfig(threshold=59.3, delay_cycles=40, scheme="adaptive")


def test_contingency_validation():
    Contingency(time=0.0, generation_loss=100.0)
    with pytest.raises(ValidationError, match="generation_loss"):
        Contingency(time=5.0, generation_loss=0.0)
    with pytest.raises(ValidationError, match="time"):
        Contingency(time=-1.0, generation_loss=100.0)


def test_grid_state_validation():
    with pytest.raises(ValidationError, match="shed_total"):
        GridState(t=0.0, frequency=60.0, governor_response=0.0, shed_total=-1.0)
    with pytest.raises(ValidationError, match="frequency"):
        GridState(t=0.0, frequency=0.0, governor_response=0.0, shed_total=0.0)


def test_grid_state_pending_requires_triggered():
    decision = DrDecision((("a", 10.0),), 10.0)
    GridState(
        t=1.0, frequency=59.0, governor_response=0.0, shed_total=0.0,
        pending_dr=(1.0, decision), triggered=True,
    )
    with pytest.raises(ValidationError, match="triggered"):
        GridState(
            t=1.0, frequency=59.0, governor_response=0.0, shed_total=0.0,
            pending_dr=(1.0, decision), triggered=False,
        )


def test_system_snapshot_validation():
    with pytest.raises(ValidationError, match="damping"):
        snapshot(damping=-0.1)
    with pytest.raises(ValidationError, match="p_system"):
        snapshot(p=0.0)
    with pytest.raises(ValidationError, match="h_system"):
        snapshot(h=0.0)
    with pytest.raises(ValidationError, match="generation_loss"):
        snapshot(loss=-5.0)


def test_sim_result_consistency_enforced():
    t = np.arange(10.0)
    f = 60.0 - 0.01 * t
    trace = Trace(t, f, np.zeros(10), np.zeros(10))
    nadir = float(f.min())
    settling = float(f[-1:].mean())  # final tenth of 10 samples is 1 sample
    SimResult(
        trace=trace, nadir=nadir, settling_frequency=settling, shed_total=0.0,
        true_imbalance_at_trigger=float("nan"), estimated_imbalance=float("nan"),
        rocof_at_trigger=float("nan"),
    )
    with pytest.raises(ValidationError, match="nadir"):
        SimResult(
            trace=trace, nadir=nadir - 0.001, settling_frequency=settling,
            shed_total=0.0, true_imbalance_at_trigger=float("nan"),
            estimated_imbalance=float("nan"), rocof_at_trigger=float("nan"),
        )
    with pytest.raises(ValidationError, match="settling"):
        SimResult(
            trace=trace, nadir=nadir, settling_frequency=settling + 0.1,
            shed_total=0.0, true_imbalance_at_trigger=float("nan"),
            estimated_imbalance=float("nan"), rocof_at_trigger=float("nan"),
        )


def test_trace_len_and_rows():
    trace = Trace(np.array([0.0, 1.0]), np.array([60.0, 59.9]),
                  np.array([0.0, 5.0]), np.array([0.0, 0.0]))
    assert len(trace) == 2
    assert list(trace.rows())[1] == (1.0, 59.9, 5.0, 0.0)


# ------------------------------------------------------------------- stepping


def test_step_fixed_point_at_nominal():
    """Balanced system at nominal frequency stays put exactly."""
    state = idle_state()
    out = step(state, snapshot(), 0.001)
    assert out.frequency == 60.0
    assert out.governor_response == 0.0
    assert out.t == pytest.approx(0.001)


def test_step_rejects_oversized_dt():
    with pytest.raises(ValidationError, match="exceeds"):
        step(idle_state(), snapshot(), MAX_STEP_S * 1.5)
    with pytest.raises(ValidationError, match="dt"):
        step(idle_state(), snapshot(), 0.0)


def test_step_preserves_relay_bookkeeping():
    decision = DrDecision((("a", 10.0),), 10.0)
    state = GridState(
        t=0.0, frequency=59.0, governor_response=0.0, shed_total=10.0,
        pending_dr=(0.0, decision), triggered=True,
    )
    out = step(state, snapshot(loss=100.0), 0.001)
    assert out.pending_dr == state.pending_dr
    assert out.triggered is True
    assert out.shed_total == 10.0


def test_step_direction_follows_deficit():
    down = step(idle_state(), snapshot(loss=3000.0), 0.005)
    assert down.frequency < 60.0
    surplus = GridState(t=0.0, frequency=60.0, governor_response=0.0, shed_total=3000.0)
    up = step(surplus, snapshot(loss=0.0), 0.005)
    assert up.frequency > 60.0


def test_step_aborts_outside_band():
    state = idle_state(60.0 - ABORT_BAND_HZ + 1e-6)
    with pytest.raises(SimulationAbort, match="diverged"):
        # enormous deficit on a tiny system: one step crosses the band
        step(state, snapshot(loss=50000.0, h=0.1, p=1000.0), 0.01)


def test_step_matches_linear_ramp():
    """Governor off, no damping: df/dt = f_n * P_net / (2 H P) exactly."""
    state = idle_state()
    snap = snapshot(loss=3000.0)
    expected_slope = -3000.0 * 60.0 / (2.0 * 6.0 * 60000.0)
    for _ in range(100):
        state = step(state, snap, 0.001)
    assert state.frequency == pytest.approx(60.0 + expected_slope * 0.1, rel=1e-12)


def test_step_matches_exponential_decay():
    """With damping the linear ODE has a closed-form exponential solution."""
    damping = 1.0
    loss = 3000.0
    snap = snapshot(damping=damping, loss=loss)
    d_mw_per_hz = damping * 60000.0 / 60.0  # 1000 MW/Hz
    lam = 60.0 / (2.0 * 6.0 * 60000.0) * d_mw_per_hz
    state = idle_state()
    dt = 0.001
    for _ in range(2000):
        state = step(state, snap, dt)
    expected = 60.0 - (loss / d_mw_per_hz) * (1.0 - math.exp(-lam * 2.0))
    assert state.frequency == pytest.approx(expected, abs=1e-9)


# ------------------------------------------------------------ rocof and relay


def test_measure_rocof_exact_ramp():
    t = np.arange(0.0, 3.0, 0.001)
    f = 60.0 - 0.5 * t
    assert measure_rocof(t, f, 2.0) == pytest.approx(-0.5, rel=1e-12)


def test_measure_rocof_constant_is_zero():
    t = np.arange(0.0, 1.0, 0.001)
    f = np.full_like(t, 59.8)
    assert measure_rocof(t, f, 0.9) == pytest.approx(0.0, abs=1e-12)


def test_measure_rocof_rejects_noise():
    """±1 mHz measurement noise moves the fitted slope by far less than
    a two-point difference would."""
    rng = np.random.default_rng(5)
    t = np.arange(0.0, 3.0, 0.001)
    f = 60.0 - 0.5 * t + rng.uniform(-1e-3, 1e-3, t.size)
    measured = measure_rocof(t, f, 2.5, window=0.25)
    assert measured == pytest.approx(-0.5, abs=0.01)


def test_measure_rocof_uses_trailing_window_only():
    """Samples after the trigger instant must not influence the fit."""
    t = np.arange(0.0, 2.0, 0.01)
    f = np.where(t <= 1.0, 60.0 - 0.2 * t, 0.1 + 60.0 - 0.5 * t)
    assert measure_rocof(t, f, 1.0, window=0.5) == pytest.approx(-0.2, rel=1e-9)


def test_measure_rocof_underpopulated_window():
    t = np.array([0.0, 1.0, 2.0])
    f = np.array([60.0, 59.9, 59.8])
    with pytest.raises(ValidationError, match="underpopulated"):
        measure_rocof(t, f, 2.0, window=0.5)


def test_measure_rocof_rejects_bad_window():
    with pytest.raises(ValidationError, match="window"):
        measure_rocof(np.array([0.0, 1.0]), np.array([60.0, 59.9]), 1.0, window=0.0)


def test_relay_arms_below_threshold_with_cycle_delay():
    """Crossing at t=1.2 s with a 40-cycle delay actuates at 1.8667 s."""
    relay = RelayConfig(threshold=59.3, delay_cycles=40, scheme="proposed")
    state = GridState(t=1.2, frequency=59.29, governor_response=0.0, shed_total=0.0)
    event = relay_check(state, relay, 60.0)
    assert event is not None
    assert event.armed_at == 1.2
    assert event.actuate_at == pytest.approx(1.2 + 40.0 / 60.0)


def test_relay_idle_above_threshold():
    relay = RelayConfig(threshold=59.3, delay_cycles=40, scheme="proposed")
    state = GridState(t=1.2, frequency=59.31, governor_response=0.0, shed_total=0.0)
    assert relay_check(state, relay, 60.0) is None


def test_relay_arms_once():
    relay = RelayConfig(threshold=59.3, delay_cycles=40, scheme="proposed")
    state = GridState(
        t=2.0, frequency=59.0, governor_response=0.0, shed_total=0.0, triggered=True
    )
    assert relay_check(state, relay, 60.0) is None


def test_zero_delay_actuates_at_arming_instant():
    relay = RelayConfig(threshold=59.3, delay_cycles=0, scheme="proposed")
    state = GridState(t=1.2, frequency=59.2, governor_response=0.0, shed_total=0.0)
    event = relay_check(state, relay, 60.0)
    assert event.actuate_at == event.armed_at


def test_conventional_total_uses_benchmark_inertia():
    assert conventional_ufls_total(PARAMS, 4.0, -0.3, 60000.0) == pytest.approx(2400.0)
    # magnitude only: an over-frequency swing still yields a nonnegative figure
    assert conventional_ufls_total(PARAMS, 4.0, 0.3, 60000.0) == pytest.approx(2400.0)


# ------------------------------------------------------------------ full runs


def test_run_holds_nominal_when_balanced():
    """A negligible 1 MW trip leaves frequency inside the deadband: the
    governor never moves and the relay never arms."""
    config = bare_scenario(loss_mw=1.0, damping=1.0, headroom=300.0, horizon=20.0)
    result = run_simulation(config)
    assert result.trace.frequency_hz.min() > 59.99
    assert np.all(result.trace.governor_mw == 0.0)
    assert result.shed_total == 0.0
    assert math.isnan(result.armed_at)
    assert math.isnan(result.actuated_at)
    assert result.decision is None


def test_run_initial_rocof_matches_analytic():
    """Governor off, no damping: the measured ROCOF at arming should match
    -loss * f_n / (2 H P) to well under 1%."""
    config = bare_scenario(loss_mw=3000.0, damping=0.0, headroom=0.0)
    result = run_simulation(config)
    analytic = -3000.0 * 60.0 / (2.0 * 6.0 * 60000.0)
    assert result.rocof_at_trigger == pytest.approx(analytic, rel=0.01)
    assert result.estimated_imbalance == pytest.approx(-3000.0, rel=0.01)
    assert result.true_imbalance_at_trigger == pytest.approx(-3000.0, rel=1e-9)


def test_run_frequency_monotone_until_actuation():
    """With no governor or damping, nothing arrests the decline before the
    shed lands."""
    config = bare_scenario(loss_mw=3000.0, damping=0.0, headroom=0.0)
    result = run_simulation(config)
    t = result.trace.t_s
    f = result.trace.frequency_hz
    in_fall = (t > config.contingency.time) & (t <= result.actuated_at)
    assert np.all(np.diff(f[in_fall]) < 0.0)


def test_run_actuation_delay_is_forty_cycles():
    config = bare_scenario(loss_mw=3000.0, damping=0.0, headroom=0.0, delay_cycles=40)
    result = run_simulation(config)
    assert result.actuated_at - result.armed_at == pytest.approx(40.0 / 60.0, abs=2e-3)
    # shed appears in the trace exactly at the actuation sample, not before
    shed = result.trace.shed_mw
    t = result.trace.t_s
    assert np.all(shed[t < result.actuated_at - 1e-9] == 0.0)
    assert shed[-1] == pytest.approx(result.shed_total)


def test_run_shed_brings_recovery():
    """Proposed-scheme shedding of an accurately estimated deficit halts the
    decline; frequency then recovers toward nominal under damping."""
    config = bare_scenario(loss_mw=3000.0, damping=1.0, headroom=0.0)
    result = run_simulation(config)
    f = result.trace.frequency_hz
    t = result.trace.t_s
    post = f[t > result.actuated_at + 1.0]
    assert post[-1] > post[0]
    assert result.nadir < 59.3
    assert result.settling_frequency > result.nadir


def test_run_is_deterministic():
    config = bare_scenario(loss_mw=3000.0, damping=1.0, headroom=300.0)
    a = run_simulation(config)
    b = run_simulation(config)
    assert a.trace == b.trace
    assert a.shed_total == b.shed_total
    assert a.rocof_at_trigger == b.rocof_at_trigger


def test_run_governor_respects_headroom():
    config = bare_scenario(loss_mw=3000.0, damping=1.0, headroom=300.0)
    result = run_simulation(config)
    assert result.trace.governor_mw.max() <= 300.0 + 1e-9
    assert result.trace.governor_mw.max() > 0.0


def test_run_conventional_shed_grows_with_benchmark_inertia():
    """The frozen-inertia scheme sheds in proportion to its assumed H: a
    stale, too-high benchmark over-sheds relative to a lower one."""
    sheds = []
    for h_bench in (3.0, 4.5, 6.0):
        config = bare_scenario(
            loss_mw=3000.0, damping=0.0, headroom=0.0,
            scheme="conventional", benchmark_h=h_bench,
        )
        sheds.append(run_simulation(config).shed_total)
    assert sheds[0] < sheds[1] < sheds[2]


def test_run_aborts_on_runaway_deficit():
    """Losing a third of generation with nothing to arrest it blows through
    the ±5 Hz guard band and must abort rather than report nonsense."""
    config = bare_scenario(
        loss_mw=20000.0, damping=0.0, headroom=0.0, threshold=50.0, horizon=20.0
    )
    with pytest.raises(SimulationAbort, match="diverged"):
        run_simulation(config)


def test_run_trace_grid_spacing():
    config = bare_scenario(loss_mw=3000.0, damping=1.0, headroom=300.0, dt=0.002)
    result = run_simulation(config)
    dts = np.diff(result.trace.t_s)
    assert dts.max() - dts.min() < 1e-12
    assert result.trace.t_s[0] == 0.0
    assert result.trace.t_s[-1] == pytest.approx(config.sim.horizon_s, abs=1e-9)
