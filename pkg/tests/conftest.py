"""Shared builders for the test suite."""

from __future__ import annotations

import dataclasses

import pytest

from pvfreq import (
    Contingency,
    GovernorParams,
    IrradianceSeries,
    PvCurve,
    PVPlant,
    RelayConfig,
    ScenarioConfig,
    SimSettings,
    Substation,
    SystemParams,
)


def constant_series(level: float, duration: float = 60.0, interval: float = 1.0) -> IrradianceSeries:
    return IrradianceSeries.constant(level, duration=duration, sample_interval=interval)


def make_substation(
    sub_id: str = "sub01",
    net_load: float = 5000.0,
    dist_pv_capacity: float = 0.0,
    irradiance: IrradianceSeries | None = None,
    rho: float = 1.0,
    load_gain: float = 12.0,
) -> Substation:
    return Substation(
        id=sub_id,
        net_load=net_load,
        dist_pv_capacity=dist_pv_capacity,
        irradiance=irradiance if irradiance is not None else constant_series(500.0),
        rho=rho,
        load_gain=load_gain,
    )


def bare_scenario(
    *,
    loss_mw: float = 3000.0,
    damping: float = 1.0,
    headroom: float = 0.0,
    threshold: float = 59.3,
    delay_cycles: float = 40,
    scheme: str = "proposed",
    dt: float = 0.001,
    horizon: float = 20.0,
    h_g0: float = 5.0,
    h_l0: float = 1.0,
    benchmark_h: float | None = None,
    irradiance_level: float = 0.0,
    seed: int = 7,
) -> ScenarioConfig:
    """Minimal single-substation scenario: no PV unless a level is given."""
    series = constant_series(irradiance_level, duration=horizon)
    sub = Substation(
        id="sub01",
        net_load=60000.0,
        dist_pv_capacity=0.0,
        irradiance=series,
        rho=1.0,
        load_gain=1.0,
    )
    return ScenarioConfig(
        system=SystemParams(h_g0=h_g0, h_l0=h_l0, f_n=60.0, total_installed_pv=0.0),
        governor=GovernorParams(
            droop=0.05, deadband=0.036, time_constant=8.0, headroom=headroom
        ),
        damping=damping,
        relay=RelayConfig(threshold=threshold, delay_cycles=delay_cycles, scheme=scheme),
        contingency=Contingency(time=5.0, generation_loss=loss_mw),
        plants=[],
        substations=[sub],
        curve=PvCurve.linear(1000.0),
        sim=SimSettings(dt_s=dt, horizon_s=horizon, rocof_window_s=0.25),
        seed=seed,
        benchmark_h=benchmark_h,
    ).validate()


def with_plant_fleet(config: ScenarioConfig, capacity: float, level: float) -> ScenarioConfig:
    """Attach one utility plant of the given capacity and constant irradiance."""
    series = constant_series(level, duration=config.sim.horizon_s)
    plant = PVPlant("plant01", capacity, series)
    return dataclasses.replace(
        config,
        plants=[plant],
        system=dataclasses.replace(config.system, total_installed_pv=capacity),
    ).validate()


@pytest.fixture
def flat_sun() -> IrradianceSeries:
    return constant_series(500.0)
