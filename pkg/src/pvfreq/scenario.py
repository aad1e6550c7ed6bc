"""Scenario construction, validation, and persistence.

A scenario bundles everything a simulation run needs: system constants,
governor and relay settings, the contingency, the PV fleet (utility-scale
plants plus distributed capacity behind each substation), per-site
irradiance series, substation parameters, integrator settings, and optional
declarative sensor-error injection.

Scenario files are YAML with explicit unit suffixes in key names (``_mw``,
``_hz``, ``_s``, ``_wm2``) and are validated strictly on load: unknown keys
are rejected with a closest-match suggestion, and every type invariant is
checked before a config is returned.

Synthetic irradiance fields are generated from a seeded RNG: a shared
clear-sky base level scaled per site by a bounded low-frequency modulation
(plus optional cloud-transient dips).  The base level is solved numerically
so the fleet's ten-minute-averaged output hits a requested instantaneous
penetration exactly at contingency time.
"""

from __future__ import annotations

import difflib
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ValidationError
from .estimation import Substation, SystemParams, system_inertia
from .pv import (
    MAX_IRRADIANCE_WM2,
    IrradianceSeries,
    PvCurve,
    PVPlant,
    moving_average,
    pv_per_unit_output,
)
from .simulation import (
    MAX_STEP_S,
    SCHEMES,
    Contingency,
    GovernorParams,
    RelayConfig,
)

SCHEMA_VERSION = 1

_RHO_SUM_TOL = 1e-9
_NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]*$")


@dataclass(frozen=True)
class SimSettings:
    """Integrator settings: step, horizon, and ROCOF measurement window."""

    dt_s: float
    horizon_s: float
    rocof_window_s: float

    def __post_init__(self) -> None:
        if self.dt_s <= 0:
            raise ValidationError(f"dt_s must be > 0, got {self.dt_s}")
        if self.dt_s > MAX_STEP_S:
            raise ValidationError(
                f"dt_s {self.dt_s} exceeds the stability guard of {MAX_STEP_S} s"
            )
        if self.horizon_s < self.dt_s:
            raise ValidationError(
                f"horizon_s must be >= dt_s, got {self.horizon_s}"
            )
        if self.rocof_window_s < 2 * self.dt_s:
            raise ValidationError(
                f"rocof_window_s {self.rocof_window_s} is shorter than two steps "
                f"(dt_s={self.dt_s}); the slope fit needs at least two samples"
            )


@dataclass(frozen=True)
class ErrorInjection:
    """Declarative sensor errors, one entry per substation (in order).

    ``load_gain_bias`` is relative (an in-service gain of ``g*(1+bias)``);
    ``irradiance_bias_wm2`` is an additive offset on the sensor series.
    """

    load_gain_bias: tuple[float, ...]
    irradiance_bias_wm2: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "load_gain_bias", tuple(float(b) for b in self.load_gain_bias)
        )
        object.__setattr__(
            self,
            "irradiance_bias_wm2",
            tuple(float(b) for b in self.irradiance_bias_wm2),
        )
        for b in self.load_gain_bias + self.irradiance_bias_wm2:
            if not math.isfinite(b):
                raise ValidationError(f"sensor bias must be finite, got {b}")
        if any(b <= -1.0 for b in self.load_gain_bias):
            raise ValidationError(
                "load_gain_bias must stay above -1 (gain must remain positive)"
            )


@dataclass
class ScenarioConfig:
    """A complete, validated description of one simulation experiment."""

    system: SystemParams
    governor: GovernorParams
    damping: float
    relay: RelayConfig
    contingency: Contingency
    plants: list[PVPlant]
    substations: list[Substation]
    curve: PvCurve
    sim: SimSettings
    seed: int
    error_injection: ErrorInjection | None = None
    benchmark_h: float | None = None  # s; required for the conventional scheme
    name: str = ""

    def validate(self) -> "ScenarioConfig":
        """Check every cross-field invariant; raise ValidationError on the
        first violation.  Returns self so call sites can chain."""
        if not _NAME_RE.match(self.name):
            raise ValidationError(
                f"scenario name {self.name!r} may only contain letters, digits, "
                "'_', '-', '.'"
            )
        if self.damping < 0:
            raise ValidationError(f"damping must be >= 0, got {self.damping}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned int, got {self.seed}")
        if self.relay.threshold >= self.system.f_n:
            raise ValidationError(
                f"relay threshold {self.relay.threshold} Hz must be below "
                f"f_n {self.system.f_n} Hz"
            )
        if self.contingency.time >= self.sim.horizon_s:
            raise ValidationError(
                f"contingency at t={self.contingency.time} s falls outside the "
                f"{self.sim.horizon_s} s horizon"
            )
        if not self.substations:
            raise ValidationError("at least one substation is required")
        for kind, ids in (
            ("plant", [p.id for p in self.plants]),
            ("substation", [s.id for s in self.substations]),
        ):
            dupes = {i for i in ids if ids.count(i) > 1}
            if dupes:
                raise ValidationError(f"duplicate {kind} ids: {sorted(dupes)}")
        rho_sum = sum(s.rho for s in self.substations)
        if abs(rho_sum - 1.0) > _RHO_SUM_TOL:
            names = ", ".join(s.id for s in self.substations)
            raise ValidationError(
                f"substation DR shares must sum to 1, got {rho_sum!r} "
                f"across [{names}]"
            )
        fleet = sum(p.capacity for p in self.plants) + sum(
            s.dist_pv_capacity for s in self.substations
        )
        if abs(fleet - self.system.total_installed_pv) > 1e-9 * max(fleet, 1.0):
            raise ValidationError(
                f"system.total_installed_pv ({self.system.total_installed_pv} MW) "
                f"does not match the fleet sum ({fleet} MW)"
            )
        if self.relay.scheme == "conventional":
            if self.benchmark_h is None:
                raise ValidationError(
                    "the conventional scheme requires benchmark_h"
                )
            if self.benchmark_h <= 0:
                raise ValidationError(
                    f"benchmark_h must be > 0, got {self.benchmark_h}"
                )
        for owner_id, series in self._series_items():
            if series.values.size == 0:
                raise ValidationError(f"irradiance series for {owner_id}: no samples")
            if series.times[0] > 0:
                raise ValidationError(
                    f"irradiance series for {owner_id} starts at t={series.times[0]} s; "
                    "coverage must begin at or before t=0"
                )
            end = float(series.times[-1])
            if end + series.sample_interval < self.sim.horizon_s:
                raise ValidationError(
                    f"irradiance series for {owner_id} ends at {end} s, before the "
                    f"{self.sim.horizon_s} s horizon"
                )
        if self.error_injection is not None:
            inj = self.error_injection
            n = len(self.substations)
            if len(inj.load_gain_bias) != n or len(inj.irradiance_bias_wm2) != n:
                raise ValidationError(
                    f"error_injection lists must have one entry per substation "
                    f"({n}), got {len(inj.load_gain_bias)} load-gain and "
                    f"{len(inj.irradiance_bias_wm2)} irradiance biases"
                )
            for sub, bias in zip(self.substations, inj.irradiance_bias_wm2):
                biased_lo = float(sub.irradiance.values.min()) + bias
                biased_hi = float(sub.irradiance.values.max()) + bias
                if biased_lo < 0 or biased_hi > MAX_IRRADIANCE_WM2:
                    raise ValidationError(
                        f"substation {sub.id}: irradiance bias {bias} W/m2 pushes the "
                        f"sensor outside [0, {MAX_IRRADIANCE_WM2}] W/m2"
                    )
        return self

    def _series_items(self):
        for p in self.plants:
            yield p.id, p.irradiance
        for s in self.substations:
            yield s.id, s.irradiance


def effective_substations(config: ScenarioConfig) -> list[Substation]:
    """Substations as their sensors and settings actually are in service.

    Without error injection this is the configured list itself (sensors read
    the true site irradiance).  With injection, each substation gets a copy
    whose irradiance series is offset by its sensor bias and whose load gain
    is scaled by ``1 + bias``; the originals keep the ground truth.
    """
    if config.error_injection is None:
        return list(config.substations)
    inj = config.error_injection
    out = []
    for sub, g_bias, r_bias in zip(
        config.substations, inj.load_gain_bias, inj.irradiance_bias_wm2
    ):
        series = sub.irradiance
        if r_bias != 0.0:
            series = IrradianceSeries(
                series.times.copy(), series.values + r_bias, series.sample_interval
            )
        out.append(
            replace(sub, irradiance=series, load_gain=sub.load_gain * (1.0 + g_bias))
        )
    return out


# --------------------------------------------------------------------------
# Synthetic irradiance fields


@dataclass(frozen=True)
class FieldSpec:
    """Texture parameters for synthetic irradiance generation.

    ``perturbation`` is the relative amplitude of the per-site modulation
    around the shared base level; clouds, when enabled, are smooth transient
    dips of relative depth up to ``cloud_depth``.
    """

    sample_interval_s: float = 2.0
    perturbation: float = 0.08
    cloud_probability: float = 0.0
    cloud_depth: float = 0.4
    cloud_duration_s: float = 120.0

    def __post_init__(self) -> None:
        if self.sample_interval_s <= 0:
            raise ValidationError(
                f"sample_interval_s must be > 0, got {self.sample_interval_s}"
            )
        if not 0 <= self.perturbation < 1:
            raise ValidationError(
                f"perturbation must lie in [0, 1), got {self.perturbation}"
            )
        if not 0 <= self.cloud_probability <= 1:
            raise ValidationError(
                f"cloud_probability must lie in [0, 1], got {self.cloud_probability}"
            )
        if not 0 <= self.cloud_depth < 1:
            raise ValidationError(
                f"cloud_depth must lie in [0, 1), got {self.cloud_depth}"
            )
        if self.cloud_duration_s <= 0:
            raise ValidationError(
                f"cloud_duration_s must be > 0, got {self.cloud_duration_s}"
            )


# Modulation mixture: three incommensurate periods so site profiles drift
# against each other instead of beating in lockstep.
_MOD_PERIODS_S = (347.0, 181.0, 83.0)
_MOD_WEIGHTS = (0.5, 0.3, 0.2)


def _site_modulations(
    spec: FieldSpec, n_sites: int, duration_s: float, seed
) -> tuple[np.ndarray, np.ndarray]:
    """Per-site multiplicative modulation profiles in [1-p, 1+p]."""
    rng = np.random.default_rng(seed)
    n = int(math.floor(duration_s / spec.sample_interval_s)) + 1
    t = spec.sample_interval_s * np.arange(n)
    mods = np.empty((n_sites, n))
    for k in range(n_sites):
        phases = rng.uniform(0.0, 2.0 * math.pi, size=len(_MOD_PERIODS_S))
        s = np.zeros(n)
        for w, period, phase in zip(_MOD_WEIGHTS, _MOD_PERIODS_S, phases):
            s += w * np.sin(2.0 * math.pi * t / period + phase)
        m = 1.0 + spec.perturbation * s
        if rng.random() < spec.cloud_probability:
            center = rng.uniform(0.0, duration_s)
            depth = spec.cloud_depth * rng.uniform(0.5, 1.0)
            width = spec.cloud_duration_s / 4.0
            m = m * (1.0 - depth * np.exp(-0.5 * ((t - center) / width) ** 2))
        mods[k] = m
    return t, mods


def generate_irradiance_field(
    spec: FieldSpec, n_sites: int, duration_s: float, base_level: float, seed
) -> list[IrradianceSeries]:
    """Seeded per-site irradiance series sharing one clear-sky base level.

    Deterministic for a given seed; zero perturbation (and no clouds) yields
    identical series at every site.
    """
    if n_sites < 1:
        raise ValidationError(f"n_sites must be >= 1, got {n_sites}")
    if duration_s <= 0:
        raise ValidationError(f"duration_s must be > 0, got {duration_s}")
    if base_level < 0:
        raise ValidationError(f"base_level must be >= 0, got {base_level}")
    t, mods = _site_modulations(spec, n_sites, duration_s, seed)
    return [
        IrradianceSeries(t.copy(), base_level * mods[k], spec.sample_interval_s)
        for k in range(n_sites)
    ]


def _solve_base_level(
    mods: np.ndarray,
    t: np.ndarray,
    spec: FieldSpec,
    caps: list[float],
    curve: PvCurve,
    t_c: float,
    target_output: float,
) -> float:
    """Base irradiance level at which ten-minute-averaged fleet output equals
    ``target_output`` MW at time ``t_c``.  Bisection: output is monotone
    nondecreasing in the base level because the curve is."""
    a = np.array(
        [
            moving_average(IrradianceSeries(t, mods[k], spec.sample_interval_s), t_c)
            for k in range(mods.shape[0])
        ]
    )
    caps_arr = np.array(caps)

    def output(b: float) -> float:
        return float(caps_arr @ curve.per_unit_many(b * a))

    b_hi = MAX_IRRADIANCE_WM2 / float(mods.max())
    top = output(b_hi)
    if target_output > top * (1.0 + 1e-12):
        raise ValidationError(
            f"penetration unreachable: the fleet peaks at {top:.1f} MW within the "
            f"irradiance plausibility bound, below the {target_output:.1f} MW target"
        )
    lo, hi = 0.0, b_hi
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if output(mid) < target_output:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# Builders


def _assemble_scenario(
    *,
    system_consts: tuple[float, float, float],  # (h_g0, h_l0, f_n)
    curve: PvCurve,
    governor: GovernorParams,
    damping: float,
    relay: RelayConfig,
    contingency: Contingency,
    sim: SimSettings,
    plant_ids: list[str],
    plant_caps: list[float],
    sub_ids: list[str],
    gross_loads: list[float],
    dist_caps: list[float],
    rhos: list[float],
    field_spec: FieldSpec,
    penetration: float,
    field_seed,
    stored_seed: int,
    benchmark_h: float | None,
    error_injection: ErrorInjection | None,
    name: str,
) -> ScenarioConfig:
    """Shared core of the scenario builders.

    Solves the clear-sky base level for the requested penetration, derives
    substation net loads from the gross loads (net = gross minus distributed
    PV at contingency time), and calibrates each load gain so the local
    system-load estimate is exact at contingency time with unbiased sensors.
    """
    h_g0, h_l0, f_n = system_consts
    t_c = contingency.time
    n_sites = len(plant_caps) + len(sub_ids)
    t, mods = _site_modulations(field_spec, n_sites, sim.horizon_s, field_seed)
    caps = list(plant_caps) + list(dist_caps)
    target_output = penetration * sum(gross_loads)
    base = _solve_base_level(mods, t, field_spec, caps, curve, t_c, target_output)
    series = [
        IrradianceSeries(t.copy(), base * mods[k], field_spec.sample_interval_s)
        for k in range(n_sites)
    ]

    plants = [
        PVPlant(pid, cap, series[k])
        for k, (pid, cap) in enumerate(zip(plant_ids, plant_caps))
    ]

    sub_series = series[len(plant_caps) :]
    phi_c = [
        pv_per_unit_output(curve, moving_average(s, t_c)) for s in sub_series
    ]
    net_loads = [
        gross - cap * phi for gross, cap, phi in zip(gross_loads, dist_caps, phi_c)
    ]
    subtotals = [
        net + cap * phi for net, cap, phi in zip(net_loads, dist_caps, phi_c)
    ]
    p_system_c = sum(subtotals)
    substations = [
        Substation(
            id=sid,
            net_load=net,
            dist_pv_capacity=cap,
            irradiance=s,
            rho=rho,
            load_gain=p_system_c / subtotal,
        )
        for sid, net, cap, s, rho, subtotal in zip(
            sub_ids, net_loads, dist_caps, sub_series, rhos, subtotals
        )
    ]

    params = SystemParams(
        h_g0=h_g0,
        h_l0=h_l0,
        f_n=f_n,
        total_installed_pv=sum(plant_caps) + sum(dist_caps),
    )
    return ScenarioConfig(
        system=params,
        governor=governor,
        damping=damping,
        relay=relay,
        contingency=contingency,
        plants=plants,
        substations=substations,
        curve=curve,
        sim=sim,
        seed=stored_seed,
        error_injection=error_injection,
        benchmark_h=benchmark_h,
        name=name,
    ).validate()


#: Desk-scale defaults: 60 GW system, 10 substations, 5 utility plants,
#: 45 GW installed PV of which 70 % is utility-scale.
DEFAULT_SYSTEM_LOAD_MW = 60000.0
DEFAULT_FLEET_MW = 45000.0
DEFAULT_UTILITY_SHARE = 0.7
DEFAULT_SEED = 20260826


def default_scenario(
    penetration: float = 0.45,
    scheme: str = "proposed",
    seed: int = DEFAULT_SEED,
    *,
    benchmark_penetration: float = 0.45,
    n_substations: int = 10,
    n_plants: int = 5,
    system_load_mw: float = DEFAULT_SYSTEM_LOAD_MW,
    fleet_mw: float = DEFAULT_FLEET_MW,
    utility_share: float = DEFAULT_UTILITY_SHARE,
    contingency_fraction: float = 0.05,
    field_spec: FieldSpec = FieldSpec(),
    name: str = "",
) -> ScenarioConfig:
    """Build the default desk-scale scenario at a given PV penetration.

    Substation gross loads are a seeded random split of the system load; DR
    shares and distributed capacity follow the load split.  The trip size
    defaults to 5 % of system load.
    """
    if not 0 <= penetration < 1:
        raise ValidationError(f"penetration must lie in [0, 1), got {penetration}")
    if n_substations < 1 or n_plants < 0:
        raise ValidationError("need at least 1 substation and 0 or more plants")
    if not 0 <= utility_share <= 1:
        raise ValidationError(f"utility_share must lie in [0, 1], got {utility_share}")

    ss = np.random.SeedSequence(seed)
    structure_ss, field_ss = ss.spawn(2)
    rng = np.random.default_rng(structure_ss)
    weights = rng.uniform(0.5, 1.5, size=n_substations)
    gross_loads = [float(v) for v in system_load_mw * weights / weights.sum()]
    rhos = [g / system_load_mw for g in gross_loads]
    dist_total = fleet_mw * (1.0 - utility_share)
    dist_caps = [dist_total * g / system_load_mw for g in gross_loads]
    plant_caps = (
        [fleet_mw * utility_share / n_plants] * n_plants if n_plants else []
    )

    width = max(2, len(str(max(n_substations, n_plants))))
    plant_ids = [f"plant{k + 1:0{width}d}" for k in range(n_plants)]
    sub_ids = [f"sub{k + 1:0{width}d}" for k in range(n_substations)]

    benchmark_h = None
    if scheme == "conventional":
        params_probe = SystemParams(5.0, 1.0, 60.0, 0.0)
        benchmark_h = system_inertia(params_probe, benchmark_penetration)

    return _assemble_scenario(
        system_consts=(5.0, 1.0, 60.0),
        curve=PvCurve.linear(1000.0),
        # Small headroom: primary reserve is deliberately thin so that shed
        # accuracy, not governor action, decides the post-event trajectory —
        # governors are assumed insignificant on UFLS timescales.
        governor=GovernorParams(
            droop=0.05, deadband=0.036, time_constant=8.0, headroom=300.0
        ),
        damping=1.0,
        relay=RelayConfig(threshold=59.3, delay_cycles=40, scheme=scheme),
        contingency=Contingency(
            time=5.0, generation_loss=contingency_fraction * system_load_mw
        ),
        sim=SimSettings(dt_s=0.001, horizon_s=60.0, rocof_window_s=0.25),
        plant_ids=plant_ids,
        plant_caps=plant_caps,
        sub_ids=sub_ids,
        gross_loads=gross_loads,
        dist_caps=dist_caps,
        rhos=rhos,
        field_spec=field_spec,
        penetration=penetration,
        field_seed=field_ss,
        stored_seed=seed,
        benchmark_h=benchmark_h,
        error_injection=None,
        name=name,
    )


# --------------------------------------------------------------------------
# Sweeps


@dataclass
class SweepSpec:
    """A penetration sweep: one scenario per (level, scheme) pair."""

    base: ScenarioConfig
    penetration_levels: tuple[float, ...]
    scheme_pair: tuple[str, ...] = ("proposed", "conventional")
    benchmark_penetration: float = 0.45
    field_spec: FieldSpec = field(default_factory=FieldSpec)

    def validate(self) -> "SweepSpec":
        self.base.validate()
        if not self.penetration_levels:
            raise ValidationError("penetration_levels must be non-empty")
        for lv in self.penetration_levels:
            if not 0 <= lv < 1:
                raise ValidationError(
                    f"penetration level {lv} outside [0, 1)"
                )
        if not self.scheme_pair:
            raise ValidationError("scheme_pair must be non-empty")
        for s in self.scheme_pair:
            if s not in SCHEMES:
                raise ValidationError(f"unknown scheme {s!r} (choose from {SCHEMES})")
        if len(set(self.scheme_pair)) != len(self.scheme_pair):
            raise ValidationError(f"duplicate schemes in {self.scheme_pair}")
        lo, hi = min(self.penetration_levels), max(self.penetration_levels)
        if not lo <= self.benchmark_penetration <= hi:
            raise ValidationError(
                f"benchmark_penetration {self.benchmark_penetration} outside the "
                f"levels' hull [{lo}, {hi}]"
            )
        return self


def scenario_label(level: float, scheme: str) -> str:
    """Artifact-friendly name for one sweep point, e.g. ``pen45_proposed``."""
    return f"pen{round(level * 100, 4):g}_{scheme}"


def build_sweep(spec: SweepSpec) -> list[ScenarioConfig]:
    """Materialize one scenario per (penetration level, scheme).

    Each level gets its own child seed (derived from the base seed), and
    both schemes at a level share the same irradiance field, so a scheme
    pair differs only in the scheme tag and benchmark inertia — frequency
    differences between them are then attributable to the DR scheme alone.
    """
    spec.validate()
    base = spec.base
    curve = base.curve
    t_c = base.contingency.time
    # Recover the gross load behind each substation from the base scenario:
    # gross = net + distributed-PV output at contingency time.
    gross_loads = [
        sub.net_load
        + sub.dist_pv_capacity
        * pv_per_unit_output(curve, moving_average(sub.irradiance, t_c))
        for sub in base.substations
    ]
    params_probe = base.system
    benchmark_h = system_inertia(params_probe, spec.benchmark_penetration)

    children = np.random.SeedSequence(base.seed).spawn(len(spec.penetration_levels))
    scenarios = []
    for child, level in zip(children, spec.penetration_levels):
        stored_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        for scheme in spec.scheme_pair:
            scenarios.append(
                _assemble_scenario(
                    system_consts=(
                        params_probe.h_g0,
                        params_probe.h_l0,
                        params_probe.f_n,
                    ),
                    curve=curve,
                    governor=base.governor,
                    damping=base.damping,
                    relay=replace(base.relay, scheme=scheme),
                    contingency=base.contingency,
                    sim=base.sim,
                    plant_ids=[p.id for p in base.plants],
                    plant_caps=[p.capacity for p in base.plants],
                    sub_ids=[s.id for s in base.substations],
                    gross_loads=gross_loads,
                    dist_caps=[s.dist_pv_capacity for s in base.substations],
                    rhos=[s.rho for s in base.substations],
                    field_spec=spec.field_spec,
                    penetration=level,
                    field_seed=np.random.SeedSequence(stored_seed),
                    stored_seed=stored_seed,
                    benchmark_h=benchmark_h if scheme == "conventional" else None,
                    error_injection=base.error_injection,
                    name=scenario_label(level, scheme),
                )
            )
    return scenarios


def default_sweep(seed: int = DEFAULT_SEED) -> SweepSpec:
    """The standard four-level comparison sweep with a 45 % benchmark."""
    return SweepSpec(
        base=default_scenario(0.45, "proposed", seed),
        penetration_levels=(0.15, 0.30, 0.45, 0.60),
        scheme_pair=("proposed", "conventional"),
        benchmark_penetration=0.45,
    )


# --------------------------------------------------------------------------
# Persistence (YAML with unit-suffixed keys)


def _context_error(context: str, msg: str) -> ValidationError:
    return ValidationError(f"{context}: {msg}")


def _check_keys(mapping: dict, allowed: tuple[str, ...], context: str) -> None:
    for key in mapping:
        if key not in allowed:
            hints = difflib.get_close_matches(str(key), allowed, n=1)
            hint = f" (did you mean {hints[0]!r}?)" if hints else ""
            raise _context_error(context, f"unknown key {key!r}{hint}")


def _req(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise _context_error(context, f"missing required key {key!r}")
    return mapping[key]


def _as_float(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _context_error(context, f"expected a number, got {value!r}")
    return float(value)


def _as_int(value, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _context_error(context, f"expected an integer, got {value!r}")
    return value


def _as_str(value, context: str) -> str:
    if not isinstance(value, str):
        raise _context_error(context, f"expected a string, got {value!r}")
    return value


def _as_map(value, context: str) -> dict:
    if not isinstance(value, dict):
        raise _context_error(context, f"expected a mapping, got {value!r}")
    return value


def _as_list(value, context: str) -> list:
    if not isinstance(value, list):
        raise _context_error(context, f"expected a list, got {value!r}")
    return value


def _series_to_doc(series: IrradianceSeries) -> dict:
    return {
        "t0_s": float(series.times[0]),
        "sample_interval_s": float(series.sample_interval),
        "values_wm2": [float(v) for v in series.values],
    }


_SERIES_KEYS = ("t0_s", "sample_interval_s", "values_wm2", "csv")


def _series_from_doc(doc, context: str, base_dir: Path) -> IrradianceSeries:
    doc = _as_map(doc, context)
    _check_keys(doc, _SERIES_KEYS, context)
    if "csv" in doc:
        extra = [k for k in doc if k != "csv"]
        if extra:
            raise _context_error(
                context, f"'csv' cannot be combined with inline keys {extra}"
            )
        return IrradianceSeries.from_csv(base_dir / _as_str(doc["csv"], context))
    t0 = _as_float(_req(doc, "t0_s", context), f"{context}.t0_s")
    interval = _as_float(
        _req(doc, "sample_interval_s", context), f"{context}.sample_interval_s"
    )
    raw = _as_list(_req(doc, "values_wm2", context), f"{context}.values_wm2")
    values = [_as_float(v, f"{context}.values_wm2[{i}]") for i, v in enumerate(raw)]
    return IrradianceSeries.uniform(t0, interval, values)


_TOP_KEYS = (
    "schema_version",
    "name",
    "seed",
    "system",
    "damping_pu",
    "governor",
    "relay",
    "benchmark_h_s",
    "contingency",
    "sim",
    "curve",
    "plants",
    "substations",
    "error_injection",
)


def scenario_to_doc(config: ScenarioConfig) -> dict:
    """Canonical plain-dict form of a scenario (what save_scenario writes)."""
    doc: dict = {"schema_version": SCHEMA_VERSION}
    if config.name:
        doc["name"] = config.name
    doc["seed"] = config.seed
    doc["system"] = {
        "h_g0_s": config.system.h_g0,
        "h_l0_s": config.system.h_l0,
        "f_n_hz": config.system.f_n,
        "total_installed_pv_mw": config.system.total_installed_pv,
    }
    doc["damping_pu"] = config.damping
    doc["governor"] = {
        "droop_pu": config.governor.droop,
        "deadband_hz": config.governor.deadband,
        "time_constant_s": config.governor.time_constant,
        "headroom_mw": config.governor.headroom,
    }
    doc["relay"] = {
        "threshold_hz": config.relay.threshold,
        "delay_cycles": config.relay.delay_cycles,
        "scheme": config.relay.scheme,
    }
    if config.benchmark_h is not None:
        doc["benchmark_h_s"] = config.benchmark_h
    doc["contingency"] = {
        "time_s": config.contingency.time,
        "generation_loss_mw": config.contingency.generation_loss,
    }
    doc["sim"] = {
        "dt_s": config.sim.dt_s,
        "horizon_s": config.sim.horizon_s,
        "rocof_window_s": config.sim.rocof_window_s,
    }
    doc["curve"] = {
        "rated_irradiance_wm2": config.curve.rated_irradiance,
        "knots": [[x, y] for x, y in config.curve.knots],
    }
    doc["plants"] = [
        {
            "id": p.id,
            "capacity_mw": p.capacity,
            "irradiance": _series_to_doc(p.irradiance),
        }
        for p in config.plants
    ]
    doc["substations"] = [
        {
            "id": s.id,
            "net_load_mw": s.net_load,
            "dist_pv_capacity_mw": s.dist_pv_capacity,
            "rho": s.rho,
            "load_gain": s.load_gain,
            "irradiance": _series_to_doc(s.irradiance),
        }
        for s in config.substations
    ]
    if config.error_injection is not None:
        doc["error_injection"] = {
            "load_gain_bias": list(config.error_injection.load_gain_bias),
            "irradiance_bias_wm2": list(config.error_injection.irradiance_bias_wm2),
        }
    return doc


def scenario_from_doc(doc: dict, context: str, base_dir: Path) -> ScenarioConfig:
    """Parse and fully validate a scenario from its plain-dict form."""
    doc = _as_map(doc, context)
    _check_keys(doc, _TOP_KEYS, context)
    version = _as_int(doc.get("schema_version", SCHEMA_VERSION), f"{context}.schema_version")
    if version != SCHEMA_VERSION:
        raise _context_error(
            context,
            f"unsupported schema_version {version} (this build reads {SCHEMA_VERSION})",
        )

    sys_doc = _as_map(_req(doc, "system", context), f"{context}.system")
    _check_keys(
        sys_doc,
        ("h_g0_s", "h_l0_s", "f_n_hz", "total_installed_pv_mw"),
        f"{context}.system",
    )
    system = SystemParams(
        h_g0=_as_float(_req(sys_doc, "h_g0_s", f"{context}.system"), f"{context}.system.h_g0_s"),
        h_l0=_as_float(_req(sys_doc, "h_l0_s", f"{context}.system"), f"{context}.system.h_l0_s"),
        f_n=_as_float(_req(sys_doc, "f_n_hz", f"{context}.system"), f"{context}.system.f_n_hz"),
        total_installed_pv=_as_float(
            _req(sys_doc, "total_installed_pv_mw", f"{context}.system"),
            f"{context}.system.total_installed_pv_mw",
        ),
    )

    gov_doc = _as_map(_req(doc, "governor", context), f"{context}.governor")
    _check_keys(
        gov_doc,
        ("droop_pu", "deadband_hz", "time_constant_s", "headroom_mw"),
        f"{context}.governor",
    )
    governor = GovernorParams(
        droop=_as_float(_req(gov_doc, "droop_pu", f"{context}.governor"), f"{context}.governor.droop_pu"),
        deadband=_as_float(
            _req(gov_doc, "deadband_hz", f"{context}.governor"),
            f"{context}.governor.deadband_hz",
        ),
        time_constant=_as_float(
            _req(gov_doc, "time_constant_s", f"{context}.governor"),
            f"{context}.governor.time_constant_s",
        ),
        headroom=_as_float(
            _req(gov_doc, "headroom_mw", f"{context}.governor"),
            f"{context}.governor.headroom_mw",
        ),
    )

    relay_doc = _as_map(_req(doc, "relay", context), f"{context}.relay")
    _check_keys(relay_doc, ("threshold_hz", "delay_cycles", "scheme"), f"{context}.relay")
    relay = RelayConfig(
        threshold=_as_float(
            _req(relay_doc, "threshold_hz", f"{context}.relay"),
            f"{context}.relay.threshold_hz",
        ),
        delay_cycles=_as_float(
            _req(relay_doc, "delay_cycles", f"{context}.relay"),
            f"{context}.relay.delay_cycles",
        ),
        scheme=_as_str(
            _req(relay_doc, "scheme", f"{context}.relay"), f"{context}.relay.scheme"
        ),
    )

    con_doc = _as_map(_req(doc, "contingency", context), f"{context}.contingency")
    _check_keys(con_doc, ("time_s", "generation_loss_mw"), f"{context}.contingency")
    contingency = Contingency(
        time=_as_float(
            _req(con_doc, "time_s", f"{context}.contingency"),
            f"{context}.contingency.time_s",
        ),
        generation_loss=_as_float(
            _req(con_doc, "generation_loss_mw", f"{context}.contingency"),
            f"{context}.contingency.generation_loss_mw",
        ),
    )

    sim_doc = _as_map(_req(doc, "sim", context), f"{context}.sim")
    _check_keys(sim_doc, ("dt_s", "horizon_s", "rocof_window_s"), f"{context}.sim")
    sim = SimSettings(
        dt_s=_as_float(_req(sim_doc, "dt_s", f"{context}.sim"), f"{context}.sim.dt_s"),
        horizon_s=_as_float(
            _req(sim_doc, "horizon_s", f"{context}.sim"), f"{context}.sim.horizon_s"
        ),
        rocof_window_s=_as_float(
            _req(sim_doc, "rocof_window_s", f"{context}.sim"),
            f"{context}.sim.rocof_window_s",
        ),
    )

    curve_doc = _as_map(_req(doc, "curve", context), f"{context}.curve")
    _check_keys(curve_doc, ("rated_irradiance_wm2", "knots"), f"{context}.curve")
    knots_raw = _as_list(_req(curve_doc, "knots", f"{context}.curve"), f"{context}.curve.knots")
    knots = []
    for i, pair in enumerate(knots_raw):
        pair = _as_list(pair, f"{context}.curve.knots[{i}]")
        if len(pair) != 2:
            raise _context_error(
                f"{context}.curve.knots[{i}]", f"expected [irradiance, per_unit], got {pair!r}"
            )
        knots.append(
            (
                _as_float(pair[0], f"{context}.curve.knots[{i}][0]"),
                _as_float(pair[1], f"{context}.curve.knots[{i}][1]"),
            )
        )
    curve = PvCurve(
        rated_irradiance=_as_float(
            _req(curve_doc, "rated_irradiance_wm2", f"{context}.curve"),
            f"{context}.curve.rated_irradiance_wm2",
        ),
        knots=tuple(knots),
    )

    plants = []
    for i, p_doc in enumerate(_as_list(doc.get("plants", []), f"{context}.plants")):
        ctx = f"{context}.plants[{i}]"
        p_doc = _as_map(p_doc, ctx)
        _check_keys(p_doc, ("id", "capacity_mw", "irradiance"), ctx)
        plants.append(
            PVPlant(
                id=_as_str(_req(p_doc, "id", ctx), f"{ctx}.id"),
                capacity=_as_float(_req(p_doc, "capacity_mw", ctx), f"{ctx}.capacity_mw"),
                irradiance=_series_from_doc(
                    _req(p_doc, "irradiance", ctx), f"{ctx}.irradiance", base_dir
                ),
            )
        )

    substations = []
    for i, s_doc in enumerate(
        _as_list(_req(doc, "substations", context), f"{context}.substations")
    ):
        ctx = f"{context}.substations[{i}]"
        s_doc = _as_map(s_doc, ctx)
        _check_keys(
            s_doc,
            ("id", "net_load_mw", "dist_pv_capacity_mw", "rho", "load_gain", "irradiance"),
            ctx,
        )
        substations.append(
            Substation(
                id=_as_str(_req(s_doc, "id", ctx), f"{ctx}.id"),
                net_load=_as_float(_req(s_doc, "net_load_mw", ctx), f"{ctx}.net_load_mw"),
                dist_pv_capacity=_as_float(
                    _req(s_doc, "dist_pv_capacity_mw", ctx), f"{ctx}.dist_pv_capacity_mw"
                ),
                irradiance=_series_from_doc(
                    _req(s_doc, "irradiance", ctx), f"{ctx}.irradiance", base_dir
                ),
                rho=_as_float(_req(s_doc, "rho", ctx), f"{ctx}.rho"),
                load_gain=_as_float(_req(s_doc, "load_gain", ctx), f"{ctx}.load_gain"),
            )
        )

    error_injection = None
    if "error_injection" in doc:
        e_doc = _as_map(doc["error_injection"], f"{context}.error_injection")
        _check_keys(
            e_doc, ("load_gain_bias", "irradiance_bias_wm2"), f"{context}.error_injection"
        )
        error_injection = ErrorInjection(
            load_gain_bias=tuple(
                _as_float(v, f"{context}.error_injection.load_gain_bias[{i}]")
                for i, v in enumerate(
                    _as_list(
                        _req(e_doc, "load_gain_bias", f"{context}.error_injection"),
                        f"{context}.error_injection.load_gain_bias",
                    )
                )
            ),
            irradiance_bias_wm2=tuple(
                _as_float(v, f"{context}.error_injection.irradiance_bias_wm2[{i}]")
                for i, v in enumerate(
                    _as_list(
                        _req(e_doc, "irradiance_bias_wm2", f"{context}.error_injection"),
                        f"{context}.error_injection.irradiance_bias_wm2",
                    )
                )
            ),
        )

    benchmark_h = None
    if "benchmark_h_s" in doc:
        benchmark_h = _as_float(doc["benchmark_h_s"], f"{context}.benchmark_h_s")

    config = ScenarioConfig(
        system=system,
        governor=governor,
        damping=_as_float(_req(doc, "damping_pu", context), f"{context}.damping_pu"),
        relay=relay,
        contingency=contingency,
        plants=plants,
        substations=substations,
        curve=curve,
        sim=sim,
        seed=_as_int(_req(doc, "seed", context), f"{context}.seed"),
        error_injection=error_injection,
        benchmark_h=benchmark_h,
        name=_as_str(doc.get("name", ""), f"{context}.name"),
    )
    return config.validate()


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    """Write a scenario to YAML; load_scenario(save_scenario(c)) == c."""
    config.validate()
    path = Path(path)
    with open(path, "w") as f:
        yaml.safe_dump(scenario_to_doc(config), f, sort_keys=False)


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and fully validate a scenario file."""
    path = Path(path)
    with open(path) as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ValidationError(f"{path}: malformed YAML: {exc}") from exc
    return scenario_from_doc(doc, str(path), path.parent)


_SWEEP_KEYS = (
    "schema_version",
    "base",
    "penetration_levels",
    "scheme_pair",
    "benchmark_penetration",
    "field",
)
_FIELD_KEYS = (
    "sample_interval_s",
    "perturbation",
    "cloud_probability",
    "cloud_depth",
    "cloud_duration_s",
)


def save_sweep(spec: SweepSpec, path: str | Path) -> None:
    """Write a sweep spec (with its base scenario inline) to YAML."""
    spec.validate()
    path = Path(path)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "base": scenario_to_doc(spec.base),
        "penetration_levels": [float(lv) for lv in spec.penetration_levels],
        "scheme_pair": list(spec.scheme_pair),
        "benchmark_penetration": float(spec.benchmark_penetration),
        "field": {
            "sample_interval_s": spec.field_spec.sample_interval_s,
            "perturbation": spec.field_spec.perturbation,
            "cloud_probability": spec.field_spec.cloud_probability,
            "cloud_depth": spec.field_spec.cloud_depth,
            "cloud_duration_s": spec.field_spec.cloud_duration_s,
        },
    }
    with open(path, "w") as f:
        yaml.safe_dump(doc, f, sort_keys=False)


def load_sweep(path: str | Path) -> SweepSpec:
    """Load a sweep spec; ``base`` may be inline or ``{file: scenario.yaml}``
    with the path taken relative to the sweep file."""
    path = Path(path)
    with open(path) as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ValidationError(f"{path}: malformed YAML: {exc}") from exc
    context = str(path)
    doc = _as_map(doc, context)
    _check_keys(doc, _SWEEP_KEYS, context)
    version = _as_int(doc.get("schema_version", SCHEMA_VERSION), f"{context}.schema_version")
    if version != SCHEMA_VERSION:
        raise _context_error(
            context,
            f"unsupported schema_version {version} (this build reads {SCHEMA_VERSION})",
        )
    base_doc = _as_map(_req(doc, "base", context), f"{context}.base")
    if set(base_doc) == {"file"}:
        base = load_scenario(path.parent / _as_str(base_doc["file"], f"{context}.base.file"))
    else:
        base = scenario_from_doc(base_doc, f"{context}.base", path.parent)
    levels = tuple(
        _as_float(v, f"{context}.penetration_levels[{i}]")
        for i, v in enumerate(
            _as_list(_req(doc, "penetration_levels", context), f"{context}.penetration_levels")
        )
    )
    schemes = tuple(
        _as_str(v, f"{context}.scheme_pair[{i}]")
        for i, v in enumerate(
            _as_list(
                doc.get("scheme_pair", ["proposed", "conventional"]),
                f"{context}.scheme_pair",
            )
        )
    )
    field_spec = FieldSpec()
    if "field" in doc:
        f_doc = _as_map(doc["field"], f"{context}.field")
        _check_keys(f_doc, _FIELD_KEYS, f"{context}.field")
        kwargs = {
            key: _as_float(f_doc[key], f"{context}.field.{key}") for key in f_doc
        }
        field_spec = FieldSpec(**kwargs)
    spec = SweepSpec(
        base=base,
        penetration_levels=levels,
        scheme_pair=schemes,
        benchmark_penetration=_as_float(
            doc.get("benchmark_penetration", 0.45), f"{context}.benchmark_penetration"
        ),
        field_spec=field_spec,
    )
    return spec.validate()
