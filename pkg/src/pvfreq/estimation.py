"""Imbalance estimation and decentralized demand-response sizing.

The chain implemented here runs from raw measurements to a shed decision:

1. PV penetration ``mu = P_pv / P_load`` discounts generator inertia,
   ``H_system = h_g0 * (1 - mu) + h_l0``, because inverter-coupled PV
   contributes no rotating mass while the displaced synchronous units do.
2. The post-event power imbalance follows from the swing equation,
   ``P_imb = 2 * H_system * ROCOF / f_n * P_load`` (signed; negative ROCOF
   means a generation deficit).
3. Each substation reconstructs the two system-wide quantities it cannot
   see — total load and total PV output — from purely local measurements:
   its own net load, its distributed-PV capacity, a local irradiance sensor,
   and a fixed gain mapping local load to system load.  Its share ``rho`` of
   the resulting shed requirement is what it actually disconnects.
4. The aggregate error of that decentralized decision decomposes exactly
   into the per-substation load and PV residuals, which is what
   :func:`total_dr_error` evaluates and :class:`ErrorReport` records.

Everything here is a pure function; no simulation state is touched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .pv import (
    DEFAULT_AVERAGING_WINDOW_S,
    IrradianceSeries,
    PvCurve,
    moving_average,
    pv_per_unit_output,
)

_REL_TOL = 1e-9


def _rel_close(a: float, b: float, tol: float = _REL_TOL) -> bool:
    scale = max(abs(a), abs(b), 1e-300)
    return abs(a - b) <= tol * scale


@dataclass(frozen=True)
class SystemParams:
    """System-wide constants used by every estimation formula.

    ``h_g0`` and ``h_l0`` are the per-unit inertia constants of the
    conventional generation fleet and of the load, in seconds on the system
    base.  ``total_installed_pv`` is the installed capacity of every PV unit
    in the system, utility-scale and distributed alike.
    """

    h_g0: float  # s
    h_l0: float  # s
    f_n: float  # Hz
    total_installed_pv: float  # MW

    def __post_init__(self) -> None:
        if self.h_g0 <= 0:
            raise ValidationError(f"h_g0 must be > 0, got {self.h_g0}")
        if self.h_l0 < 0:
            raise ValidationError(f"h_l0 must be >= 0, got {self.h_l0}")
        if self.f_n <= 0:
            raise ValidationError(f"f_n must be > 0, got {self.f_n}")
        if self.total_installed_pv < 0:
            raise ValidationError(
                f"total_installed_pv must be >= 0, got {self.total_installed_pv}"
            )


@dataclass(frozen=True)
class Substation:
    """One distribution substation participating in demand response.

    ``net_load`` is the measured feeder load, already offset by any
    distributed PV behind the substation (so it may be negative under
    back-feed).  ``load_gain`` maps the substation's reconstructed total
    load to an estimate of system load; ``rho`` is this substation's share
    of the total shed requirement.
    """

    id: str
    net_load: float  # MW, may be negative (PV back-feed)
    dist_pv_capacity: float  # MW
    irradiance: IrradianceSeries
    rho: float
    load_gain: float

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("substation id must be non-empty")
        if self.dist_pv_capacity < 0:
            raise ValidationError(
                f"substation {self.id}: dist_pv_capacity must be >= 0, "
                f"got {self.dist_pv_capacity}"
            )
        if not 0.0 <= self.rho <= 1.0:
            raise ValidationError(
                f"substation {self.id}: rho must lie in [0, 1], got {self.rho}"
            )
        if self.load_gain <= 0:
            raise ValidationError(
                f"substation {self.id}: load_gain must be > 0, got {self.load_gain}"
            )


@dataclass(frozen=True)
class ImbalanceEstimate:
    """A signed imbalance figure together with the inputs that produced it."""

    value: float  # MW, same sign as rocof
    h_system: float  # s
    mu_pv: float
    rocof: float  # Hz/s

    def __post_init__(self) -> None:
        if self.value * self.rocof < 0:
            raise ValidationError(
                f"imbalance ({self.value} MW) and rocof ({self.rocof} Hz/s) "
                "must share a sign"
            )

    @property
    def shed_requirement(self) -> float:
        """Nonnegative magnitude to shed; zero for over-frequency events."""
        return max(0.0, -self.value)


@dataclass(frozen=True)
class DrDecision:
    """Per-substation shed amounts plus their total, id-ordered."""

    per_substation: tuple[tuple[str, float], ...]
    total: float  # MW

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "per_substation", tuple((str(i), float(s)) for i, s in self.per_substation)
        )
        for sub_id, shed in self.per_substation:
            if shed < 0:
                raise ValidationError(f"substation {sub_id}: negative shed {shed} MW")
        if not _rel_close(self.total, sum(s for _, s in self.per_substation)):
            raise ValidationError(
                f"decision total {self.total} MW does not match the sum of "
                "per-substation sheds"
            )

    @classmethod
    def from_amounts(cls, amounts: dict[str, float]) -> "DrDecision":
        items = tuple(sorted(amounts.items()))
        return cls(items, float(sum(amounts.values())))


@dataclass(frozen=True)
class ErrorReport:
    """Decomposition of the aggregate DR error into local residuals.

    Each row is ``(substation id, e_pv, e_s, e_dr)``: the PV-output residual,
    the system-load residual (both true minus estimate, in MW), and the
    substation's resulting contribution to the total DR error.  The rows must
    sum to ``total_error``.
    """

    per_substation: tuple[tuple[str, float, float, float], ...]
    total_error: float  # MW

    def __post_init__(self) -> None:
        rows = tuple(
            (str(i), float(epv), float(es), float(edr))
            for i, epv, es, edr in self.per_substation
        )
        object.__setattr__(self, "per_substation", rows)
        if not _rel_close(self.total_error, sum(r[3] for r in rows)):
            raise ValidationError(
                f"total_error {self.total_error} MW does not match the sum of "
                "per-substation error contributions"
            )


def pv_penetration(total_pv_output: float, system_load: float) -> float:
    """Instantaneous PV penetration: output power over total system load."""
    if system_load <= 0:
        raise ValidationError(f"nonpositive system load: {system_load} MW")
    if total_pv_output < 0:
        raise ValidationError(f"negative PV output: {total_pv_output} MW")
    mu = total_pv_output / system_load
    if mu > 1.0:
        raise ValidationError(
            f"PV output exceeds load ({total_pv_output} MW > {system_load} MW)"
        )
    return mu


def system_inertia(params: SystemParams, mu_pv: float) -> float:
    """Aggregate inertia in seconds: generators discounted by PV penetration,
    plus the (undiscounted) load contribution."""
    if not 0.0 <= mu_pv <= 1.0:
        raise ValidationError(f"penetration out of range: {mu_pv}")
    return params.h_g0 * (1.0 - mu_pv) + params.h_l0


def imbalance_from_rocof(
    params: SystemParams, h_system: float, rocof: float, system_load: float
) -> float:
    """Signed power imbalance in MW implied by a measured ROCOF."""
    if system_load <= 0:
        raise ValidationError(f"nonpositive system load: {system_load} MW")
    if h_system <= 0:
        raise ValidationError(f"nonpositive system inertia: {h_system} s")
    return 2.0 * h_system * rocof / params.f_n * system_load


def imbalance_expanded(
    params: SystemParams, rocof: float, system_load: float, total_pv_output: float
) -> float:
    """Imbalance written directly in terms of load and PV output.

    Algebraically identical to composing :func:`pv_penetration`,
    :func:`system_inertia` and :func:`imbalance_from_rocof`; this form is
    what each substation can evaluate from purely local reconstructions.
    """
    if system_load <= 0:
        raise ValidationError(f"nonpositive system load: {system_load} MW")
    if total_pv_output < 0:
        raise ValidationError(f"negative PV output: {total_pv_output} MW")
    k = 2.0 * rocof / params.f_n
    return k * (params.h_g0 + params.h_l0) * system_load - k * params.h_g0 * total_pv_output


def estimate_imbalance(
    params: SystemParams, rocof: float, system_load: float, total_pv_output: float
) -> ImbalanceEstimate:
    """Bundle the full estimation chain into one record."""
    mu = pv_penetration(total_pv_output, system_load)
    h = system_inertia(params, mu)
    value = imbalance_from_rocof(params, h, rocof, system_load)
    return ImbalanceEstimate(value=value, h_system=h, mu_pv=mu, rocof=rocof)


def local_pv_estimate(params: SystemParams, curve: PvCurve, r_bar_i: float) -> float:
    """Substation-local estimate of system-wide PV output, in MW.

    The substation extrapolates from its own averaged irradiance reading:
    system PV output ≈ φ(local r̄) × total installed capacity.  The residual
    against the true output is attributed downstream, not here.
    """
    return pv_per_unit_output(curve, r_bar_i) * params.total_installed_pv


def substation_total_load(sub: Substation, curve: PvCurve, t: float) -> float:
    """Reconstructed gross load at the substation: measured net load plus
    the estimated output of its own distributed PV."""
    r_bar = moving_average(sub.irradiance, t, DEFAULT_AVERAGING_WINDOW_S)
    return sub.net_load + sub.dist_pv_capacity * pv_per_unit_output(curve, r_bar)


def local_system_load_estimate(sub: Substation, total_load_i: float) -> float:
    """Substation-local estimate of total system load, in MW."""
    if not np.isfinite(total_load_i):
        raise ValidationError(f"substation {sub.id}: non-finite total load")
    return sub.load_gain * total_load_i


def dr_amount_from_estimates(
    params: SystemParams,
    rho: float,
    rocof: float,
    system_load_est: float,
    pv_output_est: float,
) -> float:
    """Shed amount in MW given already-formed local estimates.

    This is the arithmetic core of :func:`dr_amount`, split out so tests and
    the error analysis can inject estimates directly.  Uses |ROCOF| and
    clamps at zero: shedding is only ever nonnegative.
    """
    k = 2.0 * abs(rocof) / params.f_n
    raw = rho * k * (
        (params.h_g0 + params.h_l0) * system_load_est - params.h_g0 * pv_output_est
    )
    return max(0.0, raw)


def dr_amount(
    sub: Substation, params: SystemParams, curve: PvCurve, rocof: float, t: float
) -> float:
    """Demand-response amount for one substation, from local measurements only."""
    r_bar = moving_average(sub.irradiance, t, DEFAULT_AVERAGING_WINDOW_S)
    load_est = local_system_load_estimate(sub, substation_total_load(sub, curve, t))
    pv_est = local_pv_estimate(params, curve, r_bar)
    return dr_amount_from_estimates(params, sub.rho, rocof, load_est, pv_est)


def decide_dr(
    subs: list[Substation], params: SystemParams, curve: PvCurve, rocof: float, t: float
) -> DrDecision:
    """Evaluate dr_amount across a fleet and assemble the id-ordered decision."""
    return DrDecision.from_amounts(
        {sub.id: dr_amount(sub, params, curve, rocof, t) for sub in subs}
    )


def total_dr_error(
    params: SystemParams,
    rocof: float,
    residuals: list[tuple[float, float, float]],
) -> float:
    """Aggregate DR error in MW from per-substation residuals.

    ``residuals`` holds one ``(rho_i, e_s_i, e_pv_i)`` triple per substation,
    where ``e_s`` is the system-load residual and ``e_pv`` the PV-output
    residual, both true-minus-estimate.  The result is signed with ``rocof``:
    for an under-frequency event (negative ROCOF), a positive load residual
    (under-estimated load) makes the result negative — the fleet sheds less
    than it should.
    """
    k = 2.0 * rocof / params.f_n
    sum_es = sum(rho * e_s for rho, e_s, _ in residuals)
    sum_epv = sum(rho * e_pv for rho, _, e_pv in residuals)
    return k * ((params.h_g0 + params.h_l0) * sum_es - params.h_g0 * sum_epv)


def build_error_report(
    params: SystemParams,
    rocof: float,
    rows: list[tuple[str, float, float, float]],
) -> ErrorReport:
    """Assemble an :class:`ErrorReport` from ``(id, rho, e_pv, e_s)`` rows.

    The per-substation contribution e_dr is each row's term of the aggregate
    error sum, so the report's total is exactly :func:`total_dr_error` on the
    same residuals.
    """
    k = 2.0 * rocof / params.f_n
    out = []
    for sub_id, rho, e_pv, e_s in sorted(rows):
        e_dr = k * rho * ((params.h_g0 + params.h_l0) * e_s - params.h_g0 * e_pv)
        out.append((sub_id, e_pv, e_s, e_dr))
    return ErrorReport(tuple(out), float(sum(r[3] for r in out)))
