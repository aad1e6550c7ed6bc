"""Grid frequency-response simulation with irradiance-aware distributed
demand response.

The package models how rising PV penetration erodes system inertia, how a
power imbalance can be estimated from ROCOF, and how substations can size
under-frequency demand response from purely local measurements — then
compares that distributed scheme against a conventional frozen-inertia UFLS
benchmark in a single-bus dynamic simulation.
"""

from .errors import PvfreqError, SimulationAbort, ValidationError
from .estimation import (
    DrDecision,
    ErrorReport,
    ImbalanceEstimate,
    Substation,
    SystemParams,
    build_error_report,
    decide_dr,
    dr_amount,
    dr_amount_from_estimates,
    estimate_imbalance,
    imbalance_expanded,
    imbalance_from_rocof,
    local_pv_estimate,
    local_system_load_estimate,
    pv_penetration,
    substation_total_load,
    system_inertia,
    total_dr_error,
)
from .pv import (
    DEFAULT_AVERAGING_WINDOW_S,
    MAX_IRRADIANCE_WM2,
    IrradianceSeries,
    PvCurve,
    PVPlant,
    moving_average,
    plant_output,
    pv_per_unit_output,
)
from .scenario import (
    ErrorInjection,
    FieldSpec,
    ScenarioConfig,
    SimSettings,
    SweepSpec,
    build_sweep,
    default_scenario,
    default_sweep,
    effective_substations,
    generate_irradiance_field,
    load_scenario,
    load_sweep,
    save_scenario,
    save_sweep,
    scenario_label,
    scenario_to_doc,
)
from .plotting import (
    render_frequency_svg,
    render_overlay_svg,
    render_shed_error_svg,
)
from .reporting import (
    COMPARISON_COLUMNS,
    CSV_VERSION,
    METRICS_COLUMNS,
    TRACE_COLUMNS,
    ComparisonReport,
    ComparisonRow,
    SchemeSummary,
    comparison_row,
    read_comparison_csv,
    read_metrics_csv,
    read_trace_csv,
    summary_text,
    write_comparison_csv,
    write_metrics_csv,
    write_trace_csv,
)
from .simulation import (
    ABORT_BAND_HZ,
    MAX_STEP_S,
    SCHEMES,
    Contingency,
    GovernorParams,
    GridState,
    RelayConfig,
    SimResult,
    SystemSnapshot,
    Trace,
    TriggerEvent,
    conventional_ufls_total,
    measure_rocof,
    proposed_dr_total,
    relay_check,
    run_simulation,
    step,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
