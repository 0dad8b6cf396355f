"""Cognitive massive-MIMO radar simulator.

Closed loop: synthesize array snapshots in heavy-tailed clutter, run a
scale-invariant per-bin detector, score detections against the scenario truth,
let a SARSA agent (or a fixed baseline) pick how many beams to spend, adapt
the exploration and learning rates from the reward trend, and focus the next
transmission accordingly.
"""

from .arrays import (
    AngularGrid,
    ArrayGeometry,
    WeightMatrix,
    make_grid,
    steering_vector,
    transmit_beampattern,
    virtual_response,
)
from .beamformer import FocusRequest, focused_weights, orthogonal_weights, power_used
from .clutter import (
    ClutterModel,
    ar_autocovariance,
    clutter_power,
    default_clutter_model,
    gen_clutter,
    innovation_variance,
)
from .detector import (
    CovarianceEstimate,
    DetectionReport,
    build_report,
    estimate_covariance,
    estimate_pd,
    quadratic_form,
    threshold,
    wald_statistic,
    wald_statistics_factored,
)
from .environment import PulseStream, synthesize_snapshot, target_amplitude
from .harness import (
    ADAPT_MODES,
    CONTROLLER_KINDS,
    METRICS_HEADER,
    RECORDS_HEADER,
    AggregateMetrics,
    RunConfig,
    StepRecord,
    aggregate_records,
    derive_trial_seed,
    emit_csv,
    parse_metrics_csv,
    parse_records_csv,
    preset,
    resolve_scenario,
    run_h0_campaign,
    run_monte_carlo,
    run_trial,
    write_manifest,
)
from .rl import (
    ALPHA_ADAPT,
    EPS_ADAPT,
    POLICY_KINDS,
    AdaptSpec,
    AgentTrace,
    HyperParamState,
    adapt_hyperparam,
    baseline_action,
    greedy_action,
    initial_q,
    omega_set,
    reward,
    sarsa_update,
    select_action,
)
from .scenarios import (
    Scenario,
    SnrSchedule,
    TargetSpec,
    load_scenario,
    scenario_from_dict,
    scenario_library,
    scenario_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # arrays
    "ArrayGeometry",
    "AngularGrid",
    "WeightMatrix",
    "make_grid",
    "steering_vector",
    "virtual_response",
    "transmit_beampattern",
    # clutter
    "ClutterModel",
    "default_clutter_model",
    "innovation_variance",
    "gen_clutter",
    "ar_autocovariance",
    "clutter_power",
    # scenarios
    "SnrSchedule",
    "TargetSpec",
    "Scenario",
    "scenario_library",
    "scenario_to_dict",
    "scenario_from_dict",
    "load_scenario",
    # environment
    "PulseStream",
    "target_amplitude",
    "synthesize_snapshot",
    # detector
    "CovarianceEstimate",
    "DetectionReport",
    "estimate_covariance",
    "quadratic_form",
    "wald_statistic",
    "wald_statistics_factored",
    "threshold",
    "estimate_pd",
    "build_report",
    # beamformer
    "FocusRequest",
    "orthogonal_weights",
    "focused_weights",
    "power_used",
    # rl
    "AdaptSpec",
    "EPS_ADAPT",
    "ALPHA_ADAPT",
    "POLICY_KINDS",
    "HyperParamState",
    "AgentTrace",
    "initial_q",
    "greedy_action",
    "select_action",
    "sarsa_update",
    "omega_set",
    "reward",
    "adapt_hyperparam",
    "baseline_action",
    # harness
    "CONTROLLER_KINDS",
    "ADAPT_MODES",
    "METRICS_HEADER",
    "RECORDS_HEADER",
    "RunConfig",
    "StepRecord",
    "AggregateMetrics",
    "preset",
    "resolve_scenario",
    "derive_trial_seed",
    "run_trial",
    "run_monte_carlo",
    "aggregate_records",
    "emit_csv",
    "parse_metrics_csv",
    "parse_records_csv",
    "write_manifest",
    "run_h0_campaign",
]
