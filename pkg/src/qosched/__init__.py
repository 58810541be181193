"""QoS-aware slotted scheduling simulator for a wireless base station."""

from .arrivals import (
    AimdSourceSpec,
    BurstySourceSpec,
    FeedbackChannel,
    aimd_step,
    sample_bursty,
    sample_poisson,
)
from .bounds import BoundSet, UndefinedBound, compute_bounds, drift_constants
from .engine import (
    BoundViolation,
    MetricsReport,
    RunResult,
    check_invariants,
    run,
    update_data_queue,
    update_persistent_queue,
    update_virtual_queue,
)
from .model import (
    AdmissionViolation,
    ChannelModel,
    FlowConfig,
    FlowState,
    InvalidParameter,
    MissingDropCap,
    Packet,
    PacketQueue,
    ScenarioError,
    ScenarioSpec,
    SlotDecision,
    load_scenario,
    save_scenario,
    scenario_errors,
    scenario_from_json,
    scenario_to_json,
    validate_scenario,
)
from .policies import (
    FlowSnapshot,
    InstanceTooLarge,
    MissingArrivalCount,
    PolicyInput,
    PolicyOutput,
    drift_objective,
    drop_pi_bar,
    drop_pi_hat,
    oracle_min_drift,
    sra_allocate,
    step_pi_static,
    step_policy,
)

__version__ = "0.1.0"
