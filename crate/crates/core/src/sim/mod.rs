//! Fixed-step scenario runner.
//!
//! A [`Scenario`] wires identified vertical-velocity plants, their
//! controllers and a communication graph; [`run_scenario`] steps it
//! deterministically and returns a [`TraceLog`]. Metrics and the five
//! experiment presets live alongside.

mod engine;
mod metrics;
mod presets;
mod scenario;
mod trace;

pub use engine::{disturbance_sequence, reference_model, resolve_pid_gains, run_scenario, DIVERGENCE_LIMIT};
pub use metrics::{
    agent_metrics, read_metrics_csv, rms, sample_variance, step_edges, step_metrics, step_responses,
    write_metrics_csv, Metrics, MetricsRow, StepResponse, SETTLING_BAND,
};
pub use presets::{preset, PresetInfo, PAYLOAD_GRAMS, PRESETS};
pub use scenario::{
    AgentSpec, ControllerSpec, DisturbanceSpec, MassStep, PidTarget, ReferenceSignal, Scenario, ValidatedScenario,
    DEFAULT_GAMMA, SCHEMA_VERSION,
};
pub use trace::{AgentTrace, TraceLog};
