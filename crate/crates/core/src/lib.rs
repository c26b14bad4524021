//! Discrete-event simulation of on-demand private 5G networks built from
//! mobile cells.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod metrics;
pub mod mobility;
pub mod protocol;
pub mod radio;
pub mod scenario;
pub mod splits;
pub mod topology;

pub use engine::{run_scenario, SimError, SimOutput, Simulation, TraceEvent, TraceLog, TraceRecord};
pub use metrics::MetricsBundle;
pub use mobility::{MobilityTrace, Position};
pub use protocol::{MessageKind, ProcedureKind, ProcedureState};
pub use radio::{LinkState, PathLossModel, RadioModel, RadioParams};
pub use scenario::{load_scenario, parse_scenario, validate_scenario, ScenarioDescription, ValidationReport};
pub use splits::{check_split_feasibility, Feasibility, SplitOption, SplitTable};
pub use topology::{build_topology, ElementId, LinkId, McId, Topology, TopologyError};
