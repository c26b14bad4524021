//! Event queue, run loop and trace output.

mod latency;
mod queue;
mod sim;
mod trace;

pub use latency::{hop_label, message_latency, min_capacity, HopQuality, LatencyError};
pub use queue::EventQueue;
pub use sim::{run_scenario, SimError, SimOutput, Simulation};
pub use trace::{TraceEvent, TraceLog, TraceRecord};
