//! Scenario files: schema, parsing with located diagnostics, and semantic
//! validation.

mod parse;
mod schema;
mod validate;

use std::collections::BTreeMap;

use crate::mobility::MobilityTrace;

pub use parse::{load_scenario, parse_scenario, parse_scenario_with_report, serialize_scenario, LoadError};
pub use schema::*;
pub use validate::{validate_scenario, Diagnostic, Location, Severity, ValidationReport};

impl ScenarioDescription {
    /// Mobility traces keyed by id. Assumes a validated scenario.
    pub fn mobility_traces(&self) -> BTreeMap<String, MobilityTrace> {
        self.traces.iter().filter_map(|t| t.to_trace().ok().map(|tr| (t.id.clone(), tr))).collect()
    }
}
