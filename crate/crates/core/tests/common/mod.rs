#![allow(dead_code)]

use std::path::PathBuf;

use mobicell_core::{load_scenario, ScenarioDescription};

pub const SHIPPED: [&str; 5] = ["baseline_no_mc", "fig4_nosplit", "fig5_split2", "iab_overlay", "iab_direct_bap"];

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

pub fn shipped_text(name: &str) -> String {
    std::fs::read_to_string(scenario_path(name)).unwrap()
}

pub fn shipped(name: &str) -> ScenarioDescription {
    load_scenario(&scenario_path(name)).unwrap()
}
