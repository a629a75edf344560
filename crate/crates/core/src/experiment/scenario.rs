//! Scenarios bundled with the binary.

use super::config::{parse_config_str, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub name: &'static str,
    pub file: &'static str,
    /// Whether the tracking error is expected to settle over the horizon.
    pub converges: bool,
    pub source: &'static str,
}

impl Scenario {
    pub fn config(&self) -> ScenarioConfig {
        parse_config_str(self.source)
            .unwrap_or_else(|e| panic!("bundled scenario {} is invalid: {e}", self.file))
    }

    pub fn description(&self) -> String {
        self.config().description.unwrap_or_default()
    }
}

macro_rules! bundled {
    ($name:literal, $file:literal, $converges:literal) => {
        Scenario {
            name: $name,
            file: $file,
            converges: $converges,
            source: include_str!(concat!("../../scenarios/", $file)),
        }
    };
}

pub const SCENARIOS: &[Scenario] = &[
    bundled!("sim", "scenario_sim.cfg", true),
    bundled!("experiment-ref1", "experiment_ref1.cfg", false),
    bundled!("experiment-ref2", "experiment_ref2.cfg", false),
    bundled!("lemma1-baseline", "lemma1_baseline.cfg", true),
    bundled!("energy-frictionless", "energy_frictionless.cfg", false),
    bundled!("adversarial-desingularization", "adversarial_desingularization.cfg", false),
];

/// Looks a scenario up by name or by file name.
pub fn find_scenario(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name || s.file == name)
}
