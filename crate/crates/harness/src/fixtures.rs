//! Experiment configs shipped with the binary.

use crate::config::{ExperimentConfig, Scale};

/// A named config embedded at build time.
#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub json: &'static str,
}

macro_rules! fixture {
    ($name:literal) => {
        Fixture {
            name: $name,
            json: include_str!(concat!("../fixtures/", $name, ".json")),
        }
    };
}

pub const FIXTURES: [Fixture; 7] = [
    fixture!("bimodal16"),
    fixture!("sevenmode16"),
    fixture!("highdim1000"),
    fixture!("highdim3000"),
    fixture!("highdim5000"),
    fixture!("highdim7000"),
    fixture!("scaled200"),
];

pub fn find(name: &str) -> Option<Fixture> {
    let name = name.strip_suffix(".json").unwrap_or(name);
    FIXTURES.iter().copied().find(|f| f.name == name)
}

impl Fixture {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::parse(self.json).unwrap_or_else(|e| panic!("fixture {} is invalid: {e}", self.name))
    }

    /// One line for `aiit fixtures`.
    pub fn listing(&self) -> String {
        let c = self.config();
        let scale = match c.scale {
            Scale::Desk => "desk",
            Scale::Full => "full, long-running",
        };
        format!(
            "{:<12} p={:<5} [{}] {}",
            self.name,
            c.target.p,
            scale,
            c.description.as_deref().unwrap_or("")
        )
    }
}
