//! JSON report envelope shared by every command.

use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{to_json, write_atomic};

pub const TOOL: &str = "churnsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a, T> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub config_hash: String,
    pub config: &'a RunConfig,
    pub result: &'a T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, config: &'a RunConfig, result: &'a T) -> Self {
        Report {
            tool: TOOL,
            version: VERSION,
            command,
            seed: config.seed,
            config_hash: config.hash(),
            config,
            result,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        to_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_carries_provenance() {
        let config = RunConfig::parse("seed = 42").unwrap();
        let bytes = Report::new("simulate", &config, &vec![0.5f64])
            .to_bytes()
            .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["command"], "simulate");
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["config_hash"], config.hash());
        assert_eq!(v["result"][0].as_f64(), Some(0.5));
    }

    #[test]
    fn non_finite_numbers_become_null() {
        let config = RunConfig::default();
        let bytes = Report::new("x", &config, &vec![f64::NAN])
            .to_bytes()
            .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert!(v["result"][0].is_null());
    }
}
