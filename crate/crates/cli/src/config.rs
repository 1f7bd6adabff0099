use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::output::Format;

/// Sweep parameters read from a TOML file. Command-line flags take precedence.
#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps0: Option<Vec<f64>>,
    pub targets: Option<Vec<f64>>,
    pub max_depth: Option<u32>,
    pub max_branch: Option<u32>,
    pub max_qubits: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c = SweepConfig::parse(
            "eps0 = [0.2, 0.3]\ntargets = [1e-3]\nmax_depth = 4\nformat = \"csv\"\n",
        )
        .unwrap();
        assert_eq!(c.eps0, Some(vec![0.2, 0.3]));
        assert_eq!(c.max_depth, Some(4));
        assert_eq!(c.format, Some(Format::Csv));
        assert!(c.max_qubits.is_none());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(SweepConfig::parse("eps0 = [0.2]\ntrials = 5\n").is_err());
    }
}
