//! TOML run configuration. Every key is optional; command-line flags take
//! precedence over the file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use texflow::FixtureParams;

pub const OUT_ENV: &str = "TEXFLOW_OUT";
pub const DEFAULT_OUT: &str = "texflow-out";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub fixture: FixtureSection,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub separate: SeparateSection,
    #[serde(default)]
    pub falsify: FalsifySection,
    #[serde(default)]
    pub census: CensusSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub tolerance: ToleranceSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSection {
    pub id: Option<String>,
    #[serde(default)]
    pub params: FixtureParams,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub mode: Option<String>,
    pub t_grid: Option<Vec<f64>>,
    pub t_max: Option<usize>,
    pub dt: Option<f64>,
    pub eps: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparateSection {
    pub t: Option<f64>,
    pub delta: Option<f64>,
    pub dt: Option<f64>,
    pub which: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalsifySection {
    pub notion: Option<String>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub iterations: Option<u64>,
    pub pair_samples: Option<usize>,
    pub pair_budget: Option<u64>,
    pub knot_count: Option<usize>,
    pub window: Option<f64>,
    pub dt: Option<f64>,
    pub restarts: Option<usize>,
    pub expect: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusSection {
    pub t_max: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub a: Option<f64>,
    pub slack: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub absolute: Option<f64>,
    pub relative: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// `--out`, then the config file, then `TEXFLOW_OUT`, then `texflow-out`.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.out.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let err = RunConfig::parse("seed = 1\n[estimate]\nmode = \"classical\"\nbogus = 3\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn nested_fixture_params() {
        let c = RunConfig::parse("[fixture]\nid = \"suspension\"\n[fixture.params]\nadjacency = [[1, 1], [1, 0]]\nroof = 2.0\n")
            .unwrap();
        assert_eq!(c.fixture.params.roof, Some(2.0));
        assert_eq!(c.fixture.params.adjacency.unwrap()[1], vec![1, 0]);
    }
}
