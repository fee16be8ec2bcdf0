//! The JSON run configuration. Every section is optional and falls back to the
//! reference design; a section that is present must be complete.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{table2_scenarios, AlcConfig, GammaConfig, LambdaConfig, RrScenario};
use crate::error::{Error, Result};
use crate::model::{gamma_scenario, reference_design, table1_scenarios, Scenario, TrialDesign};
use crate::DEFAULT_SEED;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub scenarios: Vec<RrScenario>,
    pub replicates: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            scenarios: table2_scenarios(),
            replicates: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Replicates per scenario for `oc` and `simulate`.
    pub replicates: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            replicates: 7000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "reference_design")]
    pub design: TrialDesign,
    #[serde(default = "table1_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default = "gamma_scenario")]
    pub gamma_scenario: Scenario,
    #[serde(default)]
    pub alc: AlcConfig,
    #[serde(default)]
    pub gamma: GammaConfig,
    #[serde(default)]
    pub lambda: LambdaConfig,
    #[serde(default)]
    pub power: PowerConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            design: reference_design(),
            scenarios: table1_scenarios(),
            gamma_scenario: gamma_scenario(),
            alc: AlcConfig::default(),
            gamma: GammaConfig::default(),
            lambda: LambdaConfig::default(),
            power: PowerConfig::default(),
            run: RunConfig::default(),
        }
    }
}

impl Config {
    /// Parses and validates. Parse errors carry serde's field name and line/column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        let k = self.design.n_arms();
        let mut ids = HashSet::new();
        for sc in &self.scenarios {
            sc.validate(k)?;
            if !ids.insert(sc.id.as_str()) {
                return Err(Error::invalid("scenarios", format!("duplicate id {:?}", sc.id)));
            }
        }
        self.gamma_scenario.validate(k)?;
        self.alc.validate()?;
        self.gamma.validate(k)?;
        self.lambda.validate()?;
        for rr in &self.power.scenarios {
            rr.validate(k)?;
        }
        if self.power.replicates == 0 || self.run.replicates == 0 {
            return Err(Error::invalid("replicates", "must be positive"));
        }
        Ok(())
    }

    /// Canonical pretty JSON of the resolved configuration.
    pub fn echo(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }

    /// SHA-256 of [`Config::echo`], hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }
}
