//! Prior-predictive probability of a conclusive trial.

use serde::{Deserialize, Serialize};

use super::{replicate_map, Estimate};
use crate::error::{Error, Result};
use crate::inference::sample_beta;
use crate::model::{ArmTruth, Scenario, TrialDesign, REFERENCE_OVER_FRACTIONS};
use crate::rng::{Purpose, StreamKey};
use crate::trial::{simulate_trial, Decision};

/// Arm truths relative to a prior draw of `p_D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RrScenario {
    pub id: String,
    /// Per-arm multiplier on `p_D`.
    pub relative_risks: Vec<f64>,
    /// Per-arm over-sedated share of the inadequately sedated.
    pub over_fractions: Vec<f64>,
}

impl RrScenario {
    pub fn validate(&self, n_arms: usize) -> Result<()> {
        let field = format!("power scenario {}", self.id);
        if self.relative_risks.len() != n_arms || self.over_fractions.len() != n_arms {
            return Err(Error::invalid(field, format!("needs {n_arms} relative risks and over fractions")));
        }
        if self.relative_risks.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::invalid(field, "relative risks must be > 0"));
        }
        if self.over_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::invalid(field, "over fractions must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn realise(&self, p_comparator: f64, p_novel: f64) -> Result<Scenario> {
        let arms = self
            .relative_risks
            .iter()
            .zip(&self.over_fractions)
            .map(|(&rr, &f)| ArmTruth::from_adequate((rr * p_novel).clamp(0.0, 1.0), f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            id: self.id.clone(),
            description: String::new(),
            p_comparator,
            arms,
        })
    }
}

/// Scenarios A, B and C for the reference doses (2-4, 3-3, 4-2).
pub fn table2_scenarios() -> Vec<RrScenario> {
    [("A", [0.95, 1.0, 0.9]), ("B", [0.98, 1.0, 0.95]), ("C", [1.0, 1.05, 0.95])]
        .into_iter()
        .map(|(id, rr)| RrScenario {
            id: id.into(),
            relative_risks: rr.to_vec(),
            over_fractions: REFERENCE_OVER_FRACTIONS.to_vec(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub scenario_id: String,
    pub replicates: usize,
    pub p_conclusive: Estimate,
    pub p_noninferior: Estimate,
    pub p_superior: Estimate,
    pub simplex_violations: usize,
}

pub fn predictive_power(
    design: &TrialDesign,
    scenarios: &[RrScenario],
    replicates: usize,
    root: &StreamKey,
) -> Result<Vec<PowerRow>> {
    design.validate()?;
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be positive"));
    }
    let key = root.purpose(Purpose::Replicate);
    scenarios
        .iter()
        .map(|rr| {
            rr.validate(design.n_arms())?;
            let results = replicate_map(&key, replicates, |_, s| {
                let mut rng = s.purpose(Purpose::PriorPredictive).rng();
                let p_c = sample_beta(design.priors.comparator, 1, &mut rng)[0];
                let p_d = sample_beta(design.priors.novel_direct, 1, &mut rng)[0];
                let sc = rr.realise(p_c, p_d)?;
                let r = simulate_trial(design, &sc, s)?;
                Ok((r.decision, r.simplex_violations))
            })?;
            let count = |d: Decision| results.iter().filter(|r| r.0 == d).count();
            let ni = count(Decision::NonInferior);
            let sup = count(Decision::ComparatorSuperior);
            Ok(PowerRow {
                scenario_id: rr.id.clone(),
                replicates,
                p_conclusive: Estimate::proportion(ni + sup, replicates),
                p_noninferior: Estimate::proportion(ni, replicates),
                p_superior: Estimate::proportion(sup, replicates),
                simplex_violations: results.iter().map(|r| r.1).sum(),
            })
        })
        .collect()
}
