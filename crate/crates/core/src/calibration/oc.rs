//! Decision frequencies under fixed true scenarios.

use serde::{Deserialize, Serialize};

use super::{replicate_map, Estimate};
use crate::error::{Error, Result};
use crate::model::{Scenario, TrialDesign};
use crate::rng::{Purpose, StreamKey};
use crate::trial::{simulate_trial, Decision};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcRow {
    pub scenario_id: String,
    pub replicates: usize,
    pub p_noninferior: Estimate,
    pub p_inconclusive: Estimate,
    pub p_superior: Estimate,
    /// Non-inferiority declared for the truly best arm. `None` when no arm is
    /// truly non-inferior.
    pub p_noninferior_and_correct: Option<Estimate>,
    pub mean_arm_n: Vec<f64>,
    pub simplex_violations: usize,
}

/// Replicate `k` uses the same streams in every scenario.
pub fn operating_characteristics(
    design: &TrialDesign,
    scenarios: &[Scenario],
    replicates: usize,
    root: &StreamKey,
) -> Result<Vec<OcRow>> {
    design.validate()?;
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be positive"));
    }
    let key = root.purpose(Purpose::Replicate);
    scenarios
        .iter()
        .map(|sc| {
            sc.validate(design.n_arms())?;
            let best = sc.best_arm();
            let results = replicate_map(&key, replicates, |_, s| {
                let r = simulate_trial(design, sc, s)?;
                Ok((r.decision, r.selected_arm, r.arm_totals(), r.simplex_violations))
            })?;
            let count = |d: Decision| results.iter().filter(|r| r.0 == d).count();
            let joint = results
                .iter()
                .filter(|r| r.0 == Decision::NonInferior && r.1 == best)
                .count();
            let mut mean_arm_n = vec![0.0; design.n_arms()];
            for r in &results {
                for (m, &n) in mean_arm_n.iter_mut().zip(&r.2) {
                    *m += n as f64 / replicates as f64;
                }
            }
            Ok(OcRow {
                scenario_id: sc.id.clone(),
                replicates,
                p_noninferior: Estimate::proportion(count(Decision::NonInferior), replicates),
                p_inconclusive: Estimate::proportion(count(Decision::Inconclusive), replicates),
                p_superior: Estimate::proportion(count(Decision::ComparatorSuperior), replicates),
                p_noninferior_and_correct: (sc.noninferior_arms(design.ni_margin) > 0)
                    .then(|| Estimate::proportion(joint, replicates)),
                mean_arm_n,
                simplex_violations: results.iter().map(|r| r.3).sum(),
            })
        })
        .collect()
}
