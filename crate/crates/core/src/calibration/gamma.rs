//! Drop-threshold search: how often the truly best arm enrols the most participants.

use serde::{Deserialize, Serialize};

use super::{order_statistic, replicate_map, Estimate};
use crate::error::{Error, Result};
use crate::model::{Scenario, TrialDesign};
use crate::rng::{Purpose, StreamKey};
use crate::trial::simulate_enrolment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    pub gamma_grid: Vec<f64>,
    pub replicates: usize,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            gamma_grid: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            replicates: 7000,
        }
    }
}

impl GammaConfig {
    pub fn validate(&self, n_arms: usize) -> Result<()> {
        let cap = 1.0 / n_arms as f64;
        if self.gamma_grid.is_empty() || self.gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("gamma.gamma_grid", "must be non-empty and strictly increasing"));
        }
        if let Some(g) = self.gamma_grid.iter().find(|&&g| !(0.0..=cap).contains(&g)) {
            return Err(Error::invalid(
                "gamma.gamma_grid",
                format!("{g} outside [0, 1/{n_arms}]"),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("gamma.replicates", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub gamma: f64,
    /// Probability that the best arm receives strictly more participants than any other.
    pub p_plurality: Estimate,
    pub mean_best_arm_n: Estimate,
    /// Central 95% range of best-arm enrolment.
    pub best_arm_n_low: f64,
    pub best_arm_n_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    pub best_arm: usize,
    pub rows: Vec<GammaRow>,
    pub selected_gamma: f64,
}

/// Runs enrolment only (no final analysis) for each grid value. Replicate `k`
/// uses the same streams at every gamma.
pub fn gamma_search(
    design: &TrialDesign,
    scenario: &Scenario,
    cfg: &GammaConfig,
    root: &StreamKey,
) -> Result<GammaResult> {
    design.validate()?;
    scenario.validate(design.n_arms())?;
    cfg.validate(design.n_arms())?;
    let best = scenario.best_arm();
    let key = root.purpose(Purpose::Replicate);

    let mut rows = Vec::with_capacity(cfg.gamma_grid.len());
    for &gamma in &cfg.gamma_grid {
        let d = TrialDesign {
            drop_threshold: gamma,
            ..design.clone()
        };
        let totals = replicate_map(&key, cfg.replicates, |_, s| {
            Ok(simulate_enrolment(&d, scenario, s)?.arm_totals())
        })?;
        let wins = totals
            .iter()
            .filter(|t| t.iter().enumerate().all(|(i, &n)| i == best || n < t[best]))
            .count();
        let mut best_n: Vec<f64> = totals.iter().map(|t| t[best] as f64).collect();
        let mean = Estimate::mean(&best_n);
        let low = order_statistic(&mut best_n, 0.025);
        let high = order_statistic(&mut best_n, 0.975);
        rows.push(GammaRow {
            gamma,
            p_plurality: Estimate::proportion(wins, cfg.replicates),
            mean_best_arm_n: mean,
            best_arm_n_low: low,
            best_arm_n_high: high,
        });
    }

    // compare at the two-decimal precision the probabilities are reported with
    let rounded = |p: f64| (p * 100.0).round();
    let top = rows
        .iter()
        .map(|r| rounded(r.p_plurality.value))
        .fold(f64::NEG_INFINITY, f64::max);
    let selected_gamma = rows
        .iter()
        .find(|r| rounded(r.p_plurality.value) == top)
        .expect("grid is non-empty")
        .gamma;
    Ok(GammaResult {
        best_arm: best,
        rows,
        selected_gamma,
    })
}
