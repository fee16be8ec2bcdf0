//! Decision-threshold calibration from the simulated distribution of `y`.

use serde::{Deserialize, Serialize};

use super::{order_statistic, replicate_map};
use crate::error::{Error, Result};
use crate::model::{lambda_scenario, Scenario, TrialDesign, REFERENCE_P_COMPARATOR};
use crate::rng::{Purpose, StreamKey};
use crate::trial::simulate_trial;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    pub p_comparator: f64,
    /// Optimal-arm adequate-sedation probability of the superiority scenario.
    pub superiority_p_optimal: f64,
    /// Target probability of declaring non-inferiority under the null.
    pub type1_error: f64,
    /// Target probability of declaring comparator superiority.
    pub superiority_rate: f64,
    pub replicates: usize,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        Self {
            p_comparator: REFERENCE_P_COMPARATOR,
            superiority_p_optimal: 0.78,
            type1_error: 0.05,
            superiority_rate: 0.5,
            replicates: 7000,
        }
    }
}

impl LambdaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("lambda.p_comparator", self.p_comparator),
            ("lambda.superiority_p_optimal", self.superiority_p_optimal),
            ("lambda.type1_error", self.type1_error),
            ("lambda.superiority_rate", self.superiority_rate),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::invalid(name, format!("must lie in (0, 1), got {p}")));
            }
        }
        if self.replicates == 0 {
            return Err(Error::invalid("lambda.replicates", "must be positive"));
        }
        Ok(())
    }

    /// Null scenario: the optimal arm sits exactly at the margin.
    pub fn null_scenario(&self, ni_margin: f64) -> Scenario {
        lambda_scenario("null", self.p_comparator, self.p_comparator - ni_margin)
    }

    pub fn superiority_scenario(&self) -> Scenario {
        lambda_scenario("superiority", self.p_comparator, self.superiority_p_optimal)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub quantile: f64,
    pub estimate: f64,
    /// Half the gap between the order statistics one binomial SE either side.
    pub stderr: f64,
    pub replicates: usize,
    #[serde(skip)]
    pub y_values: Vec<f64>,
}

/// Simulates complete trials under `scenario` and returns the empirical
/// `quantile` of `y` (order statistic `ceil(q n)`).
pub fn calibrate_threshold(
    design: &TrialDesign,
    scenario: &Scenario,
    quantile: f64,
    replicates: usize,
    root: &StreamKey,
) -> Result<ThresholdEstimate> {
    design.validate()?;
    scenario.validate(design.n_arms())?;
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be positive"));
    }
    let ys = replicate_map(&root.purpose(Purpose::Replicate), replicates, |_, s| {
        Ok(simulate_trial(design, scenario, s)?.y_stat)
    })?;
    let mut sorted = ys.clone();
    let estimate = order_statistic(&mut sorted, quantile);
    let n = replicates as f64;
    let spread = (quantile * (1.0 - quantile) / n).sqrt();
    let lo = order_statistic(&mut sorted, (quantile - spread).max(0.0));
    let hi = order_statistic(&mut sorted, (quantile + spread).min(1.0));
    Ok(ThresholdEstimate {
        quantile,
        estimate,
        stderr: (hi - lo) / 2.0,
        replicates,
        y_values: ys,
    })
}

/// λ1: the `type1_error` quantile of `y` under the null scenario.
pub fn calibrate_lambda1(design: &TrialDesign, cfg: &LambdaConfig, root: &StreamKey) -> Result<ThresholdEstimate> {
    cfg.validate()?;
    let sc = cfg.null_scenario(design.ni_margin);
    calibrate_threshold(design, &sc, cfg.type1_error, cfg.replicates, &root.child(1))
}

/// λ2: the `1 - superiority_rate` quantile of `y` under the superiority scenario.
pub fn calibrate_lambda2(design: &TrialDesign, cfg: &LambdaConfig, root: &StreamKey) -> Result<ThresholdEstimate> {
    cfg.validate()?;
    let sc = cfg.superiority_scenario();
    calibrate_threshold(design, &sc, 1.0 - cfg.superiority_rate, cfg.replicates, &root.child(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reference_design;

    #[test]
    fn null_scenario_sits_on_margin() {
        let cfg = LambdaConfig::default();
        let sc = cfg.null_scenario(0.178);
        assert!((sc.arms[1].p_adequate - 0.792).abs() < 1e-12);
        assert!((sc.arms[2].p_adequate - 0.742).abs() < 1e-12);
        assert!((sc.arms[0].p_adequate - 0.692).abs() < 1e-12);
        assert_eq!(sc.noninferior_arms(0.178), 0);
    }

    #[test]
    fn equal_truths_give_small_median_y() {
        let mut design = reference_design();
        design.sampler.n_draws = 500;
        design.sampler.n_burnin = 500;
        let sc = lambda_scenario("eq", 0.97, 0.97 - 1e-9);
        let est = calibrate_threshold(&design, &sc, 0.5, 20, &StreamKey::root(5)).unwrap();
        assert!(est.estimate < 0.05, "{est:?}");
        assert_eq!(est.y_values.len(), 20);
    }
}
