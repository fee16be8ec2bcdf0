use serde::{Deserialize, Serialize};

use crate::model::{expit, ArmTruth, DoseCombination};

/// Regression coefficients `[b0, b1, b2, ba, bb, bc]`: under-sedation intercept and
/// log-dose slopes, then the same for over-sedation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BetaVector(pub [f64; 6]);

impl BetaVector {
    pub const DIM: usize = 6;

    pub fn new(b0: f64, b1: f64, b2: f64, ba: f64, bb: f64, bc: f64) -> Self {
        Self([b0, b1, b2, ba, bb, bc])
    }

    pub fn under(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn over(&self) -> [f64; 3] {
        [self.0[3], self.0[4], self.0[5]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|b| b.is_finite())
    }
}

/// The implied under + over mass leaves no room for adequate sedation, or an
/// entry rounded to 0 or 1 in floating point.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("dose-response probabilities leave the simplex: p_under={p_under}, p_over={p_over}")]
pub struct SimplexViolation {
    pub p_under: f64,
    pub p_over: f64,
}

fn dot3(a: [f64; 3], x: [f64; 3]) -> f64 {
    a[0] * x[0] + a[1] * x[1] + a[2] * x[2]
}

/// Outcome probabilities at covariates `[1, ln A, ln B]`.
pub(crate) fn probs_at(beta: &BetaVector, x: [f64; 3]) -> Result<ArmTruth, SimplexViolation> {
    let p_under = expit(dot3(beta.under(), x));
    let p_over = expit(dot3(beta.over(), x));
    let p_adequate = 1.0 - p_under - p_over;
    if p_adequate > 0.0 && p_adequate < 1.0 && p_under > 0.0 && p_over > 0.0 {
        Ok(ArmTruth {
            p_under,
            p_adequate,
            p_over,
        })
    } else {
        Err(SimplexViolation { p_under, p_over })
    }
}

/// Two independent logit models on log-dose; adequate sedation takes the rest.
pub fn dose_response_probs(
    beta: &BetaVector,
    dose: &DoseCombination,
) -> Result<ArmTruth, SimplexViolation> {
    probs_at(beta, dose.covariates())
}

/// Multinomial log-likelihood without the normalising constant.
/// Zero counts contribute nothing, whatever the probability.
pub fn multinomial_loglik(counts: [u32; 3], probs: &ArmTruth) -> f64 {
    counts
        .iter()
        .zip(probs.as_array())
        .filter(|(&c, _)| c > 0)
        .map(|(&c, p)| c as f64 * p.ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::logit;

    #[test]
    fn prior_location_gives_093() {
        let b = BetaVector::new(logit(0.05), 0.0, 0.0, logit(0.02), 0.0, 0.0);
        for d in crate::model::reference_doses() {
            let p = dose_response_probs(&b, &d).unwrap();
            assert!((p.p_under - 0.05).abs() < 1e-12);
            assert!((p.p_adequate - 0.93).abs() < 1e-12);
            assert!((p.p_over - 0.02).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coefficients_violate_simplex() {
        let b = BetaVector::default();
        let d = DoseCombination::new("1-1", 1.0, 1.0);
        let e = dose_response_probs(&b, &d).unwrap_err();
        assert_eq!((e.p_under, e.p_over), (0.5, 0.5));
    }

    #[test]
    fn slope_on_ketamine() {
        // expit(logit(0.05) + ln 2):
        // odds 0.05/0.95 doubled -> p = (2/19) / (1 + 2/19) = 2/21
        let b = BetaVector::new(logit(0.05), 1.0, 0.0, logit(0.02), 0.0, 0.0);
        let d = DoseCombination::new("2-4", 2.0, 4.0);
        let p = dose_response_probs(&b, &d).unwrap();
        assert!((p.p_under - 2.0 / 21.0).abs() < 1e-12);
        assert!((p.p_under - 0.0952).abs() < 1e-4);
    }

    #[test]
    fn loglik_examples() {
        let p = ArmTruth::new(0.05, 0.93, 0.02).unwrap();
        assert_eq!(multinomial_loglik([0, 0, 0], &p), 0.0);
        assert!((multinomial_loglik([1, 0, 0], &p) - (-2.995732273553991)).abs() < 1e-12);
        // 2 ln 0.05 + 27 ln 0.93 + ln 0.02, evaluated at 30 digits
        let expected = -11.862896259076685;
        assert!((multinomial_loglik([2, 27, 1], &p) - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_count_ignores_zero_probability() {
        let p = ArmTruth {
            p_under: 0.0,
            p_adequate: 1.0,
            p_over: 0.0,
        };
        assert_eq!(multinomial_loglik([0, 5, 0], &p), 0.0);
    }
}
