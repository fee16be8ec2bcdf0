//! Response-adaptive randomisation: probability-of-best weights, the gamma drop
//! rule and the two-stage per-participant allocation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{beta_posterior, prob_best, prob_best_beta, sample_beta};
use crate::model::{BetaPrior, OutcomeTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomisationState {
    /// 1-based trial period these probabilities apply to.
    pub period_index: usize,
    pub active_probs: Vec<f64>,
    /// Arms zeroed by the drop rule for this period.
    pub dropped: Vec<bool>,
}

impl RandomisationState {
    pub fn initial(n_arms: usize) -> Result<Self> {
        Ok(Self {
            period_index: 1,
            active_probs: initial_probs(n_arms)?,
            dropped: vec![false; n_arms],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodAllocation {
    pub comparator_n: u32,
    pub arm_ns: Vec<u32>,
    pub period_n: u32,
}

/// Uniform first-period probabilities (every arm shares one prior).
pub fn initial_probs(n_arms: usize) -> Result<Vec<f64>> {
    if n_arms < 2 {
        return Err(Error::invalid(
            "doses",
            format!("randomisation needs at least two arms, got {n_arms}"),
        ));
    }
    Ok(vec![1.0 / n_arms as f64; n_arms])
}

/// Zeroes every entry `<= gamma` and renormalises the rest.
///
/// If every entry is `<= gamma` (possible only when gamma equals `1/k` and the
/// vector is uniform), the entries attaining the maximum are kept.
pub fn apply_drop_rule(raw_probs: &[f64], gamma: f64) -> (Vec<f64>, Vec<bool>) {
    let mut dropped: Vec<bool> = raw_probs.iter().map(|&p| p <= gamma).collect();
    if dropped.iter().all(|&d| d) {
        let max = raw_probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        dropped = raw_probs.iter().map(|&p| p < max).collect();
    }
    let kept: f64 = raw_probs
        .iter()
        .zip(&dropped)
        .filter(|(_, &d)| !d)
        .map(|(p, _)| p)
        .sum();
    let probs = raw_probs
        .iter()
        .zip(&dropped)
        .map(|(&p, &d)| if d { 0.0 } else { p / kept })
        .collect();
    (probs, dropped)
}

/// Per-arm conjugate posteriors of adequate sedation under a shared prior.
pub fn interim_posteriors(prior: BetaPrior, counts: &OutcomeTable) -> Vec<BetaPrior> {
    (0..counts.arm_counts.len())
        .map(|i| {
            let (a, f) = counts.arm_binary(i);
            beta_posterior(prior, a, f)
        })
        .collect()
}

/// Interim update from posterior draws, as used inside simulated trials.
pub fn interim_update_sampled<R: Rng + ?Sized>(
    prior: BetaPrior,
    counts: &OutcomeTable,
    gamma: f64,
    n_draws: usize,
    next_period: usize,
    rng: &mut R,
) -> (Vec<f64>, RandomisationState) {
    let draws: Vec<Vec<f64>> = interim_posteriors(prior, counts)
        .into_iter()
        .map(|p| sample_beta(p, n_draws, rng))
        .collect();
    let raw = prob_best(&draws);
    let (active_probs, dropped) = apply_drop_rule(&raw, gamma);
    (
        raw,
        RandomisationState {
            period_index: next_period,
            active_probs,
            dropped,
        },
    )
}

/// Deterministic interim update using exact probability-of-best integrals.
pub fn interim_update_exact(
    prior: BetaPrior,
    counts: &OutcomeTable,
    gamma: f64,
    next_period: usize,
) -> (Vec<f64>, RandomisationState) {
    let raw = prob_best_beta(&interim_posteriors(prior, counts));
    let (active_probs, dropped) = apply_drop_rule(&raw, gamma);
    (
        raw,
        RandomisationState {
            period_index: next_period,
            active_probs,
            dropped,
        },
    )
}

/// Two-stage randomisation of `period_n` participants. Each participant first
/// draws a dose arm from `probs`, then independently receives the active
/// combination with probability `1 - r0`; the rest receive the comparator.
pub fn allocate_period<R: Rng + ?Sized>(
    period_n: u32,
    probs: &[f64],
    r0: f64,
    rng: &mut R,
) -> PeriodAllocation {
    debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let r1 = 1.0 - r0;
    let last_open = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut arm_ns = vec![0u32; probs.len()];
    let mut comparator_n = 0;
    for _ in 0..period_n {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut arm = last_open;
        for (i, &p) in probs.iter().enumerate() {
            cum += p;
            if u < cum {
                arm = i;
                break;
            }
        }
        let v: f64 = rng.random();
        if v < r1 {
            arm_ns[arm] += 1;
        } else {
            comparator_n += 1;
        }
    }
    PeriodAllocation {
        comparator_n,
        arm_ns,
        period_n,
    }
}

/// True for each arm that was zeroed in some period and open again later.
pub fn reinstatement_check(history: &[RandomisationState]) -> Vec<bool> {
    let Some(first) = history.first() else {
        return Vec::new();
    };
    let k = first.active_probs.len();
    (0..k)
        .map(|i| {
            let mut was_zero = false;
            history.iter().any(|s| {
                let p = s.active_probs[i];
                if p == 0.0 {
                    was_zero = true;
                    false
                } else {
                    was_zero
                }
            })
        })
        .collect()
}
