//! One complete simulated trial: adaptive enrolment over the interim schedule,
//! the final dose-response fit, optimal-arm selection and the three-outcome
//! comparative-effectiveness decision.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{allocate_period, interim_update_sampled, PeriodAllocation, RandomisationState};
use crate::error::Result;
use crate::inference::{hpd_interval, noninferiority_stat, sample_dose_response, Interval, PosteriorDraws};
use crate::model::{argmax_first, ArmTruth, OutcomeTable, Scenario, TrialDesign};
use crate::rng::{Purpose, StreamKey};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    NonInferior,
    Inconclusive,
    ComparatorSuperior,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::NonInferior => "non_inferior",
            Decision::Inconclusive => "inconclusive",
            Decision::ComparatorSuperior => "comparator_superior",
        }
    }
}

/// `y <= lambda1` concludes non-inferiority, `y >= lambda2` comparator superiority.
pub fn decide(y: f64, lambda1: f64, lambda2: f64) -> Decision {
    if y <= lambda1 {
        Decision::NonInferior
    } else if y >= lambda2 {
        Decision::ComparatorSuperior
    } else {
        Decision::Inconclusive
    }
}

/// Per-participant categorical outcomes for one dose arm: `[under, adequate, over]`.
///
/// Each participant consumes exactly one uniform, with adequate sedation at the
/// bottom of the unit interval, so lowering `p_adequate` under a fixed stream
/// only ever turns adequate outcomes into inadequate ones.
pub fn generate_outcomes<R: Rng + ?Sized>(truth: &ArmTruth, n: u32, rng: &mut R) -> [u32; 3] {
    let mut counts = [0u32; 3];
    let a = truth.p_adequate;
    let au = a + truth.p_under;
    for _ in 0..n {
        let u: f64 = rng.random();
        if u < a {
            counts[1] += 1;
        } else if u < au {
            counts[0] += 1;
        } else {
            counts[2] += 1;
        }
    }
    counts
}

/// Comparator successes and failures.
pub fn generate_comparator<R: Rng + ?Sized>(p: f64, n: u32, rng: &mut R) -> (u32, u32) {
    let s = (0..n).filter(|_| rng.random::<f64>() < p).count() as u32;
    (s, n - s)
}

/// Arm with the largest posterior mean of adequate sedation, lowest index on ties.
pub fn select_optimal(draws: &PosteriorDraws) -> usize {
    select_from_means(&draws.mean_adequate())
}

pub fn select_from_means(means: &[f64]) -> usize {
    argmax_first(means.iter().copied())
}

/// Enrolment history of one trial, before the final analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrolmentTrace {
    pub allocations: Vec<PeriodAllocation>,
    /// Probabilities in force during each period (`rand_history[j]` for period j+1).
    pub rand_history: Vec<RandomisationState>,
    /// Raw probability-of-best values behind each interim update.
    pub raw_probs: Vec<Vec<f64>>,
    pub final_counts: OutcomeTable,
}

impl EnrolmentTrace {
    pub fn arm_totals(&self) -> Vec<u32> {
        (0..self.final_counts.arm_counts.len())
            .map(|i| self.final_counts.arm_total(i))
            .collect()
    }
}

/// Runs every enrolment period with interim updates between them.
///
/// Probabilities for period `j + 1` are computed only from data of periods `1..=j`.
pub fn simulate_enrolment(design: &TrialDesign, scenario: &Scenario, stream: &StreamKey) -> Result<EnrolmentTrace> {
    let k = design.n_arms();
    let periods = design.schedule.period_sizes();
    let mut state = RandomisationState::initial(k)?;
    let mut counts = OutcomeTable::empty(k);
    let mut allocations = Vec::with_capacity(periods.len());
    let mut rand_history = Vec::with_capacity(periods.len());
    let mut raw_probs = Vec::new();

    let alloc_key = stream.purpose(Purpose::Allocation);
    let arm_key = stream.purpose(Purpose::ArmOutcomes);
    let comp_key = stream.purpose(Purpose::ComparatorOutcomes);
    let interim_key = stream.purpose(Purpose::InterimDraws);

    for (j, &n_j) in periods.iter().enumerate() {
        let alloc = allocate_period(
            n_j,
            &state.active_probs,
            design.comparator_fraction,
            &mut alloc_key.child(j as u64).rng(),
        );
        for (i, &m) in alloc.arm_ns.iter().enumerate() {
            let mut rng = arm_key.child(j as u64).child(i as u64).rng();
            counts.add_arm(i, generate_outcomes(&scenario.arms[i], m, &mut rng));
        }
        let (s, f) = generate_comparator(
            scenario.p_comparator,
            alloc.comparator_n,
            &mut comp_key.child(j as u64).rng(),
        );
        counts.comparator_successes += s;
        counts.comparator_failures += f;
        allocations.push(alloc);

        let next = RandomisationState {
            period_index: j + 2,
            ..state.clone()
        };
        rand_history.push(std::mem::replace(&mut state, next));
        if j + 1 < periods.len() {
            let (raw, updated) = interim_update_sampled(
                design.priors.interim_arm,
                &counts,
                design.drop_threshold,
                design.sampler.n_draws,
                j + 2,
                &mut interim_key.child(j as u64).rng(),
            );
            raw_probs.push(raw);
            state = updated;
        }
    }

    Ok(EnrolmentTrace {
        allocations,
        rand_history,
        raw_probs,
        final_counts: counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean_adequate: Vec<f64>,
    pub mean_comparator: f64,
    /// 95% HPD interval of `p_C - p_D` for the selected arm.
    pub difference_hpd: Interval,
    pub acceptance_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub allocations: Vec<PeriodAllocation>,
    pub final_counts: OutcomeTable,
    pub rand_history: Vec<RandomisationState>,
    pub selected_arm: usize,
    pub y_stat: f64,
    pub decision: Decision,
    pub posterior_summary: PosteriorSummary,
    /// Retained arm-probability vectors outside the open simplex (always zero).
    pub simplex_violations: usize,
}

impl TrialResult {
    pub fn arm_totals(&self) -> Vec<u32> {
        (0..self.final_counts.arm_counts.len())
            .map(|i| self.final_counts.arm_total(i))
            .collect()
    }
}

/// Final analysis on accumulated data: fit, select, compute y and decide.
pub fn final_analysis(
    design: &TrialDesign,
    counts: &OutcomeTable,
    stream: &StreamKey,
) -> Result<(usize, f64, Decision, PosteriorSummary, usize)> {
    let draws = sample_dose_response(counts, &design.doses, &design.priors, &design.sampler, stream)?;
    let selected = select_optimal(&draws);
    let novel = draws.adequate_draws(selected);
    let y = noninferiority_stat(&draws.comparator_probs, &novel, design.ni_margin);
    let decision = decide(y, design.lambda1, design.lambda2);
    let diff: Vec<f64> = draws
        .comparator_probs
        .iter()
        .zip(&novel)
        .map(|(c, d)| c - d)
        .collect();
    let summary = PosteriorSummary {
        mean_adequate: draws.mean_adequate(),
        mean_comparator: draws.comparator_probs.iter().sum::<f64>() / draws.n_draws() as f64,
        difference_hpd: hpd_interval(&diff, 0.95),
        acceptance_rate: draws.meta.acceptance_rate,
    };
    Ok((selected, y, decision, summary, draws.simplex_violations()))
}

pub fn simulate_trial(design: &TrialDesign, scenario: &Scenario, stream: &StreamKey) -> Result<TrialResult> {
    let trace = simulate_enrolment(design, scenario, stream)?;
    let (selected_arm, y_stat, decision, posterior_summary, simplex_violations) =
        final_analysis(design, &trace.final_counts, stream)?;
    Ok(TrialResult {
        allocations: trace.allocations,
        final_counts: trace.final_counts,
        rand_history: trace.rand_history,
        selected_arm,
        y_stat,
        decision,
        posterior_summary,
        simplex_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_design, table1_scenarios};
    use proptest::prelude::*;

    #[test]
    fn decision_examples() {
        assert_eq!(decide(0.02, 0.037, 0.608), Decision::NonInferior);
        assert_eq!(decide(0.7, 0.037, 0.608), Decision::ComparatorSuperior);
        assert_eq!(decide(0.3, 0.037, 0.608), Decision::Inconclusive);
        assert_eq!(decide(0.037, 0.037, 0.608), Decision::NonInferior);
        assert_eq!(decide(0.608, 0.037, 0.608), Decision::ComparatorSuperior);
    }

    #[test]
    fn outcome_generation() {
        let mut rng = StreamKey::root(2).rng();
        let point = ArmTruth::new(0.0, 1.0, 0.0).unwrap();
        assert_eq!(generate_outcomes(&point, 50, &mut rng), [0, 50, 0]);
        assert_eq!(generate_outcomes(&point, 0, &mut rng), [0, 0, 0]);
        assert_eq!(generate_comparator(0.9, 0, &mut rng), (0, 0));

        let t = ArmTruth::new(0.063, 0.93, 0.007).unwrap();
        let n = 100_000u32;
        let c = generate_outcomes(&t, n, &mut rng);
        for (k, p) in t.as_array().iter().enumerate() {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((c[k] as f64 - n as f64 * p).abs() < 4.0 * sd, "{c:?}");
        }
    }

    #[test]
    fn select_ties_lowest() {
        assert_eq!(select_from_means(&[0.91, 0.88, 0.84]), 0);
        assert_eq!(select_from_means(&[0.9, 0.9, 0.8]), 0);
        assert_eq!(select_from_means(&[0.8, 0.9, 0.9]), 1);
    }

    #[test]
    fn enrolment_conserves_and_has_no_lookahead() {
        let design = reference_design();
        let sc = &table1_scenarios()[0];
        let key = StreamKey::root(4);
        let tr = simulate_enrolment(&design, sc, &key).unwrap();
        let total: u32 = tr.allocations.iter().map(|a| a.period_n).sum();
        assert_eq!(total, 410);
        let per_period: u32 = tr
            .allocations
            .iter()
            .map(|a| a.comparator_n + a.arm_ns.iter().sum::<u32>())
            .sum();
        assert_eq!(per_period, 410);
        assert_eq!(tr.rand_history.len(), 6);
        assert_eq!(tr.raw_probs.len(), 5);
        for (j, st) in tr.rand_history.iter().enumerate() {
            assert_eq!(st.period_index, j + 1);
        }
        for (i, &n) in tr.arm_totals().iter().enumerate() {
            let sum: u32 = tr.allocations.iter().map(|a| a.arm_ns[i]).sum();
            assert_eq!(sum, n);
        }

        // changing the last period's outcomes cannot alter earlier probabilities
        let mut truncated = design.clone();
        truncated.schedule.analysis_points.pop();
        truncated.schedule.total_n = 350;
        let tr2 = simulate_enrolment(&truncated, sc, &key).unwrap();
        assert_eq!(tr2.rand_history[..5], tr.rand_history[..5]);
    }

    #[test]
    fn full_trial_deterministic() {
        let design = reference_design();
        let sc = &table1_scenarios()[1];
        let a = simulate_trial(&design, sc, &StreamKey::root(8)).unwrap();
        let b = simulate_trial(&design, sc, &StreamKey::root(8)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.simplex_violations, 0);
        assert_eq!(a.decision, decide(a.y_stat, design.lambda1, design.lambda2));
    }

    proptest! {
        #[test]
        fn decision_partition(y in 0.0f64..=1.0, l1 in 0.0f64..0.5, gap in 0.0f64..0.49) {
            let l2 = (l1 + gap).min(0.999 - l1).max(l1);
            let d = decide(y, l1, l2);
            let expected = if y <= l1 { Decision::NonInferior } else if y >= l2 { Decision::ComparatorSuperior } else { Decision::Inconclusive };
            prop_assert_eq!(d, expected);
        }
    }
}
