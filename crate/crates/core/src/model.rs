//! Domain types, design constants, priors and the reference scenarios.
//!
//! Arm identity is positional: `TrialDesign::doses[i]`, `Scenario::arms[i]` and
//! `OutcomeTable::arm_counts[i]` all refer to the same dose combination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for "sums to one" checks on probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-12;

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn is_probability(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoseCombination {
    pub label: String,
    /// Ketamine dose, mg/kg.
    pub ketamine: f64,
    /// Dexmedetomidine dose, mcg/kg.
    pub dexmedetomidine: f64,
}

impl DoseCombination {
    pub fn new(label: impl Into<String>, ketamine: f64, dexmedetomidine: f64) -> Self {
        Self {
            label: label.into(),
            ketamine,
            dexmedetomidine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ketamine > 0.0 && self.ketamine.is_finite()) {
            return Err(Error::invalid(
                format!("dose {}", self.label),
                format!("ketamine dose must be > 0, got {}", self.ketamine),
            ));
        }
        if !(self.dexmedetomidine > 0.0 && self.dexmedetomidine.is_finite()) {
            return Err(Error::invalid(
                format!("dose {}", self.label),
                format!("dexmedetomidine dose must be > 0, got {}", self.dexmedetomidine),
            ));
        }
        Ok(())
    }

    /// Regression row `[1, ln A, ln B]` shared by both logit models.
    pub fn covariates(&self) -> [f64; 3] {
        [1.0, self.ketamine.ln(), self.dexmedetomidine.ln()]
    }
}

/// Per-arm outcome probabilities: under-, adequate and over-sedation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmTruth {
    pub p_under: f64,
    pub p_adequate: f64,
    pub p_over: f64,
}

impl ArmTruth {
    pub fn new(p_under: f64, p_adequate: f64, p_over: f64) -> Result<Self> {
        let t = Self {
            p_under,
            p_adequate,
            p_over,
        };
        t.validate()?;
        Ok(t)
    }

    /// Splits the inadequately sedated mass `1 - p_adequate` so that a fraction
    /// `over_fraction` of it is over-sedation.
    pub fn from_adequate(p_adequate: f64, over_fraction: f64) -> Result<Self> {
        if !is_probability(over_fraction) {
            return Err(Error::invalid(
                "over_fraction",
                format!("must lie in [0, 1], got {over_fraction}"),
            ));
        }
        let rest = 1.0 - p_adequate;
        Self::new((1.0 - over_fraction) * rest, p_adequate, over_fraction * rest)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_under", self.p_under),
            ("p_adequate", self.p_adequate),
            ("p_over", self.p_over),
        ] {
            if !is_probability(p) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        let s = self.p_under + self.p_adequate + self.p_over;
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(
                "arm truth",
                format!("probabilities sum to {s}, not 1"),
            ));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_under, self.p_adequate, self.p_over]
    }

    /// True when every entry lies strictly inside (0, 1) and the sum is one.
    pub fn in_open_simplex(&self) -> bool {
        let a = self.as_array();
        a.iter().all(|&p| p > 0.0 && p < 1.0)
            && (a.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub p_comparator: f64,
    pub arms: Vec<ArmTruth>,
}

impl Scenario {
    pub fn validate(&self, n_doses: usize) -> Result<()> {
        if self.arms.len() != n_doses {
            return Err(Error::invalid(
                format!("scenario {}", self.id),
                format!("{} arm truths for {} doses", self.arms.len(), n_doses),
            ));
        }
        if !is_probability(self.p_comparator) {
            return Err(Error::invalid(
                format!("scenario {}", self.id),
                format!("p_comparator must lie in [0, 1], got {}", self.p_comparator),
            ));
        }
        for arm in &self.arms {
            arm.validate()?;
        }
        Ok(())
    }

    /// Index of the arm with the highest true adequate-sedation probability
    /// (lowest index on ties).
    pub fn best_arm(&self) -> usize {
        argmax_first(self.arms.iter().map(|a| a.p_adequate))
    }

    /// Number of arms whose true deficit against the comparator is below `margin`.
    pub fn noninferior_arms(&self, margin: f64) -> usize {
        self.arms
            .iter()
            .filter(|a| self.p_comparator - a.p_adequate < margin - 1e-9)
            .count()
    }
}

pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::invalid(
                "beta prior",
                format!("alpha and beta must be > 0, got ({}, {})", self.alpha, self.beta),
            ));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Location-scale Student-t prior on one regression coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientPrior {
    pub location: f64,
    pub scale: f64,
    pub degrees_of_freedom: f64,
}

impl CoefficientPrior {
    /// Builds the prior from a precision (`scale = precision^-1/2`).
    pub fn from_precision(location: f64, precision: f64, degrees_of_freedom: f64) -> Self {
        Self {
            location,
            scale: precision.sqrt().recip(),
            degrees_of_freedom,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.degrees_of_freedom > 0.0 && self.location.is_finite()) {
            return Err(Error::invalid(
                "coefficient prior",
                format!(
                    "need finite location, scale > 0, df > 0; got ({}, {}, {})",
                    self.location, self.scale, self.degrees_of_freedom
                ),
            ));
        }
        Ok(())
    }

    /// Log density up to an additive constant.
    pub fn ln_kernel(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        let nu = self.degrees_of_freedom;
        -0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
    }

    /// Negative second derivative of the log density at the location.
    pub fn curvature_at_location(&self) -> f64 {
        let nu = self.degrees_of_freedom;
        (nu + 1.0) / (nu * self.scale * self.scale)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSet {
    /// Prior on the comparator success probability.
    pub comparator: BetaPrior,
    /// Direct prior on the novel-arm success probability, used for prior-predictive work.
    pub novel_direct: BetaPrior,
    /// Common per-arm prior on adequate sedation used at interim analyses.
    pub interim_arm: BetaPrior,
    pub under_intercept: CoefficientPrior,
    pub under_slope_a: CoefficientPrior,
    pub under_slope_b: CoefficientPrior,
    pub over_intercept: CoefficientPrior,
    pub over_slope_a: CoefficientPrior,
    pub over_slope_b: CoefficientPrior,
}

impl PriorSet {
    /// Coefficient priors in model order `[b0, b1, b2, ba, bb, bc]`.
    pub fn coefficient_priors(&self) -> [CoefficientPrior; 6] {
        [
            self.under_intercept,
            self.under_slope_a,
            self.under_slope_b,
            self.over_intercept,
            self.over_slope_a,
            self.over_slope_b,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        self.comparator.validate()?;
        self.novel_direct.validate()?;
        self.interim_arm.validate()?;
        for p in self.coefficient_priors() {
            p.validate()?;
        }
        Ok(())
    }
}

impl Default for PriorSet {
    fn default() -> Self {
        default_priors()
    }
}

/// Published priors: comparator Beta(15.6, 0.44), novel Beta(6.25, 0.25), and
/// Student-t(df 1, precision 0.001) coefficients whose intercepts put 5% under-
/// and 2% over-sedation at every dose.
pub fn default_priors() -> PriorSet {
    let slope = CoefficientPrior::from_precision(0.0, 0.001, 1.0);
    let novel = BetaPrior {
        alpha: 6.25,
        beta: 0.25,
    };
    PriorSet {
        comparator: BetaPrior {
            alpha: 15.6,
            beta: 0.44,
        },
        novel_direct: novel,
        interim_arm: novel,
        under_intercept: CoefficientPrior {
            location: logit(0.05),
            ..slope
        },
        under_slope_a: slope,
        under_slope_b: slope,
        over_intercept: CoefficientPrior {
            location: logit(0.02),
            ..slope
        },
        over_slope_a: slope,
        over_slope_b: slope,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterimSchedule {
    /// Cumulative enrolment at which randomisation probabilities are updated.
    pub analysis_points: Vec<u32>,
    pub total_n: u32,
}

impl InterimSchedule {
    pub fn validate(&self) -> Result<()> {
        let mut prev = 0u32;
        for &p in &self.analysis_points {
            if p <= prev {
                return Err(Error::invalid(
                    "schedule.analysis_points",
                    "must be positive and strictly increasing",
                ));
            }
            prev = p;
        }
        if self.total_n <= prev {
            return Err(Error::invalid(
                "schedule.total_n",
                format!("must exceed the last analysis point {prev}, got {}", self.total_n),
            ));
        }
        Ok(())
    }

    /// Enrolment per period; there is one more period than analysis points.
    pub fn period_sizes(&self) -> Vec<u32> {
        let mut prev = 0;
        let mut sizes: Vec<u32> = self
            .analysis_points
            .iter()
            .map(|&p| {
                let n = p - prev;
                prev = p;
                n
            })
            .collect();
        sizes.push(self.total_n - prev);
        sizes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Posterior draws retained, across all chains.
    pub n_draws: usize,
    /// Burn-in iterations per chain.
    pub n_burnin: usize,
    pub n_chains: usize,
    /// Keep every `thin`-th post-burn-in state.
    #[serde(default = "one")]
    pub thin: usize,
    /// Multiplier on the preconditioned random-walk step.
    pub proposal_scale: f64,
    /// Tune step size and proposal covariance during burn-in.
    pub adapt: bool,
    /// Root seed for standalone fits (simulations derive streams from the run seed).
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_draws: 2000,
            n_burnin: 2000,
            n_chains: 1,
            thin: 1,
            proposal_scale: 1.0,
            adapt: true,
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 || self.n_burnin == 0 || self.n_chains == 0 || self.thin == 0 {
            return Err(Error::invalid(
                "sampler",
                "n_draws, n_burnin, n_chains and thin must be positive",
            ));
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return Err(Error::invalid("sampler.proposal_scale", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialDesign {
    pub doses: Vec<DoseCombination>,
    /// R0, the fraction of participants randomised to the comparator.
    pub comparator_fraction: f64,
    /// gamma: randomisation probabilities at or below this are zeroed.
    pub drop_threshold: f64,
    /// eta: non-inferiority margin on p_C - p_D.
    pub ni_margin: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub schedule: InterimSchedule,
    pub priors: PriorSet,
    pub sampler: SamplerConfig,
}

impl TrialDesign {
    pub fn n_arms(&self) -> usize {
        self.doses.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.doses.len() < 2 {
            return Err(Error::invalid("doses", "need at least two dose combinations"));
        }
        for d in &self.doses {
            d.validate()?;
        }
        let r0 = self.comparator_fraction;
        if !(r0 > 0.0 && r0 < 1.0) {
            return Err(Error::invalid(
                "comparator_fraction",
                format!("R0 must lie in (0, 1), got {r0}"),
            ));
        }
        let k = self.doses.len() as f64;
        if !(self.drop_threshold >= 0.0 && self.drop_threshold <= 1.0 / k) {
            return Err(Error::invalid(
                "drop_threshold",
                format!(
                    "gamma must lie in [0, 1/{}], got {}",
                    self.doses.len(),
                    self.drop_threshold
                ),
            ));
        }
        if !(self.ni_margin > 0.0 && self.ni_margin < 1.0) {
            return Err(Error::invalid(
                "ni_margin",
                format!("eta must lie in (0, 1), got {}", self.ni_margin),
            ));
        }
        for (name, l) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !is_probability(l) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {l}")));
            }
        }
        if self.lambda1 + self.lambda2 >= 1.0 {
            return Err(Error::invalid(
                "lambda1 + lambda2",
                format!(
                    "must be < 1, got {} + {}",
                    self.lambda1, self.lambda2
                ),
            ));
        }
        if self.lambda1 >= self.lambda2 {
            return Err(Error::invalid(
                "lambda1",
                format!(
                    "must be below lambda2 so the three outcomes partition [0, 1], got {} >= {}",
                    self.lambda1, self.lambda2
                ),
            ));
        }
        self.schedule.validate()?;
        self.priors.validate()?;
        self.sampler.validate()?;
        Ok(())
    }
}

/// Returns the design unchanged if every invariant holds.
pub fn validate_design(design: TrialDesign) -> Result<TrialDesign> {
    design.validate()?;
    Ok(design)
}

/// Counts accumulated so far. Each arm entry is `[under, adequate, over]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeTable {
    pub arm_counts: Vec<[u32; 3]>,
    pub comparator_successes: u32,
    pub comparator_failures: u32,
}

impl OutcomeTable {
    pub fn empty(n_arms: usize) -> Self {
        Self {
            arm_counts: vec![[0; 3]; n_arms],
            ..Self::default()
        }
    }

    pub fn arm_total(&self, arm: usize) -> u32 {
        self.arm_counts[arm].iter().sum()
    }

    pub fn comparator_total(&self) -> u32 {
        self.comparator_successes + self.comparator_failures
    }

    /// Adequate vs. inadequate counts for one arm.
    pub fn arm_binary(&self, arm: usize) -> (u32, u32) {
        let [u, a, o] = self.arm_counts[arm];
        (a, u + o)
    }

    pub fn add_arm(&mut self, arm: usize, counts: [u32; 3]) {
        for (acc, c) in self.arm_counts[arm].iter_mut().zip(counts) {
            *acc += c;
        }
    }

    pub fn validate(&self, n_arms: usize) -> Result<()> {
        if self.arm_counts.len() != n_arms {
            return Err(Error::invalid(
                "counts",
                format!("{} arm entries for {} doses", self.arm_counts.len(), n_arms),
            ));
        }
        Ok(())
    }
}

// Reference design -----------------------------------------------------------

/// Dose list in trial order: 2-4, 3-3, 4-2 (ketamine mg/kg - dexmedetomidine mcg/kg).
pub fn reference_doses() -> Vec<DoseCombination> {
    vec![
        DoseCombination::new("2-4", 2.0, 4.0),
        DoseCombination::new("3-3", 3.0, 3.0),
        DoseCombination::new("4-2", 4.0, 2.0),
    ]
}

/// Over-sedated share of the inadequately sedated, per arm of [`reference_doses`].
pub const REFERENCE_OVER_FRACTIONS: [f64; 3] = [0.2, 0.1, 0.01];

/// Index of the 3-3 arm in [`reference_doses`].
pub const REFERENCE_OPTIMAL_ARM: usize = 1;

pub const REFERENCE_P_COMPARATOR: f64 = 0.97;

pub fn reference_schedule() -> InterimSchedule {
    InterimSchedule {
        analysis_points: vec![150, 200, 250, 300, 350],
        total_n: 410,
    }
}

pub fn reference_design() -> TrialDesign {
    TrialDesign {
        doses: reference_doses(),
        comparator_fraction: 0.4,
        drop_threshold: 0.05,
        ni_margin: 0.178,
        lambda1: 0.037,
        lambda2: 0.608,
        schedule: reference_schedule(),
        priors: default_priors(),
        sampler: SamplerConfig::default(),
    }
}

/// Builds a reference-dose scenario from adequate-sedation probabilities given
/// as `(3-3, 4-2, 2-4)`, the column order of the published scenario table.
pub fn reference_scenario(
    id: impl Into<String>,
    p_comparator: f64,
    p33: f64,
    p42: f64,
    p24: f64,
) -> Scenario {
    let adequate = [p24, p33, p42];
    let arms = adequate
        .iter()
        .zip(REFERENCE_OVER_FRACTIONS)
        .map(|(&p, f)| ArmTruth::from_adequate(p, f).expect("reference probabilities are valid"))
        .collect();
    Scenario {
        id: id.into(),
        description: format!("p(3-3)={p33}, p(4-2)={p42}, p(2-4)={p24}"),
        p_comparator,
        arms,
    }
}

/// The eight operating-characteristic scenarios, ordered by decreasing p_D.
pub fn table1_scenarios() -> Vec<Scenario> {
    const ROWS: [(f64, f64, f64); 8] = [
        (0.93, 0.88, 0.83),
        (0.90, 0.85, 0.80),
        (0.87, 0.83, 0.77),
        (0.85, 0.80, 0.75),
        (0.83, 0.78, 0.73),
        (0.792, 0.742, 0.692),
        (0.78, 0.73, 0.68),
        (0.75, 0.70, 0.65),
    ];
    ROWS.iter()
        .enumerate()
        .map(|(i, &(a, b, c))| reference_scenario((i + 1).to_string(), REFERENCE_P_COMPARATOR, a, b, c))
        .collect()
}

/// Scenario used to choose gamma: 0.93 / 0.88 / 0.83 for 3-3 / 4-2 / 2-4.
pub fn gamma_scenario() -> Scenario {
    reference_scenario("gamma", REFERENCE_P_COMPARATOR, 0.93, 0.88, 0.83)
}

/// Threshold-calibration scenario: 3-3 at `p_optimal`, 4-2 five points lower,
/// 2-4 ten points lower.
pub fn lambda_scenario(id: impl Into<String>, p_comparator: f64, p_optimal: f64) -> Scenario {
    reference_scenario(id, p_comparator, p_optimal, p_optimal - 0.05, p_optimal - 0.1)
}
