//! Random-walk Metropolis for the two-logit dose-response model.
//!
//! The target is the product of Student-t coefficient priors and the multinomial
//! likelihood of every arm, restricted to coefficient vectors whose implied
//! probabilities stay inside the open simplex at every dose. Proposals outside
//! that region are rejected.
//!
//! Proposals are Gaussian with covariance `s^2 * Sigma`. `Sigma` starts from the
//! inverse of a Laplace-style curvature at the initial point (binomial Fisher
//! information of each logit plus prior curvature) and, when adaptation is on,
//! is replaced by the empirical covariance of recent burn-in states. The scale
//! `s` is tuned towards a 30% acceptance rate. Everything is frozen after burn-in.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conjugate::{beta_posterior, sample_beta};
use super::dose_response::{multinomial_loglik, probs_at, BetaVector};
use crate::error::{Error, Result};
use crate::model::{ArmTruth, CoefficientPrior, DoseCombination, OutcomeTable, PriorSet, SamplerConfig};
use crate::rng::{Purpose, StreamKey};

const TARGET_ACCEPTANCE: f64 = 0.3;
const BATCH: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerMeta {
    pub n_draws: usize,
    pub n_chains: usize,
    /// Acceptance rate over retained iterations, all chains.
    pub acceptance_rate: f64,
    pub burnin_acceptance_rate: f64,
}

/// Retained posterior draws. `arm_probs` is draw-major: draw `j`, arm `i` lives
/// at `j * n_arms + i`.
#[derive(Clone, Debug)]
pub struct PosteriorDraws {
    pub betas: Vec<BetaVector>,
    pub arm_probs: Vec<ArmTruth>,
    pub comparator_probs: Vec<f64>,
    pub n_arms: usize,
    pub meta: SamplerMeta,
}

impl PosteriorDraws {
    pub fn n_draws(&self) -> usize {
        self.betas.len()
    }

    pub fn draw(&self, j: usize) -> &[ArmTruth] {
        &self.arm_probs[j * self.n_arms..(j + 1) * self.n_arms]
    }

    pub fn adequate_draws(&self, arm: usize) -> Vec<f64> {
        self.arm_probs
            .iter()
            .skip(arm)
            .step_by(self.n_arms)
            .map(|p| p.p_adequate)
            .collect()
    }

    pub fn mean_adequate(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_arms];
        for (k, p) in self.arm_probs.iter().enumerate() {
            sums[k % self.n_arms] += p.p_adequate;
        }
        let n = self.n_draws() as f64;
        sums.iter().map(|s| s / n).collect()
    }

    /// Number of stored arm vectors outside the open probability simplex.
    pub fn simplex_violations(&self) -> usize {
        self.arm_probs.iter().filter(|p| !p.in_open_simplex()).count()
    }

    /// Split-chain potential scale reduction of one arm's adequate-sedation draws.
    pub fn split_rhat(&self, arm: usize) -> f64 {
        let draws = self.adequate_draws(arm);
        let per_chain = draws.len() / self.meta.n_chains;
        let half = per_chain / 2;
        if half < 2 {
            return f64::NAN;
        }
        let mut pieces: Vec<&[f64]> = Vec::new();
        for c in 0..self.meta.n_chains {
            let chain = &draws[c * per_chain..(c + 1) * per_chain];
            pieces.push(&chain[..half]);
            pieces.push(&chain[half..2 * half]);
        }
        let m = pieces.len() as f64;
        let n = half as f64;
        let means: Vec<f64> = pieces.iter().map(|p| p.iter().sum::<f64>() / n).collect();
        let grand = means.iter().sum::<f64>() / m;
        let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
        let w = pieces
            .iter()
            .zip(&means)
            .map(|(p, mu)| p.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
            .sum::<f64>()
            / m;
        let var_plus = (n - 1.0) / n * w + b / n;
        (var_plus / w).sqrt()
    }
}

/// Posterior of the coefficient vector given per-arm counts.
#[derive(Clone, Debug)]
pub struct DoseResponseModel {
    covariates: Vec<[f64; 3]>,
    counts: Vec<[u32; 3]>,
    priors: [CoefficientPrior; 6],
    fixed: [Option<f64>; 6],
}

impl DoseResponseModel {
    pub fn new(arm_counts: &[[u32; 3]], doses: &[DoseCombination], priors: &PriorSet) -> Result<Self> {
        if arm_counts.len() != doses.len() {
            return Err(Error::invalid(
                "counts",
                format!("{} arm entries for {} doses", arm_counts.len(), doses.len()),
            ));
        }
        for d in doses {
            d.validate()?;
        }
        priors.validate()?;
        Ok(Self {
            covariates: doses.iter().map(DoseCombination::covariates).collect(),
            counts: arm_counts.to_vec(),
            priors: priors.coefficient_priors(),
            fixed: [None; 6],
        })
    }

    /// Holds coefficient `index` (model order `b0, b1, b2, ba, bb, bc`) at `value`.
    pub fn fix(mut self, index: usize, value: f64) -> Self {
        self.fixed[index] = Some(value);
        self
    }

    fn free_indices(&self) -> Vec<usize> {
        (0..6).filter(|&i| self.fixed[i].is_none()).collect()
    }

    /// Prior locations, with fixed coordinates substituted.
    pub fn initial_point(&self) -> BetaVector {
        let mut b = [0.0; 6];
        for i in 0..6 {
            b[i] = self.fixed[i].unwrap_or(self.priors[i].location);
        }
        BetaVector(b)
    }

    /// Log posterior up to a constant; `-inf` outside the simplex region.
    pub fn log_posterior(&self, beta: &BetaVector) -> f64 {
        let mut lp = 0.0;
        for (x, &c) in self.covariates.iter().zip(&self.counts) {
            match probs_at(beta, *x) {
                Ok(p) => lp += multinomial_loglik(c, &p),
                Err(_) => return f64::NEG_INFINITY,
            }
        }
        for i in 0..6 {
            if self.fixed[i].is_none() {
                lp += self.priors[i].ln_kernel(beta.0[i]);
            }
        }
        lp
    }

    pub fn arm_probs(&self, beta: &BetaVector) -> Option<Vec<ArmTruth>> {
        self.covariates.iter().map(|x| probs_at(beta, *x).ok()).collect()
    }

    /// Block-diagonal curvature of the log posterior at `beta`, free coordinates only.
    fn curvature(&self, beta: &BetaVector, free: &[usize]) -> DMatrix<f64> {
        let mut h = DMatrix::<f64>::zeros(6, 6);
        for i in 0..6 {
            h[(i, i)] = self.priors[i].curvature_at_location();
        }
        if let Some(probs) = self.arm_probs(beta) {
            for ((x, c), p) in self.covariates.iter().zip(&self.counts).zip(&probs) {
                let n = c.iter().sum::<u32>() as f64;
                for (offset, q) in [(0, p.p_under), (3, p.p_over)] {
                    let w = n * q * (1.0 - q);
                    for a in 0..3 {
                        for b in 0..3 {
                            h[(offset + a, offset + b)] += w * x[a] * x[b];
                        }
                    }
                }
            }
        }
        h.select_rows(free).select_columns(free)
    }

    pub fn sample(&self, cfg: &SamplerConfig, stream: &StreamKey) -> Result<PosteriorDraws> {
        cfg.validate()?;
        let free = self.free_indices();
        let start = self.initial_point();
        if !self.log_posterior(&start).is_finite() {
            return Err(Error::Sampler("initial point lies outside the simplex region".into()));
        }
        let per_chain = cfg.n_draws.div_ceil(cfg.n_chains);
        let mcmc = stream.purpose(Purpose::Mcmc);
        let outputs: Vec<Result<ChainOutput>> = (0..cfg.n_chains)
            .into_par_iter()
            .map(|c| {
                let mut rng = mcmc.child(c as u64).rng();
                self.run_chain(&free, start, cfg, per_chain, &mut rng)
            })
            .collect();

        let mut betas = Vec::with_capacity(per_chain * cfg.n_chains);
        let mut kept_acc = 0usize;
        let mut burn_acc = 0usize;
        for out in outputs {
            let out = out?;
            kept_acc += out.accepted_kept;
            burn_acc += out.accepted_burnin;
            betas.extend(out.draws);
        }
        let per_chain_kept = cfg.n_draws / cfg.n_chains;
        if cfg.n_draws % cfg.n_chains != 0 {
            // equal-length chains keep split-R-hat meaningful; trim the surplus evenly
            let mut trimmed = Vec::with_capacity(cfg.n_draws);
            for c in 0..cfg.n_chains {
                trimmed.extend_from_slice(&betas[c * per_chain..c * per_chain + per_chain_kept]);
            }
            let extra = cfg.n_draws - trimmed.len();
            for c in 0..extra {
                trimmed.push(betas[c * per_chain + per_chain_kept]);
            }
            betas = trimmed;
        }

        let n_arms = self.covariates.len();
        let mut arm_probs = Vec::with_capacity(betas.len() * n_arms);
        for b in &betas {
            let probs = self
                .arm_probs(b)
                .ok_or_else(|| Error::Sampler("retained draw left the simplex region".into()))?;
            arm_probs.extend(probs);
        }

        Ok(PosteriorDraws {
            meta: SamplerMeta {
                n_draws: betas.len(),
                n_chains: cfg.n_chains,
                acceptance_rate: kept_acc as f64 / (per_chain * cfg.thin * cfg.n_chains) as f64,
                burnin_acceptance_rate: burn_acc as f64 / (cfg.n_burnin * cfg.n_chains) as f64,
            },
            betas,
            arm_probs,
            comparator_probs: Vec::new(),
            n_arms,
        })
    }

    fn run_chain<R: Rng + ?Sized>(
        &self,
        free: &[usize],
        start: BetaVector,
        cfg: &SamplerConfig,
        n_keep: usize,
        rng: &mut R,
    ) -> Result<ChainOutput> {
        let d = free.len();
        let mut x = start;
        let mut lp = self.log_posterior(&x);
        let mut out = ChainOutput {
            draws: Vec::with_capacity(n_keep),
            accepted_burnin: 0,
            accepted_kept: 0,
        };
        if d == 0 {
            out.draws = vec![x; n_keep];
            return Ok(out);
        }

        let mut chol = cholesky_flat(&self.curvature(&x, free), true)
            .ok_or_else(|| Error::Sampler("curvature matrix is not positive definite".into()))?;
        let mut log_scale = (cfg.proposal_scale * 2.38 / (d as f64).sqrt()).ln();
        let mut z = vec![0.0; d];
        let mut history: Vec<[f64; 6]> = if cfg.adapt {
            Vec::with_capacity(cfg.n_burnin)
        } else {
            Vec::new()
        };
        let mut batch_acc = 0usize;

        let total = cfg.n_burnin + n_keep * cfg.thin;
        for iter in 0..total {
            let burn = iter < cfg.n_burnin;
            let scale = log_scale.exp();
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let mut prop = x;
            for (r, &fi) in free.iter().enumerate() {
                let mut step = 0.0;
                for (c, zc) in z.iter().enumerate().take(r + 1) {
                    step += chol[r * d + c] * zc;
                }
                prop.0[fi] += scale * step;
            }
            let lp_prop = self.log_posterior(&prop);
            let accept = lp_prop.is_finite() && {
                let log_u: f64 = rng.random::<f64>().ln();
                log_u < lp_prop - lp
            };
            if accept {
                x = prop;
                lp = lp_prop;
            }

            if burn {
                if accept {
                    out.accepted_burnin += 1;
                    batch_acc += 1;
                }
                if cfg.adapt {
                    history.push(x.0);
                    if (iter + 1) % BATCH == 0 {
                        let batch_no = ((iter + 1) / BATCH) as f64;
                        let rate = batch_acc as f64 / BATCH as f64;
                        log_scale += (rate - TARGET_ACCEPTANCE) * 2.0 / batch_no.sqrt();
                        batch_acc = 0;
                        let t = iter + 1;
                        // refresh the shape from the most recent half of the burn-in
                        if t >= cfg.n_burnin / 4 && t % (4 * BATCH) == 0 && t / 2 >= 20 * d {
                            if let Some(c) = empirical_cholesky(&history[t / 2..], free) {
                                chol = c;
                            }
                        }
                    }
                }
            } else {
                if accept {
                    out.accepted_kept += 1;
                }
                if (iter - cfg.n_burnin + 1) % cfg.thin == 0 {
                    out.draws.push(x);
                }
            }
        }
        if out.accepted_burnin == 0 {
            return Err(Error::Sampler("no proposal accepted during burn-in".into()));
        }
        Ok(out)
    }
}

struct ChainOutput {
    draws: Vec<BetaVector>,
    accepted_burnin: usize,
    accepted_kept: usize,
}

/// Lower Cholesky factor, row-major. With `invert`, factors the inverse of `m`.
fn cholesky_flat(m: &DMatrix<f64>, invert: bool) -> Option<Vec<f64>> {
    let cov = if invert {
        m.clone().cholesky()?.inverse()
    } else {
        m.clone()
    };
    let l = cov.cholesky()?.l();
    let d = l.nrows();
    let mut flat = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..=r {
            flat[r * d + c] = l[(r, c)];
        }
    }
    Some(flat)
}

fn empirical_cholesky(states: &[[f64; 6]], free: &[usize]) -> Option<Vec<f64>> {
    let d = free.len();
    let n = states.len() as f64;
    let mut mean = vec![0.0; d];
    for s in states {
        for (k, &i) in free.iter().enumerate() {
            mean[k] += s[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for s in states {
        for a in 0..d {
            let da = s[free[a]] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += da * (s[free[b]] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..=a {
            let v = cov[(a, b)] / (n - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let ridge = 1e-8 * (0..d).map(|a| cov[(a, a)]).fold(0.0, f64::max) + 1e-12;
    for a in 0..d {
        cov[(a, a)] += ridge;
    }
    if !(0..d).all(|a| cov[(a, a)].is_finite()) {
        return None;
    }
    cholesky_flat(&cov, false)
}

/// Posterior draws for the dose-response coefficients, arm probabilities and the
/// comparator success probability. Dose-arm and comparator draws come from
/// independent streams and are paired by index.
pub fn sample_dose_response(
    data: &OutcomeTable,
    doses: &[DoseCombination],
    priors: &PriorSet,
    cfg: &SamplerConfig,
    stream: &StreamKey,
) -> Result<PosteriorDraws> {
    let model = DoseResponseModel::new(&data.arm_counts, doses, priors)?;
    let mut draws = model.sample(cfg, stream)?;
    let post = beta_posterior(priors.comparator, data.comparator_successes, data.comparator_failures);
    let mut rng = stream.purpose(Purpose::ComparatorDraws).rng();
    draws.comparator_probs = sample_beta(post, draws.n_draws(), &mut rng);
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_priors, reference_doses};

    fn quick_cfg() -> SamplerConfig {
        SamplerConfig::default()
    }

    #[test]
    fn deterministic_given_stream() {
        let data = OutcomeTable {
            arm_counts: vec![[3, 40, 2], [2, 60, 1], [5, 30, 0]],
            comparator_successes: 150,
            comparator_failures: 4,
        };
        let doses = reference_doses();
        let priors = default_priors();
        let key = StreamKey::root(99);
        let a = sample_dose_response(&data, &doses, &priors, &quick_cfg(), &key).unwrap();
        let b = sample_dose_response(&data, &doses, &priors, &quick_cfg(), &key).unwrap();
        assert_eq!(a.betas, b.betas);
        assert_eq!(a.comparator_probs, b.comparator_probs);
        assert_eq!(a.n_draws(), 2000);
        assert_eq!(a.simplex_violations(), 0);
        assert!(a.meta.acceptance_rate > 0.1 && a.meta.acceptance_rate < 0.6, "{:?}", a.meta);
    }

    #[test]
    fn overwhelming_adequate_data() {
        let data = OutcomeTable {
            arm_counts: vec![[0, 1000, 0]; 3],
            comparator_successes: 0,
            comparator_failures: 0,
        };
        let d = sample_dose_response(
            &data,
            &reference_doses(),
            &default_priors(),
            &quick_cfg(),
            &StreamKey::root(3),
        )
        .unwrap();
        for m in d.mean_adequate() {
            assert!(m > 0.99, "{m}");
        }
        assert_eq!(d.simplex_violations(), 0);
    }

    #[test]
    fn chains_split_and_trim() {
        let data = OutcomeTable {
            arm_counts: vec![[3, 40, 2], [2, 60, 1], [5, 30, 0]],
            ..Default::default()
        };
        let cfg = SamplerConfig {
            n_draws: 1001,
            n_chains: 4,
            ..quick_cfg()
        };
        let d = sample_dose_response(&data, &reference_doses(), &default_priors(), &cfg, &StreamKey::root(1))
            .unwrap();
        assert_eq!(d.n_draws(), 1001);
        assert_eq!(d.comparator_probs.len(), 1001);
        let rhat = d.split_rhat(1);
        assert!(rhat < 1.1, "{rhat}");
    }

    #[test]
    fn misaligned_counts_rejected() {
        let r = DoseResponseModel::new(&[[1, 2, 3]], &reference_doses(), &default_priors());
        assert!(r.is_err());
    }

    #[test]
    fn initial_point_is_prior_location() {
        let m = DoseResponseModel::new(&[[0; 3]; 3], &reference_doses(), &default_priors()).unwrap();
        let b = m.initial_point();
        let probs = m.arm_probs(&b).unwrap();
        assert!(probs.iter().all(|p| (p.p_adequate - 0.93).abs() < 1e-12));
    }
}
