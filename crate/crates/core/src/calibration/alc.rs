//! Average-length criterion search over total size `N` and comparator fraction `R0`.
//!
//! Each replicate draws `p_C` and `p_D` from their Beta priors and one stream of
//! participant uniforms per arm, long enough for the largest `N`. Every grid cell
//! reads prefixes of the same uniforms, so cells differ only by design.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{replicate_map, Estimate};
use crate::error::{Error, Result};
use crate::inference::{beta_posterior, hpd_interval_in_place, sample_beta};
use crate::model::PriorSet;
use crate::rng::{Purpose, StreamKey};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlcConfig {
    /// Maximum acceptable average 95% HPD length of `p_C - p_D`.
    pub zeta: f64,
    pub n_grid: Vec<u32>,
    pub r0_grid: Vec<f64>,
    pub replicates: usize,
    pub posterior_draws: usize,
}

impl Default for AlcConfig {
    fn default() -> Self {
        Self {
            zeta: 0.07,
            n_grid: (350..=500).step_by(10).collect(),
            r0_grid: vec![0.2, 0.3, 0.4, 0.5],
            replicates: 2000,
            posterior_draws: 2000,
        }
    }
}

impl AlcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(Error::invalid("alc.zeta", format!("must be > 0, got {}", self.zeta)));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] < 2 {
            return Err(Error::invalid(
                "alc.n_grid",
                "must be non-empty, strictly increasing and at least 2",
            ));
        }
        if self.r0_grid.is_empty()
            || self.r0_grid.windows(2).any(|w| w[0] >= w[1])
            || self.r0_grid.iter().any(|&r| !(r > 0.0 && r < 1.0))
        {
            return Err(Error::invalid(
                "alc.r0_grid",
                "must be non-empty, strictly increasing and inside (0, 1)",
            ));
        }
        if self.replicates == 0 || self.posterior_draws == 0 {
            return Err(Error::invalid(
                "alc",
                "replicates and posterior_draws must be positive",
            ));
        }
        for &n in &self.n_grid {
            for &r in &self.r0_grid {
                let (c, d) = split(n, r);
                if c == 0 || d == 0 {
                    return Err(Error::invalid(
                        "alc",
                        format!("N = {n}, R0 = {r} leaves an empty arm"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlcCell {
    pub n: u32,
    pub r0: f64,
    pub comparator_n: u32,
    pub novel_n: u32,
    pub avg_hpd_length: f64,
    pub mc_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlcResult {
    /// Row-major over `n_grid` then `r0_grid`.
    pub cells: Vec<AlcCell>,
    pub selected_n: u32,
    pub selected_r0: f64,
}

impl AlcResult {
    /// The R0 with the shortest average interval at total size `n`.
    pub fn best_r0_at(&self, n: u32) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.n == n)
            .min_by(|a, b| a.avg_hpd_length.total_cmp(&b.avg_hpd_length))
            .map(|c| c.r0)
    }
}

/// Comparator size rounds `n * r0` to the nearest integer; the rest are novel.
fn split(n: u32, r0: f64) -> (u32, u32) {
    let c = (n as f64 * r0).round() as u32;
    (c, n - c)
}

pub fn alc_search(cfg: &AlcConfig, priors: &PriorSet, root: &StreamKey) -> Result<AlcResult> {
    cfg.validate()?;
    priors.validate()?;
    let max_n = *cfg.n_grid.last().expect("validated") as usize;
    let grid: Vec<(u32, f64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| cfg.r0_grid.iter().map(move |&r| (n, r)))
        .collect();

    let lengths: Vec<Vec<f64>> = replicate_map(root, cfg.replicates, |_, key| {
        let mut rng = key.purpose(Purpose::PriorPredictive).rng();
        let p_c = sample_beta(priors.comparator, 1, &mut rng)[0];
        let p_d = sample_beta(priors.novel_direct, 1, &mut rng)[0];
        let u_c: Vec<f64> = (0..max_n).map(|_| rng.random()).collect();
        let u_d: Vec<f64> = (0..max_n).map(|_| rng.random()).collect();
        let draws_key = key.purpose(Purpose::PosteriorDraws);
        let mut diff = vec![0.0; cfg.posterior_draws];
        Ok(grid
            .iter()
            .enumerate()
            .map(|(g, &(n, r0))| {
                let (n_c, n_d) = split(n, r0);
                let s_c = u_c[..n_c as usize].iter().filter(|&&u| u < p_c).count() as u32;
                let s_d = u_d[..n_d as usize].iter().filter(|&&u| u < p_d).count() as u32;
                let post_c = beta_posterior(priors.comparator, s_c, n_c - s_c);
                let post_d = beta_posterior(priors.novel_direct, s_d, n_d - s_d);
                let mut rng = draws_key.child(g as u64).rng();
                let c = sample_beta(post_c, cfg.posterior_draws, &mut rng);
                let d = sample_beta(post_d, cfg.posterior_draws, &mut rng);
                for (out, (a, b)) in diff.iter_mut().zip(c.iter().zip(&d)) {
                    *out = a - b;
                }
                hpd_interval_in_place(&mut diff, 0.95).length()
            })
            .collect())
    })?;

    let cells: Vec<AlcCell> = grid
        .iter()
        .enumerate()
        .map(|(g, &(n, r0))| {
            let col: Vec<f64> = lengths.iter().map(|row| row[g]).collect();
            let e = Estimate::mean(&col);
            let (comparator_n, novel_n) = split(n, r0);
            AlcCell {
                n,
                r0,
                comparator_n,
                novel_n,
                avg_hpd_length: e.value,
                mc_stderr: e.stderr,
            }
        })
        .collect();

    for &n in &cfg.n_grid {
        let qualifying: Vec<&AlcCell> = cells
            .iter()
            .filter(|c| c.n == n && c.avg_hpd_length <= cfg.zeta)
            .collect();
        // most balanced qualifying design; first in grid order on ties
        let chosen = qualifying.iter().fold(None::<&AlcCell>, |best, c| match best {
            Some(b) if (b.r0 - 0.5).abs() <= (c.r0 - 0.5).abs() => Some(b),
            _ => Some(c),
        });
        if let Some(c) = chosen {
            let (selected_n, selected_r0) = (c.n, c.r0);
            return Ok(AlcResult {
                cells,
                selected_n,
                selected_r0,
            });
        }
    }
    Err(Error::NoQualifyingDesign { zeta: cfg.zeta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_priors;

    fn small() -> AlcConfig {
        AlcConfig {
            n_grid: vec![350, 400, 450],
            replicates: 40,
            posterior_draws: 500,
            ..Default::default()
        }
    }

    #[test]
    fn loose_threshold_picks_smallest_n_most_balanced() {
        let cfg = AlcConfig { zeta: 1.0, ..small() };
        let r = alc_search(&cfg, &default_priors(), &StreamKey::root(1)).unwrap();
        assert_eq!((r.selected_n, r.selected_r0), (350, 0.5));
        assert_eq!(r.cells.len(), 12);
    }

    #[test]
    fn impossible_threshold_errors() {
        let cfg = AlcConfig { zeta: 1e-6, ..small() };
        let err = alc_search(&cfg, &default_priors(), &StreamKey::root(1)).unwrap_err();
        assert!(matches!(err, Error::NoQualifyingDesign { .. }));
    }

    #[test]
    fn split_rounds_comparator() {
        assert_eq!(split(410, 0.4), (164, 246));
        assert_eq!(split(355, 0.3), (107, 248));
    }

    #[test]
    fn lengths_shrink_with_n() {
        let r = alc_search(&small(), &default_priors(), &StreamKey::root(2)).unwrap();
        for r0 in [0.2, 0.3, 0.4, 0.5] {
            let col: Vec<f64> = r.cells.iter().filter(|c| c.r0 == r0).map(|c| c.avg_hpd_length).collect();
            assert!(col.windows(2).all(|w| w[1] <= w[0]), "{col:?}");
        }
    }

    #[test]
    fn invalid_grids_rejected() {
        let bad = AlcConfig { n_grid: vec![400, 350], ..small() };
        assert!(bad.validate().is_err());
        let bad = AlcConfig { r0_grid: vec![], ..small() };
        assert!(bad.validate().is_err());
        let bad = AlcConfig { zeta: 0.0, ..small() };
        assert!(bad.validate().is_err());
    }
}
