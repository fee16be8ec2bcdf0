//! Beta-binomial updates, probability-of-best and the non-inferiority statistic.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::model::BetaPrior;

/// Conjugate update of a Beta prior with binomial data.
pub fn beta_posterior(prior: BetaPrior, successes: u32, failures: u32) -> BetaPrior {
    BetaPrior {
        alpha: prior.alpha + successes as f64,
        beta: prior.beta + failures as f64,
    }
}

pub fn sample_beta<R: Rng + ?Sized>(dist: BetaPrior, n: usize, rng: &mut R) -> Vec<f64> {
    let beta = Beta::new(dist.alpha, dist.beta).expect("validated Beta parameters");
    (0..n).map(|_| beta.sample(rng)).collect()
}

/// Fraction of draws in which each arm is the strict maximum; arms tied for
/// the maximum within a draw split that draw equally.
///
/// `adequate_draws[arm][draw]`; every arm must carry the same number of draws.
pub fn prob_best(adequate_draws: &[Vec<f64>]) -> Vec<f64> {
    let k = adequate_draws.len();
    assert!(k >= 2, "prob_best needs at least two arms");
    let n = adequate_draws[0].len();
    assert!(n >= 1, "prob_best needs at least one draw");
    assert!(
        adequate_draws.iter().all(|d| d.len() == n),
        "arms carry different draw counts"
    );

    let mut wins = vec![0.0; k];
    let mut tied = Vec::with_capacity(k);
    for j in 0..n {
        let mut max = f64::NEG_INFINITY;
        tied.clear();
        for (i, arm) in adequate_draws.iter().enumerate() {
            let v = arm[j];
            if v > max {
                max = v;
                tied.clear();
                tied.push(i);
            } else if v == max {
                tied.push(i);
            }
        }
        let share = 1.0 / tied.len() as f64;
        for &i in &tied {
            wins[i] += share;
        }
    }
    let total: f64 = wins.iter().sum();
    wins.iter().map(|w| w / total).collect()
}

/// y = fraction of paired draws with `p_C - p_D >= eta`. Small values favour
/// non-inferiority of the novel arm.
pub fn noninferiority_stat(comparator_draws: &[f64], novel_draws: &[f64], eta: f64) -> f64 {
    assert_eq!(
        comparator_draws.len(),
        novel_draws.len(),
        "draw vectors must be paired"
    );
    assert!(!comparator_draws.is_empty());
    let hits = comparator_draws
        .iter()
        .zip(novel_draws)
        .filter(|(c, d)| *c - *d >= eta)
        .count();
    hits as f64 / comparator_draws.len() as f64
}

fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Exact probability that each independent Beta variable is the largest,
/// `P_i = int f_i(x) prod_{k != i} F_k(x) dx`, by tanh-sinh quadrature on (0, 1).
///
/// Deterministic counterpart of [`prob_best`] for conjugate posteriors.
pub fn prob_best_beta(posteriors: &[BetaPrior]) -> Vec<f64> {
    let k = posteriors.len();
    assert!(k >= 2, "prob_best needs at least two arms");
    let ln_norm: Vec<f64> = posteriors.iter().map(|p| ln_beta(p.alpha, p.beta)).collect();

    const T_MAX: f64 = 4.5;
    const MAX_LEVEL: u32 = 12;

    let mut cdf = vec![0.0; k];
    let mut eval = |t: f64, acc: &mut [f64]| {
        let s = std::f64::consts::PI * t.sinh();
        let ln_x = -softplus(-s);
        let ln_1mx = -softplus(s);
        let x = ln_x.exp();
        // dx/dt = pi cosh(t) x (1 - x)
        let ln_w = (std::f64::consts::PI * t.cosh()).ln() + ln_x + ln_1mx;
        for (c, p) in cdf.iter_mut().zip(posteriors) {
            *c = if x >= 1.0 { 1.0 } else { beta_reg(p.alpha, p.beta, x) };
        }
        for i in 0..k {
            let p = posteriors[i];
            let ln_f = (p.alpha - 1.0) * ln_x + (p.beta - 1.0) * ln_1mx - ln_norm[i];
            let others: f64 = (0..k).filter(|&m| m != i).map(|m| cdf[m]).product();
            if others > 0.0 {
                acc[i] += (ln_f + ln_w).exp() * others;
            }
        }
    };

    let mut h = 0.125;
    let mut sums = vec![0.0; k];
    let steps = (T_MAX / h) as i64;
    for j in -steps..=steps {
        eval(j as f64 * h, &mut sums);
    }
    let mut prev: Vec<f64> = sums.iter().map(|s| s * h).collect();
    let mut estimate = prev.clone();
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let steps = (T_MAX / h) as i64;
        // only the new odd nodes
        let mut j = -steps + if steps % 2 == 0 { 1 } else { 0 };
        while j <= steps {
            eval(j as f64 * h, &mut sums);
            j += 2;
        }
        estimate = sums.iter().map(|s| s * h).collect();
        let change = estimate
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if level >= 3 && change < 1e-12 {
            break;
        }
        prev.clone_from(&estimate);
    }
    let total: f64 = estimate.iter().sum();
    estimate.iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn conjugate_updates() {
        let c = BetaPrior { alpha: 15.6, beta: 0.44 };
        assert_eq!(beta_posterior(c, 0, 0), c);
        let p = beta_posterior(c, 10, 2);
        assert!((p.alpha - 25.6).abs() < 1e-12 && (p.beta - 2.44).abs() < 1e-12);
        let d = beta_posterior(BetaPrior { alpha: 6.25, beta: 0.25 }, 25, 2);
        assert_eq!((d.alpha, d.beta), (31.25, 2.25));
    }

    #[test]
    fn prob_best_dominance_and_ties() {
        let dom = vec![vec![0.1, 0.2], vec![0.9, 0.8], vec![0.3, 0.4]];
        assert_eq!(prob_best(&dom), vec![0.0, 1.0, 0.0]);
        let same = vec![vec![0.5, 0.6, 0.7]; 3];
        for p in prob_best(&same) {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let mixed = vec![vec![0.9, 0.5], vec![0.8, 0.8], vec![0.1, 0.2]];
        assert_eq!(prob_best(&mixed), vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn ni_stat_examples() {
        let same = vec![0.9; 10];
        assert_eq!(noninferiority_stat(&same, &same, 0.178), 0.0);
        assert_eq!(noninferiority_stat(&[1.0; 4], &[0.5; 4], 0.178), 1.0);
        let pc = [1.0, 1.0, 1.0, 1.0];
        let pd = [0.9, 0.8, 0.7, 1.0];
        assert_eq!(noninferiority_stat(&pc, &pd, 0.178), 0.5);
    }

    #[test]
    fn exact_prob_best_symmetric() {
        let p = BetaPrior { alpha: 6.25, beta: 0.25 };
        for v in prob_best_beta(&[p, p, p]) {
            assert!((v - 1.0 / 3.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn exact_prob_best_two_arm_closed_form() {
        // P(X > Y) for X ~ Beta(a, 1), Y ~ Beta(b, 1) is a / (a + b).
        let x = BetaPrior { alpha: 3.0, beta: 1.0 };
        let y = BetaPrior { alpha: 2.0, beta: 1.0 };
        let p = prob_best_beta(&[x, y]);
        assert!((p[0] - 0.6).abs() < 1e-10, "{p:?}");
    }

    #[test]
    fn exact_matches_draws() {
        let posts = [
            BetaPrior { alpha: 6.25 + 40.0, beta: 0.25 + 5.0 },
            BetaPrior { alpha: 6.25 + 45.0, beta: 0.25 + 3.0 },
            BetaPrior { alpha: 6.25 + 30.0, beta: 0.25 + 9.0 },
        ];
        let exact = prob_best_beta(&posts);
        let mut rng = StreamKey::root(11).rng();
        let n = 200_000;
        let draws: Vec<Vec<f64>> = posts.iter().map(|&p| sample_beta(p, n, &mut rng)).collect();
        let mc = prob_best(&draws);
        for (e, m) in exact.iter().zip(&mc) {
            let se = (e * (1.0 - e) / n as f64).sqrt();
            assert!((e - m).abs() < 4.0 * se + 1e-12, "{exact:?} vs {mc:?}");
        }
    }
}
