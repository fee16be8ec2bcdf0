//! Monte Carlo design procedures: sample-size search, drop-threshold search,
//! decision-threshold calibration, operating characteristics and predictive power.
//!
//! Replicate `k` of every procedure draws only from streams below
//! `root.child(k)`, so results do not depend on the number of worker threads.

mod alc;
mod gamma;
mod lambda;
mod oc;
mod power;

pub use alc::{alc_search, AlcCell, AlcConfig, AlcResult};
pub use gamma::{gamma_search, GammaConfig, GammaResult, GammaRow};
pub use lambda::{calibrate_lambda1, calibrate_lambda2, calibrate_threshold, LambdaConfig, ThresholdEstimate};
pub use oc::{operating_characteristics, OcRow};
pub use power::{predictive_power, table2_scenarios, PowerRow, RrScenario};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::StreamKey;

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Binomial proportion `count / n`.
    pub fn proportion(count: usize, n: usize) -> Self {
        if n == 0 {
            return Self {
                value: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let p = count as f64 / n as f64;
        Self {
            value: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }

    /// Sample mean with the usual `sd / sqrt(n)` error.
    pub fn mean(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let m = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: m,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Evaluates `f` for replicates `0..n` on the rayon pool, passing each its own
/// stream `root.child(k)`. Output order is replicate order.
pub fn replicate_map<T, F>(root: &StreamKey, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &StreamKey) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|k| f(k, &root.child(k as u64)))
        .collect()
}

/// Order statistic at index `ceil(q * n)` (1-based) of `values`, sorting in place.
pub fn order_statistic(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "no values");
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    let idx = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    values[idx - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistic_examples() {
        let mut v: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        assert_eq!(order_statistic(&mut v, 0.05), 5.0);
        assert_eq!(order_statistic(&mut v, 0.5), 50.0);
        assert_eq!(order_statistic(&mut v, 0.0), 1.0);
        assert_eq!(order_statistic(&mut v, 1.0), 100.0);
        let mut w = vec![3.0];
        assert_eq!(order_statistic(&mut w, 0.5), 3.0);
    }

    #[test]
    fn proportion_se() {
        let e = Estimate::proportion(25, 100);
        assert_eq!(e.value, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn replicate_map_is_ordered_and_thread_invariant() {
        use rand::Rng;
        let root = StreamKey::root(3);
        let f = |_k: usize, s: &StreamKey| -> Result<u64> { Ok(s.rng().random()) };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| replicate_map(&root, 64, f))
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| replicate_map(&root, 64, f))
            .unwrap();
        assert_eq!(one, four);
        assert_eq!(one[5], root.child(5).rng().random::<u64>());
    }
}
