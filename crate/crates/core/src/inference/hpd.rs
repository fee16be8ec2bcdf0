use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub mass: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.high - self.low
    }
}

/// Highest-posterior-density interval estimated from draws: the shortest window
/// of `ceil(mass * n)` consecutive sorted draws, first window on ties.
///
/// Sorts `draws` in place.
pub fn hpd_interval_in_place(draws: &mut [f64], mass: f64) -> Interval {
    assert!(mass > 0.0 && mass < 1.0, "mass must lie in (0, 1)");
    assert!(!draws.is_empty(), "no draws");
    draws.sort_unstable_by(f64::total_cmp);
    let n = draws.len();
    // guard against 0.95 * 100 landing a hair above an integer
    let k = ((mass * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let k = k.min(n);
    let mut best = 0;
    let mut best_len = f64::INFINITY;
    for start in 0..=(n - k) {
        let len = draws[start + k - 1] - draws[start];
        if len < best_len {
            best_len = len;
            best = start;
        }
    }
    Interval {
        low: draws[best],
        high: draws[best + k - 1],
        mass,
    }
}

pub fn hpd_interval(draws: &[f64], mass: f64) -> Interval {
    let mut sorted = draws.to_vec();
    hpd_interval_in_place(&mut sorted, mass)
}
