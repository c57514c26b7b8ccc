//! Monte-Carlo reference for the improvement-based acquisitions.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// Samples `Y ~ N(mu, sigma^2)` and estimates `P(Y < target)` and `E[max(target - Y, 0)]`.
pub fn improvement<R: Rng>(mu: f64, sigma: f64, target: f64, n: usize, rng: &mut R) -> (Estimate, Estimate) {
    let (mut hits, mut sum, mut sum_sq) = (0usize, 0.0, 0.0);
    for _ in 0..n {
        let y = mu + sigma * rng.sample::<f64, _>(StandardNormal);
        let gain = (target - y).max(0.0);
        if y < target {
            hits += 1;
        }
        sum += gain;
        sum_sq += gain * gain;
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    (
        Estimate {
            value: p,
            std_err: (p * (1.0 - p) / nf).sqrt(),
        },
        Estimate {
            value: mean,
            std_err: (var / nf).sqrt(),
        },
    )
}
