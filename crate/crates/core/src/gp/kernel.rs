//! Matérn-5/2 covariance with one lengthscale per input dimension (ARD).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_5: f64 = 2.236_067_977_499_79;

/// Kernel hyperparameters, all stored in log space.
///
/// Lengthscales are expressed in normalized-input units and the noise
/// variance in standardized-output units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub log_lengthscales: Vec<f64>,
    pub log_signal_var: f64,
    pub log_noise_var: f64,
}

impl KernelParams {
    /// Builds parameters from natural-scale values.
    pub fn new(lengthscales: &[f64], signal_var: f64, noise_var: f64) -> Result<Self> {
        let params = Self {
            log_lengthscales: lengthscales.iter().map(|l| l.ln()).collect(),
            log_signal_var: signal_var.ln(),
            log_noise_var: noise_var.ln(),
        };
        params.validate(lengthscales.len())?;
        Ok(params)
    }

    /// Unit lengthscales, unit signal variance, small noise.
    pub fn unit(dim: usize) -> Self {
        Self {
            log_lengthscales: vec![0.0; dim],
            log_signal_var: 0.0,
            log_noise_var: (1e-6f64).ln(),
        }
    }

    pub fn dim(&self) -> usize {
        self.log_lengthscales.len()
    }

    pub fn signal_var(&self) -> f64 {
        self.log_signal_var.exp()
    }

    pub fn noise_var(&self) -> f64 {
        self.log_noise_var.exp()
    }

    pub fn lengthscales(&self) -> Vec<f64> {
        self.log_lengthscales.iter().map(|l| l.exp()).collect()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::Argument(format!(
                "kernel has {} lengthscales but the problem has dimension {dim}",
                self.dim()
            )));
        }
        let all = self
            .log_lengthscales
            .iter()
            .chain([&self.log_signal_var, &self.log_noise_var]);
        for v in all {
            if !v.is_finite() || !v.exp().is_finite() || v.exp() <= 0.0 {
                return Err(Error::Argument(format!("kernel parameter {v} (log scale) is not usable")));
            }
        }
        Ok(())
    }

    /// Flattened as `[log lengthscales.., log signal var, log noise var]`.
    pub(crate) fn to_vec(&self) -> Vec<f64> {
        let mut v = self.log_lengthscales.clone();
        v.push(self.log_signal_var);
        v.push(self.log_noise_var);
        v
    }

    pub(crate) fn from_slice(v: &[f64]) -> Self {
        let d = v.len() - 2;
        Self {
            log_lengthscales: v[..d].to_vec(),
            log_signal_var: v[d],
            log_noise_var: v[d + 1],
        }
    }
}

/// Squared scaled distance `Σ ((a_k - b_k) / ℓ_k)²`.
#[inline]
pub(crate) fn scaled_sq_dist(inv_ls: &[f64], a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(inv_ls)
        .map(|((x, y), il)| {
            let t = (x - y) * il;
            t * t
        })
        .sum()
}

/// Unit-amplitude Matérn-5/2 profile as a function of the scaled distance `r`.
#[inline]
pub(crate) fn matern52(r: f64) -> f64 {
    let s = SQRT_5 * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// `∂k/∂log ℓ_k = σ² · (5/3)(1 + √5 r) e^{-√5 r} · (Δ_k/ℓ_k)²`, without the amplitude and the Δ term.
#[inline]
pub(crate) fn matern52_ls_factor(r: f64) -> f64 {
    let s = SQRT_5 * r;
    (5.0 / 3.0) * (1.0 + s) * (-s).exp()
}

/// Matérn-5/2 ARD covariance between two points.
pub fn kernel_eval(params: &KernelParams, x1: &[f64], x2: &[f64]) -> Result<f64> {
    let d = params.dim();
    if x1.len() != d || x2.len() != d {
        return Err(Error::Argument(format!(
            "kernel expects {d}-dimensional inputs, got {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    let inv_ls: Vec<f64> = params.log_lengthscales.iter().map(|l| (-l).exp()).collect();
    let r = scaled_sq_dist(&inv_ls, x1, x2).sqrt();
    Ok(params.signal_var() * matern52(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_returns_amplitude() {
        let p = KernelParams::new(&[0.3, 2.0], 2.0, 1e-3).unwrap();
        let k = kernel_eval(&p, &[0.1, 0.9], &[0.1, 0.9]).unwrap();
        assert!((k - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_distance_matches_hand_evaluation() {
        let p = KernelParams::new(&[1.0], 1.0, 1e-3).unwrap();
        let s5 = 5f64.sqrt();
        let expected = (1.0 + s5 + 5.0 / 3.0) * (-s5).exp();
        let k = kernel_eval(&p, &[0.0], &[1.0]).unwrap();
        assert!((k - expected).abs() < 1e-15, "{k} vs {expected}");
        // (1 + 2.2360679… + 1.6666…) · e^{-2.2360679…}
        assert!((k - 0.523_994_108_831_820_3).abs() < 1e-12);
    }

    #[test]
    fn symmetric_and_bounded() {
        let p = KernelParams::new(&[0.2, 0.5, 1.5], 1.7, 1e-4).unwrap();
        let a = [0.1, 0.4, 0.8];
        let b = [0.9, 0.2, 0.3];
        let ab = kernel_eval(&p, &a, &b).unwrap();
        let ba = kernel_eval(&p, &b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!(ab > 0.0 && ab <= 1.7);
    }

    #[test]
    fn dimension_mismatch_is_an_argument_error() {
        let p = KernelParams::unit(2);
        assert!(matches!(kernel_eval(&p, &[0.0], &[0.0, 1.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn rejects_non_finite_params() {
        let mut p = KernelParams::unit(1);
        p.log_noise_var = f64::NAN;
        assert!(p.validate(1).is_err());
        assert!(KernelParams::unit(2).validate(3).is_err());
    }
}
