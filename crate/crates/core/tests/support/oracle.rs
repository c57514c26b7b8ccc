//! Dense-linear-algebra GP reference: explicit inverse and LU determinant,
//! sharing nothing with the library's Cholesky path except the kernel formula,
//! which is transcribed again here.
#![allow(dead_code)]

use std::f64::consts::PI;

use acqgen::gp::{Dataset, KernelParams};
use nalgebra::{DMatrix, DVector};

pub fn matern52(params: &KernelParams, a: &[f64], b: &[f64]) -> f64 {
    let ls = params.lengthscales();
    let r = a
        .iter()
        .zip(b)
        .zip(&ls)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum::<f64>()
        .sqrt();
    let s5r = 5f64.sqrt() * r;
    params.signal_var() * (1.0 + s5r + 5.0 * r * r / 3.0) * (-s5r).exp()
}

/// `K + (noise + jitter) I` over the dataset inputs.
pub fn gram(params: &KernelParams, data: &Dataset, jitter: f64) -> DMatrix<f64> {
    let xs = data.inputs();
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| {
        let k = matern52(params, &xs[i], &xs[j]);
        if i == j {
            k + params.noise_var() + jitter
        } else {
            k
        }
    })
}

pub fn lml(params: &KernelParams, data: &Dataset, jitter: f64) -> f64 {
    let k = gram(params, data, jitter);
    let n = k.nrows();
    let y = DVector::from_column_slice(data.outputs_std());
    let inv = k.clone().try_inverse().expect("invertible Gram matrix");
    let det = k.lu().determinant();
    -0.5 * y.dot(&(&inv * &y)) - 0.5 * det.ln() - 0.5 * n as f64 * (2.0 * PI).ln()
}

/// Raw-unit `(mu, sigma)` at `x`, with the latent variance clamped at zero.
pub fn predict(params: &KernelParams, data: &Dataset, jitter: f64, x: &[f64]) -> (f64, f64) {
    let inv = gram(params, data, jitter).try_inverse().expect("invertible Gram matrix");
    let k = DVector::from_iterator(data.len(), data.inputs().iter().map(|t| matern52(params, t, x)));
    let y = DVector::from_column_slice(data.outputs_std());
    let mu = k.dot(&(&inv * &y));
    let var = (params.signal_var() - k.dot(&(&inv * &k))).max(0.0);
    (
        mu * data.std_scale() + data.std_offset(),
        var.sqrt() * data.std_scale(),
    )
}
