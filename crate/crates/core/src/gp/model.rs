use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use super::kernel::{matern52, matern52_ls_factor, scaled_sq_dist, KernelParams};
use super::optim::maximize_box;
use crate::acquisition::PosteriorPrediction;
use crate::error::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 10;

/// First diagonal jitter, relative to the signal variance.
const JITTER_START: f64 = 1e-10;
/// Largest diagonal jitter tried, relative to the signal variance.
const JITTER_MAX: f64 = 1e-4;

/// Log-uniform ranges for restart initial points (natural scale).
const INIT_LENGTHSCALE: (f64, f64) = (1e-2, 1e1);
const INIT_SIGNAL_VAR: (f64, f64) = (1e-2, 1e1);
const INIT_NOISE_VAR: (f64, f64) = (1e-6, 1e-1);

/// Box the local search is confined to (natural scale).
const BOX_LENGTHSCALE: (f64, f64) = (1e-3, 1e2);
const BOX_SIGNAL_VAR: (f64, f64) = (1e-3, 1e2);
const BOX_NOISE_VAR: (f64, f64) = (1e-10, 1.0);

const LBFGS_ITERS: usize = 60;

struct Factor {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Signal-only covariance matrix (no noise, no jitter).
fn signal_matrix(params: &KernelParams, inv_ls: &[f64], xs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = xs.len();
    let sv = params.signal_var();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = sv;
        for j in 0..i {
            let v = sv * matern52(scaled_sq_dist(inv_ls, &xs[i], &xs[j]).sqrt());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn factorize(params: &KernelParams, kf: &DMatrix<f64>, y: &DVector<f64>) -> Result<Factor> {
    let sv = params.signal_var();
    let nv = params.noise_var();
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * sv;
        let mut k = kf.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += nv + jitter;
        }
        if let Some(chol) = Cholesky::new(k) {
            let alpha = chol.solve(y);
            if alpha.iter().all(|v| v.is_finite()) {
                return Ok(Factor { chol, alpha, jitter });
            }
        }
        rel *= 10.0;
        if rel > JITTER_MAX * (1.0 + 1e-9) {
            return Err(Error::Numerical(format!(
                "Cholesky failed with jitter up to {:e} (signal var {sv:e}, noise var {nv:e})",
                JITTER_MAX * sv
            )));
        }
    }
}

fn lml_from_factor(factor: &Factor, y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let log_det_half: f64 = factor.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * y.dot(&factor.alpha) - log_det_half - 0.5 * n * (2.0 * PI).ln()
}

fn check_data(params: &KernelParams, data: &Dataset) -> Result<Vec<f64>> {
    params.validate(data.dim())?;
    Ok(params.log_lengthscales.iter().map(|l| (-l).exp()).collect())
}

/// GP log marginal likelihood of the standardized outputs.
pub fn log_marginal_likelihood(params: &KernelParams, data: &Dataset) -> Result<f64> {
    let inv_ls = check_data(params, data)?;
    let kf = signal_matrix(params, &inv_ls, data.inputs());
    let y = DVector::from_column_slice(data.outputs_std());
    let factor = factorize(params, &kf, &y)?;
    Ok(lml_from_factor(&factor, &y))
}

/// Log marginal likelihood and its gradient with respect to
/// `[log lengthscales.., log signal var, log noise var]`.
pub fn log_marginal_likelihood_grad(params: &KernelParams, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    let inv_ls = check_data(params, data)?;
    let xs = data.inputs();
    let n = xs.len();
    let d = data.dim();
    let sv = params.signal_var();
    let nv = params.noise_var();
    let kf = signal_matrix(params, &inv_ls, xs);
    let y = DVector::from_column_slice(data.outputs_std());
    let factor = factorize(params, &kf, &y)?;
    let lml = lml_from_factor(&factor, &y);

    // ∂LML/∂θ = ½ tr((ααᵀ − K⁻¹) ∂K/∂θ)
    let kinv = factor.chol.inverse();
    let alpha = &factor.alpha;
    let w = |i: usize, j: usize| alpha[i] * alpha[j] - kinv[(i, j)];

    let mut grad = vec![0.0; d + 2];
    let mut g_sv = 0.0;
    let mut trace_w = 0.0;
    for i in 0..n {
        let wii = w(i, i);
        trace_w += wii;
        // jitter is proportional to the signal variance
        g_sv += wii * (sv + factor.jitter);
        for j in 0..i {
            let wij = w(i, j);
            g_sv += 2.0 * wij * kf[(i, j)];
            let r = scaled_sq_dist(&inv_ls, &xs[i], &xs[j]).sqrt();
            let common = 2.0 * wij * sv * matern52_ls_factor(r);
            for k in 0..d {
                let t = (xs[i][k] - xs[j][k]) * inv_ls[k];
                grad[k] += common * t * t;
            }
        }
    }
    for g in grad.iter_mut().take(d) {
        *g *= 0.5;
    }
    grad[d] = 0.5 * g_sv;
    grad[d + 1] = 0.5 * nv * trace_w;
    Ok((lml, grad))
}

/// Fitted GP surrogate. Immutable once built.
#[derive(Debug, Clone)]
pub struct GPModel {
    params: KernelParams,
    data: Dataset,
    inv_ls: Vec<f64>,
    chol_factor: DMatrix<f64>,
    solve_vec: DVector<f64>,
    jitter: f64,
    lml: f64,
}

impl GPModel {
    /// Conditions a GP with fixed hyperparameters on `data`.
    pub fn new(params: KernelParams, data: Dataset) -> Result<Self> {
        let inv_ls = check_data(&params, &data)?;
        let kf = signal_matrix(&params, &inv_ls, data.inputs());
        let y = DVector::from_column_slice(data.outputs_std());
        let factor = factorize(&params, &kf, &y)?;
        let lml = lml_from_factor(&factor, &y);
        Ok(Self {
            chol_factor: factor.chol.l(),
            solve_vec: factor.alpha,
            jitter: factor.jitter,
            params,
            data,
            inv_ls,
            lml,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Lower-triangular `L` with `L Lᵀ = K + (noise + jitter) I`.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol_factor
    }

    pub fn solve_vec(&self) -> &DVector<f64> {
        &self.solve_vec
    }

    /// Diagonal jitter that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    /// Posterior of the latent function at `x`, in raw output units.
    pub fn predict(&self, x: &[f64]) -> Result<PosteriorPrediction> {
        Ok(self.predict_batch(std::slice::from_ref(&x.to_vec()))?[0])
    }

    /// Posterior at every point of `xs`.
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<PosteriorPrediction>> {
        Ok(self
            .predict_standardized(xs)?
            .into_iter()
            .map(|(mu, var)| PosteriorPrediction {
                mu: mu * self.data.std_scale() + self.data.std_offset(),
                sigma: var.sqrt() * self.data.std_scale(),
            })
            .collect())
    }

    /// Posterior mean and latent variance in standardized output units.
    pub fn predict_standardized(&self, xs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        let d = self.dim();
        if let Some(bad) = xs.iter().find(|x| x.len() != d) {
            return Err(Error::Argument(format!(
                "expected a {d}-dimensional point, got {}",
                bad.len()
            )));
        }
        let train = self.data.inputs();
        let n = train.len();
        let sv = self.params.signal_var();
        let mut kstar = DMatrix::zeros(n, xs.len());
        for (j, x) in xs.iter().enumerate() {
            for (i, t) in train.iter().enumerate() {
                kstar[(i, j)] = sv * matern52(scaled_sq_dist(&self.inv_ls, t, x).sqrt());
            }
        }
        let mu = kstar.tr_mul(&self.solve_vec);
        if !self.chol_factor.solve_lower_triangular_mut(&mut kstar) {
            return Err(Error::Numerical("singular Cholesky factor".into()));
        }
        Ok((0..xs.len())
            .map(|j| {
                let explained = kstar.column(j).norm_squared();
                (mu[j], (sv - explained).clamp(0.0, sv))
            })
            .collect())
    }
}

/// Diagnostics from a multi-start fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: GPModel,
    /// LML at each restart's starting point (`None` when it failed to factorize).
    pub initial_lml: Vec<Option<f64>>,
    /// LML reached by each restart's local search.
    pub final_lml: Vec<Option<f64>>,
    pub best_restart: usize,
}

fn log_bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![BOX_LENGTHSCALE.0.ln(); dim];
    let mut hi = vec![BOX_LENGTHSCALE.1.ln(); dim];
    lo.extend([BOX_SIGNAL_VAR.0.ln(), BOX_NOISE_VAR.0.ln()]);
    hi.extend([BOX_SIGNAL_VAR.1.ln(), BOX_NOISE_VAR.1.ln()]);
    (lo, hi)
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, (a, b): (f64, f64)) -> f64 {
    rng.random_range(a.ln()..=b.ln())
}

/// Draws the starting point of restart `index` from its own rng stream.
fn initial_params(dim: usize, base_seed: u64, index: usize) -> KernelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index as u64);
    KernelParams {
        log_lengthscales: (0..dim).map(|_| log_uniform(&mut rng, INIT_LENGTHSCALE)).collect(),
        log_signal_var: log_uniform(&mut rng, INIT_SIGNAL_VAR),
        log_noise_var: log_uniform(&mut rng, INIT_NOISE_VAR),
    }
}

/// Maximum-likelihood fit with `restarts` local searches.
pub fn fit<R: Rng + ?Sized>(data: &Dataset, restarts: usize, rng: &mut R) -> Result<GPModel> {
    fit_detailed(data, restarts, rng).map(|o| o.model)
}

/// Like [`fit`], also reporting per-restart likelihoods.
///
/// Ties between restarts go to the lowest restart index.
pub fn fit_detailed<R: Rng + ?Sized>(data: &Dataset, restarts: usize, rng: &mut R) -> Result<FitOutcome> {
    if restarts == 0 {
        return Err(Error::Argument("restarts must be positive".into()));
    }
    let dim = data.dim();
    let base_seed = rng.next_u64();
    let (lo, hi) = log_bounds(dim);

    let mut initial_lml = Vec::with_capacity(restarts);
    let mut final_lml = Vec::with_capacity(restarts);
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut last_err = None;

    for r in 0..restarts {
        let start = initial_params(dim, base_seed, r).to_vec();
        let objective = |v: &[f64]| {
            let p = KernelParams::from_slice(v);
            match log_marginal_likelihood_grad(&p, data) {
                Ok((l, g)) if l.is_finite() && g.iter().all(|v| v.is_finite()) => Some((l, g)),
                Ok(_) => None,
                Err(e) => {
                    last_err = Some(e);
                    None
                }
            }
        };
        let mut objective = objective;
        let start_val = objective(&start).map(|(l, _)| l);
        initial_lml.push(start_val);
        let Some(_) = start_val else {
            final_lml.push(None);
            continue;
        };
        match maximize_box(&mut objective, &start, &lo, &hi, LBFGS_ITERS) {
            Some(m) => {
                final_lml.push(Some(m.value));
                if best.as_ref().is_none_or(|(_, v, _)| m.value > *v) {
                    best = Some((r, m.value, m.x));
                }
            }
            None => final_lml.push(None),
        }
    }

    let Some((best_restart, _, x)) = best else {
        let diag = last_err.map_or_else(|| "non-finite likelihood".to_string(), |e| e.to_string());
        return Err(Error::Fit(format!("all {restarts} restarts failed; last: {diag}")));
    };
    let model = GPModel::new(KernelParams::from_slice(&x), data.clone())?;
    Ok(FitOutcome {
        model,
        initial_lml,
        final_lml,
        best_restart,
    })
}
