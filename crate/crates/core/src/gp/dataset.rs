use rand::Rng;

use crate::error::{Error, Result};

/// Inputs closer than this in max-norm count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-10;
/// Half-width of the uniform perturbation applied to a near-duplicate input.
pub const DUPLICATE_JITTER: f64 = 1e-8;

/// Observations in normalized input space with standardized outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<Vec<f64>>,
    outputs_raw: Vec<f64>,
    outputs_std: Vec<f64>,
    std_offset: f64,
    std_scale: f64,
}

impl Dataset {
    /// Builds a dataset by inserting the observations in order.
    ///
    /// Near-duplicate inputs are perturbed as in [`Dataset::augment`], which is
    /// why an rng is needed.
    pub fn from_observations<R: Rng + ?Sized>(
        inputs: &[Vec<f64>],
        outputs: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Argument("a dataset needs at least one observation".into()));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::Argument(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let mut data = Self {
            dim: inputs[0].len(),
            inputs: Vec::with_capacity(inputs.len()),
            outputs_raw: Vec::with_capacity(inputs.len()),
            outputs_std: Vec::new(),
            std_offset: 0.0,
            std_scale: 1.0,
        };
        if data.dim == 0 {
            return Err(Error::Argument("inputs must have at least one coordinate".into()));
        }
        for (x, &y) in inputs.iter().zip(outputs) {
            data.insert(x, y, rng)?;
        }
        data.restandardize();
        Ok(data)
    }

    /// Appends one observation and re-standardizes the outputs.
    ///
    /// Returns the input actually stored, which differs from `x` only when `x`
    /// nearly duplicates an existing input.
    pub fn augment<R: Rng + ?Sized>(&mut self, x: &[f64], y: f64, rng: &mut R) -> Result<Vec<f64>> {
        let stored = self.insert(x, y, rng)?;
        self.restandardize();
        Ok(stored)
    }

    fn insert<R: Rng + ?Sized>(&mut self, x: &[f64], y: f64, rng: &mut R) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Argument(format!(
                "expected a {}-dimensional input, got {}",
                self.dim,
                x.len()
            )));
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Argument(format!("input {x:?} is outside the unit cube")));
        }
        if !y.is_finite() {
            return Err(Error::Argument(format!("observation {y} is not finite")));
        }
        let mut point = x.to_vec();
        let mut tries = 0;
        while self.nearest_max_norm(&point) < DUPLICATE_TOL {
            tries += 1;
            if tries > 100 {
                return Err(Error::Numerical(format!("could not separate duplicate input {x:?}")));
            }
            point = x
                .iter()
                .map(|&v| {
                    let e = rng.random_range(-DUPLICATE_JITTER..=DUPLICATE_JITTER);
                    // reflect instead of clipping so corners still move
                    if (0.0..=1.0).contains(&(v + e)) {
                        v + e
                    } else {
                        v - e
                    }
                })
                .collect();
        }
        self.inputs.push(point.clone());
        self.outputs_raw.push(y);
        Ok(point)
    }

    fn nearest_max_norm(&self, x: &[f64]) -> f64 {
        self.inputs
            .iter()
            .map(|p| p.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    fn restandardize(&mut self) {
        let n = self.outputs_raw.len() as f64;
        let mean = self.outputs_raw.iter().sum::<f64>() / n;
        let var = self.outputs_raw.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let scale = if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 };
        self.std_offset = mean;
        self.std_scale = scale;
        self.outputs_std = self.outputs_raw.iter().map(|y| (y - mean) / scale).collect();
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs_raw(&self) -> &[f64] {
        &self.outputs_raw
    }

    pub fn outputs_std(&self) -> &[f64] {
        &self.outputs_std
    }

    pub fn std_offset(&self) -> f64 {
        self.std_offset
    }

    pub fn std_scale(&self) -> f64 {
        self.std_scale
    }
}
