//! Analytic test problems with known global minima, and the Gaussian
//! observation-noise wrapper.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bo::{Bounds, Objective};
use crate::error::{Error, Result};

pub type BenchmarkFn = fn(&[f64]) -> Result<f64>;

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub name: &'static str,
    pub dim: usize,
    pub bounds: Vec<(f64, f64)>,
    pub f_star: f64,
    pub x_star: Vec<Vec<f64>>,
    pub func: BenchmarkFn,
}

impl BenchmarkSpec {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        (self.func)(x)
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.bounds.clone()).expect("benchmark bounds are valid")
    }
}

fn check(name: &str, x: &[f64], bounds: &[(f64, f64)]) -> Result<()> {
    if x.len() != bounds.len() {
        return Err(Error::Argument(format!(
            "{name} takes {} coordinates, got {}",
            bounds.len(),
            x.len()
        )));
    }
    for (v, (lo, hi)) in x.iter().zip(bounds) {
        if !(*lo <= *v && *v <= *hi) {
            return Err(Error::Argument(format!("{name}: {x:?} lies outside {bounds:?}")));
        }
    }
    Ok(())
}

const BRANIN_BOUNDS: [(f64, f64); 2] = [(-5.0, 10.0), (0.0, 15.0)];
/// `5 / (4π)`.
pub const BRANIN_MIN: f64 = 0.397_887_357_729_738_4;

/// Branin on `[-5, 10] × [0, 15]`.
pub fn branin(x: &[f64]) -> Result<f64> {
    check("branin", x, &BRANIN_BOUNDS)?;
    let a = 1.0;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * PI);
    let (x1, x2) = (x[0], x[1]);
    Ok(a * (x2 - b * x1 * x1 + c * x1 - r).powi(2) + s * (1.0 - t) * x1.cos() + s)
}

const HARTMANN3_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];
/// Minimum of the four-digit coefficient tables above (located numerically).
pub const HARTMANN3_MIN: f64 = -3.862_779_787_332_663;

/// Hartmann-3 on the unit cube.
pub fn hartmann3(x: &[f64]) -> Result<f64> {
    check("hartmann3", x, &[(0.0, 1.0); 3])?;
    let mut total = 0.0;
    for i in 0..4 {
        let inner: f64 = (0..3).map(|j| HARTMANN3_A[i][j] * (x[j] - HARTMANN3_P[i][j]).powi(2)).sum();
        total += HARTMANN3_ALPHA[i] * (-inner).exp();
    }
    Ok(-total)
}

pub const RASTRIGIN_LIMIT: f64 = 5.12;

/// Rastrigin in any dimension on `[-5.12, 5.12]^d`.
pub fn rastrigin(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Argument("rastrigin needs at least one coordinate".into()));
    }
    check("rastrigin", x, &vec![(-RASTRIGIN_LIMIT, RASTRIGIN_LIMIT); x.len()])?;
    let d = x.len() as f64;
    Ok(10.0 * d + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>())
}

fn rastrigin3(x: &[f64]) -> Result<f64> {
    if x.len() != 3 {
        return Err(Error::Argument(format!("rastrigin3 takes 3 coordinates, got {}", x.len())));
    }
    rastrigin(x)
}

/// All registered benchmarks: `branin`, `hartmann3`, `rastrigin3`.
pub fn registry() -> Vec<BenchmarkSpec> {
    vec![
        BenchmarkSpec {
            name: "branin",
            dim: 2,
            bounds: BRANIN_BOUNDS.to_vec(),
            f_star: BRANIN_MIN,
            x_star: vec![vec![-PI, 12.275], vec![PI, 2.275], vec![9.42478, 2.475]],
            func: branin,
        },
        BenchmarkSpec {
            name: "hartmann3",
            dim: 3,
            bounds: vec![(0.0, 1.0); 3],
            f_star: HARTMANN3_MIN,
            x_star: vec![vec![0.114614, 0.555649, 0.852547]],
            func: hartmann3,
        },
        BenchmarkSpec {
            name: "rastrigin3",
            dim: 3,
            bounds: vec![(-RASTRIGIN_LIMIT, RASTRIGIN_LIMIT); 3],
            f_star: 0.0,
            x_star: vec![vec![0.0; 3]],
            func: rastrigin3,
        },
    ]
}

pub fn lookup(name: &str) -> Result<BenchmarkSpec> {
    registry()
        .into_iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::Spec(format!("unknown benchmark {name:?}")))
}

/// A benchmark as a noise-free [`Objective`].
#[derive(Debug, Clone)]
pub struct BenchmarkObjective {
    spec: BenchmarkSpec,
    bounds: Bounds,
}

impl BenchmarkObjective {
    pub fn new(spec: BenchmarkSpec) -> Self {
        let bounds = spec.bounds();
        Self { spec, bounds }
    }

    pub fn spec(&self) -> &BenchmarkSpec {
        &self.spec
    }
}

impl Objective for BenchmarkObjective {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&mut self, unit_x: &[f64]) -> Result<f64> {
        self.spec.eval(&self.bounds.to_original(unit_x))
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(self.spec.f_star)
    }
}

/// Adds `noise_std · ε`, `ε ~ N(0,1)` i.i.d., to every evaluation of `inner`.
pub struct NoisyObjective<O> {
    inner: O,
    noise_std: f64,
    rng: ChaCha8Rng,
}

pub fn with_noise<O: Objective>(inner: O, noise_std: f64, rng: ChaCha8Rng) -> Result<NoisyObjective<O>> {
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::Argument(format!("noise_std must be finite and >= 0, got {noise_std}")));
    }
    Ok(NoisyObjective { inner, noise_std, rng })
}

impl<O: Objective> Objective for NoisyObjective<O> {
    fn bounds(&self) -> &Bounds {
        self.inner.bounds()
    }

    fn evaluate(&mut self, unit_x: &[f64]) -> Result<f64> {
        let f = self.inner.evaluate(unit_x)?;
        if self.noise_std == 0.0 {
            return Ok(f);
        }
        let e: f64 = self.rng.sample(StandardNormal);
        Ok(f + self.noise_std * e)
    }

    fn known_optimum(&self) -> Option<f64> {
        self.inner.known_optimum()
    }
}
