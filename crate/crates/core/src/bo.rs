//! The BO driver: initial design, grid-search proposal, observation, refit
//! and final recommendation, plus the random-search baseline.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::Incumbent;
use crate::error::{Error, Result};
use crate::gp::{fit, Dataset, GPModel, DEFAULT_RESTARTS};
use crate::policy::{
    argmax, hedge_update, utilities_for_iteration, HedgeState, IterationAcquisition, PolicySpec,
};

pub const INIT_LABEL: &str = "init";
pub const RANDOM_SEARCH_LABEL: &str = "random-search";

/// Utility evaluations allowed to the local polish.
const POLISH_EVALS: usize = 50;
const POLISH_STEP: f64 = 0.05;
const POLISH_MIN_STEP: f64 = 1e-6;

/// Axis-aligned box in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(Vec<(f64, f64)>);

impl Bounds {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::Argument("bounds need at least one dimension".into()));
        }
        for (i, (lo, hi)) in ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Argument(format!("dimension {i}: need lo < hi, got ({lo}, {hi})")));
            }
        }
        Ok(Self(ranges))
    }

    pub fn unit(dim: usize) -> Self {
        Self(vec![(0.0, 1.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn to_original(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(&self.0)
            .map(|(u, (lo, hi))| (lo + u * (hi - lo)).clamp(*lo, *hi))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.0)
            .map(|(v, (lo, hi))| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.0).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// A black box to minimize. Points are passed in unit-cube coordinates.
pub trait Objective {
    fn bounds(&self) -> &Bounds;

    fn evaluate(&mut self, unit_x: &[f64]) -> Result<f64>;

    fn dim(&self) -> usize {
        self.bounds().dim()
    }

    /// Global minimum value, when known.
    fn known_optimum(&self) -> Option<f64> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn bounds(&self) -> &Bounds {
        (**self).bounds()
    }

    fn evaluate(&mut self, unit_x: &[f64]) -> Result<f64> {
        (**self).evaluate(unit_x)
    }

    fn known_optimum(&self) -> Option<f64> {
        (**self).known_optimum()
    }
}

/// Closure objective evaluated in original units.
pub struct FnObjective<F> {
    bounds: Bounds,
    optimum: Option<f64>,
    f: F,
}

impl<F: FnMut(&[f64]) -> Result<f64>> FnObjective<F> {
    pub fn new(bounds: Bounds, optimum: Option<f64>, f: F) -> Self {
        Self { bounds, optimum, f }
    }
}

impl<F: FnMut(&[f64]) -> Result<f64>> Objective for FnObjective<F> {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&mut self, unit_x: &[f64]) -> Result<f64> {
        let x = self.bounds.to_original(unit_x);
        (self.f)(&x)
    }

    fn known_optimum(&self) -> Option<f64> {
        self.optimum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_init: usize,
    pub n_iters: usize,
    /// Uniform candidates scored per iteration.
    pub grid_size: usize,
    /// Polish the grid argmax with a short pattern search.
    pub refine_local: bool,
    pub seed: u64,
    pub gp_restarts: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_init: 5,
            n_iters: 20,
            grid_size: 1000,
            refine_local: false,
            seed: 0,
            gp_restarts: DEFAULT_RESTARTS,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_init < 2 {
            return Err(Error::Spec(format!("n_init must be >= 2, got {}", self.n_init)));
        }
        if self.grid_size < 10 {
            return Err(Error::Spec(format!("grid_size must be >= 10, got {}", self.grid_size)));
        }
        if self.gp_restarts == 0 {
            return Err(Error::Spec("gp_restarts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Evaluated point in original units.
    pub x: Vec<f64>,
    pub y: f64,
    pub best_so_far: f64,
    pub policy_label: String,
}

/// Everything one run observed, plus its final recommendation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Posterior-mean minimizer in original units (best observed point for random search).
    pub recommendation: Vec<f64>,
    pub recommendation_value_estimate: f64,
    /// Best observed point in original units.
    pub best_x: Vec<f64>,
    pub best_y: f64,
}

impl Trace {
    fn push(&mut self, x: Vec<f64>, y: f64, label: &str) {
        let best_so_far = self.records.last().map_or(y, |r| r.best_so_far.min(y));
        if self.records.last().is_none_or(|r| y < r.best_so_far) {
            self.best_x = x.clone();
            self.best_y = y;
        }
        self.records.push(TraceRecord {
            iter: self.records.len(),
            x,
            y,
            best_so_far,
            policy_label: label.to_string(),
        });
    }

    pub fn best_so_far(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_so_far).collect()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_so_far)
    }

    /// Header for [`Trace::write_csv_rows`]: `rep,iter,policy_label,x_0..,y,best_so_far`.
    pub fn csv_header(dim: usize) -> Vec<String> {
        let mut h = vec!["rep".to_string(), "iter".into(), "policy_label".into()];
        h.extend((0..dim).map(|i| format!("x_{i}")));
        h.extend(["y".to_string(), "best_so_far".into()]);
        h
    }

    pub fn write_csv_rows<W: Write>(&self, w: &mut csv::Writer<W>, rep: usize) -> Result<()> {
        for r in &self.records {
            let mut row = vec![rep.to_string(), r.iter.to_string(), r.policy_label.clone()];
            row.extend(r.x.iter().map(f64::to_string));
            row.extend([r.y.to_string(), r.best_so_far.to_string()]);
            w.write_record(&row)?;
        }
        Ok(())
    }

    /// Writes a standalone CSV with header for a single trace.
    pub fn to_csv<W: Write>(&self, out: W, rep: usize) -> Result<()> {
        let dim = self.records.first().map_or(0, |r| r.x.len());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(dim))?;
        self.write_csv_rows(&mut w, rep)?;
        w.flush()?;
        Ok(())
    }
}

/// Latin-hypercube design: along every dimension each of the `n` equal-width
/// strata holds exactly one point.
pub fn initial_design<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    for k in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            strata.swap(i, j);
        }
        for (p, s) in points.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            p[k] = ((s as f64 + u) / n as f64).min(1.0);
        }
    }
    points
}

fn uniform_points<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
}

/// A proposed point in unit coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub x: Vec<f64>,
    pub label: String,
    /// Index of the grid argmax.
    pub grid_index: usize,
    pub polished: bool,
}

/// Scores a fresh uniform grid with the policy's acquisition and returns its
/// argmax (lowest index on ties), optionally polished by a pattern search.
#[allow(clippy::too_many_arguments)]
pub fn propose_next<R: Rng + ?Sized>(
    model: &GPModel,
    policy: &PolicySpec,
    iter: usize,
    inc: &Incumbent,
    config: &RunConfig,
    rng: &mut R,
    hedge: Option<&mut HedgeState>,
) -> Result<Proposal> {
    let candidates = uniform_points(config.grid_size, model.dim(), rng);
    let scored = utilities_for_iteration(policy, iter, model, inc, &candidates, rng, hedge)?;
    let best = argmax(&scored.utilities);
    let mut proposal = Proposal {
        x: candidates[best].clone(),
        label: scored.label,
        grid_index: best,
        polished: false,
    };
    if config.refine_local {
        if let Some(x) = polish(model, &scored.acquisition, inc, &candidates[best])? {
            proposal.x = x;
            proposal.polished = true;
        }
    }
    Ok(proposal)
}

/// Coordinate pattern search on the noise-free acquisition, clipped to the
/// unit box. Returns a point only if it strictly beats the start.
fn polish(
    model: &GPModel,
    acq: &IterationAcquisition,
    inc: &Incumbent,
    start: &[f64],
) -> Result<Option<Vec<f64>>> {
    let score = |x: &[f64]| -> Result<f64> { Ok(acq.score(&model.predict(x)?, inc)) };
    let mut x = start.to_vec();
    let start_score = score(&x)?;
    let mut best = start_score;
    let mut evals = 1;
    let mut step = POLISH_STEP;
    'outer: while evals < POLISH_EVALS && step > POLISH_MIN_STEP {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut trial = x.clone();
                trial[k] = (trial[k] + dir * step).clamp(0.0, 1.0);
                if trial[k] == x[k] {
                    continue;
                }
                if evals >= POLISH_EVALS {
                    break 'outer;
                }
                evals += 1;
                let s = score(&trial)?;
                if s > best {
                    best = s;
                    x = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best > start_score).then_some(x))
}

/// Posterior-mean minimizer over the observed inputs followed by a fresh
/// uniform grid. Returns the unit-cube point and its mean.
pub fn recommend<R: Rng + ?Sized>(model: &GPModel, config: &RunConfig, rng: &mut R) -> Result<(Vec<f64>, f64)> {
    let mut candidates = model.data().inputs().to_vec();
    candidates.extend(uniform_points(config.grid_size, model.dim(), rng));
    let preds = model.predict_batch(&candidates)?;
    let neg_mu: Vec<f64> = preds.iter().map(|p| -p.mu).collect();
    let i = argmax(&neg_mu);
    Ok((candidates[i].clone(), preds[i].mu))
}

fn incumbent(data: &Dataset) -> Incumbent {
    Incumbent::from_observations(data.inputs(), data.outputs_raw()).expect("dataset is never empty")
}

fn run_error(source: Error, trace: &Trace) -> Error {
    Error::Run {
        source: Box::new(source),
        partial: Box::new(trace.clone()),
    }
}

/// Runs the BO loop on `objective`.
///
/// Every randomness source (design, candidate grids, policy draws, GP restarts)
/// comes from one generator seeded with `config.seed`.
pub fn run_bo(objective: &mut dyn Objective, config: &RunConfig, policy: &PolicySpec) -> Result<Trace> {
    config.validate()?;
    policy.validate()?;
    if *policy == PolicySpec::RandomSearch {
        return random_search(objective, config);
    }
    let mut trace = Trace::default();
    run_loop(objective, config, policy, &mut trace).map_err(|e| run_error(e, &trace))?;
    Ok(trace)
}

fn run_loop(objective: &mut dyn Objective, config: &RunConfig, policy: &PolicySpec, trace: &mut Trace) -> Result<()> {
    let dim = objective.dim();
    let bounds = objective.bounds().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let design = initial_design(config.n_init, dim, &mut rng);
    let mut ys = Vec::with_capacity(design.len());
    for x in &design {
        let y = objective.evaluate(x)?;
        trace.push(bounds.to_original(x), y, INIT_LABEL);
        ys.push(y);
    }
    let mut data = Dataset::from_observations(&design, &ys, &mut rng)?;
    let mut model = fit(&data, config.gp_restarts, &mut rng)?;
    let mut hedge = policy.hedge_seeds().map(HedgeState::new);

    for t in 0..config.n_iters {
        let inc = incumbent(&data);
        let proposal = propose_next(&model, policy, t, &inc, config, &mut rng, hedge.as_mut())?;
        let y = objective.evaluate(&proposal.x)?;
        trace.push(bounds.to_original(&proposal.x), y, &proposal.label);
        data.augment(&proposal.x, y, &mut rng)?;
        model = fit(&data, config.gp_restarts, &mut rng)?;
        if let Some(h) = hedge.as_mut() {
            hedge_update(h, &model)?;
        }
    }

    let (rec, mu) = recommend(&model, config, &mut rng)?;
    trace.recommendation = bounds.to_original(&rec);
    trace.recommendation_value_estimate = mu;
    Ok(())
}

/// Uniform random search with the same budget and trace schema as [`run_bo`].
pub fn random_search(objective: &mut dyn Objective, config: &RunConfig) -> Result<Trace> {
    config.validate()?;
    let dim = objective.dim();
    let bounds = objective.bounds().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Trace::default();
    for _ in 0..config.n_init + config.n_iters {
        let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let y = objective.evaluate(&x).map_err(|e| run_error(e, &trace))?;
        trace.push(bounds.to_original(&x), y, RANDOM_SEARCH_LABEL);
    }
    trace.recommendation = trace.best_x.clone();
    trace.recommendation_value_estimate = trace.best_y;
    Ok(trace)
}
