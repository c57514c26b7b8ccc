//! Outer BO over the blend weights of a weighted policy.
//!
//! The outer loop searches the box `[0,1]^k` (one coordinate per seed) and
//! normalizes a raw point onto the simplex only when an inner run uses it.
//! Each outer evaluation averages the final incumbent of `inner_reps` inner
//! runs. Inner run `r` always uses seed `inner_config.seed + r`, so every
//! weight vector sees the same random streams.

use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionKind;
use crate::bo::{run_bo, Bounds, Objective, RunConfig, Trace};
use crate::error::{Error, Result};
use crate::policy::PolicySpec;

/// Builds a fresh objective for inner run `rep`.
pub type ObjectiveFactory<'a> = dyn Fn(u64) -> Result<Box<dyn Objective>> + Sync + 'a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    pub outer_iters: usize,
    pub outer_init: usize,
    pub inner_reps: usize,
    pub inner_config: RunConfig,
    pub seed: u64,
    pub seeds: Vec<AcquisitionKind>,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            outer_iters: 10,
            outer_init: 5,
            inner_reps: 3,
            inner_config: RunConfig::default(),
            seed: 0,
            seeds: AcquisitionKind::default_seeds(),
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_reps == 0 {
            return Err(Error::Spec("inner_reps must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Spec("meta-optimization needs at least one seed".into()));
        }
        self.inner_config.validate()?;
        self.outer_config().validate()
    }

    fn outer_config(&self) -> RunConfig {
        RunConfig {
            n_init: self.outer_init,
            n_iters: self.outer_iters,
            grid_size: self.inner_config.grid_size,
            refine_local: false,
            seed: self.seed,
            gp_restarts: self.inner_config.gp_restarts,
        }
    }
}

/// Normalizes raw weights to sum to one; near-zero totals map to uniform weights.
pub fn project_weights(raw: &[f64]) -> Vec<f64> {
    let sum: f64 = raw.iter().sum();
    if sum < 1e-12 {
        return vec![1.0 / raw.len() as f64; raw.len()];
    }
    raw.iter().map(|w| w / sum).collect()
}

/// Mean final incumbent over `inner_reps` weighted-policy runs.
pub fn meta_objective(raw_weights: &[f64], factory: &ObjectiveFactory<'_>, config: &MetaConfig) -> Result<f64> {
    if raw_weights.len() != config.seeds.len() {
        return Err(Error::Argument(format!(
            "{} raw weights for {} seeds",
            raw_weights.len(),
            config.seeds.len()
        )));
    }
    if raw_weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::Argument(format!("raw weights {raw_weights:?} leave [0,1]")));
    }
    let policy = PolicySpec::Weighted {
        seeds: config.seeds.clone(),
        weights: project_weights(raw_weights),
    };
    let mut total = 0.0;
    for rep in 0..config.inner_reps {
        let seed = config.inner_config.seed.wrapping_add(rep as u64);
        let mut objective = factory(seed)?;
        let inner = RunConfig {
            seed,
            ..config.inner_config.clone()
        };
        let trace = run_bo(objective.as_mut(), &inner, &policy)?;
        total += trace.final_best().expect("runs always record the initial design");
    }
    Ok(total / config.inner_reps as f64)
}

struct WeightObjective<'a> {
    bounds: Bounds,
    factory: &'a ObjectiveFactory<'a>,
    config: &'a MetaConfig,
}

impl Objective for WeightObjective<'_> {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&mut self, unit_x: &[f64]) -> Result<f64> {
        meta_objective(unit_x, self.factory, self.config)
    }
}

#[derive(Debug, Clone)]
pub struct MetaResult {
    /// Projected weights of the best evaluated raw weight vector.
    pub weights: Vec<f64>,
    /// Its meta-objective value.
    pub value: f64,
    /// Outer trace; `x` columns hold raw weights.
    pub trace: Trace,
}

/// Runs EI-driven BO over raw weights and returns the best evaluated weights.
pub fn meta_optimize(factory: &ObjectiveFactory<'_>, config: &MetaConfig) -> Result<MetaResult> {
    config.validate()?;
    let mut outer = WeightObjective {
        bounds: Bounds::unit(config.seeds.len()),
        factory,
        config,
    };
    let trace = run_bo(&mut outer, &config.outer_config(), &PolicySpec::Fixed(AcquisitionKind::ei()))?;
    Ok(MetaResult {
        weights: project_weights(&trace.best_x),
        value: trace.best_y,
        trace,
    })
}
