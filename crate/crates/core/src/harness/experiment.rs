//! Repeated runs of several policies on one objective, with bootstrap
//! summaries and the raw CSV / summary JSON / SVG outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::external::{ExternalObjective, DEFAULT_TIMEOUT};
use super::stats::{bootstrap_stats, log_regret};
use super::svg::render_svg;
use crate::benchmarks::{lookup, with_noise, BenchmarkObjective};
use crate::bo::{run_bo, Bounds, Objective, RunConfig, Trace};
use crate::error::{Error, Result};
use crate::gp::DEFAULT_RESTARTS;
use crate::policy::PolicySpec;

pub const RAW_CSV: &str = "raw.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const CHART_SVG: &str = "regret.svg";

/// Stream offset for the noise wrapper's generator, kept apart from the run's own seed stream.
const NOISE_STREAM: u64 = 1;
/// Bootstrap generators use stream `BOOTSTRAP_STREAM + policy index`.
const BOOTSTRAP_STREAM: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSource {
    Benchmark {
        name: String,
    },
    External {
        command: String,
        bounds: Vec<(f64, f64)>,
        #[serde(default)]
        f_star: Option<f64>,
        /// Allows more than one worker to spawn children at once.
        #[serde(default)]
        concurrent_safe: bool,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: f64,
    },
}

fn default_timeout_secs() -> f64 {
    DEFAULT_TIMEOUT.as_secs_f64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPolicy {
    pub name: String,
    pub policy: PolicySpec,
}

impl NamedPolicy {
    pub fn new(name: impl Into<String>, policy: PolicySpec) -> Self {
        Self {
            name: name.into(),
            policy,
        }
    }
}

impl From<PolicySpec> for NamedPolicy {
    fn from(policy: PolicySpec) -> Self {
        Self {
            name: policy.to_string(),
            policy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub objective: ObjectiveSource,
    pub policies: Vec<NamedPolicy>,
    pub reps: usize,
    pub n_init: usize,
    pub n_iters: usize,
    pub grid_size: usize,
    pub gp_restarts: usize,
    pub refine_local: bool,
    pub noise_std: f64,
    pub seed: u64,
    pub bootstrap_samples: usize,
    /// Worker threads; `None` uses the available parallelism. Not part of the
    /// recorded spec because it never changes the results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    /// Defaults: 100 repetitions, 200 bootstrap resamples, 5 initial points.
    pub fn new(objective: ObjectiveSource, policies: Vec<NamedPolicy>, n_iters: usize) -> Self {
        Self {
            objective,
            policies,
            reps: 100,
            n_init: 5,
            n_iters,
            grid_size: 1000,
            gp_restarts: DEFAULT_RESTARTS,
            refine_local: false,
            noise_std: 0.0,
            seed: 0,
            bootstrap_samples: 200,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Spec("reps must be >= 1".into()));
        }
        if self.bootstrap_samples == 0 {
            return Err(Error::Spec("bootstrap_samples must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Spec("at least one policy is required".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Spec(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        let mut names: Vec<&str> = self.policies.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Spec("policy names must be unique".into()));
        }
        for p in &self.policies {
            p.policy.validate()?;
        }
        self.run_config(0).validate()?;
        match &self.objective {
            ObjectiveSource::Benchmark { name } => {
                lookup(name)?;
            }
            ObjectiveSource::External {
                bounds, timeout_secs, ..
            } => {
                Bounds::new(bounds.clone()).map_err(|e| Error::Spec(e.to_string()))?;
                if !(*timeout_secs > 0.0 && timeout_secs.is_finite()) {
                    return Err(Error::Spec(format!("timeout must be positive, got {timeout_secs}")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.objective {
            ObjectiveSource::Benchmark { name } => lookup(name).map_or(0, |b| b.dim),
            ObjectiveSource::External { bounds, .. } => bounds.len(),
        }
    }

    pub fn f_star(&self) -> Option<f64> {
        match &self.objective {
            ObjectiveSource::Benchmark { name } => lookup(name).ok().map(|b| b.f_star),
            ObjectiveSource::External { f_star, .. } => *f_star,
        }
    }

    pub fn objective_name(&self) -> String {
        match &self.objective {
            ObjectiveSource::Benchmark { name } => name.clone(),
            ObjectiveSource::External { command, .. } => format!("external: {command}"),
        }
    }

    /// Run configuration of repetition `rep`; its seed is `seed + rep`.
    pub fn run_config(&self, rep: usize) -> RunConfig {
        RunConfig {
            n_init: self.n_init,
            n_iters: self.n_iters,
            grid_size: self.grid_size,
            refine_local: self.refine_local,
            seed: self.seed.wrapping_add(rep as u64),
            gp_restarts: self.gp_restarts,
        }
    }

    /// Fresh objective for repetition `rep`, with its own noise stream.
    pub fn make_objective(&self, rep: usize) -> Result<Box<dyn Objective>> {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(rep as u64));
        noise_rng.set_stream(NOISE_STREAM);
        match &self.objective {
            ObjectiveSource::Benchmark { name } => {
                let obj = BenchmarkObjective::new(lookup(name)?);
                Ok(Box::new(with_noise(obj, self.noise_std, noise_rng)?))
            }
            ObjectiveSource::External {
                command,
                bounds,
                f_star,
                timeout_secs,
                ..
            } => {
                let ext = ExternalObjective::spawn(
                    command,
                    Bounds::new(bounds.clone())?,
                    Duration::from_secs_f64(*timeout_secs),
                )?
                .with_optimum(*f_star);
                Ok(Box::new(with_noise(ext, self.noise_std, noise_rng)?))
            }
        }
    }

    fn pool_size(&self) -> usize {
        let serial = matches!(
            self.objective,
            ObjectiveSource::External {
                concurrent_safe: false,
                ..
            }
        );
        if serial {
            return 1;
        }
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

/// What the curves in a report measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `log10` absolute regret against a known optimum.
    Log10Regret,
    /// Raw incumbent values, used when the optimum is unknown.
    BestSoFar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub name: String,
    pub mean_log_regret: Vec<f64>,
    pub std_log_regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFailure {
    pub name: String,
    pub error: String,
    pub protocol: bool,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub spec: ExperimentSpec,
    pub metric: Metric,
    pub policies: Vec<PolicySummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<PolicyFailure>,
}

impl Summary {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Per-policy curves retained alongside the bootstrap statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCurves {
    pub summary: PolicySummary,
    /// One metric curve per repetition, in repetition order.
    pub curves: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RegretReport {
    pub metric: Metric,
    pub policies: Vec<PolicyCurves>,
}

impl RegretReport {
    pub fn policy(&self, name: &str) -> Option<&PolicyCurves> {
        self.policies.iter().find(|p| p.summary.name == name)
    }

    /// Last entry of a policy's mean curve.
    pub fn final_mean(&self, name: &str) -> Option<f64> {
        self.policy(name).and_then(|p| p.summary.mean_log_regret.last().copied())
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub summary: Summary,
    pub report: RegretReport,
    /// Traces per successful policy, in repetition order.
    pub traces: Vec<(String, Vec<Trace>)>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> &[PolicyFailure] {
        &self.summary.failures
    }
}

fn metric_curves(best_so_far: &[Vec<f64>], f_star: Option<f64>) -> Vec<Vec<f64>> {
    match f_star {
        Some(f) => best_so_far.iter().map(|c| log_regret(c, f)).collect(),
        None => best_so_far.to_vec(),
    }
}

/// Bootstrap summary of one policy; `index` is its position in the spec.
fn summarize_policy(spec: &ExperimentSpec, index: usize, name: &str, best_so_far: &[Vec<f64>]) -> PolicyCurves {
    let curves = metric_curves(best_so_far, spec.f_star());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(BOOTSTRAP_STREAM + index as u64);
    let (mean, std) = bootstrap_stats(&curves, spec.bootstrap_samples, &mut rng);
    PolicyCurves {
        summary: PolicySummary {
            name: name.to_string(),
            mean_log_regret: mean,
            std_log_regret: std,
        },
        curves,
    }
}

fn metric_of(spec: &ExperimentSpec) -> Metric {
    if spec.f_star().is_some() {
        Metric::Log10Regret
    } else {
        Metric::BestSoFar
    }
}

fn build_summary(
    spec: &ExperimentSpec,
    per_policy: &[(usize, String, Vec<Vec<f64>>)],
    failures: Vec<PolicyFailure>,
) -> (Summary, RegretReport) {
    let metric = metric_of(spec);
    let policies: Vec<PolicyCurves> = per_policy
        .iter()
        .map(|(i, name, bsf)| summarize_policy(spec, *i, name, bsf))
        .collect();
    let summary = Summary {
        spec: spec.clone(),
        metric,
        policies: policies.iter().map(|p| p.summary.clone()).collect(),
        failures,
    };
    (summary, RegretReport { metric, policies })
}

/// Runs every policy `spec.reps` times and, when `out_dir` is given, writes
/// `raw.csv`, `summary.json` and `regret.svg` there.
///
/// A failing repetition drops its whole policy (recorded under `failures`);
/// the remaining policies still run.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.pool_size())
        .build()
        .map_err(|e| Error::Usage(format!("cannot build worker pool: {e}")))?;

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    let mut per_policy = Vec::new();
    for (index, named) in spec.policies.iter().enumerate() {
        let results: Vec<Result<Trace>> = pool.install(|| {
            (0..spec.reps)
                .into_par_iter()
                .map(|rep| {
                    let mut objective = spec.make_objective(rep)?;
                    run_bo(objective.as_mut(), &spec.run_config(rep), &named.policy)
                })
                .collect()
        });
        match results.into_iter().collect::<Result<Vec<Trace>>>() {
            Ok(ts) => {
                let bsf: Vec<Vec<f64>> = ts.iter().map(Trace::best_so_far).collect();
                per_policy.push((index, named.name.clone(), bsf));
                traces.push((named.name.clone(), ts));
            }
            Err(e) => failures.push(PolicyFailure {
                name: named.name.clone(),
                error: e.to_string(),
                protocol: e.is_protocol(),
            }),
        }
    }

    let (summary, report) = build_summary(spec, &per_policy, failures);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_raw_csv(&dir.join(RAW_CSV), spec.dim(), &traces)?;
        fs::write(dir.join(SUMMARY_JSON), summary.to_json()?)?;
        let y_label = match summary.metric {
            Metric::Log10Regret => "log10 |best so far - f*|",
            Metric::BestSoFar => "best so far",
        };
        let title = format!("{} ({} reps)", spec.objective_name(), spec.reps);
        fs::write(dir.join(CHART_SVG), render_svg(&title, y_label, &summary.policies))?;
    }
    Ok(ExperimentOutcome {
        summary,
        report,
        traces,
    })
}

/// Header `policy,rep,iter,label,x_0..x_{d-1},y,best_so_far`.
pub fn raw_csv_header(dim: usize) -> Vec<String> {
    let mut h = vec!["policy".to_string(), "rep".into(), "iter".into(), "label".into()];
    h.extend((0..dim).map(|i| format!("x_{i}")));
    h.extend(["y".to_string(), "best_so_far".into()]);
    h
}

fn write_raw_csv(path: &Path, dim: usize, traces: &[(String, Vec<Trace>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(raw_csv_header(dim))?;
    for (name, reps) in traces {
        for (rep, trace) in reps.iter().enumerate() {
            for r in &trace.records {
                let mut row = vec![name.clone(), rep.to_string(), r.iter.to_string(), r.policy_label.clone()];
                row.extend(r.x.iter().map(f64::to_string));
                row.extend([r.y.to_string(), r.best_so_far.to_string()]);
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds the summary of an output directory from its raw CSV and the
/// spec recorded in its summary JSON.
pub fn regenerate_summary(dir: &Path) -> Result<String> {
    let recorded: Summary = serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY_JSON))?)?;
    let spec = recorded.spec;

    let mut reader = csv::Reader::from_path(dir.join(RAW_CSV))?;
    let header = reader.headers()?.clone();
    let bsf_col = header.len() - 1;
    // policy -> rep -> iter -> best_so_far
    let mut table: BTreeMap<String, BTreeMap<usize, BTreeMap<usize, f64>>> = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let parse_usize = |i: usize| -> Result<usize> {
            row[i]
                .parse()
                .map_err(|_| Error::Spec(format!("bad integer {:?} in {RAW_CSV}", &row[i])))
        };
        let bsf: f64 = row[bsf_col]
            .parse()
            .map_err(|_| Error::Spec(format!("bad number {:?} in {RAW_CSV}", &row[bsf_col])))?;
        table
            .entry(row[0].to_string())
            .or_default()
            .entry(parse_usize(1)?)
            .or_default()
            .insert(parse_usize(2)?, bsf);
    }

    let mut per_policy = Vec::new();
    for (index, named) in spec.policies.iter().enumerate() {
        if let Some(reps) = table.remove(&named.name) {
            let curves: Vec<Vec<f64>> = reps.into_values().map(|iters| iters.into_values().collect()).collect();
            per_policy.push((index, named.name.clone(), curves));
        }
    }
    if let Some(extra) = table.keys().next() {
        return Err(Error::Spec(format!("{RAW_CSV} has rows for unknown policy {extra:?}")));
    }
    let (summary, _) = build_summary(&spec, &per_policy, recorded.failures);
    summary.to_json()
}

/// Whether the recorded summary matches one regenerated from the raw CSV, byte for byte.
pub fn verify_dir(dir: &Path) -> Result<bool> {
    let recorded = fs::read_to_string(dir.join(SUMMARY_JSON))?;
    Ok(regenerate_summary(dir)? == recorded)
}
