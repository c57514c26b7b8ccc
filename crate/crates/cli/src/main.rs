use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use acqgen::acquisition::AcquisitionKind;
use acqgen::benchmarks::registry;
use acqgen::bo::{Objective, RunConfig};
use acqgen::harness::{run_experiment, verify_dir, ExperimentSpec, NamedPolicy, ObjectiveSource, DEFAULT_TIMEOUT};
use acqgen::meta::{meta_optimize, MetaConfig};
use acqgen::policy::PolicySpec;
use acqgen::{Error, Result};
use clap::{Args, Parser, Subcommand};

const EXIT_MISMATCH: u8 = 1;
const EXIT_SPEC: u8 = 2;
const EXIT_RUN: u8 = 3;
const EXIT_PROTOCOL: u8 = 4;

#[derive(Parser)]
#[command(name = "acqgen", version, about = "Bayesian optimization with acquisition-function generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated experiments and write raw.csv, summary.json and regret.svg.
    Run(RunArgs),
    /// Tune the blend weights of the weighted policy with an outer BO loop.
    Meta(MetaArgs),
    /// Recompute summary.json from raw.csv and compare byte for byte.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the built-in benchmark functions.
    ListBenchmarks,
}

#[derive(Args)]
struct ObjectiveArgs {
    /// Built-in benchmark name (see list-benchmarks).
    #[arg(long, conflicts_with = "external_cmd", required_unless_present = "external_cmd")]
    objective: Option<String>,
    /// Shell command speaking the line-delimited JSON protocol.
    #[arg(long)]
    external_cmd: Option<String>,
    /// Dimension of the external objective.
    #[arg(long, requires = "external_cmd")]
    dim: Option<usize>,
    /// Box of the external objective: `lo:hi` for every coordinate, or one `lo:hi` per coordinate, comma separated.
    #[arg(long, requires = "external_cmd")]
    bounds: Option<String>,
    /// Known optimum of the external objective; enables regret curves.
    #[arg(long, requires = "external_cmd")]
    f_star: Option<f64>,
    /// Per-evaluation timeout for the external objective, in seconds.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_secs_f64())]
    timeout_secs: f64,
    /// The external command may run in several processes at once.
    #[arg(long)]
    concurrent_safe: bool,
    /// Standard deviation of Gaussian noise added to every evaluation.
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    objective: ObjectiveArgs,
    /// Policy to compare; repeat the flag for several. Examples: ei, lcb:2.5,
    /// weighted, weighted:0.2,0.3,0.5, hedge, random, sequential, noised:0.1:ei, random-search.
    #[arg(long = "policy", required = true)]
    policies: Vec<String>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 5)]
    init: usize,
    #[arg(long, default_value_t = 1000)]
    grid_size: usize,
    #[arg(long, default_value_t = acqgen::gp::DEFAULT_RESTARTS)]
    gp_restarts: usize,
    /// Polish the best grid candidate with a short pattern search.
    #[arg(long)]
    refine_local: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetaArgs {
    #[command(flatten)]
    objective: ObjectiveArgs,
    /// Outer BO iterations after the initial design.
    #[arg(long, default_value_t = 10)]
    outer_iters: usize,
    #[arg(long, default_value_t = 5)]
    outer_init: usize,
    #[arg(long, default_value_t = 3)]
    inner_reps: usize,
    /// Iterations of every inner run.
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 5)]
    init: usize,
    #[arg(long, default_value_t = 1000)]
    grid_size: usize,
    #[arg(long, default_value_t = acqgen::gp::DEFAULT_RESTARTS)]
    gp_restarts: usize,
    /// Seed acquisitions to blend, comma separated.
    #[arg(long, default_value = "pi,ei,lcb")]
    seeds: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for meta_trace.csv and weights.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_bounds(text: &str, dim: Option<usize>) -> Result<Vec<(f64, f64)>> {
    let pair = |p: &str| -> Result<(f64, f64)> {
        let (lo, hi) = p
            .split_once(':')
            .ok_or_else(|| Error::Spec(format!("bounds entry {p:?} is not lo:hi")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Spec(format!("bad number {v:?} in bounds")))
        };
        Ok((num(lo)?, num(hi)?))
    };
    let ranges: Vec<(f64, f64)> = text.split(',').map(pair).collect::<Result<_>>()?;
    match (ranges.len(), dim) {
        (1, Some(d)) => Ok(vec![ranges[0]; d]),
        (n, Some(d)) if n != d => Err(Error::Spec(format!("{n} bounds given for dimension {d}"))),
        _ => Ok(ranges),
    }
}

impl ObjectiveArgs {
    fn source(&self) -> Result<ObjectiveSource> {
        if let Some(name) = &self.objective {
            return Ok(ObjectiveSource::Benchmark { name: name.clone() });
        }
        let command = self.external_cmd.clone().expect("clap enforces one objective");
        let bounds = match (&self.bounds, self.dim) {
            (Some(b), dim) => parse_bounds(b, dim)?,
            (None, Some(d)) => vec![(0.0, 1.0); d],
            (None, None) => return Err(Error::Spec("external objectives need --bounds or --dim".into())),
        };
        Ok(ObjectiveSource::External {
            command,
            bounds,
            f_star: self.f_star,
            concurrent_safe: self.concurrent_safe,
            timeout_secs: self.timeout_secs,
        })
    }
}

fn run(args: RunArgs) -> Result<u8> {
    let policies = args
        .policies
        .iter()
        .map(|p| p.parse::<PolicySpec>().map(|policy| NamedPolicy::new(p.clone(), policy)))
        .collect::<Result<Vec<_>>>()?;
    let mut spec = ExperimentSpec::new(args.objective.source()?, policies, args.iters);
    spec.reps = args.reps;
    spec.n_init = args.init;
    spec.grid_size = args.grid_size;
    spec.gp_restarts = args.gp_restarts;
    spec.refine_local = args.refine_local;
    spec.noise_std = args.objective.noise_std;
    spec.seed = args.seed;
    spec.bootstrap_samples = args.bootstrap;
    spec.workers = args.workers;

    let outcome = run_experiment(&spec, Some(&args.out))?;
    for p in &outcome.summary.policies {
        let last = p.mean_log_regret.last().copied().unwrap_or(f64::NAN);
        let sd = p.std_log_regret.last().copied().unwrap_or(f64::NAN);
        println!("{:<24} final {last:.4} (std {sd:.4})", p.name);
    }
    let mut code = 0;
    for f in outcome.failures() {
        eprintln!("policy {} failed: {}", f.name, f.error);
        code = code.max(if f.protocol { EXIT_PROTOCOL } else { EXIT_RUN });
    }
    println!("wrote {}", args.out.display());
    Ok(code)
}

fn meta(args: MetaArgs) -> Result<u8> {
    let seeds = args
        .seeds
        .split(',')
        .map(str::parse::<AcquisitionKind>)
        .collect::<Result<Vec<_>>>()?;
    let inner_config = RunConfig {
        n_init: args.init,
        n_iters: args.iters,
        grid_size: args.grid_size,
        refine_local: false,
        seed: args.seed,
        gp_restarts: args.gp_restarts,
    };
    let config = MetaConfig {
        outer_iters: args.outer_iters,
        outer_init: args.outer_init,
        inner_reps: args.inner_reps,
        inner_config,
        seed: args.seed,
        seeds,
    };
    // Reuses the experiment plumbing to build (possibly noisy) objectives.
    let mut builder = ExperimentSpec::new(args.objective.source()?, vec![PolicySpec::weighted_uniform().into()], 1);
    builder.noise_std = args.objective.noise_std;
    builder.validate()?;
    let factory = move |seed: u64| -> Result<Box<dyn Objective>> { builder.make_objective(seed as usize) };
    let result = meta_optimize(&factory, &config)?;

    let labels: Vec<&str> = config.seeds.iter().map(AcquisitionKind::label).collect();
    let report = serde_json::json!({
        "seeds": labels,
        "weights": result.weights,
        "meta_objective": result.value,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir)?;
        result.trace.to_csv(fs::File::create(dir.join("meta_trace.csv"))?, 0)?;
        fs::write(dir.join("weights.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(0)
}

fn list_benchmarks() {
    println!("{:<12} {:>3}  {:<20} f_star", "name", "dim", "bounds");
    for b in registry() {
        let (lo, hi) = b.bounds[0];
        let bounds = if b.bounds.iter().all(|r| *r == (lo, hi)) {
            format!("[{lo}, {hi}]^{}", b.dim)
        } else {
            b.bounds.iter().map(|(l, h)| format!("[{l}, {h}]")).collect::<Vec<_>>().join("x")
        };
        println!("{:<12} {:>3}  {:<20} {}", b.name, b.dim, bounds, b.f_star);
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Spec(_) | Error::Argument(_) | Error::Usage(_) | Error::Json(_) => EXIT_SPEC,
        Error::Protocol(_) | Error::Timeout(_) => EXIT_PROTOCOL,
        _ => EXIT_RUN,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Meta(args) => meta(args),
        Command::Verify { out } => verify_dir(&out).map(|same| {
            if same {
                println!("summary reproduced from {}", out.join("raw.csv").display());
                0
            } else {
                eprintln!("summary.json differs from the one recomputed from raw.csv");
                EXIT_MISMATCH
            }
        }),
        Command::ListBenchmarks => {
            list_benchmarks();
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
