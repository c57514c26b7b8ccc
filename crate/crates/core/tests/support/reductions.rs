//! Policy reduction checks: degenerate generators must behave exactly like
//! the simpler policy they collapse to. Each check returns a short summary or
//! a description of the first mismatch.
#![allow(dead_code)]

use acqgen::acquisition::{AcquisitionKind, Incumbent};
use acqgen::benchmarks::{lookup, BenchmarkObjective};
use acqgen::bo::{run_bo, RunConfig, Trace};
use acqgen::gp::{fit, Dataset, GPModel};
use acqgen::policy::{argmax, utilities_for_iteration, HedgeState, PolicySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

fn random_state(seed: u64) -> (GPModel, Incumbent, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=3);
    let n = rng.random_range(3..=12);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| x.iter().map(|v| (6.0 * v).sin() + v * v).sum::<f64>())
        .collect();
    let data = Dataset::from_observations(&xs, &ys, &mut rng).expect("valid data");
    let inc = Incumbent::from_observations(data.inputs(), data.outputs_raw()).expect("non-empty");
    let model = fit(&data, 2, &mut rng).expect("fit");
    let candidates = (0..500).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    (model, inc, candidates)
}

fn scores(policy: &PolicySpec, iter: usize, state: &(GPModel, Incumbent, Vec<Vec<f64>>), rng_seed: u64) -> Vec<f64> {
    let (model, inc, cands) = state;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut hedge = policy.hedge_seeds().map(HedgeState::new);
    utilities_for_iteration(policy, iter, model, inc, cands, &mut rng, hedge.as_mut())
        .expect("scoring")
        .utilities
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Weighted with weight vector e_i selects the same candidate as Fixed(seed_i).
pub fn weighted_one_hot_matches_fixed(states: u64) -> Check {
    let seeds = AcquisitionKind::default_seeds();
    for s in 0..states {
        let state = random_state(s);
        for (i, kind) in seeds.iter().enumerate() {
            let mut weights = vec![0.0; seeds.len()];
            weights[i] = 1.0;
            let weighted = PolicySpec::Weighted { seeds: seeds.clone(), weights };
            let a = argmax(&scores(&weighted, 0, &state, 1));
            let b = argmax(&scores(&PolicySpec::Fixed(*kind), 0, &state, 1));
            if a != b {
                return Err(format!("state {s}, seed {kind}: weighted picks {a}, fixed picks {b}"));
            }
        }
    }
    Ok(format!("{} model states x {} one-hot vectors", states, seeds.len()))
}

/// Noised with scale 0 leaves every base policy's utilities bitwise unchanged.
pub fn noised_zero_is_base(states: u64) -> Check {
    let bases = [
        PolicySpec::Fixed(AcquisitionKind::ei()),
        PolicySpec::Fixed(AcquisitionKind::pi()),
        PolicySpec::Fixed(AcquisitionKind::lcb()),
        PolicySpec::weighted_uniform(),
        PolicySpec::Sequential { seeds: AcquisitionKind::default_seeds() },
        PolicySpec::RandomChoice { seeds: AcquisitionKind::default_seeds() },
        PolicySpec::hedge(),
    ];
    for s in 0..states {
        let state = random_state(100 + s);
        for base in &bases {
            let noised = PolicySpec::Noised { base: Box::new(base.clone()), scale: 0.0 };
            for iter in 0..3 {
                if bits(&scores(&noised, iter, &state, s)) != bits(&scores(base, iter, &state, s)) {
                    return Err(format!("state {s}, base {base}, iter {iter}: utilities differ"));
                }
            }
        }
    }
    Ok(format!("{} model states x {} bases x 3 iterations, bitwise", states, bases.len()))
}

fn quick_config(n_iters: usize, seed: u64) -> RunConfig {
    RunConfig {
        n_init: 3,
        n_iters,
        grid_size: 100,
        refine_local: false,
        seed,
        gp_restarts: 1,
    }
}

fn branin_run(policy: &PolicySpec, config: &RunConfig) -> Trace {
    let mut obj = BenchmarkObjective::new(lookup("branin").expect("registered"));
    run_bo(&mut obj, config, policy).expect("run")
}

/// A 100-iteration Sequential run labels iteration t with seeds[t mod |seeds|].
pub fn sequential_schedule(n_iters: usize) -> Check {
    let seeds = AcquisitionKind::default_seeds();
    let config = quick_config(n_iters, 5);
    let trace = branin_run(&PolicySpec::Sequential { seeds: seeds.clone() }, &config);
    for (t, rec) in trace.records[config.n_init..].iter().enumerate() {
        let expect = seeds[t % seeds.len()].label();
        if rec.policy_label != expect {
            return Err(format!("iteration {t}: label {} but expected {expect}", rec.policy_label));
        }
    }
    Ok(format!("{n_iters} iterations follow t mod {}", seeds.len()))
}

fn same_points(a: &Trace, b: &Trace) -> bool {
    a.records.len() == b.records.len()
        && a.records
            .iter()
            .zip(&b.records)
            .all(|(p, q)| bits(&p.x) == bits(&q.x) && p.y.to_bits() == q.y.to_bits())
}

/// Single-seed Hedge (and single-seed RandomChoice) reproduce Fixed, both in
/// utilities and over full runs.
pub fn single_seed_hedge_is_fixed(states: u64) -> Check {
    for kind in AcquisitionKind::default_seeds() {
        let hedge = PolicySpec::Hedge { seeds: vec![kind], eta: 1.0 };
        let random = PolicySpec::RandomChoice { seeds: vec![kind] };
        let fixed = PolicySpec::Fixed(kind);
        for s in 0..states {
            let state = random_state(200 + s);
            let f = bits(&scores(&fixed, 0, &state, s));
            if bits(&scores(&hedge, 0, &state, s)) != f || bits(&scores(&random, 0, &state, s)) != f {
                return Err(format!("state {s}, {kind}: utilities differ from Fixed"));
            }
        }
        let config = quick_config(10, 9);
        let base = branin_run(&fixed, &config);
        if !same_points(&branin_run(&hedge, &config), &base) {
            return Err(format!("{kind}: single-seed hedge run diverges from Fixed"));
        }
        if !same_points(&branin_run(&random, &config), &base) {
            return Err(format!("{kind}: single-seed random run diverges from Fixed"));
        }
    }
    Ok(format!("{states} model states x 3 seeds bitwise, plus full runs"))
}
