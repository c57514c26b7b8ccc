use rand::Rng;

use crate::bo::Trace;

/// Smallest regret before taking the logarithm.
pub const REGRET_FLOOR: f64 = 1e-12;

/// `log10(max(|best_so_far(t) - f_star|, 1e-12))` for every record.
pub fn regret_curve(trace: &Trace, f_star: f64) -> Vec<f64> {
    log_regret(&trace.best_so_far(), f_star)
}

pub fn log_regret(best_so_far: &[f64], f_star: f64) -> Vec<f64> {
    best_so_far
        .iter()
        .map(|b| (b - f_star).abs().max(REGRET_FLOOR).log10())
        .collect()
}

/// Mean computed as an offset from the first element, so a constant slice
/// returns that constant exactly.
fn shifted_mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = values.clone();
    let Some(first) = it.next() else { return f64::NAN };
    let n = values.clone().count() as f64;
    first + values.map(|v| v - first).sum::<f64>() / n
}

/// Row bootstrap over repetitions.
///
/// Each of the `b` resamples draws `reps` whole curves with replacement and
/// averages them per iteration. Returns the mean and the (population) standard
/// deviation of those resample means, per iteration.
pub fn bootstrap_stats<R: Rng + ?Sized>(curves: &[Vec<f64>], b: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let reps = curves.len();
    if reps == 0 || b == 0 {
        return (Vec::new(), Vec::new());
    }
    let t_len = curves[0].len();
    let mut resample_means = vec![vec![0.0; t_len]; b];
    let mut picks = vec![0usize; reps];
    for means in resample_means.iter_mut() {
        for p in picks.iter_mut() {
            *p = rng.random_range(0..reps);
        }
        for (t, m) in means.iter_mut().enumerate() {
            *m = shifted_mean(picks.iter().map(|&i| curves[i][t]));
        }
    }
    let mut mean = Vec::with_capacity(t_len);
    let mut std = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let col = resample_means.iter().map(|m| m[t]);
        let mu = shifted_mean(col.clone());
        let var = col.map(|v| (v - mu) * (v - mu)).sum::<f64>() / b as f64;
        mean.push(mu);
        std.push(var.sqrt());
    }
    (mean, std)
}
