//! Box-constrained L-BFGS used to maximize the log marginal likelihood.

const MEMORY: usize = 6;
const ARMIJO: f64 = 1e-4;

pub(crate) struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Zeroes components of `dir` that would push an active bound outward.
fn mask_active(x: &[f64], dir: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        if (x[i] <= lo[i] && dir[i] < 0.0) || (x[i] >= hi[i] && dir[i] > 0.0) {
            dir[i] = 0.0;
        }
    }
}

/// Maximizes `f` inside `[lo, hi]` starting from `x0`.
///
/// `f` returns the value and gradient, or `None` when the point cannot be
/// evaluated; such points are rejected by the line search. The returned value
/// is never below `f(x0)`.
pub(crate) fn maximize_box<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], max_iter: usize) -> Option<Maximum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    // Work on g = -f so the textbook minimization recursions apply.
    let (fx, gx) = f(&x)?;
    let mut val = -fx;
    let mut grad: Vec<f64> = gx.iter().map(|g| -g).collect();

    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();

    for _ in 0..max_iter {
        let mut dir = two_loop(&grad, &s_hist, &y_hist);
        mask_active(&x, &mut dir, lo, hi);
        if dot(&dir, &grad) >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = grad.iter().map(|g| -g).collect();
            mask_active(&x, &mut dir, lo, hi);
        }
        let slope = dot(&dir, &grad);
        if slope >= 0.0 || dir.iter().all(|d| d.abs() < 1e-12) {
            break;
        }

        // First step from steepest descent is capped at unit length in log space.
        let max_comp = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut step = if s_hist.is_empty() { (1.0 / max_comp).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..30 {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            project(&mut trial, lo, hi);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let pred = dot(&grad, &moved);
            if let Some((ft, gt)) = f(&trial) {
                let vt = -ft;
                if vt.is_finite() && vt <= val + ARMIJO * pred.min(0.0) && vt <= val {
                    accepted = Some((trial, vt, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, vt, gt)) = accepted else { break };

        let new_grad: Vec<f64> = gt.iter().map(|g| -g).collect();
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-10 {
            if s_hist.len() == MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
        }

        let improvement = val - vt;
        x = trial;
        val = vt;
        grad = new_grad;

        let mut pg = grad.iter().map(|g| -g).collect::<Vec<_>>();
        mask_active(&x, &mut pg, lo, hi);
        let pg_norm = pg.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if improvement < 1e-9 * (1.0 + val.abs()) || pg_norm < 1e-6 {
            break;
        }
    }
    debug_assert_eq!(x.len(), n);
    Some(Maximum { x, value: -val })
}

fn two_loop(grad: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let k = s_hist.len();
    let mut alpha = vec![0.0; k];
    let rho: Vec<f64> = (0..k).map(|i| 1.0 / dot(&y_hist[i], &s_hist[i])).collect();
    for i in (0..k).rev() {
        alpha[i] = rho[i] * dot(&s_hist[i], &q);
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= alpha[i] * yj;
        }
    }
    let gamma = if k > 0 {
        dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
    } else {
        1.0
    };
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for i in 0..k {
        let beta = rho[i] * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alpha[i] - beta) * sj;
        }
    }
    q.iter().map(|v| -v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum_of_concave_quadratic() {
        let f = |x: &[f64]| {
            let v = -(x[0] - 1.0).powi(2) - 3.0 * (x[1] + 0.5).powi(2);
            Some((v, vec![-2.0 * (x[0] - 1.0), -6.0 * (x[1] + 0.5)]))
        };
        let m = maximize_box(f, &[4.0, 4.0], &[-10.0, -10.0], &[10.0, 10.0], 200).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] + 0.5).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn stops_at_active_bound() {
        let f = |x: &[f64]| Some((x[0] - x[1] * x[1], vec![1.0, -2.0 * x[1]]));
        let m = maximize_box(f, &[0.0, 0.7], &[-1.0, -1.0], &[2.0, 1.0], 200).unwrap();
        assert!((m.x[0] - 2.0).abs() < 1e-12);
        assert!(m.x[1].abs() < 1e-4);
    }

    #[test]
    fn never_returns_worse_than_start() {
        // Rosenbrock-like ridge, negated.
        let f = |x: &[f64]| {
            let a = 1.0 - x[0];
            let b = x[1] - x[0] * x[0];
            let v = -(a * a + 100.0 * b * b);
            Some((v, vec![2.0 * a + 400.0 * b * x[0], -200.0 * b]))
        };
        let start = [-1.2, 1.0];
        let f0 = f(&start).unwrap().0;
        let m = maximize_box(f, &start, &[-2.0, -2.0], &[2.0, 2.0], 500).unwrap();
        assert!(m.value >= f0);
        assert!(m.value > -1e-3, "{}", m.value);
    }
}
