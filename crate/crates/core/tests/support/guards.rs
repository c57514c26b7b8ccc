//! Transcription guard for the benchmark registry.
#![allow(dead_code)]

use acqgen::benchmarks::registry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every declared minimizer evaluates to f_star within 1e-4, and no uniform
/// sample falls below f_star - 1e-9.
pub fn benchmark_guard(samples: usize) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut notes = Vec::new();
    for b in registry() {
        for x in &b.x_star {
            let v = b.eval(x).map_err(|e| e.to_string())?;
            if (v - b.f_star).abs() > 1e-4 {
                return Err(format!("{}: f({x:?}) = {v}, declared f* = {}", b.name, b.f_star));
            }
        }
        let mut lowest = f64::INFINITY;
        for _ in 0..samples {
            let x: Vec<f64> = b.bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
            let v = b.eval(&x).map_err(|e| e.to_string())?;
            if v < b.f_star - 1e-9 {
                return Err(format!("{}: f({x:?}) = {v} is below f* = {}", b.name, b.f_star));
            }
            lowest = lowest.min(v);
        }
        notes.push(format!("{} min sample {:.4} >= f* {:.6}", b.name, lowest, b.f_star));
    }
    Ok(notes.join("; "))
}
