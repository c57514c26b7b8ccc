//! Acquisition generators.
//!
//! A [`PolicySpec`] decides, at each BO iteration, which acquisition scores
//! the candidate grid: one fixed seed, a uniformly drawn seed, the seeds in
//! round-robin order, a weighted blend of min-max normalized seeds, any of
//! those with Gaussian noise added to the utilities, or a GP-Hedge portfolio.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::acquisition::{evaluate_batch, AcquisitionKind, Incumbent, PosteriorPrediction};
use crate::error::{Error, Result};
use crate::gp::GPModel;

pub const DEFAULT_NOISE_SCALE: f64 = 0.1;
pub const DEFAULT_HEDGE_ETA: f64 = 1.0;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Fixed(AcquisitionKind),
    RandomChoice { seeds: Vec<AcquisitionKind> },
    Sequential { seeds: Vec<AcquisitionKind> },
    Weighted { seeds: Vec<AcquisitionKind>, weights: Vec<f64> },
    Noised { base: Box<PolicySpec>, scale: f64 },
    Hedge { seeds: Vec<AcquisitionKind>, eta: f64 },
    RandomSearch,
}

impl PolicySpec {
    /// Weighted blend of the default seeds with equal weights.
    pub fn weighted_uniform() -> Self {
        let seeds = AcquisitionKind::default_seeds();
        let w = 1.0 / seeds.len() as f64;
        Self::Weighted {
            weights: vec![w; seeds.len()],
            seeds,
        }
    }

    pub fn hedge() -> Self {
        Self::Hedge {
            seeds: AcquisitionKind::default_seeds(),
            eta: DEFAULT_HEDGE_ETA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_seeds = |seeds: &[AcquisitionKind]| -> Result<()> {
            if seeds.is_empty() {
                return Err(Error::Spec("policy needs at least one seed acquisition".into()));
            }
            seeds.iter().try_for_each(AcquisitionKind::validate)
        };
        match self {
            Self::Fixed(kind) => kind.validate(),
            Self::RandomChoice { seeds } | Self::Sequential { seeds } => check_seeds(seeds),
            Self::Weighted { seeds, weights } => {
                check_seeds(seeds)?;
                validate_weights(weights, seeds.len())
            }
            Self::Noised { base, scale } => {
                if !(*scale >= 0.0 && scale.is_finite()) {
                    return Err(Error::Spec(format!("noise scale must be finite and >= 0, got {scale}")));
                }
                match base.as_ref() {
                    Self::Noised { .. } => Err(Error::Spec("noised policies cannot be stacked".into())),
                    Self::RandomSearch => Err(Error::Spec("random search has no acquisition to noise".into())),
                    other => other.validate(),
                }
            }
            Self::Hedge { seeds, eta } => {
                check_seeds(seeds)?;
                if !(*eta > 0.0 && eta.is_finite()) {
                    return Err(Error::Spec(format!("hedge eta must be finite and > 0, got {eta}")));
                }
                Ok(())
            }
            Self::RandomSearch => Ok(()),
        }
    }

    /// Number of seeds a hedge state must track, if the policy uses one.
    pub fn hedge_seeds(&self) -> Option<usize> {
        match self {
            Self::Hedge { seeds, .. } => Some(seeds.len()),
            Self::Noised { base, .. } => base.hedge_seeds(),
            _ => None,
        }
    }
}

fn validate_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::Spec(format!("{} weights for {n} seeds", weights.len())));
    }
    if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::Spec(format!("weights must lie in [0,1], got {weights:?}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Spec(format!("weights must sum to 1, got {sum}")));
    }
    Ok(())
}

fn fmt_seeds(seeds: &[AcquisitionKind]) -> String {
    seeds.iter().map(|s| s.label()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(kind) => write!(f, "{kind}"),
            Self::RandomChoice { seeds } => write!(f, "random({})", fmt_seeds(seeds)),
            Self::Sequential { seeds } => write!(f, "sequential({})", fmt_seeds(seeds)),
            Self::Weighted { seeds, weights } => {
                let parts: Vec<String> = seeds
                    .iter()
                    .zip(weights)
                    .map(|(s, w)| format!("{}={w:.3}", s.label()))
                    .collect();
                write!(f, "weighted({})", parts.join(" "))
            }
            Self::Noised { base, scale } => write!(f, "noised({base},{scale})"),
            Self::Hedge { seeds, eta } => write!(f, "hedge({},eta={eta})", fmt_seeds(seeds)),
            Self::RandomSearch => f.write_str("random-search"),
        }
    }
}

/// Wire form: `{"variant": ..., "seeds": [...], "weights": [...], "scale": ..., "eta": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyJson {
    variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seeds: Option<Vec<AcquisitionKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<Box<PolicyJson>>,
}

impl From<&PolicySpec> for PolicyJson {
    fn from(p: &PolicySpec) -> Self {
        let mut j = PolicyJson {
            variant: String::new(),
            seeds: None,
            weights: None,
            scale: None,
            eta: None,
            base: None,
        };
        match p {
            PolicySpec::Fixed(kind) => {
                j.variant = "fixed".into();
                j.seeds = Some(vec![*kind]);
            }
            PolicySpec::RandomChoice { seeds } => {
                j.variant = "random".into();
                j.seeds = Some(seeds.clone());
            }
            PolicySpec::Sequential { seeds } => {
                j.variant = "sequential".into();
                j.seeds = Some(seeds.clone());
            }
            PolicySpec::Weighted { seeds, weights } => {
                j.variant = "weighted".into();
                j.seeds = Some(seeds.clone());
                j.weights = Some(weights.clone());
            }
            PolicySpec::Noised { base, scale } => {
                j.variant = "noised".into();
                j.scale = Some(*scale);
                j.base = Some(Box::new(PolicyJson::from(base.as_ref())));
            }
            PolicySpec::Hedge { seeds, eta } => {
                j.variant = "hedge".into();
                j.seeds = Some(seeds.clone());
                j.eta = Some(*eta);
            }
            PolicySpec::RandomSearch => j.variant = "random-search".into(),
        }
        j
    }
}

impl TryFrom<PolicyJson> for PolicySpec {
    type Error = Error;

    fn try_from(j: PolicyJson) -> Result<Self> {
        let seeds = j.seeds.unwrap_or_else(AcquisitionKind::default_seeds);
        let policy = match j.variant.as_str() {
            "fixed" => match seeds.as_slice() {
                [kind] => PolicySpec::Fixed(*kind),
                _ => return Err(Error::Spec("fixed policy takes exactly one seed".into())),
            },
            "random" => PolicySpec::RandomChoice { seeds },
            "sequential" => PolicySpec::Sequential { seeds },
            "weighted" => {
                let weights = j.weights.unwrap_or_else(|| vec![1.0 / seeds.len() as f64; seeds.len()]);
                PolicySpec::Weighted { seeds, weights }
            }
            "noised" => {
                let base = j
                    .base
                    .ok_or_else(|| Error::Spec("noised policy needs a \"base\" policy".into()))?;
                PolicySpec::Noised {
                    base: Box::new(PolicySpec::try_from(*base)?),
                    scale: j.scale.unwrap_or(DEFAULT_NOISE_SCALE),
                }
            }
            "hedge" => PolicySpec::Hedge {
                seeds,
                eta: j.eta.unwrap_or(DEFAULT_HEDGE_ETA),
            },
            "random-search" => PolicySpec::RandomSearch,
            other => return Err(Error::Spec(format!("unknown policy variant {other:?}"))),
        };
        policy.validate()?;
        Ok(policy)
    }
}

impl Serialize for PolicySpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolicyJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolicySpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PolicyJson::deserialize(d)?;
        PolicySpec::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    /// Compact command-line form, or a JSON object.
    ///
    /// `ei`, `pi`, `lcb[:kappa]`, `random`, `sequential`, `hedge[:eta]`,
    /// `weighted[:w1,w2,w3]`, `noised:<scale>:<base>`, `random-search`.
    /// Seeds default to `[PI, EI, LCB]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Spec(format!("policy JSON {s:?}: {e}")));
        }
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let seeds = AcquisitionKind::default_seeds;
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse()
                .map_err(|_| Error::Spec(format!("bad number {v:?} in policy {s:?}")))
        };
        let policy = match (head.to_ascii_lowercase().as_str(), rest) {
            ("pi" | "ei" | "lcb", _) => PolicySpec::Fixed(s.parse()?),
            ("random", None) => PolicySpec::RandomChoice { seeds: seeds() },
            ("sequential", None) => PolicySpec::Sequential { seeds: seeds() },
            ("hedge", eta) => PolicySpec::Hedge {
                seeds: seeds(),
                eta: eta.map(num).transpose()?.unwrap_or(DEFAULT_HEDGE_ETA),
            },
            ("weighted", None) => PolicySpec::weighted_uniform(),
            ("weighted", Some(ws)) => PolicySpec::Weighted {
                seeds: seeds(),
                weights: ws.split(',').map(num).collect::<Result<_>>()?,
            },
            ("noised", Some(rest)) => {
                let (scale, base) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Spec(format!("expected noised:<scale>:<base>, got {s:?}")))?;
                PolicySpec::Noised {
                    base: Box::new(base.parse()?),
                    scale: num(scale)?,
                }
            }
            ("random-search", None) => PolicySpec::RandomSearch,
            _ => return Err(Error::Spec(format!("unrecognized policy {s:?}"))),
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// GP-Hedge bookkeeping: one cumulative gain and one nominee per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeState {
    pub gains: Vec<f64>,
    pub last_nominees: Vec<Vec<f64>>,
}

impl HedgeState {
    pub fn new(n_seeds: usize) -> Self {
        Self {
            gains: vec![0.0; n_seeds],
            last_nominees: Vec::new(),
        }
    }
}

/// Softmax selection probabilities `∝ exp(eta · gain)`.
pub fn hedge_probabilities(gains: &[f64], eta: f64) -> Vec<f64> {
    let max = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = gains.iter().map(|g| (eta * (g - max)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Samples a seed index from the hedge softmax.
///
/// With a single seed no randomness is consumed.
pub fn hedge_select<R: Rng + ?Sized>(state: &HedgeState, eta: f64, rng: &mut R) -> usize {
    if state.gains.len() <= 1 {
        return 0;
    }
    let probs = hedge_probabilities(&state.gains, eta);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Rewards every seed with the negated posterior mean at its last nominee.
pub fn hedge_update(state: &mut HedgeState, model_after_eval: &GPModel) -> Result<()> {
    if state.last_nominees.len() != state.gains.len() {
        return Err(Error::Usage(format!(
            "hedge has {} gains but {} nominees; call utilities_for_iteration first",
            state.gains.len(),
            state.last_nominees.len()
        )));
    }
    let preds = model_after_eval.predict_batch(&state.last_nominees)?;
    for (g, p) in state.gains.iter_mut().zip(preds) {
        *g -= p.mu;
    }
    Ok(())
}

/// Uniform seed index. With a single seed no randomness is consumed.
pub fn random_choice<R: Rng + ?Sized>(n_seeds: usize, rng: &mut R) -> usize {
    if n_seeds <= 1 {
        0
    } else {
        rng.random_range(0..n_seeds)
    }
}

fn min_range(u: &[f64]) -> (f64, f64) {
    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    (lo, hi - lo)
}

/// Min-max normalizes each seed's utilities over the candidates, then mixes
/// them with `weights`. A constant list contributes zeros.
pub fn weighted_utility(per_seed: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if per_seed.len() != weights.len() {
        return Err(Error::Argument(format!(
            "{} utility lists for {} weights",
            per_seed.len(),
            weights.len()
        )));
    }
    let m = per_seed.first().map_or(0, Vec::len);
    if per_seed.iter().any(|u| u.len() != m) {
        return Err(Error::Argument("utility lists differ in length".into()));
    }
    let mut out = vec![0.0; m];
    for (u, w) in per_seed.iter().zip(weights) {
        let (lo, range) = min_range(u);
        if range > 0.0 {
            for (o, v) in out.iter_mut().zip(u) {
                *o += w * ((v - lo) / range);
            }
        }
    }
    Ok(out)
}

/// Adds `scale · range(u) · ε` to every utility, `ε ~ N(0,1)` i.i.d.
///
/// Returns the input untouched, without drawing, when the scale or the range is zero.
pub fn noised_utility<R: Rng + ?Sized>(base: &[f64], scale: f64, rng: &mut R) -> Vec<f64> {
    let (_, range) = min_range(base);
    if scale == 0.0 || range.is_nan() || range <= 0.0 {
        return base.to_vec();
    }
    let amp = scale * range;
    base.iter()
        .map(|u| {
            let e: f64 = rng.sample(StandardNormal);
            u + amp * e
        })
        .collect()
}

/// One normalized term of a weighted blend.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendTerm {
    pub kind: AcquisitionKind,
    pub weight: f64,
    pub min: f64,
    pub range: f64,
}

/// The noise-free acquisition chosen for one iteration, usable at points
/// outside the candidate grid (the weighted blend keeps the grid's
/// normalization constants).
#[derive(Debug, Clone, PartialEq)]
pub enum IterationAcquisition {
    Single(AcquisitionKind),
    Blend(Vec<BlendTerm>),
}

impl IterationAcquisition {
    pub fn score(&self, pred: &PosteriorPrediction, inc: &Incumbent) -> f64 {
        match self {
            Self::Single(kind) => kind.utility(pred, inc),
            Self::Blend(terms) => terms
                .iter()
                .filter(|t| t.range > 0.0)
                .map(|t| t.weight * ((t.kind.utility(pred, inc) - t.min) / t.range))
                .sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationUtilities {
    /// One utility per candidate, same order.
    pub utilities: Vec<f64>,
    /// Which seed(s) produced the utilities.
    pub label: String,
    pub acquisition: IterationAcquisition,
}

/// Utilities of `candidates` under the acquisition the policy generates for iteration `iter`.
pub fn utilities_for_iteration<R: Rng + ?Sized>(
    policy: &PolicySpec,
    iter: usize,
    model: &GPModel,
    inc: &Incumbent,
    candidates: &[Vec<f64>],
    rng: &mut R,
    hedge: Option<&mut HedgeState>,
) -> Result<IterationUtilities> {
    if candidates.is_empty() {
        return Err(Error::Argument("no candidates to score".into()));
    }
    let preds = model.predict_batch(candidates)?;
    utilities_from_predictions(policy, iter, &preds, inc, candidates, rng, hedge)
}

/// Same as [`utilities_for_iteration`] with the posterior already evaluated.
pub fn utilities_from_predictions<R: Rng + ?Sized>(
    policy: &PolicySpec,
    iter: usize,
    preds: &[PosteriorPrediction],
    inc: &Incumbent,
    candidates: &[Vec<f64>],
    rng: &mut R,
    hedge: Option<&mut HedgeState>,
) -> Result<IterationUtilities> {
    let single = |kind: &AcquisitionKind| IterationUtilities {
        utilities: evaluate_batch(kind, preds, inc),
        label: kind.label().to_string(),
        acquisition: IterationAcquisition::Single(*kind),
    };
    match policy {
        PolicySpec::Fixed(kind) => Ok(single(kind)),
        PolicySpec::RandomChoice { seeds } => Ok(single(&seeds[random_choice(seeds.len(), rng)])),
        PolicySpec::Sequential { seeds } => Ok(single(&seeds[iter % seeds.len()])),
        PolicySpec::Weighted { seeds, weights } => {
            let lists: Vec<Vec<f64>> = seeds.iter().map(|k| evaluate_batch(k, preds, inc)).collect();
            let utilities = weighted_utility(&lists, weights)?;
            let terms = seeds
                .iter()
                .zip(weights)
                .zip(&lists)
                .map(|((kind, &weight), u)| {
                    let (min, range) = min_range(u);
                    BlendTerm { kind: *kind, weight, min, range }
                })
                .collect();
            let label = seeds
                .iter()
                .zip(weights)
                .map(|(k, w)| format!("{}={w:.3}", k.label()))
                .collect::<Vec<_>>()
                .join(" ");
            Ok(IterationUtilities {
                utilities,
                label: format!("weighted({label})"),
                acquisition: IterationAcquisition::Blend(terms),
            })
        }
        PolicySpec::Noised { base, scale } => {
            let inner = utilities_from_predictions(base, iter, preds, inc, candidates, rng, hedge)?;
            Ok(IterationUtilities {
                utilities: noised_utility(&inner.utilities, *scale, rng),
                label: format!("noised({})", inner.label),
                acquisition: inner.acquisition,
            })
        }
        PolicySpec::Hedge { seeds, eta } => {
            let state = hedge.ok_or_else(|| Error::Usage("hedge policy needs a HedgeState".into()))?;
            if state.gains.len() != seeds.len() {
                return Err(Error::Usage(format!(
                    "hedge state tracks {} seeds, policy has {}",
                    state.gains.len(),
                    seeds.len()
                )));
            }
            let lists: Vec<Vec<f64>> = seeds.iter().map(|k| evaluate_batch(k, preds, inc)).collect();
            state.last_nominees = lists.iter().map(|u| candidates[argmax(u)].clone()).collect();
            let chosen = hedge_select(state, *eta, rng);
            let kind = seeds[chosen];
            Ok(IterationUtilities {
                utilities: lists.into_iter().nth(chosen).expect("chosen index in range"),
                label: format!("hedge:{}", kind.label()),
                acquisition: IterationAcquisition::Single(kind),
            })
        }
        PolicySpec::RandomSearch => Err(Error::Usage("random search does not score candidates".into())),
    }
}

/// Index of the largest value; ties and NaNs resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] || (values[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn inc() -> Incumbent {
        Incumbent {
            y_best: 0.0,
            x_best: vec![0.5],
        }
    }

    fn preds() -> Vec<PosteriorPrediction> {
        [(0.3, 0.1), (-0.2, 0.4), (0.05, 1.0), (1.0, 0.0), (0.0, 0.2)]
            .iter()
            .map(|&(mu, sigma)| PosteriorPrediction { mu, sigma })
            .collect()
    }

    fn cands() -> Vec<Vec<f64>> {
        (0..5).map(|i| vec![i as f64 / 4.0]).collect()
    }

    #[test]
    fn sequential_label_at_iteration_five_is_lcb() {
        let p = PolicySpec::Sequential {
            seeds: AcquisitionKind::default_seeds(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = utilities_from_predictions(&p, 5, &preds(), &inc(), &cands(), &mut rng, None).unwrap();
        assert_eq!(out.label, "LCB");
    }

    #[test]
    fn random_choice_single_seed_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..50).all(|_| random_choice(1, &mut rng) == 0));
        let draw = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| random_choice(3, &mut r)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn random_choice_is_roughly_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            counts[random_choice(3, &mut rng)] += 1;
        }
        // binomial(3000, 1/3) 99% two-sided band
        assert!(counts.iter().all(|&c| (902..=1098).contains(&c)), "{counts:?}");
    }

    #[test]
    fn weighted_examples() {
        let a = vec![0.2, 0.9, 0.4];
        let b = vec![5.0, -1.0, 2.0];
        let one_hot = weighted_utility(&[a.clone(), b.clone()], &[1.0, 0.0]).unwrap();
        assert_eq!(argmax(&one_hot), argmax(&a));
        let same = weighted_utility(&[a.clone(), a.clone()], &[0.3, 0.7]).unwrap();
        assert_eq!(argmax(&same), argmax(&a));
        let sym = weighted_utility(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[0.5, 0.5]).unwrap();
        assert_eq!(sym, vec![0.5, 0.5]);
        let flat = weighted_utility(&[vec![2.0, 2.0]], &[1.0]).unwrap();
        assert_eq!(flat, vec![0.0, 0.0]);
        assert!(weighted_utility(std::slice::from_ref(&a), &[0.5, 0.5]).is_err());
        assert!(weighted_utility(&[a, vec![1.0]], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn noised_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = vec![0.1, 0.5, 0.3];
        assert_eq!(noised_utility(&u, 0.0, &mut rng), u);
        assert_eq!(noised_utility(&[2.0, 2.0], 0.7, &mut rng), vec![2.0, 2.0]);
    }

    #[test]
    fn noised_perturbation_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let reps = 10_000;
        let mut sums = [0.0f64; 2];
        let mut sq = [0.0f64; 2];
        for _ in 0..reps {
            let out = noised_utility(&[0.0, 1.0], 0.1, &mut rng);
            for i in 0..2 {
                let d = out[i] - i as f64;
                sums[i] += d;
                sq[i] += d * d;
            }
        }
        for i in 0..2 {
            let mean = sums[i] / reps as f64;
            let sd = (sq[i] / reps as f64 - mean * mean).sqrt();
            assert!((sd - 0.1).abs() < 0.005, "entry {i}: {sd}");
        }
    }

    #[test]
    fn hedge_probabilities_examples() {
        let p = hedge_probabilities(&[0.7, 0.7, 0.7], 1.0);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let p = hedge_probabilities(&[1.0, 0.0], 1.0);
        assert!((p[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn hedge_select_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dominant = HedgeState {
            gains: vec![1000.0, 0.0, 0.0],
            last_nominees: vec![],
        };
        let hits = (0..10_000).filter(|_| hedge_select(&dominant, 1.0, &mut rng) == 0).count();
        assert!(hits as f64 / 1e4 > 0.999);

        let two = HedgeState {
            gains: vec![1.0, 0.0],
            last_nominees: vec![],
        };
        let hits = (0..10_000).filter(|_| hedge_select(&two, 1.0, &mut rng) == 0).count();
        let freq = hits as f64 / 1e4;
        assert!((freq - 0.731).abs() < 0.02, "{freq}");
    }

    #[test]
    fn hedge_without_state_is_a_usage_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = utilities_from_predictions(&PolicySpec::hedge(), 0, &preds(), &inc(), &cands(), &mut rng, None);
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn fixed_matches_evaluate_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = PolicySpec::Fixed(AcquisitionKind::ei());
        let out = utilities_from_predictions(&p, 0, &preds(), &inc(), &cands(), &mut rng, None).unwrap();
        assert_eq!(out.utilities, evaluate_batch(&AcquisitionKind::ei(), &preds(), &inc()));
        assert_eq!(out.label, "EI");
    }

    #[test]
    fn blend_score_reproduces_grid_utilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = PolicySpec::Weighted {
            seeds: AcquisitionKind::default_seeds(),
            weights: vec![0.2, 0.5, 0.3],
        };
        let ps = preds();
        let out = utilities_from_predictions(&p, 0, &ps, &inc(), &cands(), &mut rng, None).unwrap();
        for (u, pr) in out.utilities.iter().zip(&ps) {
            assert!((u - out.acquisition.score(pr, &inc())).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_rules() {
        assert!(PolicySpec::Weighted {
            seeds: AcquisitionKind::default_seeds(),
            weights: vec![0.5, 0.5, 0.5]
        }
        .validate()
        .is_err());
        assert!(PolicySpec::Sequential { seeds: vec![] }.validate().is_err());
        let stacked = PolicySpec::Noised {
            base: Box::new(PolicySpec::Noised {
                base: Box::new(PolicySpec::Fixed(AcquisitionKind::ei())),
                scale: 0.1,
            }),
            scale: 0.1,
        };
        assert!(stacked.validate().is_err());
        assert!(PolicySpec::Hedge {
            seeds: AcquisitionKind::default_seeds(),
            eta: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn json_field_names() {
        let p = PolicySpec::Noised {
            base: Box::new(PolicySpec::weighted_uniform()),
            scale: 0.25,
        };
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["variant"], "noised");
        assert_eq!(v["scale"], 0.25);
        assert_eq!(v["base"]["variant"], "weighted");
        assert_eq!(v["base"]["weights"].as_array().unwrap().len(), 3);
        let back: PolicySpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);

        let h: PolicySpec = serde_json::from_str(r#"{"variant":"hedge","seeds":["EI","PI"],"eta":2.0}"#).unwrap();
        assert_eq!(
            h,
            PolicySpec::Hedge {
                seeds: vec![AcquisitionKind::ei(), AcquisitionKind::pi()],
                eta: 2.0
            }
        );
        assert!(serde_json::from_str::<PolicySpec>(r#"{"variant":"bogus"}"#).is_err());
    }

    #[test]
    fn compact_strings() {
        assert_eq!("ei".parse::<PolicySpec>().unwrap(), PolicySpec::Fixed(AcquisitionKind::ei()));
        assert_eq!(
            "lcb:3".parse::<PolicySpec>().unwrap(),
            PolicySpec::Fixed(AcquisitionKind::Lcb { kappa: 3.0 })
        );
        assert_eq!("weighted".parse::<PolicySpec>().unwrap(), PolicySpec::weighted_uniform());
        assert_eq!(
            "noised:0.2:ei".parse::<PolicySpec>().unwrap(),
            PolicySpec::Noised {
                base: Box::new(PolicySpec::Fixed(AcquisitionKind::ei())),
                scale: 0.2
            }
        );
        assert!("weighted:0.5,0.6,0.1".parse::<PolicySpec>().is_err());
        assert!("nonsense".parse::<PolicySpec>().is_err());
        assert_eq!(
            r#"{"variant":"random-search"}"#.parse::<PolicySpec>().unwrap(),
            PolicySpec::RandomSearch
        );
    }

    #[test]
    fn argmax_ties_pick_lowest_index() {
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5, 0.5]), 0);
        assert_eq!(argmax(&[f64::NAN, 0.2, 0.2]), 1);
    }
}
