//! Closed-form seed acquisitions.
//!
//! Every acquisition is a utility to maximize under a minimization objective:
//! PI and EI measure improvement below the incumbent and LCB is negated so
//! that its argmax is the minimizer of `μ - κσ`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_KAPPA: f64 = 1.96;
pub const DEFAULT_XI: f64 = 0.01;

/// Posterior mean and latent standard deviation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorPrediction {
    pub mu: f64,
    pub sigma: f64,
}

/// Best observation so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub y_best: f64,
    pub x_best: Vec<f64>,
}

impl Incumbent {
    /// Minimum of `ys` together with its input. Ties keep the earliest point.
    pub fn from_observations(xs: &[Vec<f64>], ys: &[f64]) -> Option<Self> {
        let mut best: Option<usize> = None;
        for (i, y) in ys.iter().enumerate() {
            if best.is_none_or(|b| *y < ys[b]) {
                best = Some(i);
            }
        }
        best.map(|i| Self {
            y_best: ys[i],
            x_best: xs[i].clone(),
        })
    }
}

/// One seed acquisition with its parameter.
///
/// Serialized as `{"tag": "EI", "xi": 0.01}`; a bare name such as `"LCB"`
/// also deserializes, using the default parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", try_from = "KindRepr")]
pub enum AcquisitionKind {
    #[serde(rename = "PI")]
    Pi {
        #[serde(default = "default_xi")]
        xi: f64,
    },
    #[serde(rename = "EI")]
    Ei {
        #[serde(default = "default_xi")]
        xi: f64,
    },
    #[serde(rename = "LCB")]
    Lcb {
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum KindRepr {
    Name(String),
    Tagged(TaggedKind),
}

#[derive(Deserialize)]
#[serde(tag = "tag", deny_unknown_fields)]
enum TaggedKind {
    #[serde(rename = "PI")]
    Pi {
        #[serde(default = "default_xi")]
        xi: f64,
    },
    #[serde(rename = "EI")]
    Ei {
        #[serde(default = "default_xi")]
        xi: f64,
    },
    #[serde(rename = "LCB")]
    Lcb {
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
}

impl TryFrom<KindRepr> for AcquisitionKind {
    type Error = Error;

    fn try_from(repr: KindRepr) -> Result<Self> {
        let kind = match repr {
            KindRepr::Name(name) => name.parse()?,
            KindRepr::Tagged(TaggedKind::Pi { xi }) => Self::Pi { xi },
            KindRepr::Tagged(TaggedKind::Ei { xi }) => Self::Ei { xi },
            KindRepr::Tagged(TaggedKind::Lcb { kappa }) => Self::Lcb { kappa },
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl std::str::FromStr for AcquisitionKind {
    type Err = Error;

    /// `pi`, `ei`, `lcb`, optionally followed by `:<param>` (xi or kappa).
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let v: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad acquisition parameter in {s:?}")))?;
                (n, Some(v))
            }
            None => (s, None),
        };
        let kind = match name.trim().to_ascii_lowercase().as_str() {
            "pi" => Self::Pi { xi: param.unwrap_or(DEFAULT_XI) },
            "ei" => Self::Ei { xi: param.unwrap_or(DEFAULT_XI) },
            "lcb" => Self::Lcb { kappa: param.unwrap_or(DEFAULT_KAPPA) },
            _ => return Err(Error::Spec(format!("unknown acquisition {s:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

fn default_xi() -> f64 {
    DEFAULT_XI
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl AcquisitionKind {
    pub fn pi() -> Self {
        Self::Pi { xi: DEFAULT_XI }
    }

    pub fn ei() -> Self {
        Self::Ei { xi: DEFAULT_XI }
    }

    pub fn lcb() -> Self {
        Self::Lcb { kappa: DEFAULT_KAPPA }
    }

    /// `[PI, EI, LCB]` with default parameters.
    pub fn default_seeds() -> Vec<Self> {
        vec![Self::pi(), Self::ei(), Self::lcb()]
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Pi { .. } => "PI",
            Self::Ei { .. } => "EI",
            Self::Lcb { .. } => "LCB",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Pi { xi } | Self::Ei { xi } if !(xi >= 0.0 && xi.is_finite()) => {
                Err(Error::Spec(format!("{}: xi must be finite and >= 0, got {xi}", self.label())))
            }
            Self::Lcb { kappa } if !(kappa > 0.0 && kappa.is_finite()) => {
                Err(Error::Spec(format!("LCB: kappa must be finite and > 0, got {kappa}")))
            }
            _ => Ok(()),
        }
    }

    pub fn utility(&self, pred: &PosteriorPrediction, inc: &Incumbent) -> f64 {
        match *self {
            Self::Pi { xi } => pi_utility(pred, inc, xi),
            Self::Ei { xi } => ei_utility(pred, inc, xi),
            Self::Lcb { kappa } => lcb_utility(pred, kappa),
        }
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Probability that the latent value falls below `y_best - xi`.
pub fn pi_utility(pred: &PosteriorPrediction, inc: &Incumbent, xi: f64) -> f64 {
    let target = inc.y_best - xi;
    if pred.sigma <= 0.0 {
        return if pred.mu < target { 1.0 } else { 0.0 };
    }
    norm_cdf((target - pred.mu) / pred.sigma)
}

/// Expected improvement below `y_best - xi`.
pub fn ei_utility(pred: &PosteriorPrediction, inc: &Incumbent, xi: f64) -> f64 {
    let gap = inc.y_best - xi - pred.mu;
    if pred.sigma <= 0.0 {
        return gap.max(0.0);
    }
    let gamma = gap / pred.sigma;
    let ei = pred.sigma * (gamma * norm_cdf(gamma) + norm_pdf(gamma));
    // The closed form can dip a hair below the deterministic improvement in floating point.
    ei.max(gap.max(0.0))
}

/// Negated lower confidence bound, `κσ - μ`.
pub fn lcb_utility(pred: &PosteriorPrediction, kappa: f64) -> f64 {
    kappa * pred.sigma - pred.mu
}

/// Elementwise utilities for a batch of predictions.
pub fn evaluate_batch(kind: &AcquisitionKind, preds: &[PosteriorPrediction], inc: &Incumbent) -> Vec<f64> {
    preds.iter().map(|p| kind.utility(p, inc)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(mu: f64, sigma: f64) -> PosteriorPrediction {
        PosteriorPrediction { mu, sigma }
    }

    fn inc(y: f64) -> Incumbent {
        Incumbent {
            y_best: y,
            x_best: vec![0.0],
        }
    }

    #[test]
    fn pi_examples() {
        assert!((pi_utility(&pred(0.0, 1.0), &inc(0.0), 0.0) - 0.5).abs() < 1e-15);
        assert_eq!(pi_utility(&pred(-1.0, 0.0), &inc(0.0), 0.0), 1.0);
        assert_eq!(pi_utility(&pred(1.0, 0.0), &inc(0.0), 0.0), 0.0);
        // Φ(−1) from an independent erfc evaluation.
        assert!((pi_utility(&pred(1.0, 1.0), &inc(0.0), 0.0) - 0.158_655_253_931_457_07).abs() < 1e-6);
    }

    #[test]
    fn ei_examples() {
        let v = ei_utility(&pred(0.0, 1.0), &inc(0.0), 0.0);
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-4);
        assert_eq!(ei_utility(&pred(5.0, 0.0), &inc(0.0), 0.0), 0.0);
        assert!((ei_utility(&pred(-2.0, 1e-9), &inc(0.0), 0.0) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn lcb_examples() {
        assert_eq!(lcb_utility(&pred(3.5, 0.0), 2.0), -3.5);
        assert!((lcb_utility(&pred(0.0, 1.0), 1.96) - 1.96).abs() < 1e-15);
    }

    #[test]
    fn batch_matches_scalar_bitwise() {
        let preds = [pred(0.3, 0.2)];
        let kinds = AcquisitionKind::default_seeds();
        for k in &kinds {
            let b = evaluate_batch(k, &preds, &inc(0.1));
            assert_eq!(b[0].to_bits(), k.utility(&preds[0], &inc(0.1)).to_bits());
        }
        let flat = [pred(1.0, 0.0), pred(2.0, 0.0), pred(0.5, 0.0)];
        assert!(evaluate_batch(&AcquisitionKind::ei(), &flat, &inc(0.0)).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn validation() {
        assert!(AcquisitionKind::Lcb { kappa: 0.0 }.validate().is_err());
        assert!(AcquisitionKind::Ei { xi: -0.1 }.validate().is_err());
        assert!(AcquisitionKind::Pi { xi: 0.0 }.validate().is_ok());
    }

    #[test]
    fn serde_uses_tag_field() {
        let s = serde_json::to_string(&AcquisitionKind::Lcb { kappa: 2.5 }).unwrap();
        assert_eq!(s, r#"{"tag":"LCB","kappa":2.5}"#);
        let k: AcquisitionKind = serde_json::from_str(r#"{"tag":"EI"}"#).unwrap();
        assert_eq!(k, AcquisitionKind::ei());
        let k: AcquisitionKind = serde_json::from_str(r#""lcb""#).unwrap();
        assert_eq!(k, AcquisitionKind::lcb());
        assert!(serde_json::from_str::<AcquisitionKind>(r#"{"tag":"LCB","kappa":-1}"#).is_err());
        assert_eq!("ei:0.05".parse::<AcquisitionKind>().unwrap(), AcquisitionKind::Ei { xi: 0.05 });
    }

    #[test]
    fn incumbent_keeps_first_minimum() {
        let xs = vec![vec![0.1], vec![0.2], vec![0.3]];
        let inc = Incumbent::from_observations(&xs, &[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(inc.x_best, vec![0.2]);
    }
}
