//! m-spacing estimator of differential entropy.
//!
//! For sorted samples `x_(1) <= ... <= x_(n)` and spacing `m`,
//!
//! ```text
//! H = 1/(n-m) * sum_i ln( n/m * (x_(i+m) - x_(i)) ) + (psi(n+1) - ln n) - (psi(m) - ln m)
//! ```
//!
//! The digamma terms make the estimate unbiased for uniform data. Scaling the
//! samples by `c > 0` shifts the estimate by exactly `ln c`.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};

/// Spacings below this are clamped (exact ties from quantized input).
pub const MIN_SPACING: f64 = 1e-12;

/// Spacing parameter of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "SpacingRepr", into = "SpacingRepr")]
pub enum Spacing {
    /// `ceil(sqrt(n))`.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpacingRepr {
    Fixed(usize),
    Named(String),
}

impl TryFrom<SpacingRepr> for Spacing {
    type Error = String;

    fn try_from(r: SpacingRepr) -> std::result::Result<Self, String> {
        match r {
            SpacingRepr::Fixed(0) => Err("spacing must be at least 1".into()),
            SpacingRepr::Fixed(m) => Ok(Spacing::Fixed(m)),
            SpacingRepr::Named(s) if s == "auto" => Ok(Spacing::Auto),
            SpacingRepr::Named(s) => Err(format!("unknown spacing {s:?}")),
        }
    }
}

impl From<Spacing> for SpacingRepr {
    fn from(s: Spacing) -> Self {
        match s {
            Spacing::Auto => SpacingRepr::Named("auto".into()),
            Spacing::Fixed(m) => SpacingRepr::Fixed(m),
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spacing::Auto => f.write_str("auto"),
            Spacing::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl Spacing {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Spacing::Auto => (n as f64).sqrt().ceil() as usize,
            Spacing::Fixed(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub nats: f64,
    /// Number of spacings that were clamped at [`MIN_SPACING`].
    pub clamped_spacings: usize,
}

/// Resolves `m` and checks `n >= 2m + 2`.
pub(crate) fn check_size(n: usize, spacing: Spacing) -> Result<usize> {
    let m = spacing.resolve(n);
    if m == 0 {
        return Err(Error::Config("spacing must be at least 1".into()));
    }
    if n < 2 * m + 2 {
        return Err(Error::TooShort(format!(
            "entropy estimate with spacing {m} needs at least {} samples, got {n}",
            2 * m + 2
        )));
    }
    Ok(m)
}

/// Additive constant `psi(n+1) - psi(m)`.
pub(crate) fn bias_correction(n: usize, m: usize) -> f64 {
    digamma(n as f64 + 1.0) - digamma(m as f64)
}

/// Estimate from already sorted samples.
pub(crate) fn entropy_of_sorted(sorted: &[f64], m: usize, correction: f64) -> EntropyEstimate {
    let n = sorted.len();
    let scale = n as f64 / m as f64;
    let mut clamped = 0;
    let mut acc = 0.0;
    for i in 0..n - m {
        let mut d = sorted[i + m] - sorted[i];
        if d < MIN_SPACING {
            d = MIN_SPACING;
            clamped += 1;
        }
        acc += (scale * d).ln();
    }
    let nats = acc / (n - m) as f64 + correction - (n as f64).ln() + (m as f64).ln();
    EntropyEstimate {
        nats,
        clamped_spacings: clamped,
    }
}

/// Gradient of the estimate with respect to each sorted sample, scattered
/// back to original positions through `order`.
pub(crate) fn entropy_gradient_sorted(sorted: &[f64], order: &[u32], m: usize, grad: &mut [f64]) {
    let n = sorted.len();
    let inv = 1.0 / (n - m) as f64;
    grad.iter_mut().for_each(|g| *g = 0.0);
    for i in 0..n - m {
        let d = sorted[i + m] - sorted[i];
        if d < MIN_SPACING {
            continue;
        }
        let c = inv / d;
        grad[order[i + m] as usize] += c;
        grad[order[i] as usize] -= c;
    }
}

/// m-spacing estimate of the differential entropy of `samples`, in nats.
pub fn marginal_entropy(samples: &[f64], spacing: Spacing) -> Result<EntropyEstimate> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("entropy of non-finite samples".into()));
    }
    let n = samples.len();
    let m = check_size(n, spacing)?;
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(entropy_of_sorted(&sorted, m, bias_correction(n, m)))
}
