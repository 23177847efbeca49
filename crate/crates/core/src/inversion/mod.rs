//! Blind estimation of a Hammerstein inverse `y = w * g(e)` for a Wiener
//! channel `e = f(h * s)`.
//!
//! The inverse is chosen to make `y` as close to i.i.d. as possible, i.e. to
//! minimize the mutual-information rate of the output process. Up to a
//! constant that does not depend on `(g, w)` this rate is
//!
//! ```text
//! I(Y) + const = H(y) - 1/(2 pi) * int log|W(theta)| d theta - E[log g'(e)]
//! ```
//!
//! where `H(y)` is a marginal entropy, estimated here with m-spacings.

mod cost;
pub mod entropy;
mod optimize;

use serde::{Deserialize, Serialize};

use crate::channel::FirFilter;
use crate::error::{Error, Result};
use crate::monotone::MonotoneMap;
use crate::signal::Signal;

pub use cost::{filter_log_gain, filter_log_gain_detailed, FilterLogGain, InverseCost, ParamLayout};
pub use entropy::{marginal_entropy, EntropyEstimate, Spacing};
pub use optimize::estimate_inverse;

/// Smallest signal the estimator accepts.
pub const MIN_ESTIMATION_SAMPLES: usize = 512;
/// Magnitude floor applied to the filter frequency response before `ln`.
pub const MIN_RESPONSE: f64 = 1e-12;

/// How the optimizer obtains the cost gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Central finite differences with step `fd_step` on every parameter.
    #[default]
    CentralDifference,
    /// Exact derivative of the piecewise-smooth estimator (sort order held fixed).
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    pub n_knots: usize,
    /// Odd length of the centred inverse filter.
    pub w_len: usize,
    pub spacing_m: Spacing,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Largest single-parameter move of the first steepest-descent step.
    pub step_init: f64,
    pub fft_bins: usize,
    pub seed: u64,
    pub gradient: GradientMethod,
    pub fd_step: f64,
    /// Curvature pairs kept for quasi-Newton directions; 0 gives plain
    /// steepest descent.
    pub history: usize,
    /// Apply `1 - alpha z^-1` to the observation before estimating.
    pub preemphasis: Option<f64>,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            n_knots: 21,
            w_len: 21,
            spacing_m: Spacing::Auto,
            max_iters: 500,
            rel_tol: 1e-6,
            step_init: 0.1,
            fft_bins: 1024,
            seed: 0,
            gradient: GradientMethod::CentralDifference,
            fd_step: 1e-4,
            history: 8,
            preemphasis: None,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_knots < 4 {
            return bad(format!("n_knots = {} must be at least 4", self.n_knots));
        }
        if self.n_knots > u16::MAX as usize {
            return bad(format!("n_knots = {} is too large", self.n_knots));
        }
        if self.w_len == 0 || self.w_len % 2 == 0 {
            return bad(format!("w_len = {} must be odd", self.w_len));
        }
        if self.fft_bins < 4 * self.w_len {
            return bad(format!(
                "fft_bins = {} must be at least 4 * w_len = {}",
                self.fft_bins,
                4 * self.w_len
            ));
        }
        if let Spacing::Fixed(0) = self.spacing_m {
            return bad("spacing_m must be at least 1".into());
        }
        if !(self.rel_tol >= 0.0) {
            return bad(format!("rel_tol = {} must be non-negative", self.rel_tol));
        }
        if !(self.step_init > 0.0) || !(self.fd_step > 0.0) {
            return bad("step_init and fd_step must be positive".into());
        }
        if let Some(a) = self.preemphasis {
            if !(0.0..1.0).contains(&a) {
                return bad(format!("pre-emphasis {a} outside [0, 1)"));
            }
        }
        Ok(())
    }
}

/// Memoryless map `g` followed by the FIR filter `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HammersteinInverse {
    pub g: MonotoneMap,
    pub w: FirFilter,
}

impl HammersteinInverse {
    /// `x = g(e)`.
    pub fn linearize(&self, e: &Signal) -> Result<Signal> {
        Signal::new(self.g.eval_many(e.samples()), e.sample_rate())
    }

    /// `y = w * g(e)`.
    pub fn apply(&self, e: &Signal) -> Result<Signal> {
        let x = self.g.eval_many(e.samples());
        Signal::new(self.w.apply(&x), e.sample_rate())
    }
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Relative decrease fell below `rel_tol`, or no step decreased the cost.
    Tolerance,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionTrace {
    /// Cost at the initial point followed by every accepted iterate, in nats.
    pub cost_per_iteration: Vec<f64>,
    pub terminated_by: Termination,
    pub final_cost: f64,
}

impl InversionTrace {
    pub fn iterations(&self) -> usize {
        self.cost_per_iteration.len().saturating_sub(1)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.cost_per_iteration.windows(2).all(|w| w[1] <= w[0])
    }

    /// `iteration,cost` rows with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,cost\n");
        for (i, c) in self.cost_per_iteration.iter().enumerate() {
            out.push_str(&format!("{i},{c}\n"));
        }
        out
    }
}

/// Mean of `ln g'(e(t))` over the samples.
pub fn mean_log_derivative(g: &MonotoneMap, e: &[f64]) -> Result<f64> {
    if e.is_empty() {
        return Err(Error::DegenerateInput("empty observation".into()));
    }
    let log_slopes: Vec<f64> = g.slopes().iter().map(|s| s.ln()).collect();
    Ok(e.iter().map(|&v| log_slopes[g.segment(v)]).sum::<f64>() / e.len() as f64)
}

/// The three terms of the cost and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    pub output_entropy: f64,
    pub filter_log_gain: f64,
    pub mean_log_derivative: f64,
    pub total: f64,
}

/// Cost terms evaluated directly from the component operations.
pub fn cost_terms(inv: &HammersteinInverse, e: &Signal, cfg: &InversionConfig) -> Result<CostTerms> {
    let y = inv.apply(e)?;
    let output_entropy = marginal_entropy(y.samples(), cfg.spacing_m)?.nats;
    let log_gain = filter_log_gain(&inv.w, cfg.fft_bins)?;
    let mld = mean_log_derivative(&inv.g, e.samples())?;
    let total = output_entropy - log_gain - mld;
    if !total.is_finite() {
        return Err(Error::NonFinite(format!(
            "H(y) = {output_entropy}, log gain = {log_gain}, E[log g'] = {mld}"
        )));
    }
    Ok(CostTerms {
        output_entropy,
        filter_log_gain: log_gain,
        mean_log_derivative: mld,
        total,
    })
}

/// `H(y) - log gain(w) - E[log g'(e)]`, the output mutual-information rate
/// up to the constant entropy rate of the observation.
pub fn inversion_cost(inv: &HammersteinInverse, e: &Signal, cfg: &InversionConfig) -> Result<f64> {
    cost_terms(inv, e, cfg).map(|t| t.total)
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Knots at the empirical quantiles of `e` on levels evenly spread over
/// `[0.01, 0.99]`, unit-slope `g`, centred unit-impulse `w`.
pub fn init_inverse(e: &Signal, cfg: &InversionConfig) -> Result<HammersteinInverse> {
    cfg.validate()?;
    if e.is_empty() {
        return Err(Error::DegenerateInput("empty observation".into()));
    }
    let mut sorted = e.samples().to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if !(range > 0.0) {
        return Err(Error::DegenerateInput("observation is constant".into()));
    }
    let k = cfg.n_knots;
    let knots: Vec<f64> = (0..k)
        .map(|i| quantile_sorted(&sorted, 0.01 + 0.98 * i as f64 / (k - 1) as f64))
        .collect();
    let min_gap = 1e-9 * range;
    if let Some(i) = knots.windows(2).position(|w| !(w[1] - w[0] > min_gap)) {
        return Err(Error::DegenerateInput(format!(
            "quantile knots {i} and {} coincide; the observation has too few distinct values",
            i + 1
        )));
    }
    Ok(HammersteinInverse {
        g: MonotoneMap::identity_on(knots)?,
        w: FirFilter::centered_impulse(cfg.w_len)?,
    })
}
