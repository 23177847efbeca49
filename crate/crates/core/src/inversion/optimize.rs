use std::collections::VecDeque;

use super::cost::InverseCost;
use super::{
    init_inverse, GradientMethod, HammersteinInverse, InversionConfig, InversionTrace, Termination,
    MIN_ESTIMATION_SAMPLES,
};
use crate::error::{Error, Result};
use crate::signal::{preemphasize, Signal};

const MAX_HALVINGS: usize = 20;
/// Cap on the largest single-parameter move of a quasi-Newton step.
const MAX_MOVE: f64 = 1.0;
/// Number of accepted iterations over which the relative decrease is averaged
/// before the tolerance test applies.
const STALL_WINDOW: usize = 10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Limited-memory BFGS two-loop recursion.
struct History {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl History {
    fn new(capacity: usize) -> Self {
        Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        if self.capacity == 0 {
            return;
        }
        let sy = dot(&s, &y);
        if !(sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt()) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `-H g` for the implicit inverse Hessian `H`.
    fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

fn gradient(cost: &mut InverseCost<'_>, cfg: &InversionConfig, p: &[f64], grad: &mut [f64]) -> f64 {
    match cfg.gradient {
        GradientMethod::Analytic => cost.eval_with_gradient(p, grad),
        GradientMethod::CentralDifference => cost.central_difference(p, cfg.fd_step, grad),
    }
}

/// Result of one backtracking search along `dir` from `p`.
fn line_search(
    cost: &mut InverseCost<'_>,
    p: &[f64],
    current: f64,
    dir: &[f64],
    mut t: f64,
) -> Option<(Vec<f64>, f64, f64)> {
    for _ in 0..=MAX_HALVINGS {
        let mut cand: Vec<f64> = p.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        cost.renormalize(&mut cand);
        let c = cost.eval(&cand);
        if c.is_finite() && c < current {
            return Some((cand, c, t));
        }
        t *= 0.5;
    }
    None
}

/// True once the mean relative decrease per iteration over the last
/// `STALL_WINDOW` accepted steps falls below `rel_tol`. A single tiny step is
/// common on the nonsmooth spacing estimator and does not signal convergence.
fn stalled(costs: &[f64], rel_tol: f64) -> bool {
    let n = costs.len();
    if n <= STALL_WINDOW {
        return false;
    }
    let last = costs[n - 1];
    let decrease = (costs[n - 1 - STALL_WINDOW] - last) / last.abs().max(1e-12);
    decrease < rel_tol * STALL_WINDOW as f64
}

/// Minimizes the inversion cost over `g` and `w` from the observation alone.
///
/// Each iteration takes a gradient (or limited-memory quasi-Newton) direction,
/// halves the step until the cost decreases, then rescales the iterate so
/// that `g(e)` has zero mean and unit variance and `w` has unit norm. The
/// cost is invariant to those rescalings; fixing them keeps the iterate off
/// the flat directions.
pub fn estimate_inverse(
    e: &Signal,
    cfg: &InversionConfig,
) -> Result<(HammersteinInverse, InversionTrace)> {
    cfg.validate()?;
    if e.len() < MIN_ESTIMATION_SAMPLES {
        return Err(Error::TooShort(format!(
            "blind inversion needs at least {MIN_ESTIMATION_SAMPLES} samples, got {}",
            e.len()
        )));
    }
    let observed = match cfg.preemphasis {
        Some(alpha) => preemphasize(e, alpha)?,
        None => e.clone(),
    };
    let init = init_inverse(&observed, cfg)?;
    let mut cost = InverseCost::new(observed.samples(), &init, cfg)?;

    let mut p = cost.params_of(&init);
    cost.renormalize(&mut p);
    let mut grad = vec![0.0; p.len()];
    let mut current = gradient(&mut cost, cfg, &p, &mut grad);
    if !current.is_finite() {
        return Err(Error::NonFinite(format!("initial cost is {current}")));
    }

    let mut costs = vec![current];
    let mut history = History::new(cfg.history);
    let mut step = cfg.step_init;
    let mut terminated_by = Termination::MaxIters;

    for _ in 0..cfg.max_iters {
        let gmax = max_abs(&grad);
        if gmax == 0.0 || !gmax.is_finite() {
            terminated_by = Termination::Tolerance;
            break;
        }

        let mut accepted = None;
        if !history.is_empty() {
            let dir = history.direction(&grad);
            if dot(&dir, &grad) < 0.0 {
                let t = (MAX_MOVE / max_abs(&dir)).min(1.0);
                accepted = line_search(&mut cost, &p, current, &dir, t).map(|(c, v, _)| (c, v));
            }
            if accepted.is_none() {
                history.clear();
            }
        }
        if accepted.is_none() {
            let dir: Vec<f64> = grad.iter().map(|g| -g / gmax).collect();
            if let Some((cand, value, t)) = line_search(&mut cost, &p, current, &dir, step) {
                // Next steepest step starts from twice the last accepted length.
                step = (2.0 * t).min(MAX_MOVE);
                accepted = Some((cand, value));
            }
        }
        let Some((next, value)) = accepted else {
            terminated_by = Termination::Tolerance;
            break;
        };

        let mut next_grad = vec![0.0; p.len()];
        let recomputed = gradient(&mut cost, cfg, &next, &mut next_grad);
        debug_assert!((recomputed - value).abs() <= 1e-9 * (1.0 + value.abs()));
        let s: Vec<f64> = next.iter().zip(&p).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        history.push(s, y);

        p = next;
        grad = next_grad;
        current = value;
        costs.push(current);
        if stalled(&costs, cfg.rel_tol) {
            terminated_by = Termination::Tolerance;
            break;
        }
    }

    let inverse = cost.inverse_of(&p)?;
    debug_assert!(inverse.g.slopes().iter().all(|s| *s > 0.0));
    Ok((
        inverse,
        InversionTrace {
            final_cost: current,
            cost_per_iteration: costs,
            terminated_by,
        },
    ))
}
