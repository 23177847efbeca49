use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::entropy::{bias_correction, check_size, entropy_gradient_sorted, entropy_of_sorted};
use super::{HammersteinInverse, InversionConfig, MIN_RESPONSE};
use crate::channel::{convolve_into, FirFilter};
use crate::error::{Error, Result};
use crate::monotone::MonotoneMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterLogGain {
    pub nats: f64,
    /// Frequencies where `|W|` hit the floor.
    pub floored_bins: usize,
}

/// Mean of `ln|W(theta)|` over `fft_bins` equally spaced frequencies.
pub fn filter_log_gain_detailed(w: &FirFilter, fft_bins: usize) -> Result<FilterLogGain> {
    if fft_bins < 4 * w.len() {
        return Err(Error::Config(format!(
            "fft_bins = {fft_bins} must be at least 4 * {} taps",
            w.len()
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(fft_bins);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_bins];
    Ok(log_gain_with(&*fft, w.taps(), w.reference_index(), &mut buf))
}

pub fn filter_log_gain(w: &FirFilter, fft_bins: usize) -> Result<f64> {
    filter_log_gain_detailed(w, fft_bins).map(|g| g.nats)
}

/// Leaves the spectrum of `taps` in `buf`. The taps are placed circularly
/// with the reference tap at time zero, which changes only the phase.
fn log_gain_with(
    fft: &dyn Fft<f64>,
    taps: &[f64],
    reference: usize,
    buf: &mut [Complex<f64>],
) -> FilterLogGain {
    let bins = buf.len();
    buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
    for (k, &t) in taps.iter().enumerate() {
        buf[(k + bins - reference) % bins].re = t;
    }
    fft.process(buf);
    let mut floored = 0;
    let sum: f64 = buf
        .iter()
        .map(|c| {
            let mag = c.norm();
            if mag < MIN_RESPONSE {
                floored += 1;
                MIN_RESPONSE.ln()
            } else {
                mag.ln()
            }
        })
        .sum();
    FilterLogGain {
        nats: sum / buf.len() as f64,
        floored_bins: floored,
    }
}

/// Positions of the three parameter groups in the flat parameter vector
/// `[log-increments of g, anchor of g, taps of w]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub n_increments: usize,
    pub w_len: usize,
}

impl ParamLayout {
    pub fn anchor(&self) -> usize {
        self.n_increments
    }

    pub fn taps(&self) -> std::ops::Range<usize> {
        self.n_increments + 1..self.n_increments + 1 + self.w_len
    }

    pub fn len(&self) -> usize {
        self.n_increments + 1 + self.w_len
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The inversion cost as a function of a flat parameter vector, for one
/// observation and a fixed set of knot abscissae.
///
/// Each sample's segment of `g` is fixed by the abscissae, so evaluating `g`
/// and `E[log g']` needs no search. Scratch buffers are reused across calls.
pub struct InverseCost<'a> {
    e: &'a [f64],
    knots_x: Vec<f64>,
    w_ref: usize,
    layout: ParamLayout,
    seg: Vec<u16>,
    /// `(e - x_k) / (x_{k+1} - x_k)` for the sample's segment `k`.
    rel: Vec<f64>,
    counts: Vec<usize>,
    mean_log_width: f64,
    m: usize,
    correction: f64,
    fft: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
    x: Vec<f64>,
    y: Vec<f64>,
    pairs: Vec<(f64, u32)>,
    sorted: Vec<f64>,
    order: Vec<u32>,
    grad_y: Vec<f64>,
    grad_x: Vec<f64>,
}

impl<'a> InverseCost<'a> {
    /// Sets up the cost for observation `e` with the knots and filter
    /// geometry of `template`.
    pub fn new(e: &'a [f64], template: &HammersteinInverse, cfg: &InversionConfig) -> Result<Self> {
        cfg.validate()?;
        let n = e.len();
        let m = check_size(n, cfg.spacing_m)?;
        let g = &template.g;
        let knots_x = g.knots_x().to_vec();
        let k = knots_x.len();
        let widths: Vec<f64> = knots_x.windows(2).map(|w| w[1] - w[0]).collect();
        let mut counts = vec![0usize; k - 1];
        let mut seg = Vec::with_capacity(n);
        let mut rel = Vec::with_capacity(n);
        let mut sum_log_width = 0.0;
        for &v in e {
            let s = g.segment(v);
            counts[s] += 1;
            seg.push(s as u16);
            rel.push((v - knots_x[s]) / widths[s]);
            sum_log_width += widths[s].ln();
        }
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_bins);
        Ok(Self {
            e,
            knots_x,
            w_ref: template.w.reference_index(),
            layout: ParamLayout {
                n_increments: k - 1,
                w_len: template.w.len(),
            },
            seg,
            rel,
            counts,
            mean_log_width: sum_log_width / n as f64,
            m,
            correction: bias_correction(n, m),
            fft,
            spectrum: vec![Complex::new(0.0, 0.0); cfg.fft_bins],
            x: vec![0.0; n],
            y: vec![0.0; n],
            pairs: Vec::with_capacity(n),
            sorted: vec![0.0; n],
            order: vec![0; n],
            grad_y: vec![0.0; n],
            grad_x: vec![0.0; n],
        })
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn observation(&self) -> &[f64] {
        self.e
    }

    pub fn params_of(&self, inv: &HammersteinInverse) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.layout.len());
        p.extend_from_slice(inv.g.log_increments());
        p.push(inv.g.anchor());
        p.extend_from_slice(inv.w.taps());
        p
    }

    pub fn inverse_of(&self, p: &[f64]) -> Result<HammersteinInverse> {
        let l = self.layout;
        Ok(HammersteinInverse {
            g: MonotoneMap::new(
                self.knots_x.clone(),
                p[..l.n_increments].to_vec(),
                p[l.anchor()],
            )?,
            w: FirFilter::new(p[l.taps()].to_vec(), self.w_ref)?,
        })
    }

    /// Fills `self.x` with `g(e)`; returns the segment ordinates and gap sizes.
    fn linearize(&mut self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let l = self.layout;
        let gaps: Vec<f64> = p[..l.n_increments].iter().map(|v| v.exp()).collect();
        let mut ky = Vec::with_capacity(gaps.len());
        let mut acc = p[l.anchor()];
        for gap in &gaps {
            ky.push(acc);
            acc += gap;
        }
        for ((x, &s), &r) in self.x.iter_mut().zip(&self.seg).zip(&self.rel) {
            let s = s as usize;
            *x = ky[s] + gaps[s] * r;
        }
        (ky, gaps)
    }

    fn mean_log_derivative(&self, p: &[f64]) -> f64 {
        let n = self.e.len() as f64;
        let weighted: f64 = self
            .counts
            .iter()
            .zip(&p[..self.layout.n_increments])
            .map(|(&c, &li)| c as f64 * li)
            .sum();
        weighted / n - self.mean_log_width
    }

    fn filter_output(&mut self, p: &[f64]) {
        let taps = &p[self.layout.taps()];
        convolve_into(&self.x, taps, self.w_ref, &mut self.y);
    }

    /// Cost at `p`.
    pub fn eval(&mut self, p: &[f64]) -> f64 {
        self.linearize(p);
        self.filter_output(p);
        self.sorted.copy_from_slice(&self.y);
        self.sorted.sort_unstable_by(f64::total_cmp);
        let h = entropy_of_sorted(&self.sorted, self.m, self.correction).nats;
        let lg = log_gain_with(&*self.fft, &p[self.layout.taps()], self.w_ref, &mut self.spectrum).nats;
        h - lg - self.mean_log_derivative(p)
    }

    /// Cost at `p` and its gradient (sort order held fixed at `p`).
    pub fn eval_with_gradient(&mut self, p: &[f64], grad: &mut [f64]) -> f64 {
        let l = self.layout;
        let n = self.e.len();
        let (_, gaps) = self.linearize(p);
        self.filter_output(p);

        self.pairs.clear();
        self.pairs.extend(self.y.iter().copied().zip(0u32..));
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        for (i, &(v, idx)) in self.pairs.iter().enumerate() {
            self.sorted[i] = v;
            self.order[i] = idx;
        }
        let h = entropy_of_sorted(&self.sorted, self.m, self.correction).nats;
        entropy_gradient_sorted(&self.sorted, &self.order, self.m, &mut self.grad_y);

        let taps = &p[l.taps()];
        let lg = log_gain_with(&*self.fft, taps, self.w_ref, &mut self.spectrum).nats;

        grad.iter_mut().for_each(|g| *g = 0.0);

        // dH/dw_k = sum_t gy[t] x[t - k + ref]; dH/dx_s = sum_k w_k gy[s + k - ref]
        let ni = n as isize;
        self.grad_x.iter_mut().for_each(|v| *v = 0.0);
        for (k, &wk) in taps.iter().enumerate() {
            let shift = self.w_ref as isize - k as isize;
            let t0 = (-shift).max(0) as usize;
            let t1 = (ni - shift).min(ni) as usize;
            if t0 >= t1 {
                continue;
            }
            let s0 = (t0 as isize + shift) as usize;
            let s1 = (t1 as isize + shift) as usize;
            let gy = &self.grad_y[t0..t1];
            let xs = &self.x[s0..s1];
            grad[l.taps().start + k] = gy.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
            for (gx, &g) in self.grad_x[s0..s1].iter_mut().zip(gy) {
                *gx += wk * g;
            }
        }

        // -d(log gain)/dw_t = -mean_b Re(conj(W_b) e^{-j 2 pi b t / B}) / |W_b|^2
        let n_bins = self.spectrum.len();
        let bins = n_bins as f64;
        for c in self.spectrum.iter_mut() {
            let mag2 = c.norm_sqr();
            *c = if mag2.sqrt() < MIN_RESPONSE {
                Complex::new(0.0, 0.0)
            } else {
                c.conj() / mag2
            };
        }
        self.fft.process(&mut self.spectrum);
        for (t, gw) in grad[l.taps()].iter_mut().enumerate() {
            *gw -= self.spectrum[(t + n_bins - self.w_ref) % n_bins].re / bins;
        }

        // Chain rule through x_s = a + sum_{j<k} exp(th_j) + exp(th_k) * rel_s.
        let mut seg_sum = vec![0.0; l.n_increments];
        let mut seg_rel = vec![0.0; l.n_increments];
        let mut anchor = 0.0;
        for ((&gx, &s), &r) in self.grad_x.iter().zip(&self.seg).zip(&self.rel) {
            let s = s as usize;
            seg_sum[s] += gx;
            seg_rel[s] += gx * r;
            anchor += gx;
        }
        grad[l.anchor()] = anchor;
        let mut above = 0.0;
        for j in (0..l.n_increments).rev() {
            grad[j] = gaps[j] * (seg_rel[j] + above) - self.counts[j] as f64 / n as f64;
            above += seg_sum[j];
        }

        h - lg - self.mean_log_derivative(p)
    }

    /// Central-difference gradient with step `step`; returns the cost at `p`.
    pub fn central_difference(&mut self, p: &[f64], step: f64, grad: &mut [f64]) -> f64 {
        let mut q = p.to_vec();
        for i in 0..p.len() {
            q[i] = p[i] + step;
            let up = self.eval(&q);
            q[i] = p[i] - step;
            let dn = self.eval(&q);
            q[i] = p[i];
            grad[i] = (up - dn) / (2.0 * step);
        }
        self.eval(p)
    }

    /// Forward-difference gradient with step `step`.
    pub fn forward_difference(&mut self, p: &[f64], step: f64, grad: &mut [f64]) -> f64 {
        let base = self.eval(p);
        let mut q = p.to_vec();
        for i in 0..p.len() {
            q[i] = p[i] + step;
            grad[i] = (self.eval(&q) - base) / step;
            q[i] = p[i];
        }
        base
    }

    /// Moves `p` along the cost's flat directions so that `g(e)` has zero
    /// mean and unit variance and `w` has unit Euclidean norm.
    pub fn renormalize(&mut self, p: &mut [f64]) {
        let l = self.layout;
        self.linearize(p);
        let n = self.x.len() as f64;
        let mean = self.x.iter().sum::<f64>() / n;
        let var = self.x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > 0.0 && sd.is_finite() {
            let shift = sd.ln();
            p[..l.n_increments].iter_mut().for_each(|v| *v -= shift);
            p[l.anchor()] = (p[l.anchor()] - mean) / sd;
        }
        let norm = p[l.taps()].iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            p[l.taps()].iter_mut().for_each(|t| *t /= norm);
        }
    }

    /// Output `y` for parameters `p`.
    pub fn output(&mut self, p: &[f64]) -> Vec<f64> {
        self.linearize(p);
        self.filter_output(p);
        self.y.clone()
    }
}
