//! Waveforms and the fixed front-end chain: peak normalization, pre-emphasis,
//! telephone band limiting, framing and Hamming windowing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default pre-emphasis coefficient, `H(z) = 1 - 0.95 z^-1`.
pub const DEFAULT_PREEMPHASIS: f64 = 0.95;
/// Default analysis window length in milliseconds.
pub const DEFAULT_FRAME_MS: f64 = 30.0;
/// Default fraction of a frame shared with its neighbour.
pub const DEFAULT_OVERLAP: f64 = 2.0 / 3.0;

const TELEPHONE_LOW_HZ: f64 = 300.0;
const TELEPHONE_HIGH_HZ: f64 = 3400.0;

/// A uniformly sampled mono waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    /// Builds a signal, rejecting non-finite samples and a zero sample rate.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Internal constructor for outputs of operations that preserve finiteness.
    pub(crate) fn from_parts(samples: Vec<f64>, sample_rate: u32) -> Self {
        debug_assert!(samples.iter().all(|v| v.is_finite()));
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Same rate, samples replaced by `f` applied pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Signal> {
        Signal::new(self.samples.iter().map(|&v| f(v)).collect(), self.sample_rate)
    }

    pub fn scaled(&self, gain: f64) -> Result<Signal> {
        self.map(|v| gain * v)
    }
}

/// Fixed-length windowed frames cut from a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Scales `x` so that its largest absolute amplitude is exactly one.
pub fn normalize_peak(x: &Signal) -> Result<Signal> {
    if x.is_empty() {
        return Err(Error::DegenerateInput("empty signal".into()));
    }
    let peak = x.peak();
    if peak == 0.0 {
        return Err(Error::DegenerateInput("all-zero signal has no peak".into()));
    }
    let out = x.samples.iter().map(|v| v / peak).collect();
    Ok(Signal::from_parts(out, x.sample_rate))
}

/// First-order pre-emphasis `y(n) = x(n) - alpha x(n-1)` with `x(-1) = 0`.
pub fn preemphasize(x: &Signal, alpha: f64) -> Result<Signal> {
    if x.is_empty() {
        return Err(Error::DegenerateInput("empty signal".into()));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "pre-emphasis coefficient {alpha} outside [0, 1)"
        )));
    }
    let s = &x.samples;
    let out = std::iter::once(s[0])
        .chain(s.windows(2).map(|w| w[1] - alpha * w[0]))
        .collect();
    Ok(Signal::from_parts(out, x.sample_rate))
}

/// Second-order IIR section, direct form I.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn lowpass(fs: f64, f0: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (sn, cs) = w0.sin_cos();
        let alpha = sn / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b: [
                (1.0 - cs) / 2.0 / a0,
                (1.0 - cs) / a0,
                (1.0 - cs) / 2.0 / a0,
            ],
            a: [-2.0 * cs / a0, (1.0 - alpha) / a0],
        }
    }

    fn highpass(fs: f64, f0: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (sn, cs) = w0.sin_cos();
        let alpha = sn / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b: [
                (1.0 + cs) / 2.0 / a0,
                -(1.0 + cs) / a0,
                (1.0 + cs) / 2.0 / a0,
            ],
            a: [-2.0 * cs / a0, (1.0 - alpha) / a0],
        }
    }

    fn run(&self, data: &mut [f64]) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in data.iter_mut() {
            let x0 = *v;
            let y0 = self.b[0] * x0 + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *v = y0;
        }
    }
}

/// Q factors of the two sections of a fourth-order Butterworth filter.
const BUTTER4_Q: [f64; 2] = [0.541_196_100_146_197, 1.306_562_964_876_376_7];

/// Zero-phase 300-3400 Hz band-pass (4th-order Butterworth high- and
/// low-pass sections, run forward then backward).
pub fn bandlimit_telephone(x: &Signal) -> Result<Signal> {
    if x.sample_rate < 8000 {
        return Err(Error::Config(format!(
            "telephone band needs at least 8000 Hz, got {}",
            x.sample_rate
        )));
    }
    let fs = x.sample_rate as f64;
    let sections: Vec<Biquad> = BUTTER4_Q
        .iter()
        .map(|&q| Biquad::highpass(fs, TELEPHONE_LOW_HZ, q))
        .chain(BUTTER4_Q.iter().map(|&q| Biquad::lowpass(fs, TELEPHONE_HIGH_HZ, q)))
        .collect();

    let mut data = x.samples.clone();
    for s in &sections {
        s.run(&mut data);
    }
    data.reverse();
    for s in &sections {
        s.run(&mut data);
    }
    data.reverse();
    Ok(Signal::from_parts(data, x.sample_rate))
}

/// Hamming weights `0.54 - 0.46 cos(2 pi n / (L - 1))`.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect()
}

/// Frame length and hop in samples for the given analysis settings.
pub fn frame_geometry(sample_rate: u32, frame_ms: f64, overlap_frac: f64) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&overlap_frac) {
        return Err(Error::Config(format!("overlap {overlap_frac} outside [0, 1)")));
    }
    let exact = frame_ms * sample_rate as f64 / 1000.0;
    if !(exact >= 2.0) {
        return Err(Error::Config(format!(
            "{frame_ms} ms at {sample_rate} Hz is shorter than two samples"
        )));
    }
    let frame_len = exact.round() as usize;
    // 2/3 * 480 evaluates to 319.99999999999994 in binary floating point.
    let overlap = (overlap_frac * frame_len as f64 + 1e-9).floor() as usize;
    let hop = (frame_len - overlap).max(1);
    Ok((frame_len, hop))
}

/// Cuts `x` into Hamming-windowed frames; a trailing partial frame is dropped.
pub fn frame_and_window(x: &Signal, frame_ms: f64, overlap_frac: f64) -> Result<FrameSequence> {
    let (frame_len, hop) = frame_geometry(x.sample_rate, frame_ms, overlap_frac)?;
    let window = hamming(frame_len);
    let n = x.len();
    let count = if n < frame_len {
        0
    } else {
        (n - frame_len) / hop + 1
    };
    let frames = (0..count)
        .map(|i| {
            let start = i * hop;
            x.samples[start..start + frame_len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect();
    Ok(FrameSequence {
        frames,
        frame_len,
        hop,
        sample_rate: x.sample_rate,
    })
}
