//! Forward simulation of the distorting channel: an FIR filter followed by a
//! memoryless, strictly increasing nonlinearity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monotone::MonotoneMap;
use crate::signal::{normalize_peak, Signal};

/// Saturation constant used for the saturated test material.
pub const DEFAULT_SATURATION: f64 = 2.0;

/// FIR filter whose tap `reference_index` sits at time zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFir")]
pub struct FirFilter {
    taps: Vec<f64>,
    reference_index: usize,
}

#[derive(Deserialize)]
struct RawFir {
    taps: Vec<f64>,
    reference_index: usize,
}

impl TryFrom<RawFir> for FirFilter {
    type Error = Error;

    fn try_from(r: RawFir) -> Result<Self> {
        FirFilter::new(r.taps, r.reference_index)
    }
}

impl FirFilter {
    pub fn new(taps: Vec<f64>, reference_index: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Config("FIR filter needs at least one tap".into()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("FIR taps must be finite".into()));
        }
        if taps.iter().all(|&t| t == 0.0) {
            return Err(Error::DegenerateInput("FIR filter has only zero taps".into()));
        }
        if reference_index >= taps.len() {
            return Err(Error::Config(format!(
                "reference index {reference_index} out of range for {} taps",
                taps.len()
            )));
        }
        Ok(Self {
            taps,
            reference_index,
        })
    }

    /// Causal filter with time origin at the first tap.
    pub fn causal(taps: Vec<f64>) -> Result<Self> {
        Self::new(taps, 0)
    }

    pub fn identity() -> Self {
        Self {
            taps: vec![1.0],
            reference_index: 0,
        }
    }

    /// Unit impulse of odd length `len` centred on the middle tap.
    pub fn centered_impulse(len: usize) -> Result<Self> {
        if len % 2 == 0 {
            return Err(Error::Config(format!("centred filter length {len} must be odd")));
        }
        let mut taps = vec![0.0; len];
        taps[len / 2] = 1.0;
        Self::new(taps, len / 2)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.taps.iter().map(|t| c * t).collect(), self.reference_index)
    }

    /// Filters a raw sample slice, see [`fir_convolve`].
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; input.len()];
        convolve_into(input, &self.taps, self.reference_index, &mut out);
        out
    }
}

/// `out(t) = sum_k taps[k] * input(t - k + reference)`, zero outside the input.
pub(crate) fn convolve_into(input: &[f64], taps: &[f64], reference: usize, out: &mut [f64]) {
    let n = input.len() as isize;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, &h) in taps.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        let shift = reference as isize - k as isize;
        // out[t] += h * input[t + shift] for 0 <= t < n, 0 <= t + shift < n
        let t0 = (-shift).max(0);
        let t1 = (n - shift).min(n);
        if t0 >= t1 {
            continue;
        }
        let (t0, t1) = (t0 as usize, t1 as usize);
        let src = &input[(t0 as isize + shift) as usize..(t1 as isize + shift) as usize];
        for (o, &x) in out[t0..t1].iter_mut().zip(src) {
            *o += h * x;
        }
    }
}

/// Memoryless, strictly increasing amplitude map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemorylessMap {
    /// `tanh(k x)` with `k > 0`.
    Tanh(f64),
    Identity,
    Table(MonotoneMap),
}

impl MemorylessMap {
    pub fn tanh(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("saturation constant {k} must be positive")));
        }
        Ok(MemorylessMap::Tanh(k))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MemorylessMap::Tanh(k) => (k * x).tanh(),
            MemorylessMap::Identity => x,
            MemorylessMap::Table(m) => m.eval(x),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            MemorylessMap::Tanh(k) => Self::tanh(*k).map(|_| ()),
            _ => Ok(()),
        }
    }
}

pub fn fir_convolve(s: &Signal, h: &FirFilter) -> Result<Signal> {
    if s.is_empty() {
        return Err(Error::DegenerateInput("empty signal".into()));
    }
    Signal::new(h.apply(s.samples()), s.sample_rate())
}

pub fn apply_nonlinearity(x: &Signal, f: &MemorylessMap) -> Result<Signal> {
    f.validate()?;
    match f {
        MemorylessMap::Table(m) => Signal::new(m.eval_many(x.samples()), x.sample_rate()),
        _ => x.map(|v| f.eval(v)),
    }
}

/// Wiener system output `f(h * s)`.
pub fn wiener_forward(s: &Signal, h: &FirFilter, f: &MemorylessMap) -> Result<Signal> {
    apply_nonlinearity(&fir_convolve(s, h)?, f)
}

/// Peak-normalizes each test signal and saturates it with `tanh(k x)`.
pub fn make_saturated_testset(tests: &[Signal], k: f64) -> Result<Vec<Signal>> {
    let f = MemorylessMap::tanh(k)?;
    tests
        .iter()
        .map(|t| apply_nonlinearity(&normalize_peak(t)?, &f))
        .collect()
}

/// JSON description of a Wiener channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub taps: Vec<f64>,
    pub reference_index: usize,
    pub nonlinearity: MemorylessMap,
}

impl ChannelConfig {
    pub fn filter(&self) -> Result<FirFilter> {
        FirFilter::new(self.taps.clone(), self.reference_index)
    }

    pub fn apply(&self, s: &Signal) -> Result<Signal> {
        wiener_forward(s, &self.filter()?, &self.nonlinearity)
    }
}
