//! Mel-cepstral features, second-moment speaker models and the
//! arithmetic-harmonic sphericity distance between them.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::FrameSequence;

pub const DEFAULT_N_MEL: usize = 20;
pub const DEFAULT_N_CEPS: usize = 12;
/// Floor applied to filterbank energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;
/// Relative eigenvalue threshold below which a model counts as singular.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Cepstral coefficients `c1..cl` of one frame.
pub type FeatureVector = Vec<f64>;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// One triangular filter stored over the contiguous bins where it is nonzero.
#[derive(Debug, Clone)]
struct Triangle {
    first_bin: usize,
    weights: Vec<f64>,
}

/// Reusable MFCC front end for a fixed frame length and sample rate.
pub struct MfccExtractor {
    fft: Arc<dyn Fft<f64>>,
    fft_len: usize,
    frame_len: usize,
    filters: Vec<Triangle>,
    /// Rows `1..=l` of the orthonormal DCT-II matrix.
    dct: Vec<Vec<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("fft_len", &self.fft_len)
            .field("frame_len", &self.frame_len)
            .field("n_mel", &self.filters.len())
            .field("l", &self.dct.len())
            .finish()
    }
}

impl MfccExtractor {
    /// Filterbank spanning `band` (Hz), or `0..fs/2` when `None`.
    pub fn new(
        frame_len: usize,
        sample_rate: u32,
        n_mel: usize,
        l: usize,
        band: Option<(f64, f64)>,
    ) -> Result<Self> {
        if frame_len < 2 {
            return Err(Error::Config(format!("frame length {frame_len} is below 2")));
        }
        if l == 0 || n_mel < l + 1 {
            return Err(Error::Config(format!(
                "need n_mel >= l + 1 and l >= 1, got n_mel = {n_mel}, l = {l}"
            )));
        }
        let nyquist = sample_rate as f64 / 2.0;
        let (f_lo, f_hi) = band.unwrap_or((0.0, nyquist));
        if !(0.0 <= f_lo && f_lo < f_hi && f_hi <= nyquist) {
            return Err(Error::Config(format!(
                "filterbank band {f_lo}..{f_hi} Hz does not fit below {nyquist} Hz"
            )));
        }

        let fft_len = frame_len.next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        let filters = triangles(fft_len, sample_rate, n_mel, f_lo, f_hi)?;
        let scale = (2.0 / n_mel as f64).sqrt();
        let dct = (1..=l)
            .map(|i| {
                (0..n_mel)
                    .map(|j| scale * (PI * i as f64 * (j as f64 + 0.5) / n_mel as f64).cos())
                    .collect()
            })
            .collect();
        Ok(Self {
            fft,
            fft_len,
            frame_len,
            filters,
            dct,
        })
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn n_mel(&self) -> usize {
        self.filters.len()
    }

    pub fn n_ceps(&self) -> usize {
        self.dct.len()
    }

    /// Coefficients of a single (already windowed) frame.
    pub fn extract_frame(&self, frame: &[f64], buf: &mut Vec<Complex<f64>>) -> Result<FeatureVector> {
        if frame.len() != self.frame_len {
            return Err(Error::Mismatch(format!(
                "frame has {} samples, extractor expects {}",
                frame.len(),
                self.frame_len
            )));
        }
        buf.clear();
        buf.extend(frame.iter().map(|&v| Complex::new(v, 0.0)));
        buf.resize(self.fft_len, Complex::new(0.0, 0.0));
        self.fft.process(buf);

        let log_energy: Vec<f64> = self
            .filters
            .iter()
            .map(|t| {
                let e: f64 = t
                    .weights
                    .iter()
                    .zip(&buf[t.first_bin..])
                    .map(|(w, x)| w * x.norm())
                    .sum();
                e.max(LOG_FLOOR).ln()
            })
            .collect();
        Ok(self
            .dct
            .iter()
            .map(|row| row.iter().zip(&log_energy).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn extract(&self, frames: &FrameSequence) -> Result<Vec<FeatureVector>> {
        let mut buf = Vec::with_capacity(self.fft_len);
        frames
            .frames
            .iter()
            .map(|f| self.extract_frame(f, &mut buf))
            .collect()
    }
}

fn triangles(fft_len: usize, fs: u32, n_mel: usize, f_lo: f64, f_hi: f64) -> Result<Vec<Triangle>> {
    let (m_lo, m_hi) = (hz_to_mel(f_lo), hz_to_mel(f_hi));
    let edges: Vec<f64> = (0..n_mel + 2)
        .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_mel + 1) as f64))
        .collect();
    let bin_hz = fs as f64 / fft_len as f64;
    let n_bins = fft_len / 2 + 1;

    let mut out = Vec::with_capacity(n_mel);
    for j in 0..n_mel {
        let (left, center, right) = (edges[j], edges[j + 1], edges[j + 2]);
        let weight = |k: usize| {
            let f = k as f64 * bin_hz;
            if f <= left || f >= right {
                0.0
            } else if f <= center {
                (f - left) / (center - left)
            } else {
                (right - f) / (right - center)
            }
        };
        let first = (0..n_bins).find(|&k| weight(k) > 0.0);
        let Some(first_bin) = first else {
            return Err(Error::Config(format!(
                "mel filter {j} ({left:.1}..{right:.1} Hz) covers no FFT bin; use fewer filters"
            )));
        };
        let last = (first_bin..n_bins).take_while(|&k| weight(k) > 0.0).last().unwrap_or(first_bin);
        out.push(Triangle {
            first_bin,
            weights: (first_bin..=last).map(weight).collect(),
        });
    }
    Ok(out)
}

/// MFCCs `c1..cl` of every frame over the full band `0..fs/2`.
pub fn mfcc(frames: &FrameSequence, n_mel: usize, l: usize) -> Result<Vec<FeatureVector>> {
    MfccExtractor::new(frames.frame_len, frames.sample_rate, n_mel, l, None)?.extract(frames)
}

/// How the speaker model treats the feature mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    /// `E[x xᵀ]` with no mean removal.
    #[default]
    Raw,
    /// Sample covariance around the feature mean.
    Centered,
}

/// Symmetric positive-definite `l × l` second-moment matrix of a speaker's
/// features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct CovarianceModel {
    l: usize,
    /// Row-major entries.
    matrix: Vec<f64>,
    n_frames: usize,
}

#[derive(Deserialize)]
struct RawModel {
    l: usize,
    matrix: Vec<f64>,
    n_frames: usize,
}

impl TryFrom<RawModel> for CovarianceModel {
    type Error = Error;

    fn try_from(r: RawModel) -> Result<Self> {
        CovarianceModel::from_row_major(r.l, r.matrix, r.n_frames)
    }
}

impl CovarianceModel {
    /// Wraps an explicit matrix after checking shape, finiteness and symmetry.
    pub fn from_row_major(l: usize, matrix: Vec<f64>, n_frames: usize) -> Result<Self> {
        if l == 0 || matrix.len() != l * l {
            return Err(Error::Mismatch(format!(
                "model of dimension {l} needs {} entries, got {}",
                l * l,
                matrix.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotSpd);
        }
        let scale = (0..l).map(|i| matrix[i * l + i].abs()).fold(0.0, f64::max).max(1.0);
        for i in 0..l {
            for j in 0..i {
                if (matrix[i * l + j] - matrix[j * l + i]).abs() > 1e-10 * scale {
                    return Err(Error::NotSpd);
                }
            }
        }
        Ok(Self { l, matrix, n_frames })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.l + j]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.l, self.l, &self.matrix)
    }

    /// The same model with every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            l: self.l,
            matrix: self.matrix.iter().map(|v| v * c).collect(),
            n_frames: self.n_frames,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_dmatrix()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Non-centered second moment `(1/n) Σ x xᵀ` of the features.
pub fn covariance_model(features: &[FeatureVector]) -> Result<CovarianceModel> {
    covariance_model_with(features, Moment::Raw)
}

pub fn covariance_model_with(features: &[FeatureVector], moment: Moment) -> Result<CovarianceModel> {
    let Some(first) = features.first() else {
        return Err(Error::TooShort("no feature vectors".into()));
    };
    let l = first.len();
    if l == 0 {
        return Err(Error::Config("feature dimension is zero".into()));
    }
    if let Some(bad) = features.iter().position(|f| f.len() != l) {
        return Err(Error::Mismatch(format!(
            "feature {bad} has dimension {}, expected {l}",
            features[bad].len()
        )));
    }
    let n = features.len();
    if n < l {
        return Err(Error::TooShort(format!("{n} frames cannot support a model of dimension {l}")));
    }

    let mean = match moment {
        Moment::Raw => vec![0.0; l],
        Moment::Centered => {
            let mut m = vec![0.0; l];
            for f in features {
                m.iter_mut().zip(f).for_each(|(a, b)| *a += b);
            }
            m.iter_mut().for_each(|a| *a /= n as f64);
            m
        }
    };
    let mut c = vec![0.0; l * l];
    let mut d = vec![0.0; l];
    for f in features {
        d.iter_mut().zip(f.iter().zip(&mean)).for_each(|(di, (x, m))| *di = x - m);
        for i in 0..l {
            let di = d[i];
            for j in i..l {
                c[i * l + j] += di * d[j];
            }
        }
    }
    for i in 0..l {
        for j in i..l {
            let v = c[i * l + j] / n as f64;
            c[i * l + j] = v;
            c[j * l + i] = v;
        }
    }
    let model = CovarianceModel { l, matrix: c, n_frames: n };

    let trace: f64 = (0..l).map(|i| model.get(i, i)).sum();
    let min_eigenvalue = model.eigenvalues()[0];
    if !(trace > 0.0) || min_eigenvalue < RANK_TOLERANCE * trace / l as f64 {
        return Err(Error::RankDeficient {
            n_frames: n,
            dim: l,
            min_eigenvalue,
        });
    }
    Ok(model)
}

/// `tr(A B⁻¹)` through a Cholesky factorization of `B`.
fn trace_ratio(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let chol = b.clone().cholesky().ok_or(Error::NotSpd)?;
    Ok(chol.solve(a).trace())
}

/// Arithmetic-harmonic sphericity `ln(tr(A B⁻¹) · tr(B A⁻¹)) − 2 ln l`.
///
/// Nonnegative, symmetric, and zero exactly when the two matrices are
/// proportional.
pub fn sphericity_distance(test: &CovarianceModel, model: &CovarianceModel) -> Result<f64> {
    if test.l != model.l {
        return Err(Error::Mismatch(format!(
            "model dimensions differ: {} vs {}",
            test.l, model.l
        )));
    }
    let (a, b) = (test.to_dmatrix(), model.to_dmatrix());
    let t_ab = trace_ratio(&a, &b)?;
    let t_ba = trace_ratio(&b, &a)?;
    if !(t_ab > 0.0 && t_ba > 0.0) {
        return Err(Error::NotSpd);
    }
    Ok((t_ab * t_ba).ln() - 2.0 * (test.l as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{frame_and_window, Signal};

    #[test]
    fn mel_scale_roundtrip() {
        for f in [0.0, 100.0, 1000.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn zero_frame_gives_zero_coefficients() {
        let ex = MfccExtractor::new(480, 16000, 20, 12, None).unwrap();
        assert_eq!(ex.fft_len(), 512);
        let c = ex.extract_frame(&vec![0.0; 480], &mut Vec::new()).unwrap();
        assert_eq!(c.len(), 12);
        assert!(c.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn gain_lands_in_dropped_c0() {
        let x: Vec<f64> = (0..960).map(|i| (i as f64 * 0.3).sin() + 0.2 * (i as f64 * 1.7).cos()).collect();
        let s = Signal::new(x, 16000).unwrap();
        let f1 = mfcc(&frame_and_window(&s, 30.0, 2.0 / 3.0).unwrap(), 20, 12).unwrap();
        let f2 = mfcc(&frame_and_window(&s.scaled(3.7).unwrap(), 30.0, 2.0 / 3.0).unwrap(), 20, 12).unwrap();
        for (a, b) in f1.iter().zip(&f2) {
            for (u, v) in a.iter().zip(b) {
                assert!((u - v).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(MfccExtractor::new(1, 16000, 20, 12, None).is_err());
        assert!(MfccExtractor::new(480, 16000, 12, 12, None).is_err());
        assert!(MfccExtractor::new(480, 16000, 20, 12, Some((300.0, 9000.0))).is_err());
        assert!(MfccExtractor::new(480, 16000, 20, 12, Some((300.0, 3400.0))).is_ok());
    }

    #[test]
    fn covariance_examples() {
        let v = vec![1.0, 2.0, 3.0];
        match covariance_model(&vec![v; 10]) {
            Err(Error::RankDeficient { n_frames: 10, dim: 3, .. }) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        let basis: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let c = covariance_model(&basis).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((c.get(i, j) - want).abs() < 1e-15);
            }
        }
        assert!(matches!(covariance_model(&basis[..3]), Err(Error::TooShort(_))));
    }

    #[test]
    fn centered_moment_removes_mean() {
        let f: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![5.0 + (i as f64).sin(), -3.0 + (i as f64 * 0.7).cos()])
            .collect();
        let raw = covariance_model(&f).unwrap();
        let cen = covariance_model_with(&f, Moment::Centered).unwrap();
        assert!(raw.get(0, 0) > 20.0);
        assert!(cen.get(0, 0) < 1.0);
    }

    #[test]
    fn model_json_roundtrip_and_validation() {
        let m = CovarianceModel::from_row_major(2, vec![2.0, 0.5, 0.5, 1.0], 40).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"l\":2") && json.contains("\"n_frames\":40"));
        let back: CovarianceModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CovarianceModel>(r#"{"l":2,"matrix":[1,2,0,1],"n_frames":3}"#).is_err());
        assert!(serde_json::from_str::<CovarianceModel>(r#"{"l":2,"matrix":[1,0,1],"n_frames":3}"#).is_err());
    }

    #[test]
    fn distance_rejects_non_spd_and_mismatch() {
        let a = CovarianceModel::from_row_major(2, vec![1.0, 0.0, 0.0, 1.0], 10).unwrap();
        let bad = CovarianceModel::from_row_major(2, vec![1.0, 2.0, 2.0, 1.0], 10).unwrap();
        assert!(matches!(sphericity_distance(&a, &bad), Err(Error::NotSpd)));
        assert!(matches!(sphericity_distance(&bad, &a), Err(Error::NotSpd)));
        let c = CovarianceModel::from_row_major(1, vec![1.0], 10).unwrap();
        assert!(matches!(sphericity_distance(&a, &c), Err(Error::Mismatch(_))));
        let d = sphericity_distance(&a, &a.scaled(3.0)).unwrap();
        assert!(d.abs() < 1e-12);
    }
}
