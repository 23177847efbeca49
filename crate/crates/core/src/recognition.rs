//! Closed-set speaker identification on covariance models, plus conversion
//! of distances to opinions and their fusion across classifiers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{covariance_model_with, sphericity_distance, CovarianceModel, FeatureVector, Moment, MfccExtractor};
use crate::signal::{bandlimit_telephone, frame_and_window, preemphasize, Signal};

/// Passband used for the filterbank when telephone band-limiting is on.
pub const TELEPHONE_BAND: (f64, f64) = (300.0, 3400.0);
/// Floor applied to scores before the geometric mean.
pub const GEOMETRIC_FLOOR: f64 = 1e-300;

/// Front end shared by enrolment and identification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub preemphasis: f64,
    pub bandlimit: bool,
    pub frame_ms: f64,
    pub overlap: f64,
    pub n_mel: usize,
    pub l: usize,
    pub moment: Moment,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preemphasis: crate::signal::DEFAULT_PREEMPHASIS,
            bandlimit: false,
            frame_ms: crate::signal::DEFAULT_FRAME_MS,
            overlap: crate::signal::DEFAULT_OVERLAP,
            n_mel: crate::features::DEFAULT_N_MEL,
            l: crate::features::DEFAULT_N_CEPS,
            moment: Moment::Raw,
        }
    }
}

impl PipelineConfig {
    pub fn features(&self, s: &Signal) -> Result<Vec<FeatureVector>> {
        let mut x = preemphasize(s, self.preemphasis)?;
        if self.bandlimit {
            x = bandlimit_telephone(&x)?;
        }
        let frames = frame_and_window(&x, self.frame_ms, self.overlap)?;
        if frames.len() < self.l {
            return Err(Error::TooShort(format!(
                "{} frames from {:.3} s of audio, need at least {}",
                frames.len(),
                s.duration_secs(),
                self.l
            )));
        }
        let band = self.bandlimit.then_some(TELEPHONE_BAND);
        MfccExtractor::new(frames.frame_len, frames.sample_rate, self.n_mel, self.l, band)?.extract(&frames)
    }

    pub fn model(&self, s: &Signal) -> Result<CovarianceModel> {
        covariance_model_with(&self.features(s)?, self.moment)
    }
}

/// Enrolled speakers, keyed and iterated in lexicographic id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSet")]
pub struct SpeakerModelSet {
    l: usize,
    models: BTreeMap<String, CovarianceModel>,
}

#[derive(Deserialize)]
struct RawModelSet {
    l: usize,
    models: BTreeMap<String, CovarianceModel>,
}

impl TryFrom<RawModelSet> for SpeakerModelSet {
    type Error = Error;

    fn try_from(r: RawModelSet) -> Result<Self> {
        let set = SpeakerModelSet::new(r.models)?;
        if set.l != r.l {
            return Err(Error::Mismatch(format!("declared l = {} but models have l = {}", r.l, set.l)));
        }
        Ok(set)
    }
}

impl SpeakerModelSet {
    pub fn new(models: BTreeMap<String, CovarianceModel>) -> Result<Self> {
        if models.len() < 2 {
            return Err(Error::Config(format!(
                "identification needs at least 2 speakers, got {}",
                models.len()
            )));
        }
        let l = models.values().next().map(CovarianceModel::l).unwrap_or(0);
        if let Some((id, m)) = models.iter().find(|(_, m)| m.l() != l) {
            return Err(Error::Mismatch(format!("speaker {id} has l = {}, others {l}", m.l())));
        }
        Ok(Self { l, models })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CovarianceModel> {
        self.models.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CovarianceModel)> {
        self.models.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Builds one model per speaker from clean training audio.
pub fn enroll(training: &BTreeMap<String, Signal>, cfg: &PipelineConfig) -> Result<SpeakerModelSet> {
    let mut models = BTreeMap::new();
    for (id, s) in training {
        let m = cfg.model(s).map_err(|e| Error::Speaker {
            speaker: id.clone(),
            source: Box::new(e),
        })?;
        models.insert(id.clone(), m);
    }
    SpeakerModelSet::new(models)
}

/// Decision plus the distance to every enrolled speaker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub decision: String,
    pub distances: BTreeMap<String, f64>,
}

/// Best entry under `better`; equal values go to the lexicographically first id.
fn arg_best<'a>(values: &'a BTreeMap<String, f64>, better: impl Fn(f64, f64) -> bool) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for (id, &v) in values {
        match best {
            Some((_, b)) if !better(v, b) => {}
            _ => best = Some((id, v)),
        }
    }
    best.map(|(id, _)| id)
}

pub fn identify_model(test: &CovarianceModel, models: &SpeakerModelSet) -> Result<Identification> {
    let mut distances = BTreeMap::new();
    for (id, m) in models.iter() {
        distances.insert(id.to_string(), sphericity_distance(test, m)?);
    }
    let decision = arg_best(&distances, |a, b| a < b)
        .ok_or_else(|| Error::Config("empty model set".into()))?
        .to_string();
    Ok(Identification { decision, distances })
}

pub fn identify(test: &Signal, models: &SpeakerModelSet, cfg: &PipelineConfig) -> Result<Identification> {
    identify_model(&cfg.model(test)?, models)
}

/// Normalized per-speaker scores in `[0, 1]` summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpinionVector {
    pub scores: BTreeMap<String, f64>,
}

impl OpinionVector {
    /// Normalizes nonnegative raw scores to sum to one.
    pub fn from_raw(raw: BTreeMap<String, f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Config("opinion over no speakers".into()));
        }
        if raw.values().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFinite("opinion scores must be finite and nonnegative".into()));
        }
        let total: f64 = raw.values().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateInput("opinion scores sum to zero".into()));
        }
        Ok(Self {
            scores: raw.into_iter().map(|(k, v)| (k, v / total)).collect(),
        })
    }

    /// Highest-scoring speaker, ties to the lexicographically first id.
    pub fn decision(&self) -> &str {
        arg_best(&self.scores, |a, b| a > b).unwrap_or_default()
    }
}

/// Softmin `exp(−d / T)`, normalized.
pub fn distances_to_opinions(distances: &BTreeMap<String, f64>, temperature: f64) -> Result<OpinionVector> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Config(format!("temperature {temperature} must be positive")));
    }
    let Some(d_min) = distances.values().copied().min_by(f64::total_cmp) else {
        return Err(Error::Config("no distances to convert".into()));
    };
    if distances.values().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("distance is not finite".into()));
    }
    OpinionVector::from_raw(
        distances
            .iter()
            .map(|(k, d)| (k.clone(), (-(d - d_min) / temperature).exp()))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionRule {
    Arithmetic,
    Geometric,
    Weighted(Vec<f64>),
}

/// Per-speaker combination before renormalization.
pub fn combine_raw(opinions: &[OpinionVector], rule: &FusionRule) -> Result<BTreeMap<String, f64>> {
    let Some(first) = opinions.first() else {
        return Err(Error::Config("nothing to fuse".into()));
    };
    for (i, o) in opinions.iter().enumerate().skip(1) {
        if !o.scores.keys().eq(first.scores.keys()) {
            return Err(Error::Mismatch(format!("opinion {i} covers a different speaker set")));
        }
    }
    let n = opinions.len() as f64;
    let weights = match rule {
        FusionRule::Weighted(w) => {
            if w.len() != opinions.len() {
                return Err(Error::Mismatch(format!("{} weights for {} opinions", w.len(), opinions.len())));
            }
            let total: f64 = w.iter().sum();
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(total > 0.0) {
                return Err(Error::Config("fusion weights must be nonnegative with a positive sum".into()));
            }
            w.iter().map(|v| v / total).collect()
        }
        _ => vec![1.0 / n; opinions.len()],
    };
    Ok(first
        .scores
        .keys()
        .map(|id| {
            let vals = opinions.iter().map(|o| o.scores[id]);
            let v = match rule {
                FusionRule::Geometric => (vals.map(|s| s.max(GEOMETRIC_FLOOR).ln()).sum::<f64>() / n).exp(),
                _ => vals.zip(&weights).map(|(s, w)| s * w).sum(),
            };
            (id.clone(), v)
        })
        .collect())
}

pub fn fuse(opinions: &[OpinionVector], rule: &FusionRule) -> Result<OpinionVector> {
    let raw = combine_raw(opinions, rule)?;
    if opinions.len() == 1 {
        return Ok(opinions[0].clone());
    }
    OpinionVector::from_raw(raw)
}

/// Percentage of decisions equal to the truth.
pub fn identification_rate<S: AsRef<str>, T: AsRef<str>>(decisions: &[S], truth: &[T]) -> Result<f64> {
    if decisions.len() != truth.len() {
        return Err(Error::Mismatch(format!(
            "{} decisions for {} labels",
            decisions.len(),
            truth.len()
        )));
    }
    if decisions.is_empty() {
        return Err(Error::Config("no decisions to score".into()));
    }
    let correct = decisions.iter().zip(truth).filter(|(d, t)| d.as_ref() == t.as_ref()).count();
    Ok(100.0 * correct as f64 / decisions.len() as f64)
}

/// One sentence's scores against every speaker.
#[derive(Debug, Clone)]
pub struct ScoreRecord<'a> {
    pub sentence_id: &'a str,
    pub identification: &'a Identification,
    pub opinion: &'a OpinionVector,
}

/// CSV with header `sentence_id,speaker_id,distance,opinion`.
pub fn scores_to_csv(records: &[ScoreRecord<'_>]) -> String {
    let mut out = String::from("sentence_id,speaker_id,distance,opinion\n");
    for r in records {
        for (id, d) in &r.identification.distances {
            let o = r.opinion.scores.get(id).copied().unwrap_or(f64::NAN);
            let _ = writeln!(out, "{},{},{},{}", r.sentence_id, id, d, o);
        }
    }
    out
}
