//! Saturation/compensation study on a synthetic speaker corpus.
//!
//! Each speaker is an all-pole AR(10) process driven by Laplacian noise and
//! heard through two fixed "microphone" colorations. Tests are peak
//! normalized, saturated with `tanh(k x)`, and optionally compensated by an
//! inverse estimated blindly from that one sentence. Four opinion streams
//! are produced per sentence:
//!
//! | id | stream                        |
//! |----|-------------------------------|
//! | 1  | mic 1, saturated, compensated |
//! | 2  | mic 1, saturated              |
//! | 3  | mic 2, saturated, compensated |
//! | 4  | mic 2, saturated              |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::Laplace;

use crate::channel::{make_saturated_testset, FirFilter};
use crate::error::{Error, Result};
use crate::inversion::{estimate_inverse, GradientMethod, InversionConfig, Termination};
use crate::recognition::{
    distances_to_opinions, enroll, fuse, identification_rate, identify_model, FusionRule, Identification,
    OpinionVector, PipelineConfig, SpeakerModelSet,
};
use crate::signal::{normalize_peak, Signal};

pub const AR_ORDER: usize = 10;
pub const POLE_RADIUS: (f64, f64) = (0.85, 0.98);
/// Minimum RMS log-spectral distance (dB) between any two synthetic speakers.
pub const MIN_SPEAKER_DISTANCE_DB: f64 = 3.0;
/// Fixed colorations standing in for two physical microphones.
pub const MIC_TAPS: [&[f64]; 2] = [&[1.0, 0.35, -0.2], &[1.0, -0.5, 0.25, 0.1]];
const BURN_IN: usize = 2000;
const SPECTRUM_POINTS: usize = 256;
const MAX_POLE_DRAWS: usize = 1000;

/// What is applied to a saturated sentence once its inverse is estimated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// Only the memoryless map `g`; the filter `w` is estimated but discarded.
    #[default]
    MapOnly,
    /// The full inverse `w * g`.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_speakers: usize,
    pub train_seconds: f64,
    pub n_test_sentences: usize,
    pub test_seconds: f64,
    pub sample_rate: u32,
    pub k: f64,
    pub inversion: InversionConfig,
    pub compensation: Compensation,
    pub pipeline: PipelineConfig,
    pub temperature: f64,
    /// Classifier ids (1..=4) fused together, one list per fused row.
    pub fusion_subsets: Vec<Vec<usize>>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_speakers: 10,
            train_seconds: 60.0,
            n_test_sentences: 5,
            test_seconds: 2.0,
            sample_rate: 16000,
            k: crate::channel::DEFAULT_SATURATION,
            inversion: InversionConfig {
                gradient: GradientMethod::Analytic,
                ..InversionConfig::default()
            },
            compensation: Compensation::MapOnly,
            pipeline: PipelineConfig::default(),
            temperature: 1.0,
            fusion_subsets: vec![vec![1, 2], vec![1, 3], vec![2, 4], vec![1, 2, 3, 4]],
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_speakers < 2 {
            return bad(format!("n_speakers = {} must be at least 2", self.n_speakers));
        }
        if self.n_test_sentences == 0 {
            return bad("n_test_sentences must be positive".into());
        }
        if !(self.train_seconds > 0.0 && self.test_seconds > 0.0) {
            return bad("durations must be positive".into());
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("k = {} must be positive", self.k));
        }
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        if !(self.temperature > 0.0) {
            return bad(format!("temperature {} must be positive", self.temperature));
        }
        for s in &self.fusion_subsets {
            if s.is_empty() || s.iter().any(|c| !(1..=4).contains(c)) {
                return bad(format!("fusion subset {s:?} must list classifier ids 1..=4"));
            }
        }
        self.inversion.validate()
    }

    fn samples(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate as f64).round() as usize
    }
}

pub fn speaker_id(i: usize) -> String {
    format!("spk{i:02}")
}

pub fn sentence_id(speaker: usize, j: usize) -> String {
    format!("{}_t{j}", speaker_id(speaker))
}

/// One synthetic speaker: conjugate pole pairs as `(radius, angle)` and the
/// all-pole denominator `[1, a1, .., a10]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArSpeaker {
    pub id: String,
    pub poles: Vec<(f64, f64)>,
    pub denominator: Vec<f64>,
}

impl ArSpeaker {
    fn from_poles(id: String, poles: Vec<(f64, f64)>) -> Self {
        let mut a = vec![1.0];
        for &(r, theta) in &poles {
            let quad = [1.0, -2.0 * r * theta.cos(), r * r];
            let mut next = vec![0.0; a.len() + 2];
            for (i, ai) in a.iter().enumerate() {
                for (j, qj) in quad.iter().enumerate() {
                    next[i + j] += ai * qj;
                }
            }
            a = next;
        }
        Self {
            id,
            poles,
            denominator: a,
        }
    }

    /// `20 log10 |1 / A(e^{jω})|` on a uniform grid over `(0, π)`.
    pub fn log_spectrum_db(&self) -> Vec<f64> {
        (0..SPECTRUM_POINTS)
            .map(|i| {
                let w = PI * (i as f64 + 0.5) / SPECTRUM_POINTS as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (k, a) in self.denominator.iter().enumerate() {
                    re += a * (w * k as f64).cos();
                    im -= a * (w * k as f64).sin();
                }
                -10.0 * (re * re + im * im).log10()
            })
            .collect()
    }

    /// Runs the all-pole recursion over the excitation, discarding a burn-in.
    pub fn synthesize(&self, excitation: &[f64]) -> Vec<f64> {
        let p = self.denominator.len() - 1;
        let mut y = vec![0.0; excitation.len()];
        for n in 0..excitation.len() {
            let mut v = excitation[n];
            for k in 1..=p.min(n) {
                v -= self.denominator[k] * y[n - k];
            }
            y[n] = v;
        }
        y.split_off(BURN_IN.min(y.len()))
    }
}

/// RMS difference between two log spectra, in dB.
pub fn log_spectral_distance(a: &ArSpeaker, b: &ArSpeaker) -> f64 {
    let (sa, sb) = (a.log_spectrum_db(), b.log_spectrum_db());
    (sa.iter().zip(&sb).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / sa.len() as f64).sqrt()
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Stream layout per speaker: poles, training excitation, then one per test.
fn stream_id(speaker: usize, slot: usize) -> u64 {
    ((speaker as u64) << 32) | slot as u64
}

fn draw_speakers(cfg: &ExperimentConfig) -> Result<Vec<ArSpeaker>> {
    let mut speakers: Vec<ArSpeaker> = Vec::with_capacity(cfg.n_speakers);
    for i in 0..cfg.n_speakers {
        let mut rng = stream_rng(cfg.seed, stream_id(i, 0));
        let mut accepted = None;
        for _ in 0..MAX_POLE_DRAWS {
            let poles = (0..AR_ORDER / 2)
                .map(|_| {
                    (
                        rng.gen_range(POLE_RADIUS.0..=POLE_RADIUS.1),
                        rng.gen_range(0.02 * PI..0.98 * PI),
                    )
                })
                .collect();
            let cand = ArSpeaker::from_poles(speaker_id(i), poles);
            if speakers
                .iter()
                .all(|s| log_spectral_distance(s, &cand) > MIN_SPEAKER_DISTANCE_DB)
            {
                accepted = Some(cand);
                break;
            }
        }
        let Some(s) = accepted else {
            return Err(Error::Config(format!(
                "could not place speaker {i} at least {MIN_SPEAKER_DISTANCE_DB} dB from the others"
            )));
        };
        speakers.push(s);
    }
    Ok(speakers)
}

fn excitation(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let lap = Laplace::new(0.0, 1.0).expect("unit Laplace is valid");
    stream_rng(seed, stream).sample_iter(lap).take(n + BURN_IN).collect()
}

/// Clean material for one virtual microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct MicCorpus {
    pub mic: usize,
    pub training: BTreeMap<String, Signal>,
    /// Test sentences in (speaker, sentence) order.
    pub tests: Vec<TestSentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSentence {
    pub id: String,
    pub speaker: String,
    pub signal: Signal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub speakers: Vec<ArSpeaker>,
    pub mics: Vec<MicCorpus>,
}

/// Deterministic synthetic corpus for both microphones.
pub fn synth_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    cfg.validate()?;
    let speakers = draw_speakers(cfg)?;
    let (n_train, n_test) = (cfg.samples(cfg.train_seconds), cfg.samples(cfg.test_seconds));
    let fs = cfg.sample_rate;

    let mut clean_train = Vec::with_capacity(speakers.len());
    let mut clean_tests = Vec::new();
    for (i, spk) in speakers.iter().enumerate() {
        clean_train.push(spk.synthesize(&excitation(cfg.seed, stream_id(i, 1), n_train)));
        for j in 0..cfg.n_test_sentences {
            clean_tests.push((i, j, spk.synthesize(&excitation(cfg.seed, stream_id(i, 2 + j), n_test))));
        }
    }

    let mut mics = Vec::with_capacity(MIC_TAPS.len());
    for (m, taps) in MIC_TAPS.iter().enumerate() {
        let mic = FirFilter::causal(taps.to_vec())?;
        let color = |x: &[f64]| normalize_peak(&Signal::new(mic.apply(x), fs)?);
        let mut training = BTreeMap::new();
        for (spk, x) in speakers.iter().zip(&clean_train) {
            training.insert(spk.id.clone(), color(x)?);
        }
        let tests = clean_tests
            .iter()
            .map(|(i, j, x)| {
                Ok(TestSentence {
                    id: sentence_id(*i, *j),
                    speaker: speaker_id(*i),
                    signal: color(x)?,
                })
            })
            .collect::<Result<_>>()?;
        mics.push(MicCorpus {
            mic: m + 1,
            training,
            tests,
        });
    }
    Ok(Corpus { speakers, mics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Clean,
    Saturated,
    SaturatedCompensated,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Clean => "clean",
            Condition::Saturated => "saturated",
            Condition::SaturatedCompensated => "saturated + compensation",
        }
    }
}

/// Classifier id (1..=4) for a microphone and compensation setting.
pub fn classifier_id(mic: usize, compensated: bool) -> usize {
    2 * (mic - 1) + if compensated { 1 } else { 2 }
}

pub fn classifier_label(id: usize) -> String {
    let mic = (id + 1) / 2;
    if id % 2 == 1 {
        format!("{id} (mic {mic} + compensation)")
    } else {
        format!("{id} (mic {mic})")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub mic: usize,
    pub condition: Condition,
    pub sentence_id: String,
    pub truth: String,
    pub decision: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionSummary {
    pub mic: usize,
    pub sentence_id: String,
    pub iterations: usize,
    pub terminated_by: Termination,
    pub initial_cost: f64,
    pub final_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRate {
    pub mic: usize,
    pub condition: Condition,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRate {
    pub classifier: usize,
    pub label: String,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanRule {
    Arithmetic,
    Geometric,
}

impl MeanRule {
    fn rule(self) -> FusionRule {
        match self {
            MeanRule::Arithmetic => FusionRule::Arithmetic,
            MeanRule::Geometric => FusionRule::Geometric,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MeanRule::Arithmetic => "arithmetic mean",
            MeanRule::Geometric => "geometric mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionRate {
    pub subset: Vec<usize>,
    pub rule: MeanRule,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub conditions: Vec<ConditionRate>,
    pub classifiers: Vec<ClassifierRate>,
    pub fusion: Vec<FusionRate>,
    /// Share of (subset, sentence) pairs where both rules pick the same speaker.
    pub fusion_rule_agreement: f64,
    pub decisions: Vec<DecisionEntry>,
    pub inversions: Vec<InversionSummary>,
}

impl ExperimentReport {
    pub fn condition_rate(&self, mic: usize, condition: Condition) -> Option<f64> {
        self.conditions
            .iter()
            .find(|c| c.mic == mic && c.condition == condition)
            .map(|c| c.rate)
    }

    pub fn best_single(&self) -> Option<f64> {
        self.classifiers.iter().map(|c| c.rate).max_by(f64::total_cmp)
    }

    pub fn best_fused(&self) -> Option<f64> {
        self.fusion.iter().map(|f| f.rate).max_by(f64::total_cmp)
    }
}

/// Outcome of one sentence under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceOutcome {
    pub sentence_id: String,
    pub truth: String,
    pub result: std::result::Result<Identification, String>,
    pub inversion: Option<InversionSummary>,
}

fn error_text(e: &Error) -> String {
    format!("{}: {e}", e.kind())
}

fn compensate(sat: &Signal, cfg: &ExperimentConfig, mic: usize, id: &str) -> Result<(Signal, InversionSummary)> {
    let (inverse, trace) = estimate_inverse(sat, &cfg.inversion)?;
    let restored = match cfg.compensation {
        Compensation::MapOnly => inverse.linearize(sat)?,
        Compensation::Full => inverse.apply(sat)?,
    };
    let summary = InversionSummary {
        mic,
        sentence_id: id.to_string(),
        iterations: trace.iterations(),
        terminated_by: trace.terminated_by,
        initial_cost: trace.cost_per_iteration[0],
        final_cost: trace.final_cost,
    };
    Ok((normalize_peak(&restored)?, summary))
}

/// Identifies every sentence under one condition. Each sentence is handled
/// independently; failures become error entries.
pub fn evaluate_sentences(
    tests: &[TestSentence],
    models: &SpeakerModelSet,
    condition: Condition,
    mic: usize,
    cfg: &ExperimentConfig,
) -> Vec<SentenceOutcome> {
    tests
        .par_iter()
        .map(|t| {
            let mut inversion = None;
            let result = (|| -> Result<Identification> {
                let signal = match condition {
                    Condition::Clean => t.signal.clone(),
                    Condition::Saturated | Condition::SaturatedCompensated => {
                        let sat = make_saturated_testset(std::slice::from_ref(&t.signal), cfg.k)?.remove(0);
                        if condition == Condition::Saturated {
                            sat
                        } else {
                            let (restored, summary) = compensate(&sat, cfg, mic, &t.id)?;
                            inversion = Some(summary);
                            restored
                        }
                    }
                };
                identify_model(&cfg.pipeline.model(&signal)?, models)
            })();
            SentenceOutcome {
                sentence_id: t.id.clone(),
                truth: t.speaker.clone(),
                result: result.map_err(|e| error_text(&e)),
                inversion,
            }
        })
        .collect()
}

fn rate_of(outcomes: &[SentenceOutcome]) -> Result<f64> {
    let decisions: Vec<&str> = outcomes
        .iter()
        .map(|o| o.result.as_ref().map(|r| r.decision.as_str()).unwrap_or(""))
        .collect();
    let truth: Vec<&str> = outcomes.iter().map(|o| o.truth.as_str()).collect();
    identification_rate(&decisions, &truth)
}

/// Runs the whole study: enrolment, the three conditions on both
/// microphones, the four classifiers and every configured fusion.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let corpus = synth_corpus(cfg)?;
    run_on_corpus(&corpus, cfg)
}

pub fn run_on_corpus(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut conditions = Vec::new();
    let mut decisions = Vec::new();
    let mut inversions = Vec::new();
    // Opinion streams keyed by classifier id, one entry per sentence.
    let mut streams: BTreeMap<usize, Vec<Option<OpinionVector>>> = BTreeMap::new();
    let mut truth: Vec<String> = Vec::new();

    for mc in &corpus.mics {
        let models = enroll(&mc.training, &cfg.pipeline)?;
        if truth.is_empty() {
            truth = mc.tests.iter().map(|t| t.speaker.clone()).collect();
        }
        for condition in [Condition::Clean, Condition::Saturated, Condition::SaturatedCompensated] {
            let outcomes = evaluate_sentences(&mc.tests, &models, condition, mc.mic, cfg);
            conditions.push(ConditionRate {
                mic: mc.mic,
                condition,
                rate: rate_of(&outcomes)?,
            });
            if condition != Condition::Clean {
                let id = classifier_id(mc.mic, condition == Condition::SaturatedCompensated);
                let ops = outcomes
                    .iter()
                    .map(|o| {
                        o.result
                            .as_ref()
                            .ok()
                            .and_then(|r| distances_to_opinions(&r.distances, cfg.temperature).ok())
                    })
                    .collect();
                streams.insert(id, ops);
            }
            for o in outcomes {
                let (decision, error) = match o.result {
                    Ok(r) => (Some(r.decision), None),
                    Err(e) => (None, Some(e)),
                };
                decisions.push(DecisionEntry {
                    mic: mc.mic,
                    condition,
                    sentence_id: o.sentence_id,
                    truth: o.truth,
                    decision,
                    error,
                });
                inversions.extend(o.inversion);
            }
        }
    }

    let decide = |ops: Vec<Option<&OpinionVector>>, rule: &FusionRule| -> String {
        let present: Option<Vec<OpinionVector>> = ops.into_iter().map(|o| o.cloned()).collect();
        present
            .and_then(|v| fuse(&v, rule).ok())
            .map(|f| f.decision().to_string())
            .unwrap_or_default()
    };

    let mut classifiers = Vec::new();
    for (&id, ops) in &streams {
        let dec: Vec<String> = ops
            .iter()
            .map(|o| o.as_ref().map(|v| v.decision().to_string()).unwrap_or_default())
            .collect();
        classifiers.push(ClassifierRate {
            classifier: id,
            label: classifier_label(id),
            rate: identification_rate(&dec, &truth)?,
        });
    }

    let mut fusion = Vec::new();
    let (mut agree, mut total) = (0usize, 0usize);
    for subset in &cfg.fusion_subsets {
        let mut by_rule = Vec::new();
        for rule in [MeanRule::Arithmetic, MeanRule::Geometric] {
            let dec: Vec<String> = (0..truth.len())
                .map(|s| decide(subset.iter().map(|c| streams[c][s].as_ref()).collect(), &rule.rule()))
                .collect();
            fusion.push(FusionRate {
                subset: subset.clone(),
                rule,
                rate: identification_rate(&dec, &truth)?,
            });
            by_rule.push(dec);
        }
        agree += by_rule[0].iter().zip(&by_rule[1]).filter(|(a, b)| a == b && !a.is_empty()).count();
        total += truth.len();
    }
    let fusion_rule_agreement = if total == 0 { 1.0 } else { agree as f64 / total as f64 };

    Ok(ExperimentReport {
        config: cfg.clone(),
        conditions,
        classifiers,
        fusion,
        fusion_rule_agreement,
        decisions,
        inversions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    TextTable,
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text-table" | "text" => Ok(ReportFormat::TextTable),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

fn subset_label(subset: &[usize]) -> String {
    let ids: Vec<String> = subset.iter().map(usize::to_string).collect();
    format!("fusion {}", ids.join("&"))
}

/// Rows of the summary table: label, rule and rate.
pub fn table_rows(report: &ExperimentReport) -> Vec<(String, String, f64)> {
    let mut rows: Vec<(String, String, f64)> = report
        .classifiers
        .iter()
        .map(|c| (c.label.clone(), String::new(), c.rate))
        .collect();
    rows.extend(
        report
            .fusion
            .iter()
            .map(|f| (subset_label(&f.subset), f.rule.label().to_string(), f.rate)),
    );
    rows
}

pub fn report_render(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => {
            let mut out = String::from("kind,label,rule,rate\n");
            for c in &report.conditions {
                let _ = writeln!(out, "condition,mic {} {},,{:.2}", c.mic, c.condition.label(), c.rate);
            }
            for (label, rule, rate) in table_rows(report) {
                let kind = if rule.is_empty() { "classifier" } else { "fusion" };
                let _ = writeln!(out, "{kind},{label},{rule},{rate:.2}");
            }
            Ok(out)
        }
        ReportFormat::TextTable => {
            let rows = table_rows(report);
            let w0 = rows.iter().map(|r| r.0.len()).chain([10]).max().unwrap_or(10);
            let w1 = rows.iter().map(|r| r.1.len()).chain([4]).max().unwrap_or(4);
            let mut out = String::new();
            let _ = writeln!(out, "{:<w0$}  {:<w1$}  {:>8}", "Classifier", "Rule", "Rate");
            let _ = writeln!(out, "{}", "-".repeat(w0 + w1 + 12));
            for (label, rule, rate) in &rows {
                let _ = writeln!(out, "{label:<w0$}  {rule:<w1$}  {:>7.2}%", rate);
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "Conditions");
            for c in &report.conditions {
                let _ = writeln!(out, "  mic {} {:<26} {:>7.2}%", c.mic, c.condition.label(), c.rate);
            }
            let _ = writeln!(out, "Fusion rule agreement: {:.2}%", 100.0 * report.fusion_rule_agreement);
            Ok(out)
        }
    }
}
