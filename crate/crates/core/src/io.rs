//! WAV and CSV persistence for signals, feature matrices and traces.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::Signal;

const PCM_SCALE: f64 = 32768.0;

/// Reads a 16-bit PCM mono WAV file; samples are divided by 32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let reader = WavReader::open(path.as_ref())?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Config(format!(
            "{}: expected mono, found {} channels",
            path.as_ref().display(),
            spec.channels
        )));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Config(format!(
            "{}: expected 16-bit integer PCM",
            path.as_ref().display()
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / PCM_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Signal::new(samples, spec.sample_rate)
}

/// Quantizes to 16-bit PCM, saturating at the integer range.
pub fn to_pcm16(v: f64) -> i16 {
    (v * PCM_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

pub fn write_wav(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &v in signal.samples() {
        writer.write_sample(to_pcm16(v))?;
    }
    writer.finalize()?;
    Ok(())
}

/// One-column CSV with header `amplitude`.
pub fn signal_to_csv(signal: &Signal) -> String {
    let mut out = String::from("amplitude\n");
    for v in signal.samples() {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn signal_from_csv(text: &str, sample_rate: u32) -> Result<Signal> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("amplitude") => {}
        other => {
            return Err(Error::Config(format!(
                "expected header `amplitude`, found {other:?}"
            )))
        }
    }
    let samples = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad amplitude {l:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Signal::new(samples, sample_rate)
}

/// Rows of equal-length vectors as headerless CSV.
pub fn matrix_to_csv<R: AsRef<[f64]>>(rows: &[R]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}
