use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use blindinv::channel::{make_saturated_testset, ChannelConfig};
use blindinv::experiment::{report_render, run_experiment, synth_corpus, ExperimentConfig, ExperimentReport, ReportFormat};
use blindinv::inversion::{estimate_inverse, InversionConfig};
use blindinv::io::{read_wav, write_text, write_wav};
use blindinv::recognition::{enroll, identify, PipelineConfig, SpeakerModelSet};
use blindinv::signal::{normalize_peak, Signal};

/// Blind compensation of saturating channels and covariance-model speaker
/// identification.
#[derive(Parser)]
#[command(name = "blindinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic corpus as WAV files under OUT/mic<m>/{train,test}.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Peak-normalize a recording and pass it through tanh(k x), or through a
    /// full channel given as JSON.
    Saturate {
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "k")]
        channel: Option<PathBuf>,
    },
    /// Blindly estimate an inverse for one recording and apply it.
    Invert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dump_model: Option<PathBuf>,
        #[arg(long)]
        dump_trace: Option<PathBuf>,
        /// Inversion settings as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Apply only the memoryless map, not the filter.
        #[arg(long)]
        map_only: bool,
    },
    /// Build speaker models from a directory of WAVs named <speaker>.wav.
    Enroll {
        #[arg(long)]
        train_dir: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Front-end settings as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Identify the speaker of one recording; prints the decision as JSON.
    Identify {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the saturation/compensation study and write its report as JSON.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a saved report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "text-table")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(blindinv::Error::from)?)
}

fn read_json_or_default<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    path.map(|p| read_json(p)).unwrap_or_else(|| Ok(T::default()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(blindinv::Error::from)?;
    write_text(path, &(text + "\n"))?;
    Ok(())
}

fn synth(config: Option<&PathBuf>, out: &Path) -> Result<()> {
    let cfg: ExperimentConfig = read_json_or_default(config)?;
    let corpus = synth_corpus(&cfg)?;
    for mc in &corpus.mics {
        let base = out.join(format!("mic{}", mc.mic));
        fs::create_dir_all(base.join("train"))?;
        fs::create_dir_all(base.join("test"))?;
        for (id, s) in &mc.training {
            write_wav(base.join("train").join(format!("{id}.wav")), s)?;
        }
        for t in &mc.tests {
            write_wav(base.join("test").join(format!("{}.wav", t.id)), &t.signal)?;
        }
    }
    Ok(())
}

fn saturate(k: f64, input: &Path, out: &Path, channel: Option<&PathBuf>) -> Result<()> {
    let x = read_wav(input)?;
    let y = match channel {
        Some(p) => {
            let ch: ChannelConfig = read_json(p)?;
            ch.apply(&normalize_peak(&x)?)?
        }
        None => make_saturated_testset(&[x], k)?.remove(0),
    };
    write_wav(out, &y)?;
    Ok(())
}

fn invert(
    input: &Path,
    out: &Path,
    dump_model: Option<&PathBuf>,
    dump_trace: Option<&PathBuf>,
    config: Option<&PathBuf>,
    map_only: bool,
) -> Result<()> {
    let cfg: InversionConfig = read_json_or_default(config)?;
    let e = read_wav(input)?;
    let (inverse, trace) = estimate_inverse(&e, &cfg)?;
    let y = if map_only { inverse.linearize(&e)? } else { inverse.apply(&e)? };
    write_wav(out, &normalize_peak(&y)?)?;
    if let Some(p) = dump_model {
        write_json(p, &inverse)?;
    }
    if let Some(p) = dump_trace {
        write_text(p, &trace.to_csv())?;
    }
    eprintln!(
        "{} iterations, cost {:.6} -> {:.6} ({:?})",
        trace.iterations(),
        trace.cost_per_iteration[0],
        trace.final_cost,
        trace.terminated_by
    );
    Ok(())
}

fn enroll_dir(train_dir: &Path, models: &Path, config: Option<&PathBuf>) -> Result<()> {
    let cfg: PipelineConfig = read_json_or_default(config)?;
    let mut training: BTreeMap<String, Signal> = BTreeMap::new();
    for entry in fs::read_dir(train_dir).with_context(|| format!("listing {}", train_dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("wav") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        training.insert(id.to_string(), read_wav(&path)?);
    }
    if training.is_empty() {
        bail!("no .wav files in {}", train_dir.display());
    }
    write_json(models, &enroll(&training, &cfg)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { config, out } => synth(config.as_ref(), &out),
        Command::Saturate { k, input, out, channel } => saturate(k, &input, &out, channel.as_ref()),
        Command::Invert {
            input,
            out,
            dump_model,
            dump_trace,
            config,
            map_only,
        } => invert(&input, &out, dump_model.as_ref(), dump_trace.as_ref(), config.as_ref(), map_only),
        Command::Enroll {
            train_dir,
            models,
            config,
        } => enroll_dir(&train_dir, &models, config.as_ref()),
        Command::Identify { models, test, config } => {
            let cfg: PipelineConfig = read_json_or_default(config.as_ref())?;
            let set: SpeakerModelSet = read_json(&models)?;
            let id = identify(&read_wav(&test)?, &set, &cfg)?;
            println!("{}", serde_json::to_string(&id)?);
            Ok(())
        }
        Command::Experiment { config, out } => {
            let cfg: ExperimentConfig = read_json_or_default(config.as_ref())?;
            let report = run_experiment(&cfg)?;
            write_text(&out, &report_render(&report, ReportFormat::Json)?)?;
            Ok(())
        }
        Command::Report { input, format, out } => {
            let report: ExperimentReport = read_json(&input)?;
            let text = report_render(&report, format.parse()?)?;
            match out {
                Some(p) => write_text(&p, &text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = err
                .chain()
                .find_map(|e| e.downcast_ref::<blindinv::Error>())
                .map_or("cli", blindinv::Error::kind);
            let record = serde_json::json!({
                "error": { "kind": kind, "message": format!("{err:#}") }
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
