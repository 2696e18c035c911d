use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;
use motionscript::pipeline::{corpus_stats, run_pipeline, Captioner};
use motionscript::{MotionFormat, PipelineConfig};

/// Caption motion files with MotionScript.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// TOML configuration file; built-in defaults otherwise.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Base seed for noise, rule draws and template choice.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Disable measurement and velocity edge noise.
    #[arg(long)]
    no_noise: bool,

    #[arg(long, value_name = "K")]
    captions_per_motion: Option<usize>,

    /// Write a `.dump` file next to every caption.
    #[arg(long)]
    emit_intermediate: bool,

    /// Derive rarity from the motion files in this directory.
    #[arg(long, value_name = "DIR")]
    stats_corpus: Option<PathBuf>,

    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_name = "canonical-json|flat-csv")]
    format: Option<MotionFormat>,

    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn configure(args: &Args) -> motionscript::Result<Captioner> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.no_noise {
        config.noise.enabled = false;
    }
    if let Some(k) = args.captions_per_motion {
        config.captions_per_motion = k;
    }
    if args.emit_intermediate {
        config.emit_intermediate = true;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    let mut captioner = Captioner::new(config)?;
    if let Some(dir) = &args.stats_corpus {
        let stats = corpus_stats(dir, captioner.config(), args.format)?;
        captioner = captioner.with_stats(stats);
    }
    Ok(captioner)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let captioner = match configure(&args) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_pipeline(&captioner, &args.inputs, args.format) {
        Ok(report) if report.succeeded() => ExitCode::SUCCESS,
        Ok(report) => {
            for e in &report.errors {
                eprintln!("error: {}", e.message);
            }
            eprintln!(
                "{} of {} inputs failed; see {}",
                report.errors.len(),
                args.inputs.len(),
                captioner.config().output_dir.join("errors.json").display()
            );
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
