use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use compactflow::bench::{
    cmd_check_weights, cmd_eval, cmd_infer, cmd_profile, cmd_report, render_table, to_json, write_report,
    BenchConfig, EvalOptions, InferOptions, Layout, ProfileOptions, ReportOptions, Resolution, WallClock,
};
use compactflow::model::Variant;
use compactflow::Result;

#[derive(Parser)]
#[command(name = "cfnet", version, about = "Optical flow inference and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// pwcnet_plus, pwcnet_small or compactflownet
    #[arg(long)]
    model: Option<Variant>,
    /// CFW1 weight file; seeded initialisation when omitted
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; the JSON report is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML config; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Time forward passes on synthetic frames
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<Resolution>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Estimate flow between two images
    Infer {
        #[command(flatten)]
        common: Common,
        image1: PathBuf,
        image2: PathBuf,
    },
    /// Score a dataset directory
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        layout: Option<Layout>,
        dataset: Option<PathBuf>,
    },
    /// Parameter, FLOP, memory and latency table
    Report {
        #[command(flatten)]
        common: Common,
        /// Repeatable; all variants when omitted
        #[arg(long = "models", value_delimiter = ',')]
        models: Vec<Variant>,
        /// Repeatable; 512x512, 436x1024 and 1080x1920 when omitted
        #[arg(long, value_delimiter = ',')]
        resolution: Vec<Resolution>,
        #[arg(long)]
        warmup: Option<usize>,
        /// Timed runs per cell; 0 skips latency
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Validate a CFW1 file against a model
    ConvertWeightsCheck {
        #[command(flatten)]
        common: Common,
    },
}

fn config(common: &Common) -> Result<BenchConfig> {
    let mut cfg = match &common.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    if let Some(m) = common.model {
        cfg.model = m;
    }
    if let Some(w) = &common.weights {
        cfg.weights = Some(w.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn emit<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(o) => {
            let p = write_report(o, value)?;
            println!("report: {}", p.display());
        }
        None => print!("{}", to_json(value)),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Profile {
            common,
            resolution,
            warmup,
            runs,
        } => {
            let cfg = config(&common)?;
            let opts = ProfileOptions {
                model: cfg.model,
                overrides: cfg.overrides.clone(),
                resolution: resolution.unwrap_or(cfg.resolution),
                warmup: warmup.unwrap_or(cfg.warmup),
                runs: runs.unwrap_or(cfg.runs),
                seed: cfg.seed,
                memory_limit_bytes: cfg.memory_limit_bytes,
            };
            let r = cmd_profile(&opts, &mut WallClock)?;
            if let Some(l) = &r.latency {
                eprintln!(
                    "{} {}: mean {:.2} ms, std {:.2}, p50 {:.2}, p95 {:.2} over {} runs after {} warm-up",
                    r.model, r.resolution, l.mean_ms, l.std_ms, l.p50_ms, l.p95_ms, l.runs, l.warmup
                );
            }
            emit(cfg.out.as_deref(), &r)
        }
        Command::Infer { common, image1, image2 } => {
            let cfg = config(&common)?;
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("flow.flo"));
            let opts = InferOptions {
                model: cfg.model,
                overrides: cfg.overrides.clone(),
                weights: cfg.weights.clone(),
                seed: cfg.seed,
                image1,
                image2,
                out,
                memory_limit_bytes: cfg.memory_limit_bytes,
            };
            let r = cmd_infer(&opts)?;
            println!(
                "{}x{} flow written to {} (mean magnitude {:.3} px)",
                r.resolution.height,
                r.resolution.width,
                opts.out.display(),
                r.mean_magnitude
            );
            Ok(())
        }
        Command::Eval {
            common,
            layout,
            dataset,
        } => {
            let cfg = config(&common)?;
            let dir = dataset.or(cfg.dataset.dir.clone()).ok_or_else(|| {
                compactflow::Error::Config("eval needs a dataset directory".into())
            })?;
            let opts = EvalOptions {
                model: cfg.model,
                overrides: cfg.overrides.clone(),
                weights: cfg.weights.clone(),
                seed: cfg.seed,
                dir,
                layout: layout.unwrap_or(cfg.dataset.layout),
                pass: cfg.dataset.pass.clone(),
                memory_limit_bytes: cfg.memory_limit_bytes,
            };
            let r = cmd_eval(&opts)?;
            match r.fl_all {
                Some(fl) => eprintln!("{} pairs: AEPE {:.4}, Fl-all {:.4}", r.frames.len(), r.aepe, fl),
                None => eprintln!("{} pairs: AEPE {:.4}", r.frames.len(), r.aepe),
            }
            emit(cfg.out.as_deref(), &r)
        }
        Command::Report {
            common,
            models,
            resolution,
            warmup,
            runs,
        } => {
            let cfg = config(&common)?;
            let opts = ReportOptions {
                models: if models.is_empty() { cfg.report.models.clone() } else { models },
                resolutions: if resolution.is_empty() {
                    cfg.report.resolutions.clone()
                } else {
                    resolution
                },
                overrides: cfg.overrides.clone(),
                runs: runs.unwrap_or(cfg.report.runs),
                warmup: warmup.unwrap_or(cfg.report.warmup),
                seed: cfg.seed,
                memory_limit_bytes: cfg.memory_limit_bytes,
            };
            let doc = cmd_report(&opts, &mut WallClock)?;
            print!("{}", render_table(&doc));
            if let Some(out) = cfg.out.as_deref() {
                let p = write_report(out, &doc)?;
                println!("report: {}", p.display());
            }
            Ok(())
        }
        Command::ConvertWeightsCheck { common } => {
            let cfg = config(&common)?;
            let path = cfg.weights.clone().ok_or_else(|| {
                compactflow::Error::Config("convert-weights-check needs --weights".into())
            })?;
            let r = cmd_check_weights(cfg.model, &cfg.overrides, &path)?;
            eprintln!(
                "{}: {} tensors, {} scalars, fingerprint {}",
                path.display(),
                r.tensors,
                r.scalars,
                r.fingerprint
            );
            emit(cfg.out.as_deref(), &r)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
