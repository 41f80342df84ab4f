//! Argument parsing and dispatch for the `sslr` binary.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
//! Failures print one line to stderr:
//! `error: kind=<kind> message=<json string>`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{Mode, RawConfig, RunConfig};
use crate::error::{Error, Result};
use crate::harness::{cmd_ablate, cmd_eval, cmd_matrix, cmd_run, cmd_split, cmd_synth, EvalPart, SynthArgs};

#[derive(Parser, Debug)]
#[command(name = "sslr", version, about = "Pseudo-labeling experiments for pose-based sign recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// Run config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file; same as `--set data.path=PATH`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Override one config value, e.g. `--set train.epochs=20`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for both the split and training.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic pose dataset.
    Synth {
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        per_class: usize,
        #[arg(long)]
        frames: usize,
        /// Per-sample jitter; 0.11 gives roughly 95% 1-NN accuracy at
        /// 5 classes × 30 samples.
        #[arg(long, default_value_t = 0.11)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the labeled/unlabeled/validation/test parts of a dataset.
    Split(ConfigArgs),
    /// Supervised baseline on the labeled part.
    Train(ConfigArgs),
    /// Pseudo-labeling run.
    Ssl(ConfigArgs),
    /// Every (class count × fraction × seed × mode) cell, then the tables.
    Matrix {
        #[command(flatten)]
        args: ConfigArgs,
        /// Stop after this many newly run cells; rerun to resume.
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// The five normalization/augmentation toggle rows.
    Ablate(ConfigArgs),
    /// Score a checkpoint on one part of the configured split.
    Eval {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = EvalPart::Test)]
        part: EvalPart,
    },
}

fn resolve(args: &ConfigArgs, command: &str, require_config: bool) -> Result<(RunConfig, PathBuf)> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::parse_file(path)?,
        None if require_config => {
            return Err(Error::Usage(format!("{command} requires --config PATH")));
        }
        None => RawConfig::default(),
    };
    for o in &args.overrides {
        raw.apply_override(o)?;
    }
    let mut cfg = raw.resolve()?;
    if let Some(d) = &args.data {
        cfg.data.path = Some(d.clone());
    }
    if let Some(s) = args.seed {
        cfg.set_seed(s);
    }
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    let out = cfg.output.dir.clone();
    Ok((cfg, out))
}

fn fmt_acc(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "NA".into())
}

fn run_command(command: Command) -> Result<String> {
    match command {
        Command::Synth {
            classes,
            per_class,
            frames,
            sigma,
            seed,
            out,
        } => {
            let n = cmd_synth(&SynthArgs {
                classes,
                per_class,
                frames,
                sigma,
                seed,
                out: out.clone(),
            })?;
            Ok(format!("synth: seed={seed} samples={n} path={}", out.display()))
        }
        Command::Split(args) => {
            let (cfg, out) = resolve(&args, "split", false)?;
            let s = cmd_split(&cfg, &out)?;
            let c = &s["counts"];
            Ok(format!(
                "split: labeled={} unlabeled={} validation={} test={} out={}",
                c["labeled"],
                c["unlabeled"],
                c["validation"],
                c["test"],
                out.display()
            ))
        }
        Command::Train(args) => run_mode(&args, Mode::Fsl, "train"),
        Command::Ssl(args) => run_mode(&args, Mode::Ssl, "ssl"),
        Command::Matrix { args, max_cells } => {
            let (cfg, out) = resolve(&args, "matrix", true)?;
            let s = cmd_matrix(&cfg, &out, max_cells)?;
            if !s.failed.is_empty() {
                return Err(Error::Dataset(format!(
                    "{} of {} matrix cells failed; first: {}",
                    s.failed.len(),
                    s.cells,
                    s.failed[0].1
                )));
            }
            Ok(format!(
                "matrix: cells={} ran={} reused={} pending={} out={}",
                s.cells,
                s.ran,
                s.reused,
                s.pending,
                out.display()
            ))
        }
        Command::Ablate(args) => {
            let (cfg, out) = resolve(&args, "ablate", true)?;
            cmd_ablate(&cfg, &out)?;
            Ok(format!("ablate: rows=5 out={}", out.display()))
        }
        Command::Eval { args, checkpoint, part } => {
            let (cfg, out) = resolve(&args, "eval", false)?;
            let dir = args.out.as_ref().map(|_| out.as_path());
            let r = cmd_eval(&cfg, &checkpoint, part, dir)?;
            Ok(format!(
                "eval: samples={} accuracy={}",
                r["samples"],
                fmt_acc(r["accuracy"].as_f64())
            ))
        }
    }
}

fn run_mode(args: &ConfigArgs, mode: Mode, name: &str) -> Result<String> {
    let (cfg, out) = resolve(args, name, true)?;
    let r = cmd_run(&cfg, mode, &out)?;
    Ok(format!(
        "{name}: val_accuracy={} test_accuracy={} degenerate={} out={}",
        fmt_acc(r["val_accuracy"].as_f64()),
        fmt_acc(r["test_accuracy"].as_f64()),
        r["degenerate"],
        Path::new(&out).display()
    ))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Config(_) => 2,
        _ => 1,
    }
}

fn report_error(kind: &str, message: &str) {
    let one_line = message.lines().map(str::trim).collect::<Vec<_>>().join(" ");
    let quoted = serde_json::to_string(&one_line).expect("string serializes");
    eprintln!("error: kind={kind} message={quoted}");
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SSLR_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            report_error("usage", first);
            return 2;
        }
    };
    match run_command(cli.command) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            exit_code(&e)
        }
    }
}
