//! `expctl`: run reproducible probe-evasion experiments from a config file.
//!
//! Exit codes: 0 success, 2 config error, 3 runtime error, 4 acceptance
//! check failure. On any failure a machine-readable error record is printed
//! to stderr as a single JSON line, and written to `error.json` in the
//! output directory when one is known.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use probelab_cli::config::{ExperimentConfig, ExperimentKind};
use probelab_cli::runner::{execute, RunError};

/// Environment variable that overrides the config's output directory.
const OUT_DIR_ENV: &str = "EXPCTL_OUT";

#[derive(Parser)]
#[command(
    name = "expctl",
    version,
    about = "Configuration-driven experiments: trigger-complexity sweeps, organism probes, distinguisher trials, replay checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides EXPCTL_OUT and the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override; becomes part of the run identity.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count. Results are identical for any value.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run whatever experiment the config names.
    Run(RunArgs),
    /// Run a trigger-complexity sweep config.
    Sweep(RunArgs),
    /// Run an organism layer-scan config.
    Probe(RunArgs),
    /// Run a paired distinguisher-trials config.
    Distinguish(RunArgs),
    /// Run a record/replay check config.
    Replay(RunArgs),
    /// Parse and validate a config, printing its content hash.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn emit_error(err: &RunError, out_dir: Option<&Path>) {
    let record = serde_json::json!({
        "error": {
            "code": err.exit_code(),
            "kind": err.kind(),
            "message": err.to_string(),
        }
    });
    eprintln!("{record}");
    if let Some(dir) = out_dir {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(
                dir.join("error.json"),
                serde_json::to_vec_pretty(&record).unwrap_or_default(),
            );
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse_toml(&text).map_err(|e| RunError::Config(e.0))?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

/// Output directory resolution order: --out flag, EXPCTL_OUT, config.
fn resolve_out_dir(
    flag: Option<PathBuf>,
    cfg: &ExperimentConfig,
) -> Result<(PathBuf, &'static str), RunError> {
    if let Some(dir) = flag {
        return Ok((dir, "flag"));
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            return Ok((PathBuf::from(dir), "env"));
        }
    }
    if let Some(dir) = &cfg.out_dir {
        return Ok((PathBuf::from(dir), "config"));
    }
    Err(RunError::Config(format!(
        "no output directory: pass --out, set {OUT_DIR_ENV}, or set out_dir in the config"
    )))
}

fn run_verb(args: RunArgs, expected: Option<ExperimentKind>) -> ExitCode {
    let cfg = match load_config(&args.config, args.seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            emit_error(&e, None);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(expected) = expected {
        if cfg.kind != expected {
            let e = RunError::Config(format!(
                "this verb runs {} configs, but the config kind is {}",
                expected.name(),
                cfg.kind.name()
            ));
            emit_error(&e, None);
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    let (out_dir, out_dir_source) = match resolve_out_dir(args.out, &cfg) {
        Ok(v) => v,
        Err(e) => {
            emit_error(&e, None);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(&cfg, &out_dir, out_dir_source, args.threads) {
        Ok(manifest) => {
            println!(
                "ok: {} run {} -> {} ({} files, {:.2}s)",
                manifest.kind,
                manifest.config_hash,
                out_dir.display(),
                manifest.files.len(),
                manifest.wall_secs
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            emit_error(&e, Some(&out_dir));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run(args) => run_verb(args, None),
        Cmd::Sweep(args) => run_verb(args, Some(ExperimentKind::ComplexitySweep)),
        Cmd::Probe(args) => run_verb(args, Some(ExperimentKind::OrganismProbe)),
        Cmd::Distinguish(args) => run_verb(args, Some(ExperimentKind::DistinguisherTrials)),
        Cmd::Replay(args) => run_verb(args, Some(ExperimentKind::ReplayCheck)),
        Cmd::ValidateConfig { config } => match load_config(&config, None) {
            Ok(cfg) => {
                println!("ok: kind={} hash={}", cfg.kind.name(), cfg.content_hash());
                ExitCode::SUCCESS
            }
            Err(e) => {
                emit_error(&e, None);
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
