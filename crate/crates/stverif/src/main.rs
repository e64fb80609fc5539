use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stverif::job::{load_job, parse_backend, ConfigError};
use stverif::pipeline::{run_job, RunOptions, EXIT_ERROR};
use stverif::tools::tool_dir_from_env;
use stverif_core::requirements::BackendKind;

/// Verify the requirements of a PLC Structured Text program.
///
/// Exit status: 0 all satisfied, 1 a violation or runtime fault, 2 a
/// bound reached or unknown result, 3 a configuration or tool error.
#[derive(Parser, Debug)]
#[command(name = "verify", version)]
struct Args {
    /// Job file (`key = value` lines).
    job: PathBuf,
    /// Directory for reports (overrides `output`).
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// engine, nusmv or cbmc (overrides `backend`).
    #[arg(long, value_name = "NAME")]
    backend: Option<String>,
    /// Number of scan cycles to explore (overrides `bound`).
    #[arg(long, value_name = "K")]
    bound: Option<u32>,
    /// Keep the model handed to an external backend next to the reports.
    #[arg(long)]
    keep_models: bool,
}

fn configure(args: &Args) -> Result<stverif::JobConfig, ConfigError> {
    let mut cfg = load_job(&args.job)?;
    if let Some(o) = &args.output {
        cfg.output = o.clone();
    }
    if let Some(b) = &args.backend {
        cfg.tool.backend = parse_backend(b)?;
        if cfg.iterative && cfg.tool.backend != BackendKind::Engine {
            return Err(ConfigError::Conflict("iterative verification runs on backend = engine only".into()));
        }
    }
    if let Some(k) = args.bound {
        if k == 0 {
            return Err(ConfigError::Invalid { key: "--bound".into(), value: "0".into(), expected: "at least 1" });
        }
        cfg.bound = k;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match configure(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("verify: {}: {e}", args.job.display());
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let opts = RunOptions { keep_models: args.keep_models, tool_dir: tool_dir_from_env() };
    let outcome = run_job(&cfg, &opts);
    for r in &outcome.reports {
        let verdict = r.verdict.replace('_', " ").to_uppercase();
        match &r.message {
            Some(m) if r.verdict == "error" => println!("{}: {verdict}: {m}", r.name),
            _ => println!("{}: {verdict} ({} cycles, {} states)", r.name, r.cycles, r.states_explored),
        }
    }
    for p in &outcome.written {
        println!("  wrote {}", p.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
