//! Running NuSMV and CBMC on emitted models.

use std::env;
use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use stverif_core::backends::{parse_tool_output, EmittedModel, ToolRun};
use stverif_core::engine::{Outcome, Verdict};
use stverif_core::requirements::BackendKind;
use wait_timeout::ChildExt;

use crate::job::ToolConfig;

/// Fallback directory for tool executables.
pub const TOOL_DIR_VAR: &str = "STVERIF_TOOL_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("{tool} executable not found: {}", path.display())]
    Missing { tool: &'static str, path: PathBuf },
    #[error("cannot run {}: {source}", path.display())]
    Launch { path: PathBuf, source: std::io::Error },
    #[error("i/o error around the tool run: {0}")]
    Io(#[from] std::io::Error),
    #[error("{} exited with status {code:?} and unrecognized output:\n{output}", command.join(" "))]
    Failed { command: Vec<String>, code: Option<i32>, output: String },
}

pub fn default_executable(kind: BackendKind) -> &'static str {
    match kind {
        BackendKind::NuSmv => "NuSMV",
        BackendKind::Cbmc => "cbmc",
        BackendKind::Engine => "",
    }
}

/// Arguments placed before the model file when the job sets none.
pub fn default_args(kind: BackendKind, bound: u32) -> Vec<String> {
    match kind {
        // NuSMV prints the counterexample of a false INVARSPEC by default
        BackendKind::NuSmv | BackendKind::Engine => Vec::new(),
        // one unwinding per scan cycle plus the initial entry into the loop
        BackendKind::Cbmc => {
            vec!["--partial-loops".into(), "--unwind".into(), (bound + 1).to_string(), "--trace".into()]
        }
    }
}

fn is_executable(p: &Path) -> bool {
    p.is_file()
}

/// Locate the executable: the configured path (relative ones also under
/// the tool directory), else the default name in the tool directory and
/// on `PATH`.
pub fn resolve_tool(kind: BackendKind, path: Option<&Path>, tool_dir: Option<&Path>) -> Result<PathBuf, ToolError> {
    let tool = default_executable(kind);
    let missing = |p: PathBuf| ToolError::Missing { tool, path: p };
    match path {
        Some(p) if p.is_absolute() || p.components().count() > 1 => {
            if is_executable(p) {
                return Ok(p.to_path_buf());
            }
            if let Some(d) = tool_dir.filter(|_| p.is_relative()) {
                let q = d.join(p);
                if is_executable(&q) {
                    return Ok(q);
                }
            }
            Err(missing(p.to_path_buf()))
        }
        _ => {
            let name = path.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(tool));
            let mut dirs: Vec<PathBuf> = tool_dir.map(|d| vec![d.to_path_buf(), d.join("bin")]).unwrap_or_default();
            if let Some(p) = env::var_os("PATH") {
                dirs.extend(env::split_paths(&p));
            }
            dirs.iter().map(|d| d.join(&name)).find(|c| is_executable(c)).ok_or_else(|| missing(name))
        }
    }
}

/// Tool directory from the environment.
pub fn tool_dir_from_env() -> Option<PathBuf> {
    env::var_os(TOOL_DIR_VAR).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn spawn_and_wait(command: &[String], timeout: Duration, dir: &Path) -> Result<ToolRun, ToolError> {
    let out_path = dir.join("stdout.txt");
    let err_path = dir.join("stderr.txt");
    let start = Instant::now();
    let mut child = Command::new(&command[0])
        .args(&command[1..])
        .current_dir(dir)
        .stdin(Stdio::null())
        .stdout(File::create(&out_path)?)
        .stderr(File::create(&err_path)?)
        .spawn()
        .map_err(|source| ToolError::Launch { path: command[0].clone().into(), source })?;
    let (exit_code, timed_out) = match child.wait_timeout(timeout)? {
        Some(status) => (status.code(), false),
        None => {
            let _ = child.kill();
            let _ = child.wait();
            (None, true)
        }
    };
    let wall_ms = start.elapsed().as_millis() as u64;
    let mut output = String::new();
    for p in [&out_path, &err_path] {
        let mut bytes = Vec::new();
        File::open(p)?.read_to_end(&mut bytes)?;
        output.push_str(&String::from_utf8_lossy(&bytes));
    }
    Ok(ToolRun { command: command.to_vec(), exit_code, output, wall_ms, timed_out })
}

/// Write `model` to a temporary directory and run the configured tool on
/// it, killing it after the timeout.
pub fn run_external(
    cfg: &ToolConfig,
    model: &EmittedModel,
    bound: u32,
    tool_dir: Option<&Path>,
) -> Result<ToolRun, ToolError> {
    let exe = resolve_tool(cfg.backend, cfg.path.as_deref(), tool_dir)?;
    let dir = tempfile::tempdir()?;
    let file = dir.path().join(format!("model.{}", model.format.extension()));
    fs::write(&file, &model.text)?;
    let mut command = vec![exe.to_string_lossy().into_owned()];
    command.extend(cfg.extra_args.clone().unwrap_or_else(|| default_args(cfg.backend, bound)));
    command.push(file.to_string_lossy().into_owned());
    spawn_and_wait(&command, cfg.timeout, dir.path())
}

/// Run the tool and interpret its output. A run that exits with an error
/// status and prints nothing recognizable is a tool error.
pub fn check_external(
    cfg: &ToolConfig,
    model: &EmittedModel,
    bound: u32,
    tool_dir: Option<&Path>,
) -> Result<(Verdict, ToolRun), ToolError> {
    let run = run_external(cfg, model, bound, tool_dir)?;
    let v = parse_tool_output(&run, model);
    if let Outcome::Unknown(_) = v.outcome {
        if !run.timed_out && run.exit_code != Some(0) {
            return Err(ToolError::Failed { command: run.command, code: run.exit_code, output: run.output });
        }
    }
    Ok((v, run))
}

/// First output line of `<tool> --version` (NuSMV: of its banner), if the
/// tool answers within a few seconds.
pub fn tool_version(kind: BackendKind, exe: &Path) -> Option<String> {
    let dir = tempfile::tempdir().ok()?;
    let flag = match kind {
        BackendKind::NuSmv => "-h",
        _ => "--version",
    };
    let cmd = vec![exe.to_string_lossy().into_owned(), flag.to_string()];
    let run = spawn_and_wait(&cmd, Duration::from_secs(5), dir.path()).ok()?;
    run.output.lines().map(|l| l.trim().trim_start_matches("***").trim()).find(|l| !l.is_empty()).map(String::from)
}
