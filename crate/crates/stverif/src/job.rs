//! Job files: one `key = value` per line, `#` starts a comment line.
//!
//! ```text
//! source = plant.st, util.st
//! entry = Main
//! req.type = assertion
//! req.select = interlock
//! bound = 12
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use stverif_core::requirements::{BackendKind, ReductionSwitches};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` is set twice")]
    Duplicate { line: usize, key: String },
    #[error("missing mandatory key `{0}`")]
    Missing(&'static str),
    #[error("`{key}`: {value:?} is not {expected}")]
    Invalid { key: String, value: String, expected: &'static str },
    #[error("source file {0} does not exist")]
    MissingSource(PathBuf),
    #[error("{0}")]
    Conflict(String),
}

/// What to verify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequirementSpec {
    /// Assertion directives of the program: all of them, or those named.
    Assertions { select: Vec<String> },
    /// A pattern with its placeholder bindings as expression text.
    Pattern { id: String, alpha: Option<String>, beta: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolConfig {
    pub backend: BackendKind,
    /// Executable; looked up in the tool directory and `PATH` when unset
    /// or relative.
    pub path: Option<PathBuf>,
    pub timeout: Duration,
    /// Replaces the default tool arguments when set.
    pub extra_args: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobConfig {
    /// The job file, when loaded from one.
    pub job: Option<PathBuf>,
    pub sources: Vec<PathBuf>,
    pub entry: String,
    pub requirement: RequirementSpec,
    pub reductions: ReductionSwitches,
    pub tool: ToolConfig,
    pub bound: u32,
    pub max_states: u64,
    pub iterative: bool,
    pub max_iters: u32,
    pub output: PathBuf,
    pub formats: Formats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub text: bool,
    pub json: bool,
}

const KEYS: &[&str] = &[
    "source",
    "entry",
    "req.type",
    "req.select",
    "req.pattern",
    "req.alpha",
    "req.beta",
    "reduce.fold",
    "reduce.unreach",
    "reduce.coi",
    "reduce.valueset",
    "backend",
    "backend.path",
    "backend.timeout_s",
    "backend.extra_args",
    "bound",
    "max_states",
    "iterative",
    "iterative.max_iters",
    "output",
    "report.formats",
];

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Read and check a job file. Relative paths are resolved against the
/// job file's directory.
pub fn load_job(path: &Path) -> Result<JobConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut cfg = parse_job(&text, base)?;
    cfg.job = Some(path.to_path_buf());
    Ok(cfg)
}

fn on_off(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(ConfigError::Invalid { key: key.into(), value: v.into(), expected: "on or off" }),
    }
}

fn number<T: std::str::FromStr>(key: &str, v: &str, expected: &'static str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Invalid { key: key.into(), value: v.into(), expected })
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

pub fn parse_backend(v: &str) -> Result<BackendKind, ConfigError> {
    BackendKind::parse(v).ok_or_else(|| ConfigError::Invalid {
        key: "backend".into(),
        value: v.into(),
        expected: "one of engine, nusmv, cbmc",
    })
}

/// Parse job text; `base` anchors relative paths.
pub fn parse_job(text: &str, base: &Path) -> Result<JobConfig, ConfigError> {
    let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey { line: i + 1, key: k.into() });
        }
        if kv.insert(k, v).is_some() {
            return Err(ConfigError::Duplicate { line: i + 1, key: k.into() });
        }
    }
    let get = |k: &str| kv.get(k).copied().filter(|v| !v.is_empty());

    let sources: Vec<PathBuf> =
        list(get("source").ok_or(ConfigError::Missing("source"))?).into_iter().map(|s| base.join(s)).collect();
    for s in &sources {
        if !s.is_file() {
            return Err(ConfigError::MissingSource(s.clone()));
        }
    }
    let entry = get("entry").ok_or(ConfigError::Missing("entry"))?.to_string();
    let pattern_keys = ["req.pattern", "req.alpha", "req.beta"];
    let requirement = match get("req.type").ok_or(ConfigError::Missing("req.type"))? {
        "assertion" => {
            if let Some(k) = pattern_keys.iter().find(|k| get(k).is_some()) {
                return Err(ConfigError::Conflict(format!("`{k}` needs req.type = pattern")));
            }
            RequirementSpec::Assertions { select: get("req.select").map(list).unwrap_or_default() }
        }
        "pattern" => {
            if get("req.select").is_some() {
                return Err(ConfigError::Conflict("`req.select` needs req.type = assertion".into()));
            }
            RequirementSpec::Pattern {
                id: get("req.pattern").ok_or(ConfigError::Missing("req.pattern"))?.to_string(),
                alpha: get("req.alpha").map(String::from),
                beta: get("req.beta").map(String::from),
            }
        }
        v => {
            return Err(ConfigError::Invalid {
                key: "req.type".into(),
                value: v.into(),
                expected: "assertion or pattern",
            })
        }
    };

    let mut reductions = ReductionSwitches::default();
    for (key, slot) in [
        ("reduce.fold", &mut reductions.fold),
        ("reduce.unreach", &mut reductions.unreach),
        ("reduce.coi", &mut reductions.coi),
        ("reduce.valueset", &mut reductions.valueset),
    ] {
        if let Some(v) = get(key) {
            *slot = on_off(key, v)?;
        }
    }

    let backend = get("backend").map(parse_backend).transpose()?.unwrap_or(BackendKind::Engine);
    let timeout = match get("backend.timeout_s") {
        Some(v) => Duration::from_secs_f64(
            number::<f64>("backend.timeout_s", v, "a number of seconds")
                .ok()
                .filter(|s| s.is_finite() && *s > 0.0)
                .ok_or_else(|| ConfigError::Invalid {
                    key: "backend.timeout_s".into(),
                    value: v.into(),
                    expected: "a positive number of seconds",
                })?,
        ),
        None => DEFAULT_TIMEOUT,
    };
    let tool = ToolConfig {
        backend,
        path: get("backend.path").map(PathBuf::from),
        timeout,
        extra_args: kv.get("backend.extra_args").map(|v| v.split_whitespace().map(String::from).collect()),
    };

    let bound = get("bound").map(|v| number::<u32>("bound", v, "a cycle count")).transpose()?.unwrap_or(10);
    if bound == 0 {
        return Err(ConfigError::Invalid { key: "bound".into(), value: "0".into(), expected: "at least 1" });
    }
    let max_states =
        get("max_states").map(|v| number::<u64>("max_states", v, "a state count")).transpose()?.unwrap_or(10_000_000);
    let iterative = get("iterative").map(|v| on_off("iterative", v)).transpose()?.unwrap_or(false);
    let max_iters = get("iterative.max_iters")
        .map(|v| number::<u32>("iterative.max_iters", v, "an iteration count"))
        .transpose()?
        .unwrap_or(64);
    if iterative && backend != BackendKind::Engine {
        return Err(ConfigError::Conflict("iterative verification runs on backend = engine only".into()));
    }
    let output = match get("output") {
        Some(o) => base.join(o),
        None if base.as_os_str().is_empty() => PathBuf::from("."),
        None => base.to_path_buf(),
    };
    let formats = match get("report.formats") {
        None => Formats { text: true, json: true },
        Some(v) => {
            let mut f = Formats { text: false, json: false };
            for x in list(v) {
                match x.as_str() {
                    "txt" | "text" => f.text = true,
                    "json" => f.json = true,
                    _ => {
                        return Err(ConfigError::Invalid {
                            key: "report.formats".into(),
                            value: v.into(),
                            expected: "a list of txt, json",
                        })
                    }
                }
            }
            f
        }
    };
    Ok(JobConfig {
        job: None,
        sources,
        entry,
        requirement,
        reductions,
        tool,
        bound,
        max_states,
        iterative,
        max_iters,
        output,
        formats,
    })
}
