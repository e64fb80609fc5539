//! Verification reports: a plain-text document for people and a JSON
//! document for machines, both rendered from one [`Report`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stverif_core::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    /// Job file, if any.
    pub job: Option<String>,
    pub entry: String,
    pub sources: Vec<String>,
    pub requirement: Requirement,
    /// `satisfied`, `violated`, `bound_reached`, `fault`, `unknown`, or
    /// `error` when the job could not be run.
    pub verdict: String,
    /// Why the verdict is unknown, or the error.
    pub message: Option<String>,
    /// Cycles explored completely, or the length of the counterexample.
    pub cycles: u32,
    pub states_explored: u64,
    pub statistics: Statistics,
    pub reductions: Vec<Reduction>,
    pub counterexample: Option<Counterexample>,
    pub localization: Vec<Localized>,
    pub iterations: Vec<Iteration>,
    pub backend: Backend,
    pub duration_ms: u64,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    /// `assertion` or `pattern`.
    pub kind: String,
    pub text: String,
    pub location: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Statistics {
    pub bound: u32,
    pub branching_factor: u64,
    pub cycles_executed: u64,
    pub peak_frontier: u64,
    pub cap_hit: bool,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub stage: String,
    pub ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Size {
    pub locations: usize,
    pub transitions: usize,
    pub variables: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    pub pass: String,
    pub variable: Option<String>,
    pub before: Size,
    pub after: Size,
    pub constants_folded: usize,
    pub assignments_removed: usize,
    pub domains_restricted: usize,
    pub refused: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValue {
    Bool(bool),
    Int(i64),
}

impl From<Value> for CellValue {
    fn from(v: Value) -> Self {
        match v {
            Value::Bool(b) => CellValue::Bool(b),
            Value::Int(i) => CellValue::Int(i),
        }
    }
}

impl std::fmt::Display for CellValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellValue::Bool(true) => f.write_str("TRUE"),
            CellValue::Bool(false) => f.write_str("FALSE"),
            CellValue::Int(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub name: String,
    pub value: CellValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub cycle: usize,
    pub inputs: Vec<Cell>,
    /// End-of-cycle values (at the violation point in the last row).
    pub end: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// `property`, or the runtime fault.
    pub kind: String,
    pub violated_expression: String,
    pub violation_cycle: usize,
    /// `feasible`, or why the trace is spurious.
    pub validation: String,
    pub simulator_inputs: Option<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localized {
    pub file: String,
    pub line: usize,
    pub column: usize,
    /// `assignment` or `guard`.
    pub kind: String,
    pub variable: String,
    pub distance: u32,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Iteration {
    pub iteration: u32,
    pub abstracted: Vec<String>,
    pub verdict: String,
    pub validation: Option<String>,
    pub states_explored: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backend {
    pub name: String,
    pub version: Option<String>,
    pub command: Vec<String>,
    /// Kept model file (`--keep-models`).
    pub model: Option<String>,
}

fn banner(verdict: &str) -> String {
    verdict.replace('_', " ").to_uppercase()
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "==== {} : {} ====", self.name, banner(&self.verdict));
        if let Some(m) = &self.message {
            let _ = writeln!(o, "{m}");
        }
        o.push('\n');
        let mut meta = vec![
            ("Entry", self.entry.clone()),
            ("Sources", self.sources.join(", ")),
            ("Requirement", format!("[{}] {}", self.requirement.kind, self.requirement.text)),
        ];
        if let Some(j) = &self.job {
            meta.insert(0, ("Job", j.clone()));
        }
        if let Some(l) = &self.requirement.location {
            meta.push(("Defined at", l.clone()));
        }
        let mut backend = self.backend.name.clone();
        if let Some(v) = &self.backend.version {
            let _ = write!(backend, " ({v})");
        }
        meta.push(("Backend", backend));
        if !self.backend.command.is_empty() {
            meta.push(("Command", self.backend.command.join(" ")));
        }
        if let Some(m) = &self.backend.model {
            meta.push(("Model", m.clone()));
        }
        meta.push(("Duration", format!("{} ms", self.duration_ms)));
        meta.push(("Timestamp", self.timestamp.clone()));
        for (k, v) in meta {
            let _ = writeln!(o, "{:<12} {v}", format!("{k}:"));
        }

        o.push_str("\nStatistics\n");
        let s = &self.statistics;
        let mut rows = vec![
            ("cycles".to_string(), self.cycles.to_string()),
            ("bound".to_string(), s.bound.to_string()),
            ("states explored".to_string(), self.states_explored.to_string()),
            ("branching factor".to_string(), s.branching_factor.to_string()),
            ("cycles executed".to_string(), s.cycles_executed.to_string()),
            ("peak frontier".to_string(), s.peak_frontier.to_string()),
        ];
        if s.cap_hit {
            rows.push(("state cap".into(), "reached".into()));
        }
        for st in &s.stages {
            rows.push((format!("time: {}", st.stage), format!("{} ms", st.ms)));
        }
        for (k, v) in rows {
            let _ = writeln!(o, "  {k:<22} {v:>12}");
        }

        if !self.reductions.is_empty() {
            o.push_str("\nReductions\n");
            for r in &self.reductions {
                let what = match &r.variable {
                    Some(v) => format!("{} ({v})", r.pass),
                    None => r.pass.clone(),
                };
                if r.refused {
                    let _ = writeln!(o, "  {what:<22} refused: {}", r.reason.as_deref().unwrap_or(""));
                    continue;
                }
                let _ = writeln!(
                    o,
                    "  {what:<22} locations {:>4} -> {:<4} transitions {:>4} -> {:<4} variables {:>3} -> {}",
                    r.before.locations,
                    r.after.locations,
                    r.before.transitions,
                    r.after.transitions,
                    r.before.variables,
                    r.after.variables
                );
            }
        }

        if !self.iterations.is_empty() {
            o.push_str("\nIterations\n");
            for it in &self.iterations {
                let abs = if it.abstracted.is_empty() { "-".to_string() } else { it.abstracted.join(", ") };
                let _ = writeln!(
                    o,
                    "  {:>3}. {:<14} {:<30} abstracted: {abs}",
                    it.iteration,
                    banner(&it.verdict),
                    it.validation.as_deref().unwrap_or("")
                );
            }
        }

        if let Some(c) = &self.counterexample {
            let _ =
                writeln!(o, "\nCounterexample ({}, cycle {}: {})", c.kind, c.violation_cycle, c.violated_expression);
            let _ = writeln!(o, "Validation: {}", c.validation);
            o.push_str(&table(&c.rows));
            if let Some(p) = &c.simulator_inputs {
                let _ = writeln!(o, "Simulator inputs: {p}");
            }
        }

        if !self.localization.is_empty() {
            o.push_str("\nLocalization (most relevant first)\n");
            for (i, l) in self.localization.iter().enumerate() {
                let _ = writeln!(
                    o,
                    "  {:>2}. {}:{}:{}  {:<40} {} {} (distance {}, score {:.2})",
                    i + 1,
                    l.file,
                    l.line,
                    l.column,
                    l.text,
                    l.kind,
                    l.variable,
                    l.distance,
                    l.score
                );
            }
        }
        o
    }
}

/// Per-cycle table: inputs, then end-of-cycle values.
fn table(rows: &[Row]) -> String {
    let Some(first) = rows.first() else { return String::new() };
    let mut head = vec!["cycle".to_string()];
    head.extend(first.inputs.iter().map(|c| c.name.clone()));
    let n_in = head.len();
    head.extend(first.end.iter().map(|c| c.name.clone()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.cycle.to_string()];
            v.extend(r.inputs.iter().map(|c| c.value.to_string()));
            v.extend(r.end.iter().map(|c| c.value.to_string()));
            v
        })
        .collect();
    let widths: Vec<usize> = (0..head.len())
        .map(|i| body.iter().map(|r| r.get(i).map_or(0, String::len)).chain([head[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::from(" ");
        for (i, c) in cells.iter().enumerate() {
            s.push_str(if i == n_in { " || " } else { " " });
            let _ = write!(s, "{c:>w$}", w = widths[i]);
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = String::from("  inputs | end-of-cycle values\n");
    out.push_str(&line(&head));
    for r in &body {
        out.push_str(&line(r));
    }
    out
}

#[derive(Debug, thiserror::Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct WriteError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

pub fn write_file(path: &Path, text: &str) -> Result<(), WriteError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| WriteError { path: dir.into(), source })?;
    }
    fs::write(path, text).map_err(|source| WriteError { path: path.into(), source })
}
