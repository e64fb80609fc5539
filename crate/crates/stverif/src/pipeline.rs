//! Running a job: parse, build, requirements, reductions, check,
//! counterexample analysis, reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use stverif_core::backends::{emit_c, emit_smv, EmittedModel};
use stverif_core::cex::{
    emit_simulator_inputs, localize, replay_concrete, validate, EntryKind, Trace, ValidationResult, ViolationKind,
};
use stverif_core::cfa::{build_cfa, lower_expr, CfaNetwork};
use stverif_core::engine::{check, EngineConfig, Outcome, Stats, Verdict, VerdictKind};
use stverif_core::iterative::iterative_verify_with;
use stverif_core::reductions::{reduce, ReductionReport};
use stverif_core::requirements::{
    assertions_to_problems, instantiate_pattern, select_assertions, BackendKind, ProblemConfig, Provenance,
    VerificationProblem,
};
use stverif_core::syntax::{load, parse_expr_in_scope, Diagnostics, Program, SourceUnit};
use stverif_core::{ScalarType, Span};

use crate::job::{JobConfig, RequirementSpec};
use crate::report::{self, Backend, Cell, Counterexample, Iteration, Localized, Report, Requirement, Row, Stage};
use crate::tools::{check_external, default_executable, resolve_tool, tool_version, ToolError};

/// Exit status of a job.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write the emitted backend model next to the reports.
    pub keep_models: bool,
    /// Fallback directory for tool executables.
    pub tool_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub reports: Vec<Report>,
    /// Files written, in order.
    pub written: Vec<PathBuf>,
    pub exit_code: i32,
}

pub fn exit_code_for(verdict: &str) -> i32 {
    match verdict {
        "satisfied" => EXIT_OK,
        "violated" | "fault" => EXIT_VIOLATED,
        "bound_reached" | "unknown" => EXIT_INCONCLUSIVE,
        _ => EXIT_ERROR,
    }
}

/// Errors dominate violations, which dominate inconclusive answers.
pub fn combine_exit_codes(codes: impl IntoIterator<Item = i32>) -> i32 {
    let rank = |c: i32| match c {
        EXIT_ERROR => 3,
        EXIT_VIOLATED => 2,
        EXIT_INCONCLUSIVE => 1,
        _ => 0,
    };
    codes.into_iter().max_by_key(|c| rank(*c)).unwrap_or(EXIT_OK)
}

/// Source texts of a job, for turning spans into positions.
pub struct Sources {
    pub paths: Vec<String>,
    pub texts: Vec<String>,
}

impl Sources {
    pub fn new(paths: Vec<String>, texts: Vec<String>) -> Self {
        Sources { paths, texts }
    }

    fn path(&self, file: u32) -> &str {
        self.paths.get(file as usize).map_or("<job>", String::as_str)
    }

    /// 1-based line and column of a byte offset.
    pub fn line_col(&self, file: u32, offset: u32) -> (usize, usize) {
        let Some(text) = self.texts.get(file as usize) else { return (0, 0) };
        let before = &text[..(offset as usize).min(text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    pub fn position(&self, span: Span) -> String {
        let (l, c) = self.line_col(span.file, span.start);
        format!("{}:{l}:{c}", self.path(span.file))
    }

    /// Source text of a span on one line.
    pub fn snippet(&self, span: Span) -> String {
        let Some(text) = self.texts.get(span.file as usize) else { return String::new() };
        let (s, e) = (span.start as usize, (span.end as usize).min(text.len()));
        text.get(s..e).map(|t| t.split_whitespace().collect::<Vec<_>>().join(" ")).unwrap_or_default()
    }

    pub fn diagnostics(&self, d: &Diagnostics) -> String {
        d.iter().map(|x| format!("{}: {}", self.position(x.span), x.message)).collect::<Vec<_>>().join("\n")
    }
}

struct Clock(Instant);

impl Clock {
    fn ms(&self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Run every problem of the job and write the reports.
pub fn run_job(cfg: &JobConfig, opts: &RunOptions) -> JobOutcome {
    let start = Clock(Instant::now());
    let checked = match prepare(cfg) {
        Ok((sources, problems, stage_ms)) => problems
            .into_iter()
            .map(|p| {
                let t = Clock(Instant::now());
                let mut c = check_problem(cfg, opts, &sources, &p);
                c.report.statistics.stages.insert(0, Stage { stage: "frontend".into(), ms: stage_ms });
                c.report.duration_ms = t.ms() + stage_ms;
                c
            })
            .collect::<Vec<_>>(),
        Err(message) => {
            let mut r = skeleton(cfg, job_name(cfg), requirement_of(cfg));
            r.verdict = "error".into();
            r.message = Some(message);
            r.duration_ms = start.ms();
            vec![Checked { report: r, artifacts: Vec::new() }]
        }
    };
    let mut written = Vec::new();
    let mut codes: Vec<i32> = checked.iter().map(|c| exit_code_for(&c.report.verdict)).collect();
    for c in &checked {
        match write_reports(cfg, c) {
            Ok(w) => written.extend(w),
            Err(e) => {
                eprintln!("{e}");
                codes.push(EXIT_ERROR);
            }
        }
    }
    let reports = checked.into_iter().map(|c| c.report).collect();
    JobOutcome { exit_code: combine_exit_codes(codes), reports, written }
}

fn job_name(cfg: &JobConfig) -> String {
    cfg.job
        .as_ref()
        .and_then(|j| j.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| cfg.entry.clone())
}

fn requirement_of(cfg: &JobConfig) -> Requirement {
    match &cfg.requirement {
        RequirementSpec::Assertions { select } => Requirement {
            kind: "assertion".into(),
            text: if select.is_empty() { "all assertions".into() } else { select.join(", ") },
            location: None,
        },
        RequirementSpec::Pattern { id, .. } => Requirement { kind: "pattern".into(), text: id.clone(), location: None },
    }
}

fn problem_config(cfg: &JobConfig) -> ProblemConfig {
    ProblemConfig {
        bound: cfg.bound,
        max_states: cfg.max_states,
        backend: cfg.tool.backend,
        reductions: cfg.reductions,
        iterative: cfg.iterative,
        max_iters: cfg.max_iters,
    }
}

/// Front end: sources to verification problems. Errors come back as a
/// message for the failure report.
fn prepare(cfg: &JobConfig) -> Result<(Sources, Vec<VerificationProblem>, u64), String> {
    let clock = Clock(Instant::now());
    let mut units = Vec::new();
    let mut texts = Vec::new();
    let mut paths = Vec::new();
    for (i, path) in cfg.sources.iter().enumerate() {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        paths.push(path.display().to_string());
        texts.push(text.clone());
        units.push(SourceUnit::new(path.display().to_string(), text).with_file(i as u32));
    }
    let sources = Sources::new(paths, texts);
    let program: Program = load(&units).map_err(|d| sources.diagnostics(&d))?;
    let net = build_cfa(&program.ast, &cfg.entry, &program.assertions).map_err(|e| e.to_string())?;
    let mut problems = match &cfg.requirement {
        RequirementSpec::Assertions { select } if select.is_empty() => assertions_to_problems(&net),
        RequirementSpec::Assertions { select } => select_assertions(&net, select),
        RequirementSpec::Pattern { id, alpha, beta } => {
            let mut bindings = BTreeMap::new();
            for (name, text) in [("alpha", alpha), ("beta", beta)] {
                let Some(text) = text else { continue };
                let e = binding(&program, &net, cfg, &sources, name, text)?;
                bindings.insert(name.to_string(), e);
            }
            instantiate_pattern(id, &bindings, &net).map(|p| vec![p])
        }
    }
    .map_err(|e| e.to_string())?;
    let mut seen = BTreeSet::new();
    for p in &mut problems {
        p.config = problem_config(cfg);
        let base = file_stem(&p.name);
        let mut stem = base.clone();
        let mut i = 2;
        while !seen.insert(stem.clone()) {
            stem = format!("{base}_{i}");
            i += 1;
        }
        p.name = stem;
    }
    Ok((sources, problems, clock.ms()))
}

fn binding(
    program: &Program,
    net: &CfaNetwork,
    cfg: &JobConfig,
    sources: &Sources,
    name: &str,
    text: &str,
) -> Result<stverif_core::cfa::Expr, String> {
    // bindings are not part of any source file; spans point past them
    let file = sources.paths.len() as u32;
    let e = parse_expr_in_scope(&program.ast, &cfg.entry, text, file, 0, Some(ScalarType::Bool)).map_err(|d| {
        format!("req.{name} = {text}: {}", d.iter().map(|x| x.message.clone()).collect::<Vec<_>>().join("; "))
    })?;
    lower_expr(net, &e).map_err(|e| format!("req.{name} = {text}: {e}"))
}

fn skeleton(cfg: &JobConfig, name: String, requirement: Requirement) -> Report {
    Report {
        name,
        job: cfg.job.as_ref().map(|j| j.display().to_string()),
        entry: cfg.entry.clone(),
        sources: cfg.sources.iter().map(|s| s.display().to_string()).collect(),
        requirement,
        verdict: "error".into(),
        message: None,
        cycles: 0,
        states_explored: 0,
        statistics: report::Statistics { bound: cfg.bound, ..Default::default() },
        reductions: Vec::new(),
        counterexample: None,
        localization: Vec::new(),
        iterations: Vec::new(),
        backend: Backend {
            name: if cfg.iterative { "engine (iterative)".into() } else { cfg.tool.backend.name().into() },
            version: None,
            command: Vec::new(),
            model: None,
        },
        duration_ms: 0,
        timestamp: now_rfc3339(),
    }
}

fn problem_requirement(p: &VerificationProblem, sources: &Sources) -> Requirement {
    match &p.provenance {
        Provenance::Assertion { text, span, .. } => {
            Requirement { kind: "assertion".into(), text: text.clone(), location: Some(sources.position(*span)) }
        }
        Provenance::Pattern { sentence, .. } => {
            Requirement { kind: "pattern".into(), text: format!("{sentence}  [{}]", p.property_text()), location: None }
        }
    }
}

fn size(s: stverif_core::reductions::Size) -> report::Size {
    report::Size { locations: s.locations, transitions: s.transitions, variables: s.variables }
}

fn reduction(r: &ReductionReport) -> report::Reduction {
    report::Reduction {
        pass: r.pass.name().into(),
        variable: r.variable.clone(),
        before: size(r.before),
        after: size(r.after),
        constants_folded: r.constants_folded,
        assignments_removed: r.assignments_removed,
        domains_restricted: r.domains_restricted,
        refused: r.refused,
        reason: r.reason.clone(),
    }
}

fn apply_stats(r: &mut Report, s: &Stats) {
    r.states_explored = s.states_explored;
    r.cycles = s.cycles_completed;
    r.statistics.branching_factor = s.branching_factor;
    r.statistics.cycles_executed = s.cycles_executed;
    r.statistics.peak_frontier = s.peak_frontier;
    r.statistics.cap_hit = s.cap_hit;
}

fn check_problem(cfg: &JobConfig, opts: &RunOptions, sources: &Sources, p: &VerificationProblem) -> Checked {
    let mut r = skeleton(cfg, p.name.clone(), problem_requirement(p, sources));
    let mut artifacts = Vec::new();
    let (verdict, checked) = if cfg.iterative {
        let clock = Clock(Instant::now());
        let ecfg = EngineConfig::from(&p.config);
        let (v, state) = iterative_verify_with(p, &ecfg, cfg.max_iters, &|| clock.ms());
        let mut prev = 0;
        r.iterations = state
            .iterations
            .iter()
            .map(|it| {
                let ms = it.elapsed_ms - prev;
                prev = it.elapsed_ms;
                Iteration {
                    iteration: it.iteration,
                    abstracted: it.abstracted.clone(),
                    verdict: it.verdict.name().into(),
                    validation: it.validation.as_ref().map(validation_text),
                    states_explored: it.states_explored,
                    elapsed_ms: ms,
                }
            })
            .collect();
        r.statistics.stages.push(Stage { stage: "iterative".into(), ms: clock.ms() });
        (v, p.clone())
    } else {
        let clock = Clock(Instant::now());
        let (q, reps) = reduce(p, &cfg.reductions);
        r.reductions = reps.iter().map(reduction).collect();
        r.statistics.stages.push(Stage { stage: "reductions".into(), ms: clock.ms() });
        let clock = Clock(Instant::now());
        let v = match cfg.tool.backend {
            BackendKind::Engine => check(&q, &EngineConfig::from(&q.config)),
            kind => match external(cfg, opts, &q, kind, &mut r, &mut artifacts) {
                Ok(v) => v,
                Err(message) => {
                    r.verdict = "error".into();
                    r.message = Some(message);
                    return Checked { report: r, artifacts };
                }
            },
        };
        r.statistics.stages.push(Stage { stage: "check".into(), ms: clock.ms() });
        (v, q)
    };
    apply_stats(&mut r, &verdict.stats);
    r.verdict = verdict.kind().name().into();
    match &verdict.outcome {
        Outcome::Unknown(m) => r.message = Some(m.clone()),
        Outcome::BoundReached { cap_hit: true } => {
            r.message = Some(format!("state cap of {} reached before cycle {}", cfg.max_states, cfg.bound))
        }
        Outcome::BoundReached { .. } => {
            r.message = Some(format!("no violation within {} cycles; the state space was not exhausted", cfg.bound))
        }
        _ => {}
    }
    if let Some(t) = verdict.trace() {
        let clock = Clock(Instant::now());
        artifacts.extend(analyze(cfg, sources, p, &checked, t, &mut r));
        r.statistics.stages.push(Stage { stage: "counterexample".into(), ms: clock.ms() });
    }
    Checked { report: r, artifacts }
}

fn validation_text(v: &ValidationResult) -> String {
    match v {
        ValidationResult::Feasible => "feasible".into(),
        ValidationResult::Spurious { cycle, variable: Some(var) } => {
            format!("spurious: `{var}` diverges in cycle {cycle}")
        }
        ValidationResult::Spurious { cycle, variable: None } => {
            format!("spurious: no matching violation in cycle {cycle}")
        }
    }
}

fn cells(values: &[(String, stverif_core::Value)]) -> Vec<Cell> {
    values.iter().map(|(n, v)| Cell { name: n.clone(), value: (*v).into() }).collect()
}

/// Validate, replay on the concrete program, localize, export simulator
/// inputs (returned as an artifact). A trace that does not reproduce makes
/// the verdict unknown.
fn analyze(
    cfg: &JobConfig,
    sources: &Sources,
    p: &VerificationProblem,
    checked: &VerificationProblem,
    t: &Trace,
    r: &mut Report,
) -> Option<(String, String)> {
    let validation = validate(p, t);
    let feasible = validation == ValidationResult::Feasible;
    let concrete = if feasible { replay_concrete(p, t).ok() } else { None };
    let shown = concrete.as_ref().unwrap_or(t);
    let violation = shown.violation.or(t.violation);
    let (kind, expression) = match violation.map(|v| v.kind) {
        Some(ViolationKind::Fault(f)) => (f.to_string(), sources.snippet(f.span)),
        _ => ("property".to_string(), checked.property_text()),
    };
    let cycle = violation.map_or(shown.len(), |v| v.cycle);
    let mut cex = Counterexample {
        kind,
        violated_expression: expression,
        violation_cycle: cycle,
        validation: validation_text(&validation),
        simulator_inputs: None,
        rows: shown
            .cycles
            .iter()
            .enumerate()
            .map(|(i, c)| Row { cycle: i + 1, inputs: cells(&c.inputs), end: cells(&c.end) })
            .collect(),
    };
    r.cycles = cycle as u32;
    if !feasible {
        r.message = Some(format!("counterexample could not be confirmed ({})", cex.validation));
        r.verdict = VerdictKind::Unknown.name().into();
        r.counterexample = Some(cex);
        return None;
    }
    let shown = concrete.as_ref().unwrap_or(t);
    let csv = emit_simulator_inputs(shown).ok().map(|csv| {
        let name = format!("{}.inputs.csv", r.name);
        cex.simulator_inputs = Some(cfg.output.join(&name).display().to_string());
        (name, csv)
    });
    r.counterexample = Some(cex);
    if let Ok(loc) = localize(p, shown) {
        r.localization = loc
            .entries
            .iter()
            .map(|e| {
                let (line, column) = sources.line_col(e.span.file, e.span.start);
                Localized {
                    file: sources.path(e.span.file).to_string(),
                    line,
                    column,
                    kind: match e.kind {
                        EntryKind::Assignment => "assignment".into(),
                        EntryKind::Guard => "guard".into(),
                    },
                    variable: e.variable.clone(),
                    distance: e.distance,
                    score: e.score,
                    text: sources.snippet(e.span),
                }
            })
            .collect();
    }
    csv
}

/// A report and the files that go with it (name, contents).
struct Checked {
    report: Report,
    artifacts: Vec<(String, String)>,
}

fn external(
    cfg: &JobConfig,
    opts: &RunOptions,
    q: &VerificationProblem,
    kind: BackendKind,
    r: &mut Report,
    artifacts: &mut Vec<(String, String)>,
) -> Result<Verdict, String> {
    let model: EmittedModel = match kind {
        BackendKind::NuSmv => emit_smv(q).map_err(|e| e.to_string())?,
        _ => emit_c(q),
    };
    if opts.keep_models {
        let name = format!("{}.model.{}", r.name, model.format.extension());
        r.backend.model = Some(cfg.output.join(&name).display().to_string());
        artifacts.push((name, model.text.clone()));
    }
    let tool_dir = opts.tool_dir.as_deref();
    let exe = resolve_tool(kind, cfg.tool.path.as_deref(), tool_dir).map_err(|e| e.to_string())?;
    r.backend.version = tool_version(kind, &exe);
    match check_external(&cfg.tool, &model, cfg.bound, tool_dir) {
        Ok((v, run)) => {
            r.backend.command = run.command;
            Ok(v)
        }
        Err(e @ ToolError::Failed { .. }) => {
            if let ToolError::Failed { command, .. } = &e {
                r.backend.command = command.clone();
            }
            Err(e.to_string())
        }
        Err(e) => Err(format!("{} ({}): {e}", default_executable(kind), kind.name())),
    }
}

/// A file-name-safe version of a report name.
pub fn file_stem(name: &str) -> String {
    let s: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect();
    let s = s.trim_matches('.').to_string();
    if s.is_empty() {
        "requirement".into()
    } else {
        s
    }
}

fn write_reports(cfg: &JobConfig, c: &Checked) -> Result<Vec<PathBuf>, report::WriteError> {
    let r = &c.report;
    let stem = file_stem(&r.name);
    let mut files = Vec::new();
    if cfg.formats.text {
        files.push((format!("{stem}.report.txt"), r.to_text()));
    }
    if cfg.formats.json {
        files.push((format!("{stem}.report.json"), r.to_json()));
    }
    let mut out = Vec::new();
    for (name, text) in files.iter().chain(&c.artifacts) {
        let path = cfg.output.join(name);
        report::write_file(&path, text)?;
        out.push(path);
    }
    Ok(out)
}
