//! Counterexamples: the trace model, deterministic replay, validation
//! against the concrete program, simulator input files and localization.

mod localize;
#[cfg(test)]
mod tests;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::cfa::{
    inline_callees, CfaNetwork, Chooser, CycleOutcome, ExprKind, Fault, LocId, Machine, NoObserver, Observer,
};
use crate::requirements::{Property, VerificationProblem};
use crate::types::{Domain, ScalarType, Value};

pub use localize::{localize, EntryKind, LocalizationEntry, LocalizationReport, LocalizeError};

/// Inputs of one cycle: input cell values and any further nondeterministic
/// choices (outputs of abstracted callees, in execution order).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Step {
    pub inputs: Vec<(String, Value)>,
    pub choices: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleRecord {
    /// Input cells in declaration order.
    pub inputs: Vec<(String, Value)>,
    pub choices: Vec<i64>,
    /// Persistent cells at the end of the cycle (at the violation point for
    /// the violating cycle).
    pub end: Vec<(String, Value)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// The property evaluated to FALSE.
    Property,
    Fault(Fault),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    /// 1-based cycle number.
    pub cycle: usize,
    pub location: LocId,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub cycles: Vec<CycleRecord>,
    pub violation: Option<Violation>,
}

impl Trace {
    pub fn steps(&self) -> Vec<Step> {
        self.cycles.iter().map(|c| Step { inputs: c.inputs.clone(), choices: c.choices.clone() }).collect()
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("no cycles to replay")]
    NoCycles,
    #[error("cycle {cycle}: no value for input `{name}`")]
    MissingInput { cycle: usize, name: String },
    #[error("cycle {cycle}: `{name}` is not an input")]
    UnknownInput { cycle: usize, name: String },
    #[error("cycle {cycle}: value {value} does not fit input `{name}`")]
    BadValue { cycle: usize, name: String, value: Value },
    #[error("cycle {cycle}: missing nondeterministic choice")]
    MissingChoice { cycle: usize },
    #[error("cycle {cycle} does not terminate")]
    Diverged { cycle: usize },
}

/// One input cell written by the cycle-start havoc.
#[derive(Debug, Clone)]
pub(crate) struct InputCell {
    pub name: String,
    pub ty: ScalarType,
    pub domain: Domain,
}

/// Input cells in havoc (= declaration) order.
pub(crate) fn input_cells(net: &CfaNetwork) -> Vec<InputCell> {
    let mut out = Vec::new();
    if let Some(h) = net.main.havoc() {
        for a in &h.assignments {
            if let ExprKind::Nondet(d) = &a.value.kind {
                let var = net.var(a.target.var);
                let cell = match &a.target.index {
                    None => 0,
                    Some(i) => var.cell_of(i.as_const().unwrap_or(0)).unwrap_or(0),
                };
                out.push(InputCell { name: net.cell_name(var.id, cell), ty: var.scalar(), domain: d.clone() });
            }
        }
    }
    out
}

/// Feeds recorded values; `lenient` falls back to the smallest option.
struct Feed<'a> {
    values: &'a [i64],
    pos: usize,
    lenient: bool,
}

impl Chooser for Feed<'_> {
    fn choose(&mut self, options: &Domain) -> Option<i64> {
        let v = self.values.get(self.pos).copied();
        self.pos += 1;
        match v {
            Some(v) => Some(v),
            None if self.lenient => options.min(),
            None => None,
        }
    }
}

pub(crate) fn persistent_values(m: &Machine<'_>, vals: &[i64]) -> Vec<(String, Value)> {
    m.net
        .persistent_cells()
        .into_iter()
        .map(|(name, var, cell)| {
            let raw = vals[m.slot(var, cell).expect("main variable")];
            (name, m.net.value_of(var, raw))
        })
        .collect()
}

fn fits(ty: ScalarType, v: Value) -> bool {
    match (ty, v) {
        (ScalarType::Bool, Value::Bool(_)) => true,
        (ScalarType::Bool, _) | (_, Value::Bool(_)) => false,
        (t, Value::Int(i)) => t.contains(i),
    }
}

/// Replay with an observer; `lenient` tolerates missing choices.
pub(crate) fn replay_observed(
    net: &CfaNetwork,
    property: &Property,
    steps: &[Step],
    lenient: bool,
    obs: &mut dyn Observer,
) -> Result<Trace, ReplayError> {
    if steps.is_empty() {
        return Err(ReplayError::NoCycles);
    }
    let cells = input_cells(net);
    let checks = property.check_points(net);
    let m = Machine::new(net, &checks);
    let mut vals = m.initial_values();
    let mut cycles = Vec::new();
    for (i, step) in steps.iter().enumerate() {
        let cycle = i + 1;
        if let Some((name, _)) = step.inputs.iter().find(|(n, _)| !cells.iter().any(|c| &c.name == n)) {
            return Err(ReplayError::UnknownInput { cycle, name: name.clone() });
        }
        let mut feed = Vec::with_capacity(cells.len() + step.choices.len());
        let mut inputs = Vec::with_capacity(cells.len());
        for c in &cells {
            let v = match step.inputs.iter().find(|(n, _)| n == &c.name) {
                Some((_, v)) => *v,
                None if lenient => Value::from_raw(c.ty, c.domain.min().unwrap_or(0)),
                None => return Err(ReplayError::MissingInput { cycle, name: c.name.clone() }),
            };
            if !fits(c.ty, v) {
                return Err(ReplayError::BadValue { cycle, name: c.name.clone(), value: v });
            }
            feed.push(v.raw());
            inputs.push((c.name.clone(), v));
        }
        feed.extend_from_slice(&step.choices);
        let mut ch = Feed { values: &feed, pos: 0, lenient };
        let outcome = m.run_cycle(&mut vals, &mut ch, obs);
        let used = ch.pos.min(feed.len()).max(cells.len());
        let record = |vals: &[i64]| CycleRecord {
            inputs: inputs.clone(),
            choices: feed[cells.len()..used].to_vec(),
            end: persistent_values(&m, vals),
        };
        match outcome {
            CycleOutcome::Completed => cycles.push(record(&vals)),
            CycleOutcome::Violated { loc } => {
                cycles.push(record(&vals));
                let violation = Violation { cycle, location: loc, kind: ViolationKind::Property };
                return Ok(Trace { cycles, violation: Some(violation) });
            }
            CycleOutcome::Fault { loc, fault } => {
                cycles.push(record(&vals));
                let violation = Violation { cycle, location: loc, kind: ViolationKind::Fault(fault) };
                return Ok(Trace { cycles, violation: Some(violation) });
            }
            CycleOutcome::Diverged => return Err(ReplayError::Diverged { cycle }),
            CycleOutcome::Aborted => return Err(ReplayError::MissingChoice { cycle }),
        }
    }
    Ok(Trace { cycles, violation: None })
}

/// Execute `net` from its initial state on the given per-cycle inputs,
/// stopping at the first violation of `property` or runtime fault.
pub fn replay(net: &CfaNetwork, property: &Property, steps: &[Step]) -> Result<Trace, ReplayError> {
    replay_observed(net, property, steps, false, &mut NoObserver)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationResult {
    Feasible,
    /// First cycle (1-based) and persistent cell where the concrete
    /// execution departs from the trace.
    Spurious {
        cycle: usize,
        variable: Option<String>,
    },
}

/// Replay `t`'s inputs on the fully concrete version of `p` (inputs missing
/// from the trace take their smallest value).
pub fn validate(p: &VerificationProblem, t: &Trace) -> ValidationResult {
    let concrete = inline_callees(&p.net);
    let steps: Vec<Step> = t.cycles.iter().map(|c| Step { inputs: c.inputs.clone(), choices: Vec::new() }).collect();
    let Some(want) = t.violation else {
        return ValidationResult::Spurious { cycle: t.len().max(1), variable: None };
    };
    let cells = input_cells(&concrete);
    let steps: Vec<Step> = steps
        .into_iter()
        .map(|s| Step {
            inputs: s.inputs.into_iter().filter(|(n, _)| cells.iter().any(|c| &c.name == n)).collect(),
            ..s
        })
        .collect();
    let got = match replay_observed(&concrete, &p.property, &steps, true, &mut NoObserver) {
        Ok(g) => g,
        Err(ReplayError::Diverged { cycle }) => return ValidationResult::Spurious { cycle, variable: None },
        Err(_) => return ValidationResult::Spurious { cycle: 1, variable: None },
    };
    let same_kind = |v: &Violation| {
        v.cycle == want.cycle
            && matches!(
                (v.kind, want.kind),
                (ViolationKind::Property, ViolationKind::Property) | (ViolationKind::Fault(_), ViolationKind::Fault(_))
            )
    };
    if got.violation.as_ref().is_some_and(same_kind) {
        return ValidationResult::Feasible;
    }
    for (i, (a, b)) in t.cycles.iter().zip(&got.cycles).enumerate() {
        for (name, v) in &a.end {
            if let Some((_, w)) = b.end.iter().find(|(n, _)| n == name) {
                if v != w {
                    return ValidationResult::Spurious { cycle: i + 1, variable: Some(name.clone()) };
                }
            }
        }
    }
    let cycle = got.violation.map(|v| v.cycle).unwrap_or(want.cycle).min(want.cycle);
    ValidationResult::Spurious { cycle, variable: None }
}

/// Replay `t`'s inputs on the fully concrete version of `p`, as
/// [`validate`] does: the result carries every program variable even when
/// `t` came from a reduced or abstracted network.
pub fn replay_concrete(p: &VerificationProblem, t: &Trace) -> Result<Trace, ReplayError> {
    let concrete = inline_callees(&p.net);
    let cells = input_cells(&concrete);
    let steps: Vec<Step> = t
        .cycles
        .iter()
        .map(|c| Step {
            inputs: c.inputs.iter().filter(|(n, _)| cells.iter().any(|x| &x.name == n)).cloned().collect(),
            choices: Vec::new(),
        })
        .collect();
    replay_observed(&concrete, &p.property, &steps, true, &mut NoObserver)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimulatorError {
    #[error("the trace has no cycles")]
    Empty,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Simulator input file: a `cycle;<inputs...>` header and one line per
/// cycle with that cycle's input values as ST literals.
pub fn emit_simulator_inputs(t: &Trace) -> Result<String, SimulatorError> {
    let first = t.cycles.first().ok_or(SimulatorError::Empty)?;
    let mut out = String::from("cycle");
    for (n, _) in &first.inputs {
        out.push(';');
        out.push_str(n);
    }
    out.push('\n');
    for (i, c) in t.cycles.iter().enumerate() {
        let _ = write!(out, "{}", i + 1);
        for (_, v) in &c.inputs {
            let _ = write!(out, ";{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

fn parse_value(s: &str) -> Option<Value> {
    match s {
        "TRUE" => Some(Value::Bool(true)),
        "FALSE" => Some(Value::Bool(false)),
        _ => s.parse::<i64>().ok().map(Value::Int),
    }
}

/// Parse a simulator input file back into replayable steps.
pub fn parse_simulator_inputs(text: &str) -> Result<Vec<Step>, SimulatorError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(SimulatorError::Syntax { line: 1, message: "missing header".into() })?;
    let mut cols = header.split(';');
    if cols.next().map(str::trim) != Some("cycle") {
        return Err(SimulatorError::Syntax { line: 1, message: "header must start with `cycle`".into() });
    }
    let names: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
    let mut steps = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split(';').map(str::trim).collect();
        if fields.len() != names.len() + 1 {
            return Err(SimulatorError::Syntax {
                line: line_no,
                message: format!("expected {} fields, found {}", names.len() + 1, fields.len()),
            });
        }
        if fields[0].parse::<usize>().ok() != Some(steps.len() + 1) {
            return Err(SimulatorError::Syntax {
                line: line_no,
                message: format!("expected cycle {}", steps.len() + 1),
            });
        }
        let mut inputs = Vec::new();
        for (n, f) in names.iter().zip(&fields[1..]) {
            let v = parse_value(f)
                .ok_or_else(|| SimulatorError::Syntax { line: line_no, message: format!("bad value `{f}`") })?;
            inputs.push((n.clone(), v));
        }
        steps.push(Step { inputs, choices: Vec::new() });
    }
    Ok(steps)
}
