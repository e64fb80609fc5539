//! Tool output interpretation. Counterexamples are reduced to per-cycle
//! input values and choices, then replayed on the emitted network; when
//! the replay does not reproduce the violation, the tool's own claim is
//! returned so that validation can flag it as spurious.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{loc_name, EmittedModel, ModelFormat, ToolRun};
use crate::cex::{input_cells, replay, CycleRecord, Step, Trace, Violation, ViolationKind};
use crate::cfa::{Fault, FaultKind, LocId};
use crate::engine::{Outcome, Verdict};
use crate::types::{ScalarType, Span, Value};

/// Map a finished tool run to a verdict. Timeouts and output that matches
/// neither success nor failure markers give `Unknown` (with the raw output).
pub fn parse_tool_output(run: &ToolRun, model: &EmittedModel) -> Verdict {
    if run.timed_out {
        return Verdict::unknown(format!("timed out after {} ms", run.wall_ms));
    }
    let parsed = match model.format {
        ModelFormat::Smv => smv(&run.output, model),
        ModelFormat::C => cbmc(&run.output, model),
    };
    parsed.unwrap_or_else(|| Verdict::unknown(format!("unrecognized tool output:\n{}", run.output)))
}

/// Parse a tool value: `TRUE`, `FALSE`, decimal with C suffixes, or NuSMV
/// word constants (`-0sd16_5`, `0ub8_101`, ...).
fn value(s: &str, ty: ScalarType) -> Option<i64> {
    let s = s.trim();
    let v = match s {
        "TRUE" | "true" => 1,
        "FALSE" | "false" => 0,
        _ => {
            let (neg, body) = match s.strip_prefix('-') {
                Some(b) => (true, b),
                None => (false, s),
            };
            let mag = if let Some(w) =
                body.strip_prefix("0s").or_else(|| body.strip_prefix("0u")).filter(|w| w.len() > 1 && w.contains('_'))
            {
                let (kind, rest) = w.split_at(1);
                let digits = rest.split_once('_')?.1;
                let radix = match kind {
                    "b" => 2,
                    "o" => 8,
                    "d" => 10,
                    "h" => 16,
                    _ => return None,
                };
                let raw = i64::from_str_radix(digits, radix).ok()?;
                // bit patterns of signed words are two's complement
                if body.starts_with("0s") && radix != 10 {
                    ty.wrap(raw)
                } else {
                    raw
                }
            } else {
                body.trim_end_matches(['u', 'U', 'l', 'L']).parse::<i64>().ok()?
            };
            if neg {
                -mag
            } else {
                mag
            }
        }
    };
    Some(ty.wrap(v))
}

/// Builds steps and the tool's claimed end-of-cycle values.
struct Collector<'m> {
    model: &'m EmittedModel,
    steps: Vec<Step>,
    ends: Vec<Vec<(String, Value)>>,
    cells: BTreeMap<String, Value>,
}

impl<'m> Collector<'m> {
    fn new(model: &'m EmittedModel) -> Self {
        Collector { model, steps: Vec::new(), ends: Vec::new(), cells: BTreeMap::new() }
    }

    fn snapshot(&self) -> Vec<(String, Value)> {
        let net = &self.model.net;
        net.persistent_cells()
            .into_iter()
            .map(|(name, var, _)| {
                let v = self.cells.get(&name).copied().unwrap_or_else(|| {
                    let c = net.var(var);
                    Value::from_raw(c.scalar(), c.init[0])
                });
                (name, v)
            })
            .collect()
    }

    fn new_cycle(&mut self) {
        if !self.steps.is_empty() {
            self.ends.push(self.snapshot());
        }
        self.steps.push(Step::default());
    }

    fn site(&mut self, ident: &str, raw: &str) -> bool {
        let Some(s) = self.model.sites.iter().find(|s| s.ident == ident) else {
            return false;
        };
        let (Some(v), Some(step)) = (value(raw, s.ty), self.steps.last_mut()) else {
            return true;
        };
        if s.input {
            let inputs = input_cells(&self.model.net);
            let k = self.model.sites.iter().filter(|x| x.input).position(|x| x.ident == ident).unwrap();
            if let Some(c) = inputs.get(k) {
                step.inputs.retain(|(n, _)| n != &c.name);
                step.inputs.push((c.name.clone(), Value::from_raw(s.ty, v)));
            }
        } else {
            step.choices.push(v);
        }
        true
    }

    fn cell(&mut self, name: &str, raw: &str) {
        let net = &self.model.net;
        if let Some(cell) = net.persistent_cells().into_iter().find(|(n, _, _)| n == name) {
            let ty = net.var(cell.1).scalar();
            if let Some(v) = value(raw, ty) {
                self.cells.insert(cell.0, Value::from_raw(ty, v));
            }
        }
    }

    fn finish(mut self, location: Option<LocId>, fault: bool) -> Verdict {
        if self.steps.is_empty() {
            self.new_cycle();
        }
        let last = self.snapshot();
        self.ends.push(last);
        let net = &self.model.net;
        if let Ok(t) = replay(net, &self.model.property, &self.steps) {
            match t.violation.map(|v| v.kind) {
                Some(ViolationKind::Property) => return verdict(Outcome::Violated(t)),
                Some(ViolationKind::Fault(_)) => return verdict(Outcome::Fault(t)),
                None => {}
            }
        }
        // not reproduced: keep the claim
        let location =
            location.or_else(|| self.model.property.check_points(net).first().map(|(l, _)| *l)).unwrap_or(net.main.end);
        let kind = if fault {
            ViolationKind::Fault(Fault { kind: FaultKind::DivisionByZero, span: Span::default() })
        } else {
            ViolationKind::Property
        };
        let n = self.steps.len();
        let cycles = self
            .steps
            .into_iter()
            .zip(self.ends)
            .map(|(s, end)| CycleRecord { inputs: s.inputs, choices: s.choices, end })
            .collect();
        let t = Trace { cycles, violation: Some(Violation { cycle: n, location, kind }) };
        verdict(if fault { Outcome::Fault(t) } else { Outcome::Violated(t) })
    }
}

fn verdict(outcome: Outcome) -> Verdict {
    Verdict { outcome, stats: Default::default() }
}

fn smv(out: &str, model: &EmittedModel) -> Option<Verdict> {
    let mut lines = out.lines();
    let verdict_line = lines.by_ref().find(|l| {
        let l = l.trim_start();
        (l.starts_with("-- invariant") || l.starts_with("-- specification"))
            && (l.ends_with("is true") || l.ends_with("is false"))
    })?;
    if verdict_line.ends_with("is true") {
        return Some(verdict(Outcome::Satisfied));
    }
    // states with the inputs that led into them
    let mut states: Vec<(BTreeMap<String, String>, BTreeMap<String, String>)> = Vec::new();
    let (mut state, mut inputs) = (BTreeMap::new(), BTreeMap::new());
    let mut in_state = false;
    for l in lines {
        let t = l.trim();
        if t.starts_with("-> State:") {
            if in_state {
                states.push((inputs.clone(), state.clone()));
            }
            in_state = true;
        } else if t.starts_with("-> Input:") {
            if in_state {
                states.push((inputs.clone(), state.clone()));
            }
            in_state = false;
        } else if let Some((k, v)) = t.split_once(" = ") {
            if in_state {
                state.insert(k.trim().to_string(), v.trim().to_string());
            } else {
                inputs.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else if (in_state || !states.is_empty()) && (t.starts_with("--") || t.starts_with("***")) {
            // next property
            break;
        }
    }
    if in_state {
        states.push((inputs, state));
    }
    let net = &model.net;
    let mut c = Collector::new(model);
    let loc_of = |s: &BTreeMap<String, String>| s.get(&model.control).cloned();
    let update = |c: &mut Collector<'_>, s: &BTreeMap<String, String>| {
        for (name, id) in model.map.iter() {
            if let Some(v) = s.get(id) {
                c.cell(name, v);
            }
        }
    };
    for w in states.windows(2) {
        update(&mut c, &w[0].1);
        let (Some(from), Some(to)) = (loc_of(&w[0].1), loc_of(&w[1].1)) else {
            continue;
        };
        let t = net.main.transitions.iter().enumerate().find(|(ti, t)| {
            loc_name(t.source) == from && loc_name(t.target) == to && model.sites.iter().any(|s| s.transition == *ti)
        });
        if let Some((ti, _)) = t {
            if model.sites.iter().any(|s| s.transition == ti && s.input) {
                c.new_cycle();
            }
            for s in model.sites.iter().filter(|s| s.transition == ti) {
                if let Some(v) = w[1].0.get(&s.ident) {
                    c.site(&s.ident, v);
                }
            }
        }
    }
    if let Some((_, last)) = states.last() {
        update(&mut c, last);
    }
    let location = states
        .last()
        .and_then(|(_, s)| loc_of(s))
        .and_then(|l| net.main.locations.keys().copied().find(|k| loc_name(*k) == l));
    Some(c.finish(location, false))
}

fn cbmc(out: &str, model: &EmittedModel) -> Option<Verdict> {
    if out.contains("VERIFICATION SUCCESSFUL") {
        return Some(verdict(Outcome::BoundReached { cap_hit: false }));
    }
    if !out.contains("VERIFICATION FAILED") {
        return None;
    }
    let mut c = Collector::new(model);
    let mut fault = false;
    let mut lines = out.lines();
    // first trace only
    let start = out.lines().position(|l| l.trim_start().starts_with("Trace for") || l.trim() == "Counterexample:");
    if let Some(s) = start {
        lines.by_ref().nth(s);
    }
    for l in lines.by_ref() {
        let t = l.trim();
        if t.starts_with("Violated property:") || t.starts_with("Trace for") {
            break;
        }
        let Some((lhs, rhs)) = t.split_once('=') else {
            continue;
        };
        if lhs.contains(' ') || lhs.is_empty() {
            continue;
        }
        let raw = rhs.split_whitespace().next().unwrap_or("");
        if lhs == model.control {
            if value(raw, ScalarType::Dint).is_some_and(|n| n >= 1) {
                c.new_cycle();
            }
            continue;
        }
        if c.site(lhs, raw) {
            continue;
        }
        cbmc_cell(&mut c, model, lhs, rhs);
    }
    for l in lines.take(4) {
        let t = l.to_ascii_lowercase();
        fault |= t.contains("division by zero") || t.contains("bound in") || t.contains("out of bounds");
    }
    Some(c.finish(None, fault))
}

/// `x=5`, `a[1l]=5` or `a={ 1, 2 }` in a CBMC trace.
fn cbmc_cell(c: &mut Collector<'_>, model: &EmittedModel, lhs: &str, rhs: &str) {
    let (ident, index) = match lhs.split_once('[') {
        Some((i, rest)) => (i, rest.trim_end_matches(']').trim_end_matches(['u', 'U', 'l', 'L']).parse::<usize>().ok()),
        None => (lhs, None),
    };
    let Some(name) = model.map.name(ident) else {
        return;
    };
    let Some(var) = model.net.var_by_name(name) else {
        return;
    };
    let lo = var.ty.bounds().map(|(lo, _)| lo);
    let name = name.to_string();
    match (lo, index) {
        (None, _) => c.cell(&name, rhs.split_whitespace().next().unwrap_or("")),
        (Some(lo), Some(i)) => {
            c.cell(&format!("{name}[{}]", lo + i as i64), rhs.split_whitespace().next().unwrap_or(""))
        }
        (Some(lo), None) => {
            let Some(body) = rhs.trim().strip_prefix('{').and_then(|r| r.split_once('}')).map(|(b, _)| b) else {
                return;
            };
            for (i, v) in body.split(',').enumerate() {
                c.cell(&format!("{name}[{}]", lo + i as i64), v);
            }
        }
    }
}
