//! Fault localization by dynamic backward slicing over a replayed trace.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use super::{replay_observed, validate, Trace, ValidationResult, ViolationKind};
use crate::cfa::graph::Graph;
use crate::cfa::{inline_callees, CfaNetwork, Expr, ExprKind, LocId, Machine, Observer, TransKind, Transition};
use crate::requirements::VerificationProblem;
use crate::types::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntryKind {
    Assignment,
    Guard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationEntry {
    pub span: Span,
    pub kind: EntryKind,
    /// Assigned cell, or the variables read by a guard.
    pub variable: String,
    /// Dependence edges from the violated property.
    pub distance: u32,
    /// `1 / (1 + distance)`.
    pub score: f64,
}

/// Statements that influenced the violation, most relevant first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalizationReport {
    pub entries: Vec<LocalizationEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LocalizeError {
    #[error("the trace does not reproduce on the concrete program")]
    NotFeasible,
}

struct Event {
    cycle: usize,
    trans: usize,
    before: Vec<i64>,
    after: Vec<i64>,
}

#[derive(Default)]
struct Recorder {
    cycle: usize,
    events: Vec<Event>,
    last: Option<(LocId, Vec<i64>)>,
}

impl Observer for Recorder {
    fn transition(&mut self, index: usize, t: &Transition, before: &[i64]) {
        if t.kind == TransKind::Havoc {
            self.cycle += 1;
        }
        self.events.push(Event { cycle: self.cycle, trans: index, before: before.to_vec(), after: Vec::new() });
    }

    fn location(&mut self, loc: LocId, vals: &[i64]) {
        if let Some(e) = self.events.last_mut() {
            if e.after.is_empty() {
                e.after = vals.to_vec();
            }
        }
        self.last = Some((loc, vals.to_vec()));
    }
}

/// Slots read by `e` under `vals`.
fn read_slots(m: &Machine<'_>, e: &Expr, vals: &[i64], out: &mut Vec<usize>) {
    e.walk(&mut |x| match &x.kind {
        ExprKind::Var(v) => out.extend(m.slot(*v, 0)),
        ExprKind::Index { var, index } => {
            if let Ok(i) = m.eval(index, vals) {
                if let Some(c) = m.net.var(*var).cell_of(i) {
                    out.extend(m.slot(*var, c));
                }
            }
        }
        _ => {}
    });
}

/// A statement instance in the executed trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    /// Assignment `asg` of event `event`.
    Def { event: usize, asg: usize },
    /// The guard of event `event`.
    Guard { event: usize },
}

struct Slicer<'a> {
    m: &'a Machine<'a>,
    net: &'a CfaNetwork,
    events: &'a [Event],
    /// Per event and assignment: (written slot, slots read, state before).
    defs: Vec<Vec<(usize, Vec<usize>)>>,
    /// Static control dependences per location.
    cd: BTreeMap<LocId, Vec<LocId>>,
}

impl<'a> Slicer<'a> {
    fn new(m: &'a Machine<'a>, events: &'a [Event]) -> Self {
        let net = m.net;
        let mut defs = Vec::with_capacity(events.len());
        for ev in events {
            let t = &net.main.transitions[ev.trans];
            let mut vals = ev.before.clone();
            let mut per = Vec::new();
            for a in &t.assignments {
                let mut reads = Vec::new();
                if let Some(i) = &a.target.index {
                    read_slots(m, i, &vals, &mut reads);
                }
                let Ok(slot) = m.target_slot(&a.target, &vals, t.span) else {
                    break;
                };
                let v = match &a.value.kind {
                    ExprKind::Nondet(_) => ev.after.get(slot).copied().unwrap_or(0),
                    _ => {
                        read_slots(m, &a.value, &vals, &mut reads);
                        match m.eval(&a.value, &vals) {
                            Ok(v) => v,
                            Err(_) => break,
                        }
                    }
                };
                vals[slot] = v;
                per.push((slot, reads));
            }
            defs.push(per);
        }
        let g = Graph::of(&net.main);
        let deps = g.control_deps(&g.ipdom());
        let cd = g.nodes.iter().enumerate().map(|(i, l)| (*l, deps[i].iter().map(|d| g.nodes[*d]).collect())).collect();
        Slicer { m, net, events, defs, cd }
    }

    /// Latest definition of `slot` strictly before event `before` (and
    /// before assignment `asg` within that event).
    fn reaching_def(&self, slot: usize, before: usize, asg: usize) -> Option<Node> {
        if let Some(per) = self.defs.get(before) {
            if let Some(a) = per[..asg.min(per.len())].iter().rposition(|(s, _)| *s == slot) {
                return Some(Node::Def { event: before, asg: a });
            }
        }
        (0..before)
            .rev()
            .find_map(|e| self.defs[e].iter().rposition(|(s, _)| *s == slot).map(|a| Node::Def { event: e, asg: a }))
    }

    /// The guard instance controlling execution at `loc` in the same cycle,
    /// searching back from event `before`.
    fn control_parent(&self, loc: LocId, before: usize) -> Option<Node> {
        let deps = self.cd.get(&loc)?;
        if deps.is_empty() {
            return None;
        }
        let cycle = self.events.get(before).or(self.events.last())?.cycle;
        (0..before.min(self.events.len())).rev().take_while(|e| self.events[*e].cycle == cycle).find_map(|e| {
            let t = &self.net.main.transitions[self.events[e].trans];
            deps.contains(&t.source).then_some(Node::Guard { event: e })
        })
    }

    fn transition(&self, n: Node) -> &Transition {
        let e = match n {
            Node::Def { event, .. } | Node::Guard { event } => event,
        };
        &self.net.main.transitions[self.events[e].trans]
    }

    /// Plumbing instances are traversed without counting as a step and are
    /// not reported.
    fn is_plumbing(&self, n: Node) -> bool {
        matches!(self.transition(n).kind, TransKind::Structural | TransKind::Call)
    }

    fn predecessors(&self, n: Node) -> Vec<Node> {
        let mut out = Vec::new();
        match n {
            Node::Def { event, asg } => {
                for &s in &self.defs[event][asg].1 {
                    out.extend(self.reaching_def(s, event, asg));
                }
                let src = self.transition(n).source;
                out.extend(self.control_parent(src, event));
            }
            Node::Guard { event } => {
                let t = self.transition(n);
                let mut reads = Vec::new();
                read_slots(self.m, &t.guard, &self.events[event].before, &mut reads);
                for s in reads {
                    out.extend(self.reaching_def(s, event, 0));
                }
                out.extend(self.control_parent(t.source, event));
            }
        }
        out
    }
}

/// Rank the statements in the dynamic backward slice of the violation of
/// `t` by their dependence distance from the property.
pub fn localize(p: &VerificationProblem, t: &Trace) -> Result<LocalizationReport, LocalizeError> {
    if validate(p, t) != ValidationResult::Feasible {
        return Err(LocalizeError::NotFeasible);
    }
    let net = inline_callees(&p.net);
    let mut rec = Recorder::default();
    let steps = t.steps();
    let replayed =
        replay_observed(&net, &p.property, &steps, true, &mut rec).map_err(|_| LocalizeError::NotFeasible)?;
    let violation = replayed.violation.ok_or(LocalizeError::NotFeasible)?;
    let checks = p.property.check_points(&net);
    let m = Machine::new(&net, &checks);
    let (loc, state) = rec.last.clone().ok_or(LocalizeError::NotFeasible)?;
    let events = &rec.events;
    let sl = Slicer::new(&m, events);
    let end = events.len();

    let mut seeds = Vec::new();
    match violation.kind {
        ViolationKind::Property => {
            let mut reads = Vec::new();
            for (l, e) in &checks {
                if *l == loc {
                    read_slots(&m, e, &state, &mut reads);
                }
            }
            for s in reads {
                seeds.extend(sl.reaching_def(s, end, 0));
            }
        }
        ViolationKind::Fault(_) => {
            let mut reads = Vec::new();
            for (_, tr) in net.main.outgoing(loc) {
                for e in tr.exprs() {
                    read_slots(&m, e, &state, &mut reads);
                }
            }
            for s in reads {
                seeds.extend(sl.reaching_def(s, end, 0));
            }
        }
    }
    seeds.extend(sl.control_parent(loc, end));

    // 0-1 breadth-first search: reportable nodes cost one step.
    let mut dist: BTreeMap<Node, u32> = BTreeMap::new();
    let mut queue: VecDeque<(Node, u32)> = VecDeque::new();
    for s in seeds {
        let d = if sl.is_plumbing(s) { 0 } else { 1 };
        if d == 0 {
            queue.push_front((s, d));
        } else {
            queue.push_back((s, d));
        }
    }
    while let Some((n, d)) = queue.pop_front() {
        if dist.get(&n).is_some_and(|old| *old <= d) {
            continue;
        }
        dist.insert(n, d);
        for q in sl.predecessors(n) {
            if sl.is_plumbing(q) {
                queue.push_front((q, d));
            } else {
                queue.push_back((q, d + 1));
            }
        }
    }

    let mut best: BTreeMap<Span, LocalizationEntry> = BTreeMap::new();
    for (n, d) in dist {
        if sl.is_plumbing(n) {
            continue;
        }
        let tr = sl.transition(n);
        if tr.kind == TransKind::Havoc {
            continue;
        }
        let (span, kind, variable) = match n {
            Node::Def { event, asg } => {
                let a = &tr.assignments[asg];
                let slot = sl.defs[event][asg].0;
                let cell = net
                    .main_vars()
                    .find_map(|v| (0..v.ty.cells()).find(|c| m.slot(v.id, *c) == Some(slot)).map(|c| (v.id, c)));
                let name = match cell {
                    Some((v, c)) => net.cell_name(v, c),
                    None => net.var(a.target.var).name.clone(),
                };
                (tr.span, EntryKind::Assignment, name)
            }
            Node::Guard { .. } => {
                let mut vars = Vec::new();
                tr.guard.reads(&mut vars);
                vars.dedup();
                let names: Vec<&str> = vars.iter().map(|v| net.var(*v).name.as_str()).collect();
                (tr.guard.span, EntryKind::Guard, names.join(","))
            }
        };
        let entry = LocalizationEntry { span, kind, variable, distance: d, score: 1.0 / (1.0 + d as f64) };
        match best.get(&span) {
            Some(old) if old.distance <= d => {}
            _ => {
                best.insert(span, entry);
            }
        }
    }
    let mut entries: Vec<LocalizationEntry> = best.into_values().collect();
    entries.sort_by(|a, b| a.distance.cmp(&b.distance).then(a.span.cmp(&b.span)));
    Ok(LocalizationReport { entries })
}
