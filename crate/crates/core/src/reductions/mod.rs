//! Verdict-preserving reductions of verification problems.
//!
//! The passes run in the order [`constant_fold`], [`eliminate_unreachable`],
//! [`cone_of_influence`], [`value_set_abstraction`]. Each takes an inlined
//! problem (networks with call sites are inlined first) and returns the
//! reduced problem with a [`ReductionReport`].

mod coi;
mod fold;
#[cfg(test)]
mod tests;
mod valueset;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cfa::{inline_callees, CfaNetwork, LocId, LocRole, TransKind, VarId, VarKind};
use crate::requirements::Property;
use crate::requirements::{ReductionSwitches, VerificationProblem};

pub use coi::cone_of_influence;
pub use fold::constant_fold;
pub use valueset::value_set_abstraction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pass {
    ConstantFold,
    EliminateUnreachable,
    ConeOfInfluence,
    ValueSet,
}

impl Pass {
    pub fn name(self) -> &'static str {
        match self {
            Pass::ConstantFold => "constant_fold",
            Pass::EliminateUnreachable => "eliminate_unreachable",
            Pass::ConeOfInfluence => "cone_of_influence",
            Pass::ValueSet => "value_set_abstraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Size {
    pub locations: usize,
    pub transitions: usize,
    pub variables: usize,
}

impl Size {
    pub fn of(net: &CfaNetwork) -> Size {
        Size { locations: net.location_count(), transitions: net.transition_count(), variables: net.variables.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionReport {
    pub pass: Pass,
    /// Variable the pass was applied to (value-set abstraction).
    pub variable: Option<String>,
    pub before: Size,
    pub after: Size,
    pub variables_removed: usize,
    pub locations_removed: usize,
    pub transitions_removed: usize,
    pub assignments_removed: usize,
    pub constants_folded: usize,
    pub domains_restricted: usize,
    /// The pass declined to change the problem; `reason` says why.
    pub refused: bool,
    pub reason: Option<String>,
}

impl ReductionReport {
    fn new(pass: Pass, before: &CfaNetwork) -> Self {
        let size = Size::of(before);
        ReductionReport {
            pass,
            variable: None,
            before: size,
            after: size,
            variables_removed: 0,
            locations_removed: 0,
            transitions_removed: 0,
            assignments_removed: 0,
            constants_folded: 0,
            domains_restricted: 0,
            refused: false,
            reason: None,
        }
    }

    fn finish(mut self, after: &CfaNetwork) -> Self {
        self.after = Size::of(after);
        self.variables_removed = self.before.variables.saturating_sub(self.after.variables);
        self.locations_removed = self.before.locations.saturating_sub(self.after.locations);
        self.transitions_removed = self.before.transitions.saturating_sub(self.after.transitions);
        self
    }
}

pub(crate) fn inlined(p: &VerificationProblem) -> CfaNetwork {
    if p.net.callees.is_empty() {
        p.net.clone()
    } else {
        inline_callees(&p.net)
    }
}

/// Drop variables that nothing but the havoc mentions any more (unused
/// inputs disappear together with their havoc).
pub(crate) fn remove_unreferenced(net: &mut CfaNetwork, property: &Property) {
    let mut used: BTreeSet<VarId> = BTreeSet::new();
    let mut reads = Vec::new();
    for t in &net.main.transitions {
        if t.kind == TransKind::Havoc {
            continue;
        }
        for e in t.exprs() {
            e.reads(&mut reads);
        }
        used.extend(t.assignments.iter().map(|a| a.target.var));
    }
    for l in net.main.locations.values() {
        if let LocRole::AssertionAnchor { expr, .. } = &l.role {
            expr.reads(&mut reads);
        }
    }
    property.expr.reads(&mut reads);
    used.extend(reads);
    let dead: Vec<VarId> = net.variables.keys().copied().filter(|v| !used.contains(v)).collect();
    for v in &dead {
        net.variables.remove(v);
    }
    if let Some(h) = net.main.havoc_mut() {
        h.assignments.retain(|a| !dead.contains(&a.target.var));
    }
}

/// Drop locations unreachable from the initial location (the end and
/// cycle-start locations always stay).
pub(crate) fn prune_unreachable(net: &mut CfaNetwork) {
    let mut seen: BTreeSet<LocId> = BTreeSet::new();
    let mut stack = alloc::vec![net.main.initial];
    while let Some(l) = stack.pop() {
        if !seen.insert(l) {
            continue;
        }
        stack.extend(net.main.transitions.iter().filter(|t| t.source == l).map(|t| t.target));
    }
    seen.insert(net.main.end);
    seen.extend(net.main.cycle_start);
    net.main.locations.retain(|l, _| seen.contains(l));
    net.main.transitions.retain(|t| seen.contains(&t.source) && seen.contains(&t.target));
}

/// Remove locations not reachable from the initial location, with their
/// transitions.
pub fn eliminate_unreachable(p: &VerificationProblem) -> (VerificationProblem, ReductionReport) {
    let mut net = inlined(p);
    let report = ReductionReport::new(Pass::EliminateUnreachable, &net);
    prune_unreachable(&mut net);
    let out = p.with_net(net);
    let report = report.finish(&out.net);
    (out, report)
}

/// Run the enabled passes in pipeline order. Value-set abstraction is tried
/// on every numeric input; refusals are reported, not errors.
pub fn reduce(p: &VerificationProblem, switches: &ReductionSwitches) -> (VerificationProblem, Vec<ReductionReport>) {
    let mut cur = p.with_net(inlined(p));
    let mut reports = Vec::new();
    if switches.fold {
        let (q, r) = constant_fold(&cur);
        cur = q;
        reports.push(r);
    }
    if switches.unreach {
        let (q, r) = eliminate_unreachable(&cur);
        cur = q;
        reports.push(r);
    }
    if switches.coi {
        let (q, r) = cone_of_influence(&cur);
        cur = q;
        reports.push(r);
    }
    if switches.valueset {
        let candidates: Vec<VarId> = cur
            .net
            .main_vars()
            .filter(|v| v.kind == VarKind::Input && v.scalar().is_integer() && !v.ty.is_array())
            .map(|v| v.id)
            .collect();
        for v in candidates {
            let (q, r) = value_set_abstraction(&cur, v);
            cur = q;
            reports.push(r);
        }
    }
    (cur, reports)
}
