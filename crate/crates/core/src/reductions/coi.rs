//! Cone of influence: keep only what can affect the property.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{inlined, prune_unreachable, remove_unreferenced, Pass, ReductionReport};
use crate::cfa::graph::Graph;
use crate::cfa::{CfaNetwork, Expr, LocId, LocRole, Target, TransKind, VarId};
use crate::requirements::{CheckAt, VerificationProblem};

fn target_can_fault(t: &Target, net: &CfaNetwork) -> bool {
    match &t.index {
        None => false,
        Some(i) => i.can_fault(net) || i.as_const().is_none_or(|c| net.var(t.var).cell_of(c).is_none()),
    }
}

struct Cone {
    g: Graph,
    cd: Vec<Vec<usize>>,
    vars: BTreeSet<VarId>,
    /// Branch locations (graph indices) whose decision matters.
    branches: BTreeSet<usize>,
    changed: bool,
}

impl Cone {
    fn read(&mut self, e: &Expr) {
        let mut v = Vec::new();
        e.reads(&mut v);
        for x in v {
            self.changed |= self.vars.insert(x);
        }
    }

    /// Everything controlling whether `loc` executes matters.
    fn controls(&mut self, loc: LocId) {
        let i = self.g.idx(loc);
        for b in self.cd[i].clone() {
            self.changed |= self.branches.insert(b);
        }
    }
}

/// Remove assignments and variables outside the backward data and control
/// dependence closure of the property. Loop conditions and fault-capable
/// expressions are always kept, so termination and faults are preserved.
pub fn cone_of_influence(p: &VerificationProblem) -> (VerificationProblem, ReductionReport) {
    let mut net = inlined(p);
    let mut report = ReductionReport::new(Pass::ConeOfInfluence, &net);
    let g = Graph::of(&net.main);
    let cd = g.control_deps(&g.ipdom());
    let loop_heads: Vec<usize> = match g.loops() {
        Some(ls) => ls.into_iter().map(|(h, _)| h).collect(),
        // irreducible: every branch is kept
        None => (0..g.nodes.len()).filter(|i| g.succ[*i].len() > 1).collect(),
    };
    let mut c = Cone { g, cd, vars: BTreeSet::new(), branches: BTreeSet::new(), changed: true };

    for (l, e) in p.property.check_points(&net) {
        c.read(e);
        c.controls(l);
    }
    for h in loop_heads {
        c.branches.insert(h);
    }
    // fault-capable statements are seeds: their targets become relevant
    for t in &net.main.transitions {
        if t.kind == TransKind::Havoc {
            continue;
        }
        if t.guard.can_fault(&net) {
            c.branches.insert(c.g.idx(t.source));
        }
        for a in &t.assignments {
            if a.value.can_fault(&net) || target_can_fault(&a.target, &net) {
                c.vars.insert(a.target.var);
            }
        }
    }

    while c.changed {
        c.changed = false;
        for b in c.branches.clone() {
            let loc = c.g.nodes[b];
            for (_, t) in net.main.outgoing(loc) {
                c.read(&t.guard);
            }
            c.controls(loc);
        }
        for t in &net.main.transitions {
            for a in &t.assignments {
                if c.vars.contains(&a.target.var) {
                    if !a.value.has_nondet() {
                        c.read(&a.value);
                    }
                    if let Some(i) = &a.target.index {
                        c.read(i);
                    }
                    if t.kind != TransKind::Havoc {
                        c.controls(t.source);
                    }
                }
            }
        }
    }

    let Cone { vars, branches, g, .. } = c;
    let relevant_branch: BTreeSet<LocId> = branches.iter().map(|b| g.nodes[*b]).collect();
    let mut removed = 0;
    for t in &mut net.main.transitions {
        let before = t.assignments.len();
        t.assignments.retain(|a| vars.contains(&a.target.var));
        removed += before - t.assignments.len();
    }
    // a decision nothing depends on: keep the first alternative only
    let mut taken: BTreeSet<LocId> = BTreeSet::new();
    net.main.transitions.retain_mut(|t| {
        if t.kind == TransKind::Havoc || relevant_branch.contains(&t.source) {
            return true;
        }
        if !taken.insert(t.source) {
            return false;
        }
        if !t.guard.is_true() {
            t.guard = Expr::bool(true, t.guard.span);
        }
        true
    });
    prune_unreachable(&mut net);
    let own = match p.property.at {
        CheckAt::Anchor(id) => Some(id),
        CheckAt::EndOfCycle => None,
    };
    for l in net.main.locations.values_mut() {
        if let LocRole::AssertionAnchor { assertion, .. } = l.role {
            if Some(assertion) != own {
                l.role = LocRole::Plain;
            }
        }
    }
    remove_unreferenced(&mut net, &p.property);
    report.assignments_removed = removed;
    let out = p.with_net(net);
    let report = report.finish(&out.net);
    (out, report)
}
