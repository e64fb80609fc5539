//! Iterative verification: callees start abstracted (their outputs become
//! nondeterministic), counterexamples are replayed on the concrete program,
//! and a callee is concretized whenever a counterexample turns out spurious.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::cex::{replay, validate, Step, ValidationResult};
use crate::cfa::{abstract_and_inline, inline_callees, CfaNetwork, ExprKind, InlineError, LocRole, TransKind, VarId};
use crate::engine::{check, EngineConfig, Outcome, Verdict, VerdictKind};
use crate::requirements::{CheckAt, VerificationProblem};

/// One round of the refinement loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: u32,
    /// Callees abstracted during this round, in declaration order.
    pub abstracted: Vec<String>,
    pub verdict: VerdictKind,
    /// Outcome of replaying the counterexample on the concrete program.
    pub validation: Option<ValidationResult>,
    pub states_explored: u64,
    /// As measured by the caller's clock.
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AbstractionState {
    pub abstracted: BTreeSet<String>,
    /// Concretized callees with the iteration after which they were
    /// concretized (0: never abstractable, they contain the property).
    pub concretized: Vec<(String, u32)>,
    pub iterations: Vec<IterationRecord>,
}

/// `p` with call sites of `names` replaced by nondeterministic outputs and
/// all other calls inlined.
pub fn abstract_functions(
    p: &VerificationProblem,
    names: &BTreeSet<String>,
) -> Result<VerificationProblem, InlineError> {
    Ok(p.with_net(abstract_and_inline(&p.net, names)?))
}

/// Callees whose bodies hold the property's anchor, and their callers:
/// abstracting them would drop the check.
fn protected(p: &VerificationProblem) -> BTreeSet<String> {
    let CheckAt::Anchor(id) = p.property.at else {
        return BTreeSet::new();
    };
    let mut out: BTreeSet<String> = p
        .net
        .callees
        .iter()
        .filter(|a| {
            a.locations
                .values()
                .any(|l| matches!(l.role, LocRole::AssertionAnchor { assertion, .. } if assertion == id))
        })
        .map(|a| a.name.clone())
        .collect();
    loop {
        let before = out.len();
        for a in &p.net.callees {
            if a.call_sites().any(|cs| out.contains(&cs.callee)) {
                out.insert(a.name.clone());
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

/// Variables written by each abstracted call site of `abs`, with the callee.
fn abstracted_writes(
    p: &VerificationProblem,
    abs: &CfaNetwork,
    abstracted: &BTreeSet<String>,
) -> Vec<(String, BTreeSet<VarId>)> {
    let mut callee_at = BTreeMap::new();
    for a in core::iter::once(&p.net.main).chain(&p.net.callees) {
        for t in &a.transitions {
            if let Some(cs) = &t.call {
                callee_at.insert((t.span.start, t.span.end), cs.callee.clone());
            }
        }
    }
    let mut out = Vec::new();
    for t in abs.main.transitions.iter().filter(|t| t.kind == TransKind::Call) {
        let Some(callee) = callee_at.get(&(t.span.start, t.span.end)).filter(|c| abstracted.contains(*c)) else {
            continue;
        };
        let mut havocked = BTreeSet::new();
        for a in &t.assignments {
            let fresh = match &a.value.kind {
                ExprKind::Nondet(_) => true,
                ExprKind::Var(v) => havocked.contains(v),
                _ => false,
            };
            if fresh {
                havocked.insert(a.target.var);
            }
        }
        if !havocked.is_empty() {
            out.push((callee.clone(), havocked));
        }
    }
    out
}

/// The abstracted callee to concretize after a spurious counterexample:
/// the one whose call sites define the divergent variable, else the one
/// closest to it (or to the property) along data dependencies, else the
/// first in declaration order.
fn pick(p: &VerificationProblem, abs: &CfaNetwork, state: &AbstractionState, divergent: Option<&str>) -> String {
    let order: Vec<&String> = p.net.callees.iter().map(|a| &a.name).filter(|n| state.abstracted.contains(*n)).collect();
    let writes = abstracted_writes(p, abs, &state.abstracted);
    let mut frontier: BTreeSet<VarId> = BTreeSet::new();
    let base = divergent.map(|d| d.split('[').next().unwrap_or(d));
    if let Some(v) = base.and_then(|b| abs.var_by_name(b)) {
        frontier.insert(v.id);
    } else {
        let mut reads = Vec::new();
        for (_, e) in p.property.check_points(abs) {
            e.reads(&mut reads);
        }
        frontier.extend(reads);
    }
    let mut seen = frontier.clone();
    while !frontier.is_empty() {
        let hit: BTreeSet<&String> = writes.iter().filter(|(_, w)| !w.is_disjoint(&frontier)).map(|(c, _)| c).collect();
        if let Some(c) = order.iter().find(|c| hit.contains(**c)) {
            return (*c).clone();
        }
        let mut next = BTreeSet::new();
        for t in &abs.main.transitions {
            for a in t.assignments.iter().filter(|a| frontier.contains(&a.target.var)) {
                let mut reads = Vec::new();
                a.reads(&mut reads);
                t.guard.reads(&mut reads);
                next.extend(reads.into_iter().filter(|v| seen.insert(*v)));
            }
        }
        frontier = next;
    }
    order[0].clone()
}

/// [`iterative_verify_with`] with `p.config.max_iters` and no clock.
pub fn iterative_verify(p: &VerificationProblem, cfg: &EngineConfig) -> (Verdict, AbstractionState) {
    iterative_verify_with(p, cfg, p.config.max_iters, &|| 0)
}

/// Verify with every callee abstracted, concretizing one callee per
/// spurious counterexample. `now` returns milliseconds for the records.
pub fn iterative_verify_with(
    p: &VerificationProblem,
    cfg: &EngineConfig,
    max_iters: u32,
    now: &dyn Fn() -> u64,
) -> (Verdict, AbstractionState) {
    let keep = protected(p);
    let mut state = AbstractionState::default();
    for a in &p.net.callees {
        if keep.contains(&a.name) {
            state.concretized.push((a.name.clone(), 0));
        } else {
            state.abstracted.insert(a.name.clone());
        }
    }
    let mut iteration = 0;
    loop {
        if iteration >= max_iters.max(1) {
            let v = Verdict::unknown(alloc::format!("no conclusive verdict after {iteration} iterations"));
            return (v, state);
        }
        iteration += 1;
        let start = now();
        let abs = abstract_and_inline(&p.net, &state.abstracted).expect("callees of the network");
        let q = p.with_net(abs);
        let v = check(&q, cfg);
        let mut record = IterationRecord {
            iteration,
            abstracted: p.net.callees.iter().map(|a| a.name.clone()).filter(|n| state.abstracted.contains(n)).collect(),
            verdict: v.kind(),
            validation: None,
            states_explored: v.stats.states_explored,
            elapsed_ms: 0,
        };
        let trace = match &v.outcome {
            Outcome::Violated(t) | Outcome::Fault(t) if !state.abstracted.is_empty() => t.clone(),
            _ => {
                record.elapsed_ms = now().saturating_sub(start);
                state.iterations.push(record);
                return (v, state);
            }
        };
        let result = validate(p, &trace);
        record.validation = Some(result.clone());
        record.elapsed_ms = now().saturating_sub(start);
        state.iterations.push(record);
        match result {
            ValidationResult::Feasible => return (concrete_trace(p, v, &trace), state),
            ValidationResult::Spurious { variable, .. } => {
                let c = pick(p, &q.net, &state, variable.as_deref());
                state.abstracted.remove(&c);
                state.concretized.push((c, iteration));
            }
        }
    }
}

/// Swap the abstract counterexample for its concrete replay, so that the
/// reported values are those of the real program.
fn concrete_trace(p: &VerificationProblem, v: Verdict, t: &crate::cex::Trace) -> Verdict {
    let steps: Vec<Step> = t.cycles.iter().map(|c| Step { inputs: c.inputs.clone(), choices: Vec::new() }).collect();
    match replay(&inline_callees(&p.net), &p.property, &steps) {
        Ok(ct) if ct.violation.is_some() => {
            let outcome = match v.outcome {
                Outcome::Fault(_) => Outcome::Fault(ct),
                _ => Outcome::Violated(ct),
            };
            Verdict { outcome, stats: v.stats }
        }
        _ => v,
    }
}

#[cfg(test)]
mod tests;
