//! Call-site expansion. Function block calls are mapped onto the instance's
//! variables; every function call gets a fresh frame.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::build::havoc_assignments;
use super::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InlineError {
    UnknownCallee(String),
}

impl fmt::Display for InlineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InlineError::UnknownCallee(n) => write!(f, "unknown callee `{n}`"),
        }
    }
}

impl core::error::Error for InlineError {}

/// Replace every call site by a renamed copy of the callee body.
pub fn inline_callees(net: &CfaNetwork) -> CfaNetwork {
    abstract_and_inline(net, &BTreeSet::new()).expect("callees of a built network exist")
}

/// Replace call sites of the callees in `abstracted` by havoc of their
/// outputs, and inline all others. The result has no templates.
pub fn abstract_and_inline(net: &CfaNetwork, abstracted: &BTreeSet<String>) -> Result<CfaNetwork, InlineError> {
    for name in abstracted {
        if net.callee(name).is_none() {
            return Err(InlineError::UnknownCallee(name.clone()));
        }
    }
    if net.callees.is_empty() {
        return Ok(net.clone());
    }
    let mut inl = Inliner {
        net: net.clone(),
        names: net.variables.values().map(|v| (v.name.clone(), v.id)).collect(),
        memo: BTreeMap::new(),
        abstracted,
        frames: 0,
    };
    let main = inl.expand(net.main.clone(), None)?;
    let mut out = inl.net;
    out.main = main;
    out.callees.clear();
    out.variables.retain(|_, v| v.owner.is_none());
    let span = out.main.havoc().map(|h| h.span).unwrap_or_default();
    let havoc = havoc_assignments(&out, span);
    if let Some(h) = out.main.havoc_mut() {
        h.assignments = havoc;
    }
    Ok(out)
}

struct Inliner<'a> {
    net: CfaNetwork,
    names: BTreeMap<String, VarId>,
    memo: BTreeMap<String, Automaton>,
    abstracted: &'a BTreeSet<String>,
    frames: u32,
}

fn scoped(owner: &Option<String>, local: &str) -> String {
    match owner {
        None => String::from(local),
        Some(t) => format!("{t}::{local}"),
    }
}

impl Inliner<'_> {
    /// The variable `local` of the scope `owner`, created from `like` when
    /// it does not exist yet.
    fn scoped_var(&mut self, owner: &Option<String>, unit: &str, local: &str, like: &Variable, kind: VarKind) -> VarId {
        let name = scoped(owner, local);
        if let Some(id) = self.names.get(&name) {
            return *id;
        }
        let id = self.net.add_var(Variable {
            id: VarId(0),
            name: name.clone(),
            ty: like.ty,
            kind,
            domain: like.domain.clone(),
            init: like.init.clone(),
            span: like.span,
            owner: owner.clone(),
            unit: String::from(unit),
            local: String::from(local),
        });
        self.names.insert(name, id);
        id
    }

    fn caller_unit(&self, owner: &Option<String>) -> String {
        owner.clone().unwrap_or_else(|| self.net.entry_name.clone())
    }

    /// Instance variable in the caller scope for the callee variable `v`.
    fn instance_var(&mut self, owner: &Option<String>, instance: &str, v: VarId) -> VarId {
        let var = self.net.var(v).clone();
        let kind = match var.kind {
            VarKind::Temp => VarKind::Temp,
            VarKind::Constant => VarKind::Constant,
            _ => VarKind::Local,
        };
        let unit = self.caller_unit(owner);
        self.scoped_var(owner, &unit, &format!("{instance}.{}", var.local), &var, kind)
    }

    fn expand(&mut self, mut auto: Automaton, owner: Option<String>) -> Result<Automaton, InlineError> {
        let transitions = core::mem::take(&mut auto.transitions);
        for t in transitions {
            let Some(cs) = t.call.clone() else {
                auto.transitions.push(t);
                continue;
            };
            if self.abstracted.contains(&cs.callee) {
                let a = self.abstraction(&t, &cs, &owner)?;
                auto.transitions.push(a);
                continue;
            }
            let body = self.expanded(&cs.callee)?;
            self.splice(&mut auto, &t, &cs, body, &owner);
        }
        Ok(auto)
    }

    fn expanded(&mut self, name: &str) -> Result<Automaton, InlineError> {
        if let Some(a) = self.memo.get(name) {
            return Ok(a.clone());
        }
        let template = self.net.callee(name).cloned().ok_or_else(|| InlineError::UnknownCallee(name.into()))?;
        let a = self.expand(template, Some(String::from(name)))?;
        self.memo.insert(String::from(name), a.clone());
        Ok(a)
    }

    fn var_map(&mut self, body: &Automaton, cs: &CallSite, owner: &Option<String>) -> BTreeMap<VarId, VarId> {
        let mut reads = Vec::new();
        let mut used: BTreeSet<VarId> = body.params.iter().copied().collect();
        for t in &body.transitions {
            for e in t.exprs() {
                e.reads(&mut reads);
            }
            used.extend(t.assignments.iter().map(|a| a.target.var));
        }
        for l in body.locations.values() {
            if let LocRole::AssertionAnchor { expr, .. } = &l.role {
                expr.reads(&mut reads);
            }
        }
        used.extend(reads);

        self.frames += 1;
        let frame = self.frames;
        let mut map = BTreeMap::new();
        for v in used {
            let var = self.net.var(v).clone();
            if var.owner.as_deref() != Some(cs.callee.as_str()) {
                map.insert(v, v);
                continue;
            }
            let new = match (&cs.instance, var.unit == cs.callee) {
                (Some(inst), true) => self.instance_var(owner, inst, v),
                _ => {
                    let local = format!("{}#{frame}.{}", var.unit, var.local);
                    let kind = if var.kind == VarKind::Constant { VarKind::Constant } else { VarKind::Temp };
                    let unit = var.unit.clone();
                    self.scoped_var(owner, &unit, &local, &var, kind)
                }
            };
            map.insert(v, new);
        }
        map
    }

    fn splice(&mut self, auto: &mut Automaton, t: &Transition, cs: &CallSite, body: Automaton, owner: &Option<String>) {
        let map = self.var_map(&body, cs, owner);
        let rename = |v: VarId| map.get(&v).copied().unwrap_or(v);
        let mut locs = BTreeMap::new();
        for l in body.locations.values() {
            let id = self.net.fresh_loc();
            locs.insert(l.id, id);
            let mut role = l.role.clone();
            if let LocRole::AssertionAnchor { expr, .. } = &mut role {
                expr.rename(&rename);
            }
            auto.locations.insert(id, Location { id, role });
        }
        let entry = locs[&body.initial];
        let exit = locs[&body.end];

        let inputs = cs.inputs.iter().map(|(f, e)| Assignment::new(Target::scalar(rename(*f)), e.clone())).collect();
        auto.transitions.push(Transition {
            source: t.source,
            target: entry,
            guard: t.guard.clone(),
            assignments: inputs,
            call: None,
            kind: TransKind::Call,
            span: t.span,
        });
        for bt in &body.transitions {
            let mut c = bt.clone();
            c.source = locs[&bt.source];
            c.target = locs[&bt.target];
            c.rename(&rename);
            auto.transitions.push(c);
        }
        let outputs = cs
            .outputs
            .iter()
            .map(|(f, target)| {
                let fv = rename(*f);
                let ty = self.net.var(fv).scalar();
                Assignment::new(target.clone(), Expr::var(fv, ty, t.span))
            })
            .collect();
        auto.transitions.push(Transition {
            source: exit,
            target: t.target,
            guard: Expr::bool(true, t.span),
            assignments: outputs,
            call: None,
            kind: TransKind::Structural,
            span: t.span,
        });
    }

    fn abstraction(
        &mut self,
        t: &Transition,
        cs: &CallSite,
        owner: &Option<String>,
    ) -> Result<Transition, InlineError> {
        let template = self.net.callee(&cs.callee).ok_or_else(|| InlineError::UnknownCallee(cs.callee.clone()))?;
        let outs: Vec<VarId> =
            template.params.iter().copied().filter(|p| self.net.var(*p).kind == VarKind::Output).collect();
        let mut assignments = Vec::new();
        let span = t.span;
        match &cs.instance {
            Some(inst) => {
                for (f, e) in &cs.inputs {
                    let iv = self.instance_var(owner, inst, *f);
                    assignments.push(Assignment::new(Target::scalar(iv), e.clone()));
                }
                for o in outs {
                    let iv = self.instance_var(owner, inst, o);
                    let var = self.net.var(iv).clone();
                    let nd = Expr::nondet(var.scalar(), var.domain.clone(), span);
                    match var.ty.bounds() {
                        None => assignments.push(Assignment::new(Target::scalar(iv), nd)),
                        Some((lo, hi)) => {
                            for i in lo..=hi {
                                let idx = Expr::constant(crate::types::ScalarType::Int, i, span);
                                assignments.push(Assignment::new(Target::element(iv, idx), nd.clone()));
                            }
                        }
                    }
                }
                for (f, target) in &cs.outputs {
                    let iv = self.instance_var(owner, inst, *f);
                    let ty = self.net.var(iv).scalar();
                    assignments.push(Assignment::new(target.clone(), Expr::var(iv, ty, span)));
                }
            }
            None => {
                for (f, target) in &cs.outputs {
                    let var = self.net.var(*f);
                    let nd = Expr::nondet(var.scalar(), var.domain.clone(), span);
                    assignments.push(Assignment::new(target.clone(), nd));
                }
            }
        }
        Ok(Transition {
            source: t.source,
            target: t.target,
            guard: t.guard.clone(),
            assignments,
            call: None,
            kind: TransKind::Call,
            span,
        })
    }
}
