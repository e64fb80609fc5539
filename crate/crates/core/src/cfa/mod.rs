//! Control flow automata with PLC scan-cycle semantics.
//!
//! A [`CfaNetwork`] holds every variable of a verification model, the main
//! automaton of the entry unit and one template automaton per reachable
//! callee. The main automaton always has the shape
//!
//! ```text
//! initial -> cycle-start -(havoc inputs, reset temps)-> body ... -> end-of-cycle -> cycle-start
//! ```
//!
//! Variables and locations carry ids that stay stable under every reduction,
//! so valuations and traces can be compared across model variants.

mod build;
mod dump;
mod eval;
pub mod graph;
mod inline;
mod machine;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ops::{BinOp, UnOp};
use crate::types::{Domain, ElementaryType, ScalarType, Span, Value};

pub use build::{build_cfa, lower_expr, BuildError};
pub use dump::{dump, ExprDisplay};
pub use eval::{eval_expr, Env, Fault, FaultKind, MapEnv};
pub use inline::{abstract_and_inline, inline_callees, InlineError};
pub use machine::{Chooser, CycleOutcome, Machine, NoObserver, Observer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocId(pub u32);

impl fmt::Display for LocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// Havocked at every cycle start.
    Input,
    Output,
    Local,
    /// Reset to its initial value at cycle start (and at call entry).
    Temp,
    Constant,
}

impl VarKind {
    /// Keeps its value from one cycle to the next and shows up in traces.
    pub fn is_persistent(self) -> bool {
        matches!(self, VarKind::Output | VarKind::Local)
    }

    pub fn name(self) -> &'static str {
        match self {
            VarKind::Input => "input",
            VarKind::Output => "output",
            VarKind::Local => "local",
            VarKind::Temp => "temp",
            VarKind::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    /// Qualified, network-unique name: `x`, `inst.q`, `Fb::x`, `F#3.x`.
    pub name: String,
    pub ty: ElementaryType,
    pub kind: VarKind,
    /// Values a havoc of one cell ranges over.
    pub domain: Domain,
    /// Raw initial value of every cell.
    pub init: Vec<i64>,
    pub span: Span,
    /// Template automaton this variable belongs to; `None` for variables of
    /// the main automaton.
    pub owner: Option<String>,
    /// Unit that declared the variable and its name inside that unit.
    pub unit: String,
    pub local: String,
}

impl Variable {
    pub fn scalar(&self) -> ScalarType {
        self.ty.scalar()
    }

    /// Raw offset of array element `index`, if in bounds.
    pub fn cell_of(&self, index: i64) -> Option<usize> {
        match self.ty.bounds() {
            Some((lo, hi)) if index >= lo && index <= hi => Some((index - lo) as usize),
            _ => None,
        }
    }

    /// Display names of the cells: `x`, or `a[1]`, `a[2]`, ...
    pub fn cell_names(&self) -> Vec<String> {
        match self.ty.bounds() {
            None => alloc::vec![self.name.clone()],
            Some((lo, hi)) => (lo..=hi).map(|i| alloc::format!("{}[{}]", self.name, i)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: ScalarType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    /// Raw value (booleans as 0/1).
    Const(i64),
    Var(VarId),
    Index {
        var: VarId,
        index: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// Nondeterministic choice from a domain. Only valid as the whole
    /// right-hand side of an assignment.
    Nondet(Domain),
}

impl Expr {
    pub fn constant(ty: ScalarType, raw: i64, span: Span) -> Expr {
        Expr { kind: ExprKind::Const(ty.wrap(raw)), ty, span }
    }

    pub fn bool(b: bool, span: Span) -> Expr {
        Expr::constant(ScalarType::Bool, b as i64, span)
    }

    pub fn var(var: VarId, ty: ScalarType, span: Span) -> Expr {
        Expr { kind: ExprKind::Var(var), ty, span }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Expr {
        let span = self.span;
        Expr { kind: ExprKind::Unary { op: UnOp::Not, operand: Box::new(self) }, ty: ScalarType::Bool, span }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let ty = if op.is_arithmetic() { lhs.ty } else { ScalarType::Bool };
        let span = lhs.span.join(rhs.span);
        Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, ty, span }
    }

    pub fn nondet(ty: ScalarType, domain: Domain, span: Span) -> Expr {
        Expr { kind: ExprKind::Nondet(domain), ty, span }
    }

    pub fn as_const(&self) -> Option<i64> {
        match self.kind {
            ExprKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        self.as_const() == Some(1) && self.ty == ScalarType::Bool
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Index { index, .. } => index.walk(f),
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            _ => {}
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match &mut self.kind {
            ExprKind::Index { index, .. } => index.walk_mut(f),
            ExprKind::Unary { operand, .. } => operand.walk_mut(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk_mut(f);
                rhs.walk_mut(f);
            }
            _ => {}
        }
        f(self);
    }

    /// Variables read by this expression, in evaluation order.
    pub fn reads(&self, out: &mut Vec<VarId>) {
        self.walk(&mut |e| match e.kind {
            ExprKind::Var(v) | ExprKind::Index { var: v, .. } => out.push(v),
            _ => {}
        });
    }

    pub fn mentions(&self, var: VarId) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let ExprKind::Var(v) | ExprKind::Index { var: v, .. } = e.kind {
                found |= v == var;
            }
        });
        found
    }

    /// Whether evaluation can raise a fault: a division whose divisor is not
    /// a non-zero constant, or any array read with a non-constant index.
    pub fn can_fault(&self, net: &CfaNetwork) -> bool {
        let mut can = false;
        self.walk(&mut |e| match &e.kind {
            ExprKind::Binary { op, rhs, .. } if op.can_fault() => {
                can |= !matches!(rhs.as_const(), Some(c) if c != 0);
            }
            ExprKind::Index { var, index } => {
                can |= match index.as_const() {
                    Some(i) => net.var(*var).cell_of(i).is_none(),
                    None => true,
                };
            }
            _ => {}
        });
        can
    }

    pub fn has_nondet(&self) -> bool {
        matches!(self.kind, ExprKind::Nondet(_))
    }

    pub fn rename(&mut self, map: &dyn Fn(VarId) -> VarId) {
        self.walk_mut(&mut |e| match &mut e.kind {
            ExprKind::Var(v) | ExprKind::Index { var: v, .. } => *v = map(*v),
            _ => {}
        });
    }
}

/// Assignment target: a scalar variable or an array element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub var: VarId,
    pub index: Option<Expr>,
}

impl Target {
    pub fn scalar(var: VarId) -> Target {
        Target { var, index: None }
    }

    pub fn element(var: VarId, index: Expr) -> Target {
        Target { var, index: Some(index) }
    }

    pub fn rename(&mut self, map: &dyn Fn(VarId) -> VarId) {
        self.var = map(self.var);
        if let Some(i) = &mut self.index {
            i.rename(map);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub target: Target,
    pub value: Expr,
}

impl Assignment {
    pub fn new(target: Target, value: Expr) -> Self {
        Assignment { target, value }
    }

    /// Variables read by the value and by the target's index.
    pub fn reads(&self, out: &mut Vec<VarId>) {
        self.value.reads(out);
        if let Some(i) = &self.target.index {
            i.reads(out);
        }
    }
}

/// A call of a template automaton, kept until inlining or abstraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub callee: String,
    /// Local name of the instance variable in the calling unit, for
    /// function block calls.
    pub instance: Option<String>,
    /// Formal (template variable of the callee) and actual value.
    pub inputs: Vec<(VarId, Expr)>,
    /// Formal output and the caller's target that receives it.
    pub outputs: Vec<(VarId, Target)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransKind {
    /// Cycle-start input havoc and temp reset.
    Havoc,
    /// Lowered from an assignment (or loop counter update).
    Statement,
    /// Branch of an IF/CASE/loop condition.
    Guard,
    Call,
    /// Control-flow plumbing without source meaning.
    Structural,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub source: LocId,
    pub target: LocId,
    pub guard: Expr,
    /// Executed in order; later assignments see the effect of earlier ones.
    pub assignments: Vec<Assignment>,
    pub call: Option<CallSite>,
    pub kind: TransKind,
    pub span: Span,
}

impl Transition {
    pub fn skip(source: LocId, target: LocId, span: Span) -> Self {
        Transition {
            source,
            target,
            guard: Expr::bool(true, span),
            assignments: Vec::new(),
            call: None,
            kind: TransKind::Structural,
            span,
        }
    }

    pub fn is_skip(&self) -> bool {
        self.guard.is_true() && self.assignments.is_empty() && self.call.is_none()
    }

    /// Every expression of the transition: guard, assignment values and
    /// indices, call arguments.
    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        let mut out: Vec<&Expr> = alloc::vec![&self.guard];
        for a in &self.assignments {
            out.push(&a.value);
            out.extend(a.target.index.iter());
        }
        if let Some(c) = &self.call {
            out.extend(c.inputs.iter().map(|(_, e)| e));
            out.extend(c.outputs.iter().filter_map(|(_, t)| t.index.as_ref()));
        }
        out.into_iter()
    }

    pub fn rename(&mut self, map: &dyn Fn(VarId) -> VarId) {
        self.guard.rename(map);
        for a in &mut self.assignments {
            a.target.rename(map);
            a.value.rename(map);
        }
        if let Some(c) = &mut self.call {
            for (_, e) in &mut c.inputs {
                e.rename(map);
            }
            for (_, t) in &mut c.outputs {
                t.rename(map);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocRole {
    Initial,
    CycleStart,
    EndOfCycle,
    /// Position of an assertion directive; `expr` is the assertion in the
    /// scope of this automaton.
    AssertionAnchor {
        assertion: u32,
        expr: Expr,
    },
    Plain,
}

impl LocRole {
    pub fn is_special(&self) -> bool {
        !matches!(self, LocRole::Plain)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub id: LocId,
    pub role: LocRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    pub name: String,
    pub locations: BTreeMap<LocId, Location>,
    pub transitions: Vec<Transition>,
    pub initial: LocId,
    /// Main automaton only.
    pub cycle_start: Option<LocId>,
    /// End-of-cycle for the main automaton, exit for templates.
    pub end: LocId,
    /// Formal parameters of a template: inputs, then outputs.
    pub params: Vec<VarId>,
}

impl Automaton {
    pub fn outgoing(&self, loc: LocId) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.source == loc)
    }

    pub fn call_sites(&self) -> impl Iterator<Item = &CallSite> {
        self.transitions.iter().filter_map(|t| t.call.as_ref())
    }

    /// The transition leaving cycle-start.
    pub fn havoc(&self) -> Option<&Transition> {
        let cs = self.cycle_start?;
        self.transitions.iter().find(|t| t.source == cs && t.kind == TransKind::Havoc)
    }

    pub fn havoc_mut(&mut self) -> Option<&mut Transition> {
        let cs = self.cycle_start?;
        self.transitions.iter_mut().find(|t| t.source == cs && t.kind == TransKind::Havoc)
    }

    pub fn role(&self, loc: LocId) -> &LocRole {
        &self.locations[&loc].role
    }
}

/// An assertion directive lowered into the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionInfo {
    pub id: u32,
    pub name: Option<String>,
    pub text: String,
    pub span: Span,
    /// Unit whose body contains the directive.
    pub unit: String,
    /// The expression in the scope of `unit` (template variables for callees).
    pub expr: Expr,
}

impl AssertionInfo {
    /// `name` if given, else `assertion<id>`.
    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => alloc::format!("assertion{}", self.id + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfaNetwork {
    pub entry_name: String,
    pub variables: BTreeMap<VarId, Variable>,
    pub main: Automaton,
    /// Templates of called units, in declaration order.
    pub callees: Vec<Automaton>,
    pub assertions: Vec<AssertionInfo>,
    pub next_var: u32,
    pub next_loc: u32,
}

impl CfaNetwork {
    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[&id]
    }

    pub fn var_by_name(&self, name: &str) -> Option<&Variable> {
        self.variables.values().find(|v| v.name == name)
    }

    pub fn callee(&self, name: &str) -> Option<&Automaton> {
        self.callees.iter().find(|a| a.name == name)
    }

    /// Variables of the main automaton in id (= declaration) order.
    pub fn main_vars(&self) -> impl Iterator<Item = &Variable> {
        self.variables.values().filter(|v| v.owner.is_none())
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Variable> {
        self.main_vars().filter(|v| v.kind == VarKind::Input)
    }

    pub fn has_call_sites(&self) -> bool {
        self.main.call_sites().next().is_some()
    }

    pub fn fresh_loc(&mut self) -> LocId {
        self.next_loc += 1;
        LocId(self.next_loc - 1)
    }

    pub fn add_var(&mut self, mut v: Variable) -> VarId {
        let id = VarId(self.next_var);
        self.next_var += 1;
        v.id = id;
        self.variables.insert(id, v);
        id
    }

    /// Product of the havoc domain sizes: the number of successors of every
    /// cycle-start state (saturating).
    pub fn branching_factor(&self) -> u64 {
        let Some(h) = self.main.havoc() else { return 1 };
        h.assignments.iter().fold(1u64, |acc, a| match &a.value.kind {
            ExprKind::Nondet(d) => acc.saturating_mul(d.size()),
            _ => acc,
        })
    }

    pub fn location_count(&self) -> usize {
        self.main.locations.len() + self.callees.iter().map(|a| a.locations.len()).sum::<usize>()
    }

    pub fn transition_count(&self) -> usize {
        self.main.transitions.len() + self.callees.iter().map(|a| a.transitions.len()).sum::<usize>()
    }

    /// Cell names of persistent main variables, paired with (var, cell).
    pub fn persistent_cells(&self) -> Vec<(String, VarId, usize)> {
        let mut out = Vec::new();
        for v in self.main_vars().filter(|v| v.kind.is_persistent()) {
            for (i, n) in v.cell_names().into_iter().enumerate() {
                out.push((n, v.id, i));
            }
        }
        out
    }

    /// Cell name of an assignment target with a constant (or absent) index.
    pub fn cell_name(&self, var: VarId, cell: usize) -> String {
        let v = self.var(var);
        match v.ty.bounds() {
            None => v.name.clone(),
            Some((lo, _)) => alloc::format!("{}[{}]", v.name, lo + cell as i64),
        }
    }

    /// Restrict the values the cycle-start havoc picks for input `var`.
    pub fn set_input_domain(&mut self, var: VarId, domain: Domain) {
        if let Some(v) = self.variables.get_mut(&var) {
            v.domain = domain.clone();
        }
        if let Some(h) = self.main.havoc_mut() {
            for a in &mut h.assignments {
                if a.target.var == var {
                    if let ExprKind::Nondet(d) = &mut a.value.kind {
                        *d = domain.clone();
                    }
                }
            }
        }
    }

    pub fn value_of(&self, var: VarId, raw: i64) -> Value {
        Value::from_raw(self.var(var).scalar(), raw)
    }
}
