//! Lowering of a resolved syntax tree to a [`CfaNetwork`].

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::*;
use crate::syntax::{self as ast, AssertionDirective, DeclType, StmtKind, TypedAst, UnitKind, VarSection};
use crate::syntax::{Block, BlockId, CaseLabel, Diagnostic};
use crate::types::{ScalarType, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuildError {
    EntryNotFound(String),
    /// The entry is a FUNCTION.
    EntryKind(String),
    /// Units forming a call or instantiation cycle, starting and ending with
    /// the same name.
    Recursion(Vec<String>),
    Unsupported {
        span: Span,
        what: String,
    },
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::EntryNotFound(n) => write!(f, "entry point `{n}` not found"),
            BuildError::EntryKind(n) => {
                write!(f, "entry point `{n}` must be a PROGRAM or FUNCTION_BLOCK")
            }
            BuildError::Recursion(cycle) => write!(f, "recursion detected: {}", cycle.join(" -> ")),
            BuildError::Unsupported { what, .. } => write!(f, "unsupported construct: {what}"),
        }
    }
}

impl core::error::Error for BuildError {}

impl From<BuildError> for Diagnostic {
    fn from(e: BuildError) -> Diagnostic {
        let span = match &e {
            BuildError::Unsupported { span, .. } => *span,
            _ => Span::default(),
        };
        Diagnostic::error(span, e.to_string())
    }
}

/// Build the network for `entry`. Assertions located in units that are not
/// reachable from `entry` are ignored.
pub fn build_cfa(ast: &TypedAst, entry: &str, assertions: &[AssertionDirective]) -> Result<CfaNetwork, BuildError> {
    let unit = ast.unit(entry).ok_or_else(|| BuildError::EntryNotFound(entry.to_string()))?;
    if matches!(unit.kind, UnitKind::Function(_)) {
        return Err(BuildError::EntryKind(entry.to_string()));
    }
    let order = reachable_units(ast, entry)?;
    let mut b = Builder {
        ast,
        net: CfaNetwork {
            entry_name: entry.to_string(),
            variables: BTreeMap::new(),
            main: empty_automaton(entry),
            callees: Vec::new(),
            assertions: Vec::new(),
            next_var: 0,
            next_loc: 0,
        },
        names: BTreeMap::new(),
        anchors: BTreeMap::new(),
        anchor_exprs: BTreeMap::new(),
        calls: 0,
    };

    b.declare_unit(&Scope::Main, unit, "");
    let callees: Vec<&ast::Unit> = order.iter().filter(|n| n.as_str() != entry).filter_map(|n| ast.unit(n)).collect();
    for c in &callees {
        b.declare_unit(&Scope::Template(c.name.clone()), c, "");
    }

    for d in assertions {
        let scope = if d.unit == entry {
            Scope::Main
        } else if callees.iter().any(|c| c.name == d.unit) {
            Scope::Template(d.unit.clone())
        } else {
            continue;
        };
        let id = b.net.assertions.len() as u32;
        let expr = b.pure_expr(&scope, &d.expr)?;
        b.anchors.entry((d.anchor.block, d.anchor.index)).or_default().push(id);
        b.anchor_exprs.insert(id, (scope, expr.clone()));
        b.net.assertions.push(AssertionInfo {
            id,
            name: d.name.clone(),
            text: d.expression_text.clone(),
            span: d.span,
            unit: d.unit.clone(),
            expr,
        });
    }

    for c in &callees {
        let a = b.template(c)?;
        b.net.callees.push(a);
    }
    let main = b.main(unit)?;
    b.net.main = main;
    Ok(b.net)
}

/// Lower a resolved expression over the entry unit's variables. Calls are
/// not allowed.
pub fn lower_expr(net: &CfaNetwork, e: &ast::Expr) -> Result<Expr, BuildError> {
    let names: BTreeMap<String, VarId> = net.main_vars().map(|v| (v.name.clone(), v.id)).collect();
    lower_pure(&names, &|n| n.to_string(), e)
}

fn lower_pure(
    names: &BTreeMap<String, VarId>,
    scoped: &dyn Fn(&str) -> String,
    e: &ast::Expr,
) -> Result<Expr, BuildError> {
    let ty = e.scalar_type();
    let lookup = |n: &str| {
        names.get(&scoped(n)).copied().ok_or_else(|| BuildError::Unsupported {
            span: e.span,
            what: format!("reference to `{n}` outside the verified program"),
        })
    };
    let kind = match &e.kind {
        ast::ExprKind::Bool(b) => ExprKind::Const(*b as i64),
        ast::ExprKind::Int(v) => ExprKind::Const(ty.wrap(*v)),
        ast::ExprKind::Var(n) => ExprKind::Var(lookup(n)?),
        ast::ExprKind::Index { array, index } => {
            ExprKind::Index { var: lookup(array)?, index: Box::new(lower_pure(names, scoped, index)?) }
        }
        ast::ExprKind::Unary { op, operand } => {
            ExprKind::Unary { op: *op, operand: Box::new(lower_pure(names, scoped, operand)?) }
        }
        ast::ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
            op: *op,
            lhs: Box::new(lower_pure(names, scoped, lhs)?),
            rhs: Box::new(lower_pure(names, scoped, rhs)?),
        },
        ast::ExprKind::Call(_) => {
            return Err(BuildError::Unsupported { span: e.span, what: "function call in a requirement".into() })
        }
    };
    Ok(Expr { kind, ty, span: e.span })
}

fn empty_automaton(name: &str) -> Automaton {
    Automaton {
        name: name.to_string(),
        locations: BTreeMap::new(),
        transitions: Vec::new(),
        initial: LocId(0),
        cycle_start: None,
        end: LocId(0),
        params: Vec::new(),
    }
}

/// Units reachable from `entry` through calls and instance declarations, in
/// declaration order; rejects cycles.
fn reachable_units(ast: &TypedAst, entry: &str) -> Result<Vec<String>, BuildError> {
    fn deps(unit: &ast::Unit) -> Vec<String> {
        let mut out = Vec::new();
        for v in &unit.vars {
            if let DeclType::Instance(fb) = &v.ty {
                out.push(fb.clone());
            }
        }
        unit.body.walk_blocks(&mut |b| {
            for s in &b.stmts {
                let mut exprs: Vec<&ast::Expr> = Vec::new();
                match &s.kind {
                    StmtKind::Assign { target, value } => {
                        exprs.push(value);
                        exprs.extend(target.index.as_deref());
                    }
                    StmtKind::If { branches, .. } => exprs.extend(branches.iter().map(|(c, _)| c)),
                    StmtKind::Case { selector, .. } => exprs.push(selector),
                    StmtKind::For { from, to, .. } => {
                        exprs.push(from);
                        exprs.push(to);
                    }
                    StmtKind::While { cond, .. } => exprs.push(cond),
                    StmtKind::Repeat { until, .. } => exprs.push(until),
                    StmtKind::Call(c) => {
                        if let Some(ast::CallKind::Function(f)) = &c.resolved {
                            out.push(f.clone());
                        }
                        for a in &c.args {
                            if let ast::Arg::Positional(e) | ast::Arg::Input { value: e, .. } = a {
                                exprs.push(e);
                            }
                        }
                    }
                    _ => {}
                }
                for e in exprs {
                    e.walk(&mut |n| {
                        if let ast::ExprKind::Call(c) = &n.kind {
                            out.push(c.callee.clone());
                        }
                    });
                }
            }
        });
        out
    }

    fn visit(
        ast: &TypedAst,
        name: &str,
        stack: &mut Vec<String>,
        done: &mut BTreeSet<String>,
    ) -> Result<(), BuildError> {
        if let Some(pos) = stack.iter().position(|s| s == name) {
            let mut cycle = stack[pos..].to_vec();
            cycle.push(name.to_string());
            return Err(BuildError::Recursion(cycle));
        }
        if done.contains(name) {
            return Ok(());
        }
        let Some(unit) = ast.unit(name) else {
            return Ok(());
        };
        stack.push(name.to_string());
        for d in deps(unit) {
            visit(ast, &d, stack, done)?;
        }
        stack.pop();
        done.insert(name.to_string());
        Ok(())
    }

    let mut done = BTreeSet::new();
    visit(ast, entry, &mut Vec::new(), &mut done)?;
    Ok(ast.units.iter().filter(|u| done.contains(&u.name)).map(|u| u.name.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Scope {
    Main,
    Template(String),
}

impl Scope {
    fn name(&self, local: &str) -> String {
        match self {
            Scope::Main => local.to_string(),
            Scope::Template(t) => format!("{t}::{local}"),
        }
    }

    fn owner(&self) -> Option<String> {
        match self {
            Scope::Main => None,
            Scope::Template(t) => Some(t.clone()),
        }
    }
}

struct Builder<'a> {
    ast: &'a TypedAst,
    net: CfaNetwork,
    names: BTreeMap<String, VarId>,
    anchors: BTreeMap<(BlockId, usize), Vec<u32>>,
    anchor_exprs: BTreeMap<u32, (Scope, Expr)>,
    calls: u32,
}

/// Lowering state of one automaton.
struct Cx {
    scope: Scope,
    auto: Automaton,
    cur: LocId,
    /// Exit locations of the enclosing loops.
    loops: Vec<LocId>,
    body_end: LocId,
}

impl<'a> Builder<'a> {
    fn declare_unit(&mut self, scope: &Scope, unit: &ast::Unit, prefix: &str) {
        let unit_name = match scope {
            Scope::Main => self.net.entry_name.clone(),
            Scope::Template(t) => t.clone(),
        };
        for decl in &unit.vars {
            let local = format!("{prefix}{}", decl.name);
            match &decl.ty {
                DeclType::Instance(fb) => {
                    if let Some(fb_unit) = self.ast.unit(fb) {
                        self.declare_unit_members(scope, &unit_name, fb_unit, &format!("{local}."));
                    }
                }
                DeclType::Elementary(ty) => {
                    let kind = if prefix.is_empty() {
                        match decl.section {
                            VarSection::Input => VarKind::Input,
                            VarSection::Output => VarKind::Output,
                            VarSection::Local => VarKind::Local,
                            VarSection::Temp => VarKind::Temp,
                            VarSection::Constant => VarKind::Constant,
                        }
                    } else {
                        member_kind(decl.section)
                    };
                    self.add(scope, &unit_name, &local, *ty, kind, decl.init.as_deref(), decl.span);
                }
            }
        }
    }

    fn declare_unit_members(&mut self, scope: &Scope, unit_name: &str, fb: &ast::Unit, prefix: &str) {
        for decl in &fb.vars {
            let local = format!("{prefix}{}", decl.name);
            match &decl.ty {
                DeclType::Instance(inner) => {
                    if let Some(inner_unit) = self.ast.unit(inner) {
                        self.declare_unit_members(scope, unit_name, inner_unit, &format!("{local}."));
                    }
                }
                DeclType::Elementary(ty) => {
                    let kind = member_kind(decl.section);
                    self.add(scope, unit_name, &local, *ty, kind, decl.init.as_deref(), decl.span);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn add(
        &mut self,
        scope: &Scope,
        unit: &str,
        local: &str,
        ty: ElementaryType,
        kind: VarKind,
        init: Option<&[crate::types::Value]>,
        span: Span,
    ) -> VarId {
        let mut cells: Vec<i64> = alloc::vec![0; ty.cells()];
        if let Some(init) = init {
            for (c, v) in cells.iter_mut().zip(init) {
                *c = v.raw();
            }
        }
        let name = scope.name(local);
        let id = self.net.add_var(Variable {
            id: VarId(0),
            name: name.clone(),
            ty,
            kind,
            domain: ty.scalar().full_domain(),
            init: cells,
            span,
            owner: scope.owner(),
            unit: unit.to_string(),
            local: local.to_string(),
        });
        self.names.insert(name, id);
        id
    }

    fn lookup(&self, scope: &Scope, local: &str, span: Span) -> Result<VarId, BuildError> {
        self.names
            .get(&scope.name(local))
            .copied()
            .ok_or_else(|| BuildError::Unsupported { span, what: format!("unresolved variable `{local}`") })
    }

    fn pure_expr(&self, scope: &Scope, e: &ast::Expr) -> Result<Expr, BuildError> {
        lower_pure(&self.names, &|n| scope.name(n), e)
    }

    fn loc(&mut self, cx: &mut Cx, role: LocRole) -> LocId {
        let id = self.net.fresh_loc();
        cx.auto.locations.insert(id, Location { id, role });
        id
    }

    fn new_cx(&mut self, scope: Scope, unit: &ast::Unit) -> Cx {
        Cx { scope, auto: empty_automaton(&unit.name), cur: LocId(0), loops: Vec::new(), body_end: LocId(0) }
    }

    fn main(&mut self, unit: &ast::Unit) -> Result<Automaton, BuildError> {
        let mut cx = self.new_cx(Scope::Main, unit);
        let initial = self.loc(&mut cx, LocRole::Initial);
        let cycle_start = self.loc(&mut cx, LocRole::CycleStart);
        let body_start = self.loc(&mut cx, LocRole::Plain);
        let body_end = self.loc(&mut cx, LocRole::Plain);
        let end = self.loc(&mut cx, LocRole::EndOfCycle);
        cx.auto.initial = initial;
        cx.auto.cycle_start = Some(cycle_start);
        cx.auto.end = end;
        cx.body_end = body_end;
        let span = Span::new(unit.span.file, unit.span.start, unit.span.start);
        cx.auto.transitions.push(Transition::skip(initial, cycle_start, span));
        cx.auto.transitions.push(Transition {
            source: cycle_start,
            target: body_start,
            guard: Expr::bool(true, span),
            assignments: Vec::new(),
            call: None,
            kind: TransKind::Havoc,
            span,
        });
        cx.cur = body_start;
        self.block(&mut cx, &unit.body)?;
        let end_span = Span::new(unit.body.span.file, unit.body.span.end, unit.body.span.end);
        cx.auto.transitions.push(Transition::skip(cx.cur, body_end, end_span));
        cx.auto.transitions.push(Transition::skip(body_end, end, end_span));
        cx.auto.transitions.push(Transition::skip(end, cycle_start, end_span));
        let mut auto = cx.auto;
        auto.transitions[1].assignments = havoc_assignments(&self.net, span);
        Ok(auto)
    }

    fn template(&mut self, unit: &ast::Unit) -> Result<Automaton, BuildError> {
        let scope = Scope::Template(unit.name.clone());
        let mut cx = self.new_cx(scope.clone(), unit);
        let initial = self.loc(&mut cx, LocRole::Plain);
        let body_start = self.loc(&mut cx, LocRole::Plain);
        let exit = self.loc(&mut cx, LocRole::Plain);
        cx.auto.initial = initial;
        cx.auto.end = exit;
        cx.body_end = exit;
        let span = Span::new(unit.span.file, unit.span.start, unit.span.start);
        cx.auto.transitions.push(Transition::skip(initial, body_start, span));
        cx.cur = body_start;
        self.block(&mut cx, &unit.body)?;
        let end_span = Span::new(unit.body.span.file, unit.body.span.end, unit.body.span.end);
        cx.auto.transitions.push(Transition::skip(cx.cur, exit, end_span));

        let is_function = matches!(unit.kind, UnitKind::Function(_));
        let owner = Some(unit.name.clone());
        let mut resets = Vec::new();
        for v in self.net.variables.values() {
            if v.owner != owner || v.unit != unit.name {
                continue;
            }
            let reset = if is_function {
                !matches!(v.kind, VarKind::Input | VarKind::Constant)
            } else {
                v.kind == VarKind::Temp
            };
            if reset {
                resets.extend(reset_assignments(v, span));
            }
        }
        cx.auto.transitions[0].assignments = resets;
        cx.auto.transitions[0].kind = TransKind::Structural;

        let mut params = Vec::new();
        for section in [VarSection::Input, VarSection::Output] {
            for d in unit.vars.iter().filter(|d| d.section == section) {
                params.push(self.lookup(&scope, &d.name, d.span)?);
            }
        }
        cx.auto.params = params;
        Ok(cx.auto)
    }

    fn push(&mut self, cx: &mut Cx, t: Transition) {
        cx.auto.transitions.push(t);
    }

    fn edge(&mut self, cx: &mut Cx, from: LocId, to: LocId, guard: Expr, kind: TransKind, span: Span) {
        self.push(cx, Transition { source: from, target: to, guard, assignments: Vec::new(), call: None, kind, span });
    }

    fn skip(&mut self, cx: &mut Cx, from: LocId, to: LocId, span: Span) {
        self.push(cx, Transition::skip(from, to, span));
    }

    fn anchors(&mut self, cx: &mut Cx, block: BlockId, index: usize, span: Span) {
        let Some(ids) = self.anchors.get(&(block, index)).cloned() else {
            return;
        };
        for id in ids {
            let (scope, expr) = &self.anchor_exprs[&id];
            if *scope != cx.scope {
                continue;
            }
            let role = LocRole::AssertionAnchor { assertion: id, expr: expr.clone() };
            let l = self.loc(cx, role);
            let from = cx.cur;
            self.skip(cx, from, l, span);
            cx.cur = l;
        }
    }

    fn block(&mut self, cx: &mut Cx, b: &Block) -> Result<(), BuildError> {
        for (i, s) in b.stmts.iter().enumerate() {
            self.anchors(cx, b.id, i, Span::new(s.span.file, s.span.start, s.span.start));
            self.stmt(cx, s)?;
        }
        self.anchors(cx, b.id, b.stmts.len(), Span::new(b.span.file, b.span.end, b.span.end));
        Ok(())
    }

    fn dead(&mut self, cx: &mut Cx) {
        cx.cur = self.loc(cx, LocRole::Plain);
    }

    fn stmt(&mut self, cx: &mut Cx, s: &ast::Stmt) -> Result<(), BuildError> {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = self.expr(cx, value)?;
                let t = self.target(cx, target)?;
                let next = self.loc(cx, LocRole::Plain);
                self.push(
                    cx,
                    Transition {
                        source: cx.cur,
                        target: next,
                        guard: Expr::bool(true, s.span),
                        assignments: alloc::vec![Assignment::new(t, v)],
                        call: None,
                        kind: TransKind::Statement,
                        span: s.span,
                    },
                );
                cx.cur = next;
            }
            StmtKind::If { branches, else_block } => {
                let join = self.loc(cx, LocRole::Plain);
                for (cond, body) in branches {
                    let c = self.expr(cx, cond)?;
                    let then_l = self.loc(cx, LocRole::Plain);
                    let else_l = self.loc(cx, LocRole::Plain);
                    let from = cx.cur;
                    self.edge(cx, from, then_l, c.clone(), TransKind::Guard, cond.span);
                    self.edge(cx, from, else_l, c.not(), TransKind::Guard, cond.span);
                    cx.cur = then_l;
                    self.block(cx, body)?;
                    let from = cx.cur;
                    self.skip(cx, from, join, body.span);
                    cx.cur = else_l;
                }
                if let Some(e) = else_block {
                    self.block(cx, e)?;
                }
                let from = cx.cur;
                self.skip(cx, from, join, s.span);
                cx.cur = join;
            }
            StmtKind::Case { selector, arms, else_block } => {
                let sel = self.expr(cx, selector)?;
                let branch = cx.cur;
                let join = self.loc(cx, LocRole::Plain);
                let mut earlier: Option<Expr> = None;
                for arm in arms {
                    let mut m: Option<Expr> = None;
                    for label in &arm.labels {
                        let l = label_match(&sel, *label, arm.span);
                        m = Some(match m {
                            None => l,
                            Some(p) => Expr::binary(BinOp::Or, p, l),
                        });
                    }
                    let m = m.unwrap_or_else(|| Expr::bool(false, arm.span));
                    let guard = match &earlier {
                        None => m.clone(),
                        Some(p) => Expr::binary(BinOp::And, m.clone(), p.clone().not()),
                    };
                    let arm_l = self.loc(cx, LocRole::Plain);
                    self.edge(cx, branch, arm_l, with_span(guard, arm.span), TransKind::Guard, arm.span);
                    cx.cur = arm_l;
                    self.block(cx, &arm.body)?;
                    let from = cx.cur;
                    self.skip(cx, from, join, arm.body.span);
                    earlier = Some(match earlier {
                        None => m,
                        Some(p) => Expr::binary(BinOp::Or, p, m),
                    });
                }
                let default_l = self.loc(cx, LocRole::Plain);
                let guard = earlier.map(Expr::not).unwrap_or_else(|| Expr::bool(true, s.span));
                let else_span = else_block.as_ref().map(|b| b.span).unwrap_or(selector.span);
                self.edge(cx, branch, default_l, with_span(guard, else_span), TransKind::Guard, else_span);
                cx.cur = default_l;
                if let Some(e) = else_block {
                    self.block(cx, e)?;
                }
                let from = cx.cur;
                self.skip(cx, from, join, s.span);
                cx.cur = join;
            }
            StmtKind::For { var, var_span, from, to, step, body } => {
                let v = self.lookup(&cx.scope, var, *var_span)?;
                let ty = self.net.var(v).scalar();
                let init = self.expr(cx, from)?;
                let head = self.loc(cx, LocRole::Plain);
                let header_span = var_span.join(from.span);
                self.push(
                    cx,
                    Transition {
                        source: cx.cur,
                        target: head,
                        guard: Expr::bool(true, header_span),
                        assignments: alloc::vec![Assignment::new(Target::scalar(v), init)],
                        call: None,
                        kind: TransKind::Statement,
                        span: header_span,
                    },
                );
                cx.cur = head;
                let bound = self.expr(cx, to)?;
                let counter = Expr::var(v, ty, *var_span);
                let op = if *step > 0 { BinOp::Le } else { BinOp::Ge };
                let cond = with_span(Expr::binary(op, counter.clone(), bound), var_span.join(to.span));
                let body_l = self.loc(cx, LocRole::Plain);
                let exit = self.loc(cx, LocRole::Plain);
                let test = cx.cur;
                self.edge(cx, test, body_l, cond.clone(), TransKind::Guard, cond.span);
                self.edge(cx, test, exit, cond.clone().not(), TransKind::Guard, cond.span);
                cx.loops.push(exit);
                cx.cur = body_l;
                self.block(cx, body)?;
                cx.loops.pop();
                let inc = Expr::binary(BinOp::Add, counter, Expr::constant(ty, *step, *var_span));
                self.push(
                    cx,
                    Transition {
                        source: cx.cur,
                        target: head,
                        guard: Expr::bool(true, *var_span),
                        assignments: alloc::vec![Assignment::new(Target::scalar(v), with_span(inc, *var_span))],
                        call: None,
                        kind: TransKind::Statement,
                        span: *var_span,
                    },
                );
                cx.cur = exit;
            }
            StmtKind::While { cond, body } => {
                let head = self.loc(cx, LocRole::Plain);
                let from = cx.cur;
                self.skip(cx, from, head, s.span);
                cx.cur = head;
                let c = self.expr(cx, cond)?;
                let body_l = self.loc(cx, LocRole::Plain);
                let exit = self.loc(cx, LocRole::Plain);
                let test = cx.cur;
                self.edge(cx, test, body_l, c.clone(), TransKind::Guard, cond.span);
                self.edge(cx, test, exit, c.not(), TransKind::Guard, cond.span);
                cx.loops.push(exit);
                cx.cur = body_l;
                self.block(cx, body)?;
                cx.loops.pop();
                let from = cx.cur;
                self.skip(cx, from, head, body.span);
                cx.cur = exit;
            }
            StmtKind::Repeat { body, until } => {
                let head = self.loc(cx, LocRole::Plain);
                let exit = self.loc(cx, LocRole::Plain);
                let from = cx.cur;
                self.skip(cx, from, head, s.span);
                cx.loops.push(exit);
                cx.cur = head;
                self.block(cx, body)?;
                cx.loops.pop();
                let c = self.expr(cx, until)?;
                let test = cx.cur;
                self.edge(cx, test, exit, c.clone(), TransKind::Guard, until.span);
                self.edge(cx, test, head, c.not(), TransKind::Guard, until.span);
                cx.cur = exit;
            }
            StmtKind::Call(call) => self.call(cx, call, None)?,
            StmtKind::Return => {
                let (from, to) = (cx.cur, cx.body_end);
                self.skip(cx, from, to, s.span);
                self.dead(cx);
            }
            StmtKind::Exit => {
                let exit = *cx
                    .loops
                    .last()
                    .ok_or_else(|| BuildError::Unsupported { span: s.span, what: "EXIT outside of a loop".into() })?;
                let from = cx.cur;
                self.skip(cx, from, exit, s.span);
                self.dead(cx);
            }
            StmtKind::Empty => {}
        }
        Ok(())
    }

    fn target(&mut self, cx: &mut Cx, lv: &ast::LValue) -> Result<Target, BuildError> {
        let var = self.lookup(&cx.scope, &lv.name, lv.span)?;
        let index = match &lv.index {
            Some(i) => Some(self.expr(cx, i)?),
            None => None,
        };
        Ok(Target { var, index })
    }

    /// Lower `e`, emitting transitions for the calls it contains at the
    /// current location.
    fn expr(&mut self, cx: &mut Cx, e: &ast::Expr) -> Result<Expr, BuildError> {
        let ty = e.scalar_type();
        let kind = match &e.kind {
            ast::ExprKind::Bool(b) => ExprKind::Const(*b as i64),
            ast::ExprKind::Int(v) => ExprKind::Const(ty.wrap(*v)),
            ast::ExprKind::Var(n) => ExprKind::Var(self.lookup(&cx.scope, n, e.span)?),
            ast::ExprKind::Index { array, index } => {
                let var = self.lookup(&cx.scope, array, e.span)?;
                ExprKind::Index { var, index: Box::new(self.expr(cx, index)?) }
            }
            ast::ExprKind::Unary { op, operand } => {
                ExprKind::Unary { op: *op, operand: Box::new(self.expr(cx, operand)?) }
            }
            ast::ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(cx, lhs)?;
                let r = self.expr(cx, rhs)?;
                ExprKind::Binary { op: *op, lhs: Box::new(l), rhs: Box::new(r) }
            }
            ast::ExprKind::Call(call) => {
                self.calls += 1;
                let local = format!("__call{}", self.calls);
                let unit = match &cx.scope {
                    Scope::Main => self.net.entry_name.clone(),
                    Scope::Template(t) => t.clone(),
                };
                let scope = cx.scope.clone();
                let tmp = self.add(&scope, &unit, &local, ElementaryType::Scalar(ty), VarKind::Temp, None, e.span);
                self.call(cx, call, Some(tmp))?;
                ExprKind::Var(tmp)
            }
        };
        Ok(Expr { kind, ty, span: e.span })
    }

    fn call(&mut self, cx: &mut Cx, call: &ast::Call, result: Option<VarId>) -> Result<(), BuildError> {
        let unsupported = |what: &str| BuildError::Unsupported { span: call.span, what: what.into() };
        let (callee, instance) = match &call.resolved {
            Some(ast::CallKind::Function(f)) => (f.clone(), None),
            Some(ast::CallKind::Instance { instance, block }) => (block.clone(), Some(instance.clone())),
            None => return Err(unsupported("unresolved call")),
        };
        let unit = self.ast.unit(&callee).ok_or_else(|| unsupported("call of an unknown unit"))?;
        let formal_scope = Scope::Template(callee.clone());
        let formal_inputs: Vec<&ast::VarDecl> = unit.inputs().collect();

        let mut inputs: Vec<(VarId, Expr)> = Vec::new();
        let mut outputs: Vec<(VarId, Target)> = Vec::new();
        let mut positional = 0;
        for arg in &call.args {
            match arg {
                ast::Arg::Positional(e) => {
                    let decl = formal_inputs.get(positional).ok_or_else(|| unsupported("too many arguments"))?;
                    positional += 1;
                    let formal = self.lookup(&formal_scope, &decl.name, decl.span)?;
                    let v = self.expr(cx, e)?;
                    inputs.push((formal, v));
                }
                ast::Arg::Input { param, value } => {
                    let formal = self.lookup(&formal_scope, param, value.span)?;
                    let v = self.expr(cx, value)?;
                    inputs.push((formal, v));
                }
                ast::Arg::Output { param, target } => {
                    let formal = self.lookup(&formal_scope, param, target.span)?;
                    let t = self.target(cx, target)?;
                    outputs.push((formal, t));
                }
            }
        }
        if instance.is_none() {
            // Unbound function inputs take their initial value.
            for decl in &formal_inputs {
                let formal = self.lookup(&formal_scope, &decl.name, decl.span)?;
                if !inputs.iter().any(|(f, _)| *f == formal) {
                    let v = self.net.var(formal);
                    inputs.push((formal, Expr::constant(v.scalar(), v.init[0], call.span)));
                }
            }
        }
        if let Some(tmp) = result {
            let ret = self.lookup(&formal_scope, &callee, call.span)?;
            outputs.push((ret, Target::scalar(tmp)));
        }
        let next = self.loc(cx, LocRole::Plain);
        self.push(
            cx,
            Transition {
                source: cx.cur,
                target: next,
                guard: Expr::bool(true, call.span),
                assignments: Vec::new(),
                call: Some(CallSite { callee, instance, inputs, outputs }),
                kind: TransKind::Call,
                span: call.span,
            },
        );
        cx.cur = next;
        Ok(())
    }
}

fn member_kind(section: VarSection) -> VarKind {
    match section {
        VarSection::Temp => VarKind::Temp,
        VarSection::Constant => VarKind::Constant,
        _ => VarKind::Local,
    }
}

fn with_span(mut e: Expr, span: Span) -> Expr {
    e.span = span;
    e
}

fn label_match(sel: &Expr, label: CaseLabel, span: Span) -> Expr {
    let c = |v: i64| Expr::constant(sel.ty, v, span);
    match label {
        CaseLabel::Value(v) => Expr::binary(BinOp::Eq, sel.clone(), c(v)),
        CaseLabel::Range(lo, hi) => Expr::binary(
            BinOp::And,
            Expr::binary(BinOp::Ge, sel.clone(), c(lo)),
            Expr::binary(BinOp::Le, sel.clone(), c(hi)),
        ),
    }
}

/// Assignments resetting every cell of `v` to its initial value.
pub(crate) fn reset_assignments(v: &Variable, span: Span) -> Vec<Assignment> {
    let ty = v.scalar();
    match v.ty.bounds() {
        None => alloc::vec![Assignment::new(Target::scalar(v.id), Expr::constant(ty, v.init[0], span))],
        Some((lo, _)) => v
            .init
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let idx = Expr::constant(ScalarType::Int, lo + i as i64, span);
                Assignment::new(Target::element(v.id, idx), Expr::constant(ty, x, span))
            })
            .collect(),
    }
}

/// Cycle-start assignments of the main automaton: every input cell gets a
/// nondeterministic value, then every temp is reset.
pub(crate) fn havoc_assignments(net: &CfaNetwork, span: Span) -> Vec<Assignment> {
    let mut out = Vec::new();
    for v in net.main_vars().filter(|v| v.kind == VarKind::Input) {
        let ty = v.scalar();
        let nd = || Expr::nondet(ty, v.domain.clone(), span);
        match v.ty.bounds() {
            None => out.push(Assignment::new(Target::scalar(v.id), nd())),
            Some((lo, hi)) => {
                for i in lo..=hi {
                    let idx = Expr::constant(ScalarType::Int, i, span);
                    out.push(Assignment::new(Target::element(v.id, idx), nd()));
                }
            }
        }
    }
    for v in net.main_vars().filter(|v| v.kind == VarKind::Temp) {
        out.extend(reset_assignments(v, span));
    }
    out
}
