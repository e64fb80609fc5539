//! Name resolution and type checking.
//!
//! Integer literals are polymorphic: they take the integer type demanded by
//! their context (the other operand of a binary operator, an assignment
//! target, a parameter). A subtree made only of literals defaults to INT, or
//! DINT when some literal does not fit 16 bits.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics};
use crate::ops::{BinOp, UnOp};
use crate::types::{ElementaryType, ScalarType, Span, Value};

/// What a (possibly qualified) variable name refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub ty: ElementaryType,
    pub section: VarSection,
    /// False for constants and members of function block instances.
    pub writable: bool,
}

pub(crate) struct Resolver<'a> {
    units: BTreeMap<&'a str, &'a Unit>,
    diags: Vec<Diagnostic>,
}

impl<'a> Resolver<'a> {
    pub(crate) fn new(ast: &'a TypedAst) -> Self {
        let mut units = BTreeMap::new();
        let mut diags = Vec::new();
        for u in &ast.units {
            if units.insert(u.name.as_str(), u).is_some() {
                diags.push(Diagnostic::error(u.span, format!("duplicate declaration of unit `{}`", u.name)));
            }
        }
        Resolver { units, diags }
    }

    fn err(&mut self, span: Span, msg: String) {
        self.diags.push(Diagnostic::error(span, msg));
    }

    /// Resolved copies of every unit body, in unit order.
    pub(crate) fn resolve_bodies(mut self, ast: &'a TypedAst) -> Result<Vec<Block>, Diagnostics> {
        for unit in &ast.units {
            self.check_decls(unit);
        }
        let mut bodies = Vec::new();
        for unit in &ast.units {
            let mut body = unit.body.clone();
            let mut cx = UnitCx { unit, loop_depth: 0 };
            self.block(&mut cx, &mut body);
            bodies.push(body);
        }
        if self.diags.iter().any(Diagnostic::is_error) {
            return Err(Diagnostics(self.diags));
        }
        Ok(bodies)
    }

    fn check_decls(&mut self, unit: &'a Unit) {
        let mut seen: BTreeMap<&str, Span> = BTreeMap::new();
        for v in &unit.vars {
            if seen.insert(v.name.as_str(), v.span).is_some() {
                self.err(v.span, format!("duplicate declaration of `{}` in `{}`", v.name, unit.name));
            }
            match &v.ty {
                DeclType::Instance(fb) => {
                    match self.units.get(fb.as_str()) {
                        Some(u) if u.kind == UnitKind::FunctionBlock => {}
                        Some(_) => self.err(v.span, format!("`{fb}` is not a FUNCTION_BLOCK")),
                        None => self.err(v.span, format!("undeclared function block type `{fb}`")),
                    }
                    if matches!(unit.kind, UnitKind::Function(_)) {
                        self.err(v.span, "function block instances cannot be declared in a FUNCTION".into());
                    }
                    if v.section != VarSection::Local {
                        self.err(v.span, "function block instances must be declared in a VAR section".into());
                    }
                    if v.init.is_some() {
                        self.err(v.span, "function block instances cannot have initializers".into());
                    }
                }
                DeclType::Elementary(ty) => {
                    if v.section == VarSection::Constant && v.init.is_none() {
                        self.err(v.span, format!("constant `{}` requires an initializer", v.name));
                    }
                    if let Some(init) = &v.init {
                        self.check_init(v, *ty, init);
                    }
                }
            }
        }
    }

    fn check_init(&mut self, v: &VarDecl, ty: ElementaryType, init: &[Value]) {
        if init.len() != ty.cells() {
            self.err(v.span, format!("initializer of `{}` has {} values, expected {}", v.name, init.len(), ty.cells()));
            return;
        }
        let elem = ty.scalar();
        for val in init {
            let ok = match (elem, val) {
                (ScalarType::Bool, Value::Bool(_)) => true,
                (ScalarType::Bool, Value::Int(_)) | (_, Value::Bool(_)) => false,
                (t, Value::Int(x)) => t.contains(*x),
            };
            if !ok {
                self.err(v.span, format!("type mismatch: initializer {val} is not a valid {elem}"));
            }
        }
    }

    fn lookup(&self, unit: &Unit, name: &str) -> Result<VarInfo, String> {
        let mut parts = name.split('.');
        let first = parts.next().unwrap_or_default();
        let decl = unit.var(first).ok_or_else(|| format!("undeclared identifier `{first}`"))?;
        let mut current = decl;
        let mut qualified = false;
        for member in parts {
            let DeclType::Instance(fb) = &current.ty else {
                return Err(format!("`{}` is not a function block instance", current.name));
            };
            let fb_unit = self.units.get(fb.as_str()).ok_or_else(|| format!("undeclared function block `{fb}`"))?;
            let m = fb_unit.var(member).ok_or_else(|| format!("`{fb}` has no member `{member}`"))?;
            if !matches!(m.section, VarSection::Input | VarSection::Output) {
                return Err(format!("member `{member}` of `{fb}` is not an input or output"));
            }
            current = m;
            qualified = true;
        }
        match &current.ty {
            DeclType::Elementary(ty) => Ok(VarInfo {
                ty: *ty,
                section: current.section,
                writable: !qualified && current.section != VarSection::Constant,
            }),
            DeclType::Instance(_) => Err(format!("function block instance `{name}` used as a value")),
        }
    }

    fn block(&mut self, cx: &mut UnitCx<'a>, block: &mut Block) {
        for s in &mut block.stmts {
            self.stmt(cx, s);
        }
    }

    fn expect_type(&mut self, span: Span, expected: ScalarType, found: Option<ScalarType>) {
        if let Some(found) = found {
            if found != expected {
                self.err(span, format!("type mismatch: expected {expected}, found {found}"));
            }
        }
    }

    fn stmt(&mut self, cx: &mut UnitCx<'a>, stmt: &mut Stmt) {
        let span = stmt.span;
        match &mut stmt.kind {
            StmtKind::Assign { target, value } => {
                if let Some(t) = self.lvalue(cx, target) {
                    let found = self.expr(cx, value, Some(t));
                    self.expect_type(value.span, t, found);
                } else {
                    self.expr(cx, value, None);
                }
            }
            StmtKind::If { branches, else_block } => {
                for (cond, body) in branches.iter_mut() {
                    let t = self.expr(cx, cond, Some(ScalarType::Bool));
                    self.expect_type(cond.span, ScalarType::Bool, t);
                    self.block(cx, body);
                }
                if let Some(b) = else_block {
                    self.block(cx, b);
                }
            }
            StmtKind::Case { selector, arms, else_block } => {
                let t = self.expr(cx, selector, None);
                if let Some(t) = t {
                    if !t.is_integer() {
                        self.err(selector.span, format!("type mismatch: CASE selector must be an integer, found {t}"));
                    } else {
                        for arm in arms.iter() {
                            for l in &arm.labels {
                                let (lo, hi) = match *l {
                                    CaseLabel::Value(v) => (v, v),
                                    CaseLabel::Range(a, b) => (a, b),
                                };
                                if !t.contains(lo) || !t.contains(hi) {
                                    self.err(arm.span, format!("CASE label out of range for {t}"));
                                }
                                if lo > hi {
                                    self.err(arm.span, format!("empty CASE range {lo}..{hi}"));
                                }
                            }
                        }
                    }
                }
                for arm in arms.iter_mut() {
                    self.block(cx, &mut arm.body);
                }
                if let Some(b) = else_block {
                    self.block(cx, b);
                }
            }
            StmtKind::For { var, var_span, from, to, body, .. } => {
                let var_ty = match self.lookup(cx.unit, var) {
                    Ok(info) => {
                        if !info.writable || var.contains('.') {
                            self.err(*var_span, format!("FOR variable `{var}` is not assignable"));
                            None
                        } else if info.ty.is_array() || !info.ty.scalar().is_integer() {
                            self.err(*var_span, format!("type mismatch: FOR variable `{var}` must be INT or DINT"));
                            None
                        } else {
                            Some(info.ty.scalar())
                        }
                    }
                    Err(msg) => {
                        self.err(*var_span, msg);
                        None
                    }
                };
                for e in [from, to] {
                    let t = self.expr(cx, e, var_ty);
                    if let Some(vt) = var_ty {
                        self.expect_type(e.span, vt, t);
                    }
                }
                cx.loop_depth += 1;
                self.block(cx, body);
                cx.loop_depth -= 1;
            }
            StmtKind::While { cond, body } => {
                let t = self.expr(cx, cond, Some(ScalarType::Bool));
                self.expect_type(cond.span, ScalarType::Bool, t);
                cx.loop_depth += 1;
                self.block(cx, body);
                cx.loop_depth -= 1;
            }
            StmtKind::Repeat { body, until } => {
                cx.loop_depth += 1;
                self.block(cx, body);
                cx.loop_depth -= 1;
                let t = self.expr(cx, until, Some(ScalarType::Bool));
                self.expect_type(until.span, ScalarType::Bool, t);
            }
            StmtKind::Call(call) => {
                self.call(cx, call, true);
            }
            StmtKind::Exit => {
                if cx.loop_depth == 0 {
                    self.err(span, "EXIT outside of a loop".into());
                }
            }
            StmtKind::Return | StmtKind::Empty => {}
        }
    }

    /// Resolve an assignment target; returns its cell type.
    fn lvalue(&mut self, cx: &mut UnitCx<'a>, lv: &mut LValue) -> Option<ScalarType> {
        let info = match self.lookup(cx.unit, &lv.name) {
            Ok(i) => i,
            Err(msg) => {
                self.err(lv.span, msg);
                if let Some(idx) = &mut lv.index {
                    self.expr(cx, idx, None);
                }
                return None;
            }
        };
        if !info.writable {
            self.err(lv.span, format!("`{}` cannot be assigned", lv.name));
        }
        match (info.ty, &mut lv.index) {
            (ElementaryType::Array { elem, .. }, Some(idx)) => {
                self.index_expr(cx, idx);
                Some(elem)
            }
            (ElementaryType::Array { .. }, None) => {
                self.err(lv.span, format!("type mismatch: array `{}` assigned without an index", lv.name));
                None
            }
            (ElementaryType::Scalar(_), Some(idx)) => {
                self.err(lv.span, format!("`{}` is not an array", lv.name));
                self.expr(cx, idx, None);
                None
            }
            (ElementaryType::Scalar(s), None) => Some(s),
        }
    }

    fn index_expr(&mut self, cx: &mut UnitCx<'a>, idx: &mut Expr) {
        let t = self.expr(cx, idx, None);
        if let Some(t) = t {
            if !t.is_integer() {
                self.err(idx.span, format!("type mismatch: array index must be an integer, found {t}"));
            }
        }
    }

    fn call(&mut self, cx: &mut UnitCx<'a>, call: &mut Call, as_statement: bool) -> Option<ScalarType> {
        let instance_fb = cx.unit.var(&call.callee).and_then(|d| match &d.ty {
            DeclType::Instance(fb) => Some(fb.clone()),
            _ => None,
        });
        let (callee_unit, kind) = if let Some(fb) = instance_fb {
            if !as_statement {
                self.err(
                    call.span,
                    format!("function block instance `{}` cannot be called in an expression", call.callee),
                );
                return None;
            }
            let unit = *self.units.get(fb.as_str())?;
            (unit, CallKind::Instance { instance: call.callee.clone(), block: fb })
        } else {
            match self.units.get(call.callee.as_str()) {
                Some(u) if matches!(u.kind, UnitKind::Function(_)) => (*u, CallKind::Function(call.callee.clone())),
                Some(_) => {
                    self.err(call.span, format!("`{}` is not a FUNCTION or function block instance", call.callee));
                    return None;
                }
                None => {
                    self.err(call.span, format!("undeclared identifier `{}`", call.callee));
                    return None;
                }
            }
        };
        let inputs: Vec<&VarDecl> = callee_unit.inputs().collect();
        let mut positional = 0usize;
        let mut bound: Vec<String> = Vec::new();
        for arg in &mut call.args {
            match arg {
                Arg::Positional(e) => {
                    if matches!(kind, CallKind::Instance { .. }) {
                        self.err(e.span, "function block calls require named arguments".into());
                        self.expr(cx, e, None);
                        continue;
                    }
                    let Some(param) = inputs.get(positional) else {
                        self.err(e.span, format!("too many arguments for `{}`", callee_unit.name));
                        self.expr(cx, e, None);
                        continue;
                    };
                    positional += 1;
                    bound.push(param.name.clone());
                    self.arg_value(cx, e, param);
                }
                Arg::Input { param, value } => {
                    match callee_unit.var(param).filter(|d| d.section == VarSection::Input) {
                        Some(decl) => {
                            if bound.contains(param) {
                                self.err(value.span, format!("parameter `{param}` bound twice"));
                            }
                            bound.push(param.clone());
                            self.arg_value(cx, value, decl);
                        }
                        None => {
                            self.err(value.span, format!("`{}` has no input `{param}`", callee_unit.name));
                            self.expr(cx, value, None);
                        }
                    }
                }
                Arg::Output { param, target } => {
                    let decl = callee_unit.var(param).filter(|d| d.section == VarSection::Output && !d.is_return);
                    let Some(decl) = decl else {
                        self.err(target.span, format!("`{}` has no output `{param}`", callee_unit.name));
                        continue;
                    };
                    let DeclType::Elementary(pty) = decl.ty else {
                        continue;
                    };
                    if pty.is_array() {
                        self.err(target.span, "array parameters are not supported".into());
                        continue;
                    }
                    if let Some(t) = self.lvalue(cx, target) {
                        if t != pty.scalar() {
                            self.err(target.span, format!("type mismatch: expected {}, found {t}", pty.scalar()));
                        }
                    }
                }
            }
        }
        call.resolved = Some(kind);
        match callee_unit.kind {
            UnitKind::Function(ret) => Some(ret),
            _ => None,
        }
    }

    fn arg_value(&mut self, cx: &mut UnitCx<'a>, e: &mut Expr, param: &VarDecl) {
        let DeclType::Elementary(pty) = param.ty else {
            return;
        };
        if pty.is_array() {
            self.err(e.span, "array parameters are not supported".into());
            return;
        }
        let t = self.expr(cx, e, Some(pty.scalar()));
        self.expect_type(e.span, pty.scalar(), t);
    }

    /// Type of `e` if it does not depend on context (`None` for literal-only
    /// integer subtrees or unresolvable names).
    fn natural(&self, cx: &UnitCx<'a>, e: &Expr) -> Option<ScalarType> {
        match &e.kind {
            ExprKind::Bool(_) => Some(ScalarType::Bool),
            ExprKind::Int(_) => None,
            ExprKind::Var(name) => self.lookup(cx.unit, name).ok().map(|i| i.ty.scalar()),
            ExprKind::Index { array, .. } => self.lookup(cx.unit, array).ok().map(|i| i.ty.scalar()),
            ExprKind::Call(call) => match self.units.get(call.callee.as_str()).map(|u| u.kind) {
                Some(UnitKind::Function(r)) => Some(r),
                _ => None,
            },
            ExprKind::Unary { op: UnOp::Not, .. } => Some(ScalarType::Bool),
            ExprKind::Unary { op: UnOp::Neg, operand } => self.natural(cx, operand),
            ExprKind::Binary { op, lhs, rhs } => {
                if op.is_logical() || op.is_comparison() {
                    Some(ScalarType::Bool)
                } else {
                    self.natural(cx, lhs).or_else(|| self.natural(cx, rhs))
                }
            }
        }
    }

    fn literal_default(e: &Expr) -> ScalarType {
        let mut fits = true;
        e.walk(&mut |n| {
            if let ExprKind::Int(v) = n.kind {
                if !ScalarType::Int.contains(v) {
                    fits = false;
                }
            }
        });
        if fits {
            ScalarType::Int
        } else {
            ScalarType::Dint
        }
    }

    /// Resolve `e`, using `expected` to type integer literals. Returns the
    /// resulting type, or `None` after reporting an error.
    fn expr(&mut self, cx: &mut UnitCx<'a>, e: &mut Expr, expected: Option<ScalarType>) -> Option<ScalarType> {
        let span = e.span;
        let ty = match &mut e.kind {
            ExprKind::Bool(_) => Some(ScalarType::Bool),
            ExprKind::Int(v) => {
                let t = match expected {
                    Some(t) if t.is_integer() => t,
                    _ => {
                        if ScalarType::Int.contains(*v) {
                            ScalarType::Int
                        } else {
                            ScalarType::Dint
                        }
                    }
                };
                if !t.contains(*v) {
                    self.err(span, format!("integer literal {v} out of range for {t}"));
                    None
                } else {
                    Some(t)
                }
            }
            ExprKind::Var(name) => match self.lookup(cx.unit, name) {
                Ok(info) if info.ty.is_array() => {
                    self.err(span, format!("type mismatch: array `{name}` used without an index"));
                    None
                }
                Ok(info) => Some(info.ty.scalar()),
                Err(msg) => {
                    self.err(span, msg);
                    None
                }
            },
            ExprKind::Index { array, index } => {
                let info = self.lookup(cx.unit, array);
                self.index_expr(cx, index);
                match info {
                    Ok(VarInfo { ty: ElementaryType::Array { elem, .. }, .. }) => Some(elem),
                    Ok(_) => {
                        self.err(span, format!("`{array}` is not an array"));
                        None
                    }
                    Err(msg) => {
                        self.err(span, msg);
                        None
                    }
                }
            }
            ExprKind::Call(call) => self.call(cx, call, false),
            ExprKind::Unary { op: UnOp::Not, operand } => {
                let t = self.expr(cx, operand, Some(ScalarType::Bool));
                match t {
                    Some(ScalarType::Bool) => Some(ScalarType::Bool),
                    Some(t) => {
                        self.err(span, format!("type mismatch: NOT expects BOOL, found {t}"));
                        None
                    }
                    None => None,
                }
            }
            ExprKind::Unary { op: UnOp::Neg, operand } => {
                let ctx = expected.filter(|t| t.is_integer());
                match self.expr(cx, operand, ctx) {
                    Some(t) if t.is_integer() => Some(t),
                    Some(t) => {
                        self.err(span, format!("type mismatch: negation expects an integer, found {t}"));
                        None
                    }
                    None => None,
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let op = *op;
                if op.is_logical() {
                    let l = self.expr(cx, lhs, Some(ScalarType::Bool));
                    let r = self.expr(cx, rhs, Some(ScalarType::Bool));
                    match (l, r) {
                        (Some(ScalarType::Bool), Some(ScalarType::Bool)) => Some(ScalarType::Bool),
                        (Some(l), Some(r)) => {
                            let bad = if l != ScalarType::Bool { l } else { r };
                            self.err(span, format!("type mismatch: {op} expects BOOL operands, found {bad}"));
                            None
                        }
                        _ => None,
                    }
                } else {
                    let ctx_int = expected.filter(|t| t.is_integer() && op.is_arithmetic());
                    let operand_ty =
                        self.natural(cx, lhs).or_else(|| self.natural(cx, rhs)).or(ctx_int).unwrap_or_else(|| {
                            match (Self::literal_default(lhs), Self::literal_default(rhs)) {
                                (ScalarType::Int, ScalarType::Int) => ScalarType::Int,
                                _ => ScalarType::Dint,
                            }
                        });
                    if op.is_arithmetic() && operand_ty == ScalarType::Bool {
                        self.expr(cx, lhs, None);
                        self.expr(cx, rhs, None);
                        self.err(span, format!("type mismatch: arithmetic `{op}` on BOOL operands"));
                        None
                    } else if matches!(op, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
                        && operand_ty == ScalarType::Bool
                    {
                        self.expr(cx, lhs, None);
                        self.expr(cx, rhs, None);
                        self.err(span, format!("type mismatch: ordering `{op}` on BOOL operands"));
                        None
                    } else {
                        let l = self.expr(cx, lhs, Some(operand_ty));
                        let r = self.expr(cx, rhs, Some(operand_ty));
                        match (l, r) {
                            (Some(l), Some(r)) if l == r => {
                                if op.is_comparison() {
                                    Some(ScalarType::Bool)
                                } else {
                                    Some(l)
                                }
                            }
                            (Some(l), Some(r)) => {
                                self.err(span, format!("type mismatch: `{op}` between {l} and {r}"));
                                None
                            }
                            _ => None,
                        }
                    }
                }
            }
        };
        e.ty = ty;
        ty
    }

    /// Resolve a free-standing expression in the scope of `unit`.
    pub(crate) fn standalone_expr(
        mut self,
        unit: &'a Unit,
        e: &mut Expr,
        expected: Option<ScalarType>,
    ) -> Result<ScalarType, Diagnostics> {
        let mut cx = UnitCx { unit, loop_depth: 0 };
        let t = self.expr(&mut cx, e, expected);
        match t {
            Some(t) if self.diags.is_empty() => Ok(t),
            _ => Err(Diagnostics(self.diags)),
        }
    }
}

struct UnitCx<'a> {
    unit: &'a Unit,
    loop_depth: u32,
}

/// Type information for `name` (possibly qualified) in `unit`.
pub fn lookup_var(ast: &TypedAst, unit: &Unit, name: &str) -> Result<VarInfo, String> {
    Resolver::new(ast).lookup(unit, name)
}

/// Resolve all names and types of `ast` in place.
pub(crate) fn resolve(ast: &mut TypedAst) -> Result<(), Diagnostics> {
    let bodies = Resolver::new(ast).resolve_bodies(ast)?;
    for (unit, body) in ast.units.iter_mut().zip(bodies) {
        unit.body = body;
    }
    Ok(())
}
