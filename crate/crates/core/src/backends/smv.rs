//! NuSMV emitter: one module, a location variable, per-cell next-state
//! relations and an invariant guarded to the check locations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::SMV_KEYWORDS as KW;
use super::{cells, choice_sites, inlined, loc_name, property_label, BackendError, EmittedModel, ModelFormat, NameMap};
use crate::cfa::{CfaNetwork, Expr, ExprKind, Target, VarId};
use crate::ops::{BinOp, UnOp};
use crate::requirements::VerificationProblem;
use crate::types::{Domain, ScalarType};

type Cell = (VarId, usize);

struct Smv<'a> {
    net: &'a CfaNetwork,
    map: &'a NameMap,
}

fn word(ty: ScalarType, v: i64) -> String {
    let w = ty.bits();
    match ty {
        ScalarType::Bool => (if v != 0 { "TRUE" } else { "FALSE" }).to_string(),
        _ if v == ty.min() => format!("(-0sd{w}_{} - 0sd{w}_1)", -(v + 1)),
        _ if v < 0 => format!("-0sd{w}_{}", -v),
        _ => format!("0sd{w}_{v}"),
    }
}

fn type_of(ty: ScalarType) -> String {
    match ty {
        ScalarType::Bool => "boolean".into(),
        t => format!("signed word[{}]", t.bits()),
    }
}

fn membership(ident: &str, ty: ScalarType, d: &Domain) -> Option<String> {
    if *d == ty.full_domain() {
        return None;
    }
    Some(match d {
        Domain::Range(lo, hi) => format!("({ident} >= {} & {ident} <= {})", word(ty, *lo), word(ty, *hi)),
        Domain::Values(vs) => {
            let parts: Vec<String> = vs.iter().map(|v| format!("{ident} = {}", word(ty, *v))).collect();
            format!("({})", parts.join(" | "))
        }
    })
}

impl Smv<'_> {
    fn cell(&self, var: VarId, index: Option<&Expr>) -> Result<Cell, BackendError> {
        let Some(i) = index else { return Ok((var, 0)) };
        let unsupported = |what: &str| BackendError::Unsupported { feature: what.into(), span: i.span };
        let c = i.as_const().ok_or_else(|| unsupported("dynamic array indexing"))?;
        let cell = self.net.var(var).cell_of(c).ok_or_else(|| unsupported("out-of-range array index"))?;
        Ok((var, cell))
    }

    fn ident(&self, (v, c): Cell) -> &str {
        self.map.ident(&self.net.cell_name(v, c)).expect("every cell is mapped")
    }

    fn expr(&self, e: &Expr, env: &BTreeMap<Cell, String>) -> Result<String, BackendError> {
        let read = |cell: Cell| env.get(&cell).cloned().unwrap_or_else(|| self.ident(cell).to_string());
        Ok(match &e.kind {
            ExprKind::Const(v) => word(e.ty, *v),
            ExprKind::Var(v) => read((*v, 0)),
            ExprKind::Index { var, index } => read(self.cell(*var, Some(index))?),
            ExprKind::Unary { op: UnOp::Not, operand } => format!("!{}", self.expr(operand, env)?),
            ExprKind::Unary { op: UnOp::Neg, operand } => format!("(-({}))", self.expr(operand, env)?),
            ExprKind::Binary { op, lhs, rhs } => {
                let sym = match op {
                    BinOp::And => "&",
                    BinOp::Or => "|",
                    BinOp::Xor => "xor",
                    BinOp::Eq => "=",
                    BinOp::Ne => "!=",
                    BinOp::Lt => "<",
                    BinOp::Le => "<=",
                    BinOp::Gt => ">",
                    BinOp::Ge => ">=",
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Mod => "mod",
                };
                format!("({} {sym} {})", self.expr(lhs, env)?, self.expr(rhs, env)?)
            }
            ExprKind::Nondet(_) => unreachable!("nondet values are bound to choice sites"),
        })
    }

    fn target(&self, t: &Target) -> Result<Cell, BackendError> {
        self.cell(t.var, t.index.as_ref())
    }
}

/// Emit `p` as a NuSMV module. Arrays are flattened into one variable per
/// cell, so only constant indices are accepted.
pub fn emit_smv(p: &VerificationProblem) -> Result<EmittedModel, BackendError> {
    let net = inlined(p);
    let mut map = NameMap::new();
    let mut all_cells: Vec<(Cell, ScalarType, i64)> = Vec::new();
    for v in net.main_vars() {
        for (c, name) in cells(&net, v.id) {
            map.insert(&name, KW);
            all_cells.push(((v.id, c), v.scalar(), v.init[c]));
        }
    }
    let control = map.aux("loc", KW);
    let sites = choice_sites(&net, &mut map, KW);
    let label = property_label(p, KW, &mut map);
    let smv = Smv { net: &net, map: &map };

    // per-transition enabling condition and effect on cells
    let mut next_loc: Vec<(String, String)> = Vec::new();
    let mut updates: BTreeMap<Cell, Vec<(String, String)>> = BTreeMap::new();
    let mut constraints: Vec<String> = Vec::new();
    let mut site = sites.iter();
    for t in &net.main.transitions {
        let at = format!("{control} = {}", loc_name(t.source));
        let cond = if t.guard.is_true() { at } else { format!("{at} & {}", smv.expr(&t.guard, &BTreeMap::new())?) };
        next_loc.push((cond.clone(), loc_name(t.target)));
        let mut env: BTreeMap<Cell, String> = BTreeMap::new();
        for a in &t.assignments {
            let value = match &a.value.kind {
                ExprKind::Nondet(d) => {
                    let s = site.next().expect("one site per choice");
                    constraints.extend(membership(&s.ident, s.ty, d).map(|m| format!("({cond}) -> {m}")));
                    s.ident.clone()
                }
                _ => smv.expr(&a.value, &env)?,
            };
            let cell = smv.target(&a.target)?;
            env.insert(cell, value);
        }
        for (cell, value) in env {
            updates.entry(cell).or_default().push((cond.clone(), value));
        }
    }
    let mut checks = Vec::new();
    for (l, e) in p.property.check_points(&net) {
        checks.push(format!("({control} = {} -> {})", loc_name(l), smv.expr(e, &BTreeMap::new())?));
    }
    if checks.is_empty() {
        checks.push("TRUE".into());
    }

    let mut out = String::new();
    let _ = writeln!(out, "-- {} ({})", p.name, net.entry_name);
    out.push_str("MODULE main\nVAR\n");
    let locs: Vec<String> = net.main.locations.keys().map(|l| loc_name(*l)).collect();
    let _ = writeln!(out, "  {control} : {{{}}};", locs.join(", "));
    for (cell, ty, _) in &all_cells {
        let _ = writeln!(out, "  {} : {};", smv.ident(*cell), type_of(*ty));
    }
    if !sites.is_empty() {
        out.push_str("IVAR\n");
        for s in &sites {
            let _ = writeln!(out, "  {} : {};", s.ident, type_of(s.ty));
        }
    }
    out.push_str("ASSIGN\n");
    let _ = writeln!(out, "  init({control}) := {};", loc_name(net.main.initial));
    for (cell, ty, init) in &all_cells {
        let _ = writeln!(out, "  init({}) := {};", smv.ident(*cell), word(*ty, *init));
    }
    let _ = writeln!(out, "  next({control}) :=\n    case");
    for (cond, target) in &next_loc {
        let _ = writeln!(out, "      {cond} : {target};");
    }
    let _ = writeln!(out, "      TRUE : {control};\n    esac;");
    for (cell, _, _) in &all_cells {
        let id = smv.ident(*cell);
        match updates.get(cell) {
            None => {
                let _ = writeln!(out, "  next({id}) := {id};");
            }
            Some(us) => {
                let _ = writeln!(out, "  next({id}) :=\n    case");
                for (cond, v) in us {
                    let _ = writeln!(out, "      {cond} : {v};");
                }
                let _ = writeln!(out, "      TRUE : {id};\n    esac;");
            }
        }
    }
    for c in &constraints {
        let _ = writeln!(out, "TRANS\n  {c};");
    }
    let _ = writeln!(out, "INVARSPEC NAME {label} := {};", checks.join(" & "));

    Ok(EmittedModel {
        format: ModelFormat::Smv,
        text: out,
        map,
        property_label: label,
        property: p.property.clone(),
        net,
        sites,
        control,
    })
}
