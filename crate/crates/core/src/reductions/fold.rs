//! Constant propagation and folding.

use alloc::collections::BTreeMap;

use super::{inlined, Pass, ReductionReport};
use crate::cfa::{CfaNetwork, Expr, ExprKind, LocRole, TransKind, VarId, VarKind};
use crate::ops::{BinOp, UnOp};
use crate::requirements::VerificationProblem;

/// Scalar variables that always hold their initial value: constants, and
/// variables whose every assignment writes the initial value literally.
fn constant_vars(net: &CfaNetwork) -> BTreeMap<VarId, i64> {
    let mut out: BTreeMap<VarId, i64> =
        net.main_vars().filter(|v| !v.ty.is_array() && v.kind != VarKind::Input).map(|v| (v.id, v.init[0])).collect();
    for t in &net.main.transitions {
        for a in &t.assignments {
            if let Some(init) = out.get(&a.target.var) {
                if a.value.as_const() != Some(*init) {
                    out.remove(&a.target.var);
                }
            }
        }
    }
    out
}

/// Fold `e` bottom-up; returns the number of rewrites.
fn fold_expr(e: &mut Expr, consts: &BTreeMap<VarId, i64>, net: &CfaNetwork) -> usize {
    let mut n = 0;
    e.walk_mut(&mut |x| {
        let folded = match &x.kind {
            ExprKind::Var(v) => consts.get(v).copied(),
            ExprKind::Unary { op, operand } => operand.as_const().map(|a| op.apply(x.ty, a)),
            ExprKind::Binary { op, lhs, rhs } => match (lhs.as_const(), rhs.as_const()) {
                (Some(a), Some(b)) => op.apply(lhs.ty, a, b),
                _ => None,
            },
            _ => None,
        };
        if let Some(v) = folded {
            *x = Expr::constant(x.ty, v, x.span);
            n += 1;
            return;
        }
        // boolean identities, only where no fault-capable operand is dropped
        let simplified = match &x.kind {
            ExprKind::Binary { op: op @ (BinOp::And | BinOp::Or), lhs, rhs } => {
                let unit = (*op == BinOp::And) as i64;
                match (lhs.as_const(), rhs.as_const()) {
                    (Some(c), _) if c == unit => Some((**rhs).clone()),
                    (_, Some(c)) if c == unit => Some((**lhs).clone()),
                    (Some(_), _) if !rhs.can_fault(net) => Some(Expr::constant(x.ty, 1 - unit, x.span)),
                    (_, Some(_)) if !lhs.can_fault(net) => Some(Expr::constant(x.ty, 1 - unit, x.span)),
                    _ => None,
                }
            }
            ExprKind::Unary { op: UnOp::Not, operand } => match &operand.kind {
                ExprKind::Unary { op: UnOp::Not, operand: inner } => Some((**inner).clone()),
                _ => None,
            },
            _ => None,
        };
        if let Some(s) = simplified {
            *x = s;
            n += 1;
        }
    });
    n
}

/// Propagate constants, fold constant subexpressions with machine
/// semantics, delete transitions whose guard folds to FALSE and drop
/// assignments that rewrite a constant variable with its own value.
pub fn constant_fold(p: &VerificationProblem) -> (VerificationProblem, ReductionReport) {
    let mut net = inlined(p);
    let mut report = ReductionReport::new(Pass::ConstantFold, &net);
    loop {
        let consts = constant_vars(&net);
        let mut folded = 0;
        let mut removed = 0;
        let snapshot = net.clone();
        for t in &mut net.main.transitions {
            folded += fold_expr(&mut t.guard, &consts, &snapshot);
            let before = t.assignments.len();
            let kind = t.kind;
            t.assignments.retain(|a| !(consts.contains_key(&a.target.var) && kind != TransKind::Havoc));
            removed += before - t.assignments.len();
            for a in &mut t.assignments {
                if !a.value.has_nondet() {
                    folded += fold_expr(&mut a.value, &consts, &snapshot);
                }
                if let Some(i) = &mut a.target.index {
                    folded += fold_expr(i, &consts, &snapshot);
                }
            }
        }
        for l in net.main.locations.values_mut() {
            if let LocRole::AssertionAnchor { expr, .. } = &mut l.role {
                folded += fold_expr(expr, &consts, &snapshot);
            }
        }
        let before = net.main.transitions.len();
        net.main.transitions.retain(|t| t.guard.as_const() != Some(0));
        removed += before - net.main.transitions.len();
        report.constants_folded += folded;
        report.assignments_removed += removed;
        if folded + removed == 0 {
            break;
        }
    }
    let mut out = p.with_net(net);
    let consts = constant_vars(&out.net);
    report.constants_folded += fold_expr(&mut out.property.expr, &consts, &out.net);
    let report = report.finish(&out.net);
    (out, report)
}
