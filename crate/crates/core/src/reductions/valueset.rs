//! Value-set abstraction of inputs compared only against constants.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{inlined, Pass, ReductionReport};
use crate::cfa::{CfaNetwork, Expr, ExprKind, LocRole, TransKind, VarId, VarKind};
use crate::requirements::VerificationProblem;
use crate::types::Domain;

/// Constants `var` is compared against in `e`; `Err` on any other use.
fn comparisons(e: &Expr, var: VarId, out: &mut Vec<i64>) -> Result<(), ()> {
    let is_var = |x: &Expr| matches!(x.kind, ExprKind::Var(v) if v == var);
    let (mut uses, mut compared) = (0, 0);
    e.walk(&mut |x| match &x.kind {
        ExprKind::Var(v) if *v == var => uses += 1,
        ExprKind::Binary { op, lhs, rhs } if op.is_comparison() => {
            let c = match (is_var(lhs), is_var(rhs)) {
                (true, _) => rhs.as_const(),
                (_, true) => lhs.as_const(),
                _ => None,
            };
            if let Some(c) = c {
                out.push(c);
                compared += 1;
            }
        }
        _ => {}
    });
    if uses == compared {
        Ok(())
    } else {
        Err(())
    }
}

fn constants_of(p: &VerificationProblem, net: &CfaNetwork, var: VarId) -> Result<Vec<i64>, String> {
    let v = net.variables.get(&var).ok_or("unknown variable")?;
    if v.kind != VarKind::Input || v.ty.is_array() || !v.scalar().is_integer() {
        return Err("not a numeric scalar input".to_string());
    }
    let mut out = Vec::new();
    let other = || "used outside comparisons with constants".to_string();
    for t in &net.main.transitions {
        if t.kind == TransKind::Havoc {
            continue;
        }
        if t.assignments.iter().any(|a| a.target.var == var) {
            return Err("assigned by the program".to_string());
        }
        for e in t.exprs() {
            comparisons(e, var, &mut out).map_err(|_| other())?;
        }
    }
    for l in net.main.locations.values() {
        if let LocRole::AssertionAnchor { expr, .. } = &l.role {
            comparisons(expr, var, &mut out).map_err(|_| other())?;
        }
    }
    comparisons(&p.property.expr, var, &mut out).map_err(|_| other())?;
    Ok(out)
}

/// One representative per equivalence class of the comparisons: each
/// constant, its nearest neighbours inside the domain, and the extremes.
fn representatives(d: &Domain, consts: &[i64]) -> Domain {
    let (Some(lo), Some(hi)) = (d.min(), d.max()) else {
        return d.clone();
    };
    let snap_down = |x: i64| match d {
        Domain::Range(lo, hi) => (x >= *lo).then(|| x.min(*hi)),
        Domain::Values(v) => v.partition_point(|c| *c <= x).checked_sub(1).map(|i| v[i]),
    };
    let snap_up = |x: i64| {
        if x <= lo {
            Some(lo)
        } else {
            d.next_after(x - 1)
        }
    };
    let mut vals = alloc::vec![lo];
    if !consts.is_empty() {
        vals.push(hi);
    }
    for &c in consts {
        vals.extend(c.checked_sub(1).and_then(snap_down));
        if d.contains(c) {
            vals.push(c);
        }
        vals.extend(c.checked_add(1).and_then(snap_up));
    }
    Domain::values(vals)
}

/// Replace the havoc domain of input `var` by one representative per class
/// of values the program cannot tell apart. Refuses (reporting why) unless
/// every read of `var` compares it with a constant.
pub fn value_set_abstraction(p: &VerificationProblem, var: VarId) -> (VerificationProblem, ReductionReport) {
    let mut net = inlined(p);
    let mut report = ReductionReport::new(Pass::ValueSet, &net);
    report.variable = net.variables.get(&var).map(|v| v.name.clone());
    match constants_of(p, &net, var) {
        Err(reason) => {
            report.refused = true;
            report.reason = Some(reason);
            (p.with_net(net), report)
        }
        Ok(consts) => {
            let d = net.var(var).domain.clone();
            let r = representatives(&d, &consts);
            if r.size() < d.size() {
                net.set_input_domain(var, r);
                report.domains_restricted = 1;
            }
            let out = p.with_net(net);
            let report = report.finish(&out.net);
            (out, report)
        }
    }
}
