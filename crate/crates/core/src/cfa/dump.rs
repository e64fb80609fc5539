//! Deterministic textual rendering of networks, mainly for tests and
//! debugging.

use alloc::string::String;
use core::fmt::{self, Write};

use super::*;

/// Displays an expression in Structured Text syntax with variable names.
pub struct ExprDisplay<'a> {
    pub expr: &'a Expr,
    pub net: &'a CfaNetwork,
}

impl<'a> ExprDisplay<'a> {
    pub fn new(expr: &'a Expr, net: &'a CfaNetwork) -> Self {
        ExprDisplay { expr, net }
    }
}

fn write_expr(f: &mut dyn Write, e: &Expr, net: &CfaNetwork, parent: u8) -> fmt::Result {
    match &e.kind {
        ExprKind::Const(v) => match e.ty {
            ScalarType::Bool => f.write_str(if *v != 0 { "TRUE" } else { "FALSE" }),
            _ => write!(f, "{v}"),
        },
        ExprKind::Var(v) => f.write_str(&net.var(*v).name),
        ExprKind::Index { var, index } => {
            write!(f, "{}[", net.var(*var).name)?;
            write_expr(f, index, net, 0)?;
            f.write_str("]")
        }
        ExprKind::Unary { op, operand } => {
            match op {
                UnOp::Not => f.write_str("NOT ")?,
                UnOp::Neg => f.write_str("-")?,
            }
            write_expr(f, operand, net, 7)
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            if p < parent {
                f.write_str("(")?;
            }
            write_expr(f, lhs, net, p)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, rhs, net, p + 1)?;
            if p < parent {
                f.write_str(")")?;
            }
            Ok(())
        }
        ExprKind::Nondet(d) => match (d.min(), d.max()) {
            (Some(lo), Some(hi)) if d.size() == (hi - lo) as u64 + 1 => {
                write!(f, "nondet({lo}..{hi})")
            }
            _ => {
                f.write_str("nondet{")?;
                for (i, v) in d.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        },
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.net, 0)
    }
}

fn write_target(out: &mut String, t: &Target, net: &CfaNetwork) {
    out.push_str(&net.var(t.var).name);
    if let Some(i) = &t.index {
        out.push('[');
        let _ = write_expr(out, i, net, 0);
        out.push(']');
    }
}

fn write_automaton(out: &mut String, a: &Automaton, net: &CfaNetwork) {
    let _ = writeln!(out, "automaton {} (initial {}, end {})", a.name, a.initial, a.end);
    for l in a.locations.values() {
        match &l.role {
            LocRole::Plain => {}
            LocRole::AssertionAnchor { assertion, expr } => {
                let _ = writeln!(out, "  {} anchor#{} {}", l.id, assertion, ExprDisplay::new(expr, net));
            }
            r => {
                let _ = writeln!(out, "  {} {:?}", l.id, r);
            }
        }
    }
    let mut ts: alloc::vec::Vec<&Transition> = a.transitions.iter().collect();
    ts.sort_by_key(|t| (t.source, t.target));
    for t in ts {
        let _ = write!(out, "  {} -> {}", t.source, t.target);
        if !t.guard.is_true() {
            let _ = write!(out, " [{}]", ExprDisplay::new(&t.guard, net));
        }
        for asg in &t.assignments {
            out.push(' ');
            write_target(out, &asg.target, net);
            let _ = write!(out, " := {};", ExprDisplay::new(&asg.value, net));
        }
        if let Some(c) = &t.call {
            let _ = write!(out, " call {}", c.callee);
            if let Some(i) = &c.instance {
                let _ = write!(out, " on {i}");
            }
        }
        out.push('\n');
    }
}

/// Render the whole network: variables by id, then each automaton.
pub fn dump(net: &CfaNetwork) -> String {
    let mut out = String::new();
    for v in net.variables.values() {
        let _ = writeln!(out, "var {} {} : {} ({})", v.id.0, v.name, v.ty, v.kind.name());
    }
    write_automaton(&mut out, &net.main, net);
    for c in &net.callees {
        write_automaton(&mut out, c, net);
    }
    out
}
