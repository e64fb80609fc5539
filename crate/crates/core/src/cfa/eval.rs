use alloc::collections::BTreeMap;
use core::fmt;

use super::{CfaNetwork, Expr, ExprKind, VarId};
use crate::types::{Span, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultKind {
    DivisionByZero,
    IndexOutOfRange { index: i64 },
}

/// A runtime fault raised while evaluating an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fault {
    pub kind: FaultKind,
    pub span: Span,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FaultKind::DivisionByZero => f.write_str("division by zero"),
            FaultKind::IndexOutOfRange { index } => write!(f, "array index {index} out of range"),
        }
    }
}

/// Read access to a valuation.
pub trait Env {
    fn scalar(&self, var: VarId) -> i64;
    /// Element `index` of an array, `None` when out of bounds.
    fn element(&self, var: VarId, index: i64) -> Option<i64>;
}

/// Evaluate `e` to a raw value. Arithmetic wraps at the operand width.
///
/// Panics on [`ExprKind::Nondet`], which is only meaningful as an
/// assignment's right-hand side.
pub fn eval_expr<E: Env + ?Sized>(e: &Expr, env: &E) -> Result<i64, Fault> {
    Ok(match &e.kind {
        ExprKind::Const(v) => *v,
        ExprKind::Var(v) => env.scalar(*v),
        ExprKind::Index { var, index } => {
            let i = eval_expr(index, env)?;
            env.element(*var, i).ok_or(Fault { kind: FaultKind::IndexOutOfRange { index: i }, span: e.span })?
        }
        ExprKind::Unary { op, operand } => op.apply(e.ty, eval_expr(operand, env)?),
        ExprKind::Binary { op, lhs, rhs } => {
            let a = eval_expr(lhs, env)?;
            let b = eval_expr(rhs, env)?;
            op.apply(lhs.ty, a, b).ok_or(Fault { kind: FaultKind::DivisionByZero, span: e.span })?
        }
        ExprKind::Nondet(_) => panic!("nondeterministic choice evaluated as an expression"),
    })
}

/// Valuation keyed by (variable, cell); missing cells read as the
/// variable's initial value.
pub struct MapEnv<'a> {
    pub net: &'a CfaNetwork,
    pub values: BTreeMap<(VarId, usize), Value>,
}

impl<'a> MapEnv<'a> {
    pub fn new(net: &'a CfaNetwork) -> Self {
        MapEnv { net, values: BTreeMap::new() }
    }

    pub fn set(&mut self, var: VarId, cell: usize, v: Value) {
        self.values.insert((var, cell), v);
    }

    fn cell(&self, var: VarId, cell: usize) -> i64 {
        match self.values.get(&(var, cell)) {
            Some(v) => v.raw(),
            None => self.net.var(var).init[cell],
        }
    }
}

impl Env for MapEnv<'_> {
    fn scalar(&self, var: VarId) -> i64 {
        self.cell(var, 0)
    }

    fn element(&self, var: VarId, index: i64) -> Option<i64> {
        self.net.var(var).cell_of(index).map(|c| self.cell(var, c))
    }
}
