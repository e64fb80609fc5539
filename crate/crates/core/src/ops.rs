//! Operators and their machine semantics at a given width.

use core::fmt;

use crate::types::ScalarType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Xor)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod)
    }

    /// Operators whose evaluation can raise a division fault.
    pub fn can_fault(self) -> bool {
        matches!(self, BinOp::Div | BinOp::Mod)
    }

    /// Binding strength, higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::Xor => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "AND",
            BinOp::Or => "OR",
            BinOp::Xor => "XOR",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "MOD",
        }
    }

    /// Apply to raw operands of type `operand`. Arithmetic wraps at the
    /// operand width; division truncates toward zero and `MOD` takes the sign
    /// of the dividend. Returns `None` on division by zero.
    pub fn apply(self, operand: ScalarType, a: i64, b: i64) -> Option<i64> {
        let r = match self {
            BinOp::And => ((a != 0) && (b != 0)) as i64,
            BinOp::Or => ((a != 0) || (b != 0)) as i64,
            BinOp::Xor => ((a != 0) ^ (b != 0)) as i64,
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::Lt => (a < b) as i64,
            BinOp::Le => (a <= b) as i64,
            BinOp::Gt => (a > b) as i64,
            BinOp::Ge => (a >= b) as i64,
            BinOp::Add => operand.wrap(a.wrapping_add(b)),
            BinOp::Sub => operand.wrap(a.wrapping_sub(b)),
            BinOp::Mul => operand.wrap(a.wrapping_mul(b)),
            BinOp::Div => {
                if b == 0 {
                    return None;
                }
                operand.wrap(a.wrapping_div(b))
            }
            BinOp::Mod => {
                if b == 0 {
                    return None;
                }
                operand.wrap(a.wrapping_rem(b))
            }
        };
        Some(r)
    }
}

impl UnOp {
    pub fn apply(self, ty: ScalarType, a: i64) -> i64 {
        match self {
            UnOp::Not => (a == 0) as i64,
            UnOp::Neg => ty.wrap(a.wrapping_neg()),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Not => "NOT",
            UnOp::Neg => "-",
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl fmt::Display for UnOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_and_division() {
        assert_eq!(BinOp::Add.apply(ScalarType::Int, 32767, 1), Some(-32768));
        assert_eq!(BinOp::Mod.apply(ScalarType::Int, 5, 3), Some(2));
        assert_eq!(BinOp::Mod.apply(ScalarType::Int, -7, 3), Some(-1));
        assert_eq!(BinOp::Div.apply(ScalarType::Int, -7, 2), Some(-3));
        assert_eq!(BinOp::Div.apply(ScalarType::Int, -32768, -1), Some(-32768));
        assert_eq!(BinOp::Div.apply(ScalarType::Dint, 1, 0), None);
        assert_eq!(UnOp::Neg.apply(ScalarType::Int, -32768), -32768);
    }
}
