//! Elementary PLC types, runtime values and value domains.

use alloc::vec::Vec;
use core::fmt;

/// Byte range inside one source file. `file` indexes the list of sources a
/// program was parsed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Span {
    pub file: u32,
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub const fn new(file: u32, start: u32, end: u32) -> Self {
        Span { file, start, end }
    }

    /// Smallest span covering both `self` and `other` (same file assumed).
    pub fn join(self, other: Span) -> Span {
        Span { file: self.file, start: self.start.min(other.start), end: self.end.max(other.end) }
    }

    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Scalar types an expression can evaluate to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarType {
    Bool,
    /// 16-bit signed.
    Int,
    /// 32-bit signed.
    Dint,
}

impl ScalarType {
    pub fn is_integer(self) -> bool {
        matches!(self, ScalarType::Int | ScalarType::Dint)
    }

    pub fn bits(self) -> u32 {
        match self {
            ScalarType::Bool => 1,
            ScalarType::Int => 16,
            ScalarType::Dint => 32,
        }
    }

    pub fn min(self) -> i64 {
        match self {
            ScalarType::Bool => 0,
            ScalarType::Int => i16::MIN as i64,
            ScalarType::Dint => i32::MIN as i64,
        }
    }

    pub fn max(self) -> i64 {
        match self {
            ScalarType::Bool => 1,
            ScalarType::Int => i16::MAX as i64,
            ScalarType::Dint => i32::MAX as i64,
        }
    }

    pub fn full_domain(self) -> Domain {
        Domain::Range(self.min(), self.max())
    }

    /// Two's-complement wrap of `v` to this type's width. Booleans are
    /// normalized to 0/1.
    pub fn wrap(self, v: i64) -> i64 {
        match self {
            ScalarType::Bool => (v != 0) as i64,
            ScalarType::Int => v as i16 as i64,
            ScalarType::Dint => v as i32 as i64,
        }
    }

    pub fn contains(self, v: i64) -> bool {
        v >= self.min() && v <= self.max()
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::Bool => "BOOL",
            ScalarType::Int => "INT",
            ScalarType::Dint => "DINT",
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Declared type of a variable: a scalar or a one-dimensional array of scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementaryType {
    Scalar(ScalarType),
    Array { lo: i64, hi: i64, elem: ScalarType },
}

impl ElementaryType {
    pub const BOOL: ElementaryType = ElementaryType::Scalar(ScalarType::Bool);
    pub const INT: ElementaryType = ElementaryType::Scalar(ScalarType::Int);
    pub const DINT: ElementaryType = ElementaryType::Scalar(ScalarType::Dint);

    /// The scalar stored in each cell of a variable of this type.
    pub fn scalar(self) -> ScalarType {
        match self {
            ElementaryType::Scalar(s) => s,
            ElementaryType::Array { elem, .. } => elem,
        }
    }

    pub fn is_array(self) -> bool {
        matches!(self, ElementaryType::Array { .. })
    }

    /// Number of value cells (1 for scalars).
    pub fn cells(self) -> usize {
        match self {
            ElementaryType::Scalar(_) => 1,
            ElementaryType::Array { lo, hi, .. } => (hi - lo + 1) as usize,
        }
    }

    pub fn bounds(self) -> Option<(i64, i64)> {
        match self {
            ElementaryType::Array { lo, hi, .. } => Some((lo, hi)),
            ElementaryType::Scalar(_) => None,
        }
    }
}

impl fmt::Display for ElementaryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementaryType::Scalar(s) => s.fmt(f),
            ElementaryType::Array { lo, hi, elem } => write!(f, "ARRAY[{lo}..{hi}] OF {elem}"),
        }
    }
}

/// A runtime value of a scalar cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl Value {
    pub fn from_raw(ty: ScalarType, raw: i64) -> Value {
        match ty {
            ScalarType::Bool => Value::Bool(raw != 0),
            _ => Value::Int(raw),
        }
    }

    pub fn raw(self) -> i64 {
        match self {
            Value::Bool(b) => b as i64,
            Value::Int(v) => v,
        }
    }

    pub fn default_for(ty: ScalarType) -> Value {
        Value::from_raw(ty, 0)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Int(v) => write!(f, "{v}"),
        }
    }
}

/// Set of values a nondeterministic choice ranges over. Values are raw
/// cell encodings (booleans as 0/1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Inclusive range.
    Range(i64, i64),
    /// Explicit values, sorted ascending and deduplicated.
    Values(Vec<i64>),
}

impl Domain {
    pub fn values(mut v: Vec<i64>) -> Domain {
        v.sort_unstable();
        v.dedup();
        Domain::Values(v)
    }

    pub fn size(&self) -> u64 {
        match self {
            Domain::Range(lo, hi) if hi >= lo => (hi - lo) as u64 + 1,
            Domain::Range(..) => 0,
            Domain::Values(v) => v.len() as u64,
        }
    }

    pub fn min(&self) -> Option<i64> {
        match self {
            Domain::Range(lo, hi) if hi >= lo => Some(*lo),
            Domain::Range(..) => None,
            Domain::Values(v) => v.first().copied(),
        }
    }

    pub fn max(&self) -> Option<i64> {
        match self {
            Domain::Range(lo, hi) if hi >= lo => Some(*hi),
            Domain::Range(..) => None,
            Domain::Values(v) => v.last().copied(),
        }
    }

    pub fn contains(&self, x: i64) -> bool {
        match self {
            Domain::Range(lo, hi) => x >= *lo && x <= *hi,
            Domain::Values(v) => v.binary_search(&x).is_ok(),
        }
    }

    /// Smallest value greater than `x`.
    pub fn next_after(&self, x: i64) -> Option<i64> {
        match self {
            Domain::Range(lo, hi) => {
                let n = if x < *lo { *lo } else { x.checked_add(1)? };
                (n <= *hi).then_some(n)
            }
            Domain::Values(v) => {
                let i = v.partition_point(|c| *c <= x);
                v.get(i).copied()
            }
        }
    }

    /// Values in ascending order.
    pub fn iter(&self) -> DomainIter<'_> {
        match self {
            Domain::Range(lo, hi) => DomainIter::Range(*lo, *hi + 1),
            Domain::Values(v) => DomainIter::Values(v.iter()),
        }
    }

    /// Value closest to `x` inside the domain (ties resolved downwards).
    pub fn clamp(&self, x: i64) -> i64 {
        match self {
            Domain::Range(lo, hi) => x.clamp(*lo, *hi),
            Domain::Values(v) => {
                let mut best = v[0];
                for &c in v {
                    if (c - x).abs() < (best - x).abs() {
                        best = c;
                    }
                }
                best
            }
        }
    }
}

pub enum DomainIter<'a> {
    Range(i64, i64),
    Values(core::slice::Iter<'a, i64>),
}

impl Iterator for DomainIter<'_> {
    type Item = i64;

    fn next(&mut self) -> Option<i64> {
        match self {
            DomainIter::Range(cur, end) => {
                if *cur < *end {
                    *cur += 1;
                    Some(*cur - 1)
                } else {
                    None
                }
            }
            DomainIter::Values(it) => it.next().copied(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_wraps_twos_complement() {
        assert_eq!(ScalarType::Int.wrap(32767 + 1), -32768);
        assert_eq!(ScalarType::Int.wrap(-32768 - 1), 32767);
        assert_eq!(ScalarType::Dint.wrap(i32::MAX as i64 + 1), i32::MIN as i64);
        assert_eq!(ScalarType::Bool.wrap(7), 1);
    }

    #[test]
    fn full_int_domain_has_65536_values() {
        assert_eq!(ScalarType::Int.full_domain().size(), 65536);
    }

    #[test]
    fn domain_iteration_is_ascending() {
        let d = Domain::values(alloc::vec![5, -1, 3, 5]);
        assert_eq!(d.iter().collect::<Vec<_>>(), alloc::vec![-1, 3, 5]);
        let r = Domain::Range(-2, 1);
        assert_eq!(r.iter().collect::<Vec<_>>(), alloc::vec![-2, -1, 0, 1]);
        assert_eq!(r.clamp(9), 1);
    }
}
