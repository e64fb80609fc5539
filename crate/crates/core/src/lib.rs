//! Verification core for PLC programs written in a Structured Text subset.
//!
//! The pipeline is: [`syntax`] parses and resolves sources, [`cfa`] lowers an
//! entry point to control flow automata with scan-cycle semantics,
//! [`requirements`] turns assertions and patterns into verification problems,
//! [`reductions`] shrinks them, and [`engine`] decides them by explicit-state
//! exploration. [`backends`] emits NuSMV and CBMC models and parses their
//! output, [`cex`] replays, validates and localizes counterexamples, and
//! [`iterative`] verifies with callees abstracted away.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod backends;
pub mod cex;
pub mod cfa;
pub mod engine;
pub mod iterative;
pub mod ops;
pub mod reductions;
pub mod requirements;
pub mod syntax;
#[cfg(feature = "testing")]
pub mod testing;
pub mod types;

pub use types::{Domain, ElementaryType, ScalarType, Span, Value};

#[cfg(test)]
pub(crate) mod test_util {
    use alloc::vec::Vec;

    use crate::cfa::{build_cfa, CfaNetwork};
    use crate::requirements::{assertions_to_problems, VerificationProblem};
    use crate::syntax::{load, SourceUnit};

    pub fn net(src: &str, entry: &str) -> CfaNetwork {
        let p = load(&[SourceUnit::new("t.st", src)]).unwrap_or_else(|d| panic!("{d:?}"));
        build_cfa(&p.ast, entry, &p.assertions).unwrap()
    }

    pub fn problems(src: &str) -> Vec<VerificationProblem> {
        assertions_to_problems(&net(src, "P")).unwrap()
    }

    pub fn problem(src: &str) -> VerificationProblem {
        problems(src).remove(0)
    }
}
