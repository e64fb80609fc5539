//! Property suites over generated programs, shared by the integration
//! tests and the acceptance harness. Each returns how many programs passed
//! and a description of the first failures.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{random_multi_function, random_program};
use crate::backends::emit_c;
use crate::cex::{emit_simulator_inputs, parse_simulator_inputs, replay, validate, ValidationResult};
use crate::cfa::{inline_callees, VarKind};
use crate::engine::{brute_force_oracle, check, EngineConfig, Verdict, VerdictKind};
use crate::iterative::iterative_verify;
use crate::reductions::{cone_of_influence, constant_fold, eliminate_unreachable, reduce, value_set_abstraction};
use crate::requirements::{ReductionSwitches, VerificationProblem};

/// Cycles explored by the single-program suites; the oracle enumerates
/// every input sequence of this length.
pub const SUITE_CYCLES: u32 = 2;

const KEEP_FAILURES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SuiteResult {
    pub passed: usize,
    pub total: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.passed == self.total && self.total > 0
    }

    fn record(&mut self, r: Result<(), String>) {
        self.total += 1;
        match r {
            Ok(()) => self.passed += 1,
            Err(e) if self.failures.len() < KEEP_FAILURES => self.failures.push(e),
            Err(_) => {}
        }
    }
}

fn bounded() -> EngineConfig {
    EngineConfig { bound: SUITE_CYCLES, ..EngineConfig::default() }
}

fn run<F: FnMut(u64) -> Result<(), String>>(seeds: core::ops::Range<u64>, mut f: F) -> SuiteResult {
    let mut r = SuiteResult::default();
    for seed in seeds {
        r.record(f(seed));
    }
    r
}

/// Engine and brute-force oracle agree on the verdict kind (bounded and
/// exhaustive "no violation" answers compared as equal).
pub fn oracle_equivalence(seeds: core::ops::Range<u64>) -> SuiteResult {
    run(seeds, |seed| {
        let p = random_program(seed).problem();
        let v = check(&p, &bounded());
        let o = brute_force_oracle(&p, SUITE_CYCLES).map_err(|e| format!("seed {seed}: {e}"))?;
        if !v.kind().agrees(o.kind()) {
            return Err(format!("seed {seed}: engine {} oracle {}", v.kind().name(), o.kind().name()));
        }
        // violations are found at the same (shortest) depth
        if v.violation_cycle() != o.violation_cycle() {
            return Err(format!("seed {seed}: violation cycle {:?} vs {:?}", v.violation_cycle(), o.violation_cycle()));
        }
        Ok(())
    })
}

fn same(seed: u64, what: &str, base: &Verdict, p: &VerificationProblem) -> Result<(), String> {
    let v = check(p, &bounded());
    if v.kind().agrees(base.kind()) && v.violation_cycle() == base.violation_cycle() {
        Ok(())
    } else {
        Err(format!("seed {seed}: {what} changed {} to {}", base.kind().name(), v.kind().name()))
    }
}

/// Every reduction pass, alone and as the full pipeline, keeps the
/// verdict. Value-set abstraction is only compared where it applies.
pub fn reduction_soundness(seeds: core::ops::Range<u64>) -> SuiteResult {
    run(seeds, |seed| {
        let p = random_program(seed).problem();
        let base = check(&p, &bounded());
        same(seed, "constant folding", &base, &constant_fold(&p).0)?;
        same(seed, "unreachable elimination", &base, &eliminate_unreachable(&p).0)?;
        same(seed, "cone of influence", &base, &cone_of_influence(&p).0)?;
        let ints: Vec<_> =
            p.net.inputs().filter(|v| v.kind == VarKind::Input && v.scalar().is_integer()).map(|v| v.id).collect();
        for var in ints {
            let (q, report) = value_set_abstraction(&p, var);
            if !report.refused {
                same(seed, "value-set abstraction", &base, &q)?;
            }
        }
        let all = ReductionSwitches { valueset: true, ..ReductionSwitches::default() };
        same(seed, "the full pipeline", &base, &reduce(&p, &all).0)
    })
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).filter(|t| !t.is_empty())
}

/// Emitted C has no `goto` and keeps a loop construct when the source
/// has a loop.
pub fn c_structure(seeds: core::ops::Range<u64>) -> SuiteResult {
    run(seeds, |seed| {
        let g = random_program(seed);
        let m = emit_c(&g.problem());
        if tokens(&m.text).any(|t| t == "goto") {
            return Err(format!("seed {seed}: goto in the C model"));
        }
        let body = m.text.split_once("int main").map(|(_, b)| b).unwrap_or("");
        // the scan cycle itself is one `while (1)`; source loops add more
        let loops = tokens(body).filter(|t| matches!(*t, "while" | "for" | "do")).count();
        if g.has_loop && loops < 2 {
            return Err(format!("seed {seed}: source loop not emitted as a loop"));
        }
        Ok(())
    })
}

/// Engine violations validate as feasible, and their simulator input
/// files replay to the same trace. Seeds without a violation pass.
pub fn replay_round_trip(seeds: core::ops::Range<u64>) -> SuiteResult {
    run(seeds, |seed| {
        let p = random_program(seed).problem();
        let v = check(&p, &bounded());
        let Some(t) = v.trace() else { return Ok(()) };
        if validate(&p, t) != ValidationResult::Feasible {
            return Err(format!("seed {seed}: engine trace does not validate"));
        }
        let csv = emit_simulator_inputs(t).map_err(|e| format!("seed {seed}: {e}"))?;
        let steps = parse_simulator_inputs(&csv).map_err(|e| format!("seed {seed}: {e}"))?;
        let again = replay(&p.net, &p.property, &steps).map_err(|e| format!("seed {seed}: {e}"))?;
        if &again != t {
            return Err(format!("seed {seed}: replayed trace differs"));
        }
        Ok(())
    })
}

/// Number of violations among `seeds`, to show the round-trip suite is
/// not vacuous.
pub fn violations(seeds: core::ops::Range<u64>) -> usize {
    seeds.filter(|s| check(&random_program(*s).problem(), &bounded()).trace().is_some()).count()
}

/// Bound of the iterative suite.
pub const ITERATIVE_CYCLES: u32 = 4;

/// Iterative verification agrees with direct verification of the inlined
/// program, within callees + 1 iterations, with feasible violations.
pub fn iterative_agreement(seeds: core::ops::Range<u64>) -> SuiteResult {
    let cfg = EngineConfig { bound: ITERATIVE_CYCLES, ..EngineConfig::default() };
    run(seeds, |seed| {
        let g = random_multi_function(seed);
        let p = g.problem();
        let direct = check(&p.with_net(inline_callees(&p.net)), &cfg);
        let (v, state) = iterative_verify(&p, &cfg);
        if !v.kind().agrees(direct.kind()) {
            return Err(format!("seed {seed}: iterative {} direct {}", v.kind().name(), direct.kind().name()));
        }
        if state.iterations.len() > g.callees + 1 {
            return Err(format!("seed {seed}: {} iterations for {} callees", state.iterations.len(), g.callees));
        }
        if let Some(t) = v.trace() {
            if validate(&p, t) != ValidationResult::Feasible {
                return Err(format!("seed {seed}: returned trace is spurious"));
            }
        }
        Ok(())
    })
}

/// Verdict kinds and iteration counts of the iterative suite, for reports.
pub fn iterative_profile(seeds: core::ops::Range<u64>) -> Vec<(VerdictKind, usize)> {
    let cfg = EngineConfig { bound: ITERATIVE_CYCLES, ..EngineConfig::default() };
    seeds
        .map(|s| {
            let (v, st) = iterative_verify(&random_multi_function(s).problem(), &cfg);
            (v.kind(), st.iterations.len())
        })
        .collect()
}
