use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::cex::{ReplayError, Trace};
use crate::cfa::Expr;
use crate::requirements::Property;
use crate::test_util::problem;
use crate::types::{Span, Value};

const NEVER: &str = "FUNCTION F : BOOL\nVAR_INPUT x : BOOL; END_VAR\nF := FALSE;\nEND_FUNCTION\n\
    PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR q : BOOL; END_VAR\nq := F(x := a);\n//#ASSERT NOT q\nEND_PROGRAM\n";

const TWO: &str = "FUNCTION G : BOOL\nVAR_INPUT x : BOOL; END_VAR\nG := x;\nEND_FUNCTION\n\
    FUNCTION F : BOOL\nVAR_INPUT x : BOOL; END_VAR\nF := x AND NOT x;\nEND_FUNCTION\n\
    PROGRAM P\nVAR_INPUT a : BOOL; b : BOOL; END_VAR\nVAR q : BOOL; r : BOOL; END_VAR\n\
    r := G(x := b);\nq := F(x := a);\n//#ASSERT NOT q\nEND_PROGRAM\n";

fn names(s: &[&str]) -> BTreeSet<String> {
    s.iter().map(|n| String::from(*n)).collect()
}

fn direct(p: &VerificationProblem) -> Verdict {
    check(&p.with_net(inline_callees(&p.net)), &EngineConfig::default())
}

#[test]
fn empty_abstraction_is_plain_inlining() {
    let p = problem(NEVER);
    assert_eq!(abstract_functions(&p, &BTreeSet::new()).unwrap().net, inline_callees(&p.net));
    assert!(abstract_functions(&p, &names(&["Nope"])).is_err());
    let a = abstract_functions(&p, &names(&["F"])).unwrap();
    assert!(a.net.callees.is_empty());
    let nondet: Vec<_> = a
        .net
        .main
        .transitions
        .iter()
        .filter(|t| t.kind == TransKind::Call)
        .flat_map(|t| &t.assignments)
        .filter(|x| matches!(&x.value.kind, ExprKind::Nondet(d) if d.size() == 2))
        .collect();
    assert_eq!(nondet.len(), 1);
}

#[test]
fn spurious_counterexample_concretizes_the_callee() {
    let p = problem(NEVER);
    let (v, s) = iterative_verify(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Satisfied);
    assert_eq!(s.iterations.len(), 2);
    assert_eq!(s.iterations[0].verdict, VerdictKind::Violated);
    assert!(matches!(s.iterations[0].validation, Some(ValidationResult::Spurious { .. })));
    assert_eq!(s.iterations[1].verdict, VerdictKind::Satisfied);
    assert_eq!(s.concretized, vec![(String::from("F"), 1)]);
    assert!(s.abstracted.is_empty());
    // brute force over a and the abstracted output
    let o = crate::engine::brute_force_oracle(&p, 3).unwrap();
    assert!(o.kind().agrees(v.kind()));
}

#[test]
fn independent_property_needs_one_round() {
    let src = "FUNCTION F : BOOL\nVAR_INPUT x : BOOL; END_VAR\nF := x;\nEND_FUNCTION\n\
        PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR q : BOOL; r : BOOL; END_VAR\n\
        q := F(x := a);\nr := a OR NOT a;\n//#ASSERT r\nEND_PROGRAM\n";
    let p = problem(src);
    let (v, s) = iterative_verify(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Satisfied);
    assert_eq!(s.iterations.len(), 1);
    assert_eq!(s.abstracted, names(&["F"]));
    assert_eq!(direct(&p).kind(), v.kind());
}

#[test]
fn real_violation_is_returned_with_a_feasible_trace() {
    let src = "FUNCTION F : BOOL\nVAR_INPUT x : BOOL; END_VAR\nF := x;\nEND_FUNCTION\n\
        PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR q : BOOL; END_VAR\nq := F(x := a);\n//#ASSERT NOT q\nEND_PROGRAM\n";
    let p = problem(src);
    let (v, s) = iterative_verify(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Violated);
    assert_eq!(validate(&p, v.trace().unwrap()), ValidationResult::Feasible);
    // the first abstract trace may pick a=FALSE with output TRUE
    assert!(s.iterations.len() <= 2);
    assert_eq!(direct(&p).kind(), VerdictKind::Violated);
}

#[test]
fn divergence_picks_the_defining_callee() {
    let p = problem(TWO);
    let (v, s) = iterative_verify(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Satisfied);
    assert_eq!(s.concretized, vec![(String::from("F"), 1)]);
    assert_eq!(s.abstracted, names(&["G"]));
    assert!(s.iterations.len() <= p.net.callees.len() + 1);
}

#[test]
fn callee_holding_the_assertion_stays_concrete() {
    let src = "FUNCTION F : BOOL\nVAR_INPUT x : BOOL; END_VAR\nF := x;\n//#ASSERT F = x\nEND_FUNCTION\n\
        FUNCTION H : BOOL\nVAR_INPUT x : BOOL; END_VAR\nH := F(x := x);\nEND_FUNCTION\n\
        PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR q : BOOL; END_VAR\nq := H(x := a);\nEND_PROGRAM\n";
    let p = problem(src);
    let (v, s) = iterative_verify(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Satisfied);
    assert!(s.abstracted.is_empty());
    assert_eq!(s.concretized.len(), 2);
    assert!(s.concretized.iter().all(|(_, i)| *i == 0));
}

#[test]
fn function_block_outputs_are_havocked() {
    let src = "FUNCTION_BLOCK Latch\nVAR_INPUT set : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\n\
        IF set THEN q := TRUE; END_IF;\nEND_FUNCTION_BLOCK\n\
        PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR l : Latch; END_VAR\n\
        l(set := FALSE);\n//#ASSERT NOT l.q\nEND_PROGRAM\n";
    let p = problem(src);
    let (v, s) = iterative_verify(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Satisfied);
    assert_eq!(s.iterations.len(), 2);
    assert_eq!(s.iterations[0].verdict, VerdictKind::Violated);
}

#[test]
fn iteration_limit_gives_unknown() {
    let p = problem(NEVER);
    let (v, s) = iterative_verify_with(&p, &EngineConfig::default(), 1, &|| 0);
    assert_eq!(v.kind(), VerdictKind::Unknown);
    assert_eq!(s.iterations.len(), 1);
}

/// End-of-cycle valuations after one cycle, over all inputs and choices
/// (BOOL choices only).
fn one_cycle_states(net: &CfaNetwork) -> BTreeSet<Vec<(String, Value)>> {
    let prop = Property { expr: Expr::bool(true, Span::default()), at: crate::requirements::CheckAt::EndOfCycle };
    let ins: Vec<String> = net.inputs().map(|v| v.name.clone()).collect();
    let mut out = BTreeSet::new();
    for bits in 0..1u32 << ins.len() {
        let inputs: Vec<(String, Value)> =
            ins.iter().enumerate().map(|(i, n)| (n.clone(), Value::Bool(bits >> i & 1 == 1))).collect();
        let mut pending: Vec<Vec<i64>> = vec![Vec::new()];
        while let Some(choices) = pending.pop() {
            let step = Step { inputs: inputs.clone(), choices: choices.clone() };
            match replay(net, &prop, &[step]) {
                Ok(Trace { cycles, .. }) => {
                    out.insert(cycles[0].end.clone());
                }
                Err(ReplayError::MissingChoice { .. }) => {
                    for b in [0, 1] {
                        let mut c = choices.clone();
                        c.push(b);
                        pending.push(c);
                    }
                }
                Err(e) => panic!("{e}"),
            }
        }
    }
    out
}

#[test]
fn abstraction_over_approximates_one_cycle() {
    for src in [NEVER, TWO] {
        let p = problem(src);
        let conc = one_cycle_states(&inline_callees(&p.net));
        let abs = one_cycle_states(&abstract_functions(&p, &names(&["F"])).unwrap().net);
        let project = |s: &Vec<(String, Value)>| -> Vec<(String, Value)> {
            s.iter().filter(|(n, _)| abs.iter().next().unwrap().iter().any(|(m, _)| m == n)).cloned().collect()
        };
        let abs_p: BTreeSet<_> = abs.iter().map(project).collect();
        for c in &conc {
            assert!(abs_p.contains(&project(c)), "{c:?} missing");
        }
        assert!(abs_p.len() > conc.iter().map(project).collect::<BTreeSet<_>>().len());
    }
}
