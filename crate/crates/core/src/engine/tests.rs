use super::*;
use crate::cex::{validate, ValidationResult, ViolationKind};
use crate::test_util::problem;

const AND: &str = "PROGRAM P\nVAR_INPUT a : BOOL; b : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\n\
                   q := a AND b;\n//#ASSERT q = (a AND b)\nEND_PROGRAM\n";
const IFQ: &str = "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\n\
                   IF a THEN q := TRUE; END_IF;\n//#ASSERT NOT q\nEND_PROGRAM\n";

#[test]
fn conjunction_is_satisfied() {
    let v = check(&problem(AND), &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Satisfied);
    assert_eq!(v.stats.branching_factor, 4);
}

#[test]
fn guarded_set_is_violated_in_first_cycle() {
    let p = problem(IFQ);
    let v = check(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Violated);
    let t = v.trace().unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t.cycles[0].inputs, alloc::vec![("a".into(), crate::Value::Bool(true))]);
    assert_eq!(t.violation.unwrap().kind, ViolationKind::Property);
    assert_eq!(validate(&p, t), ValidationResult::Feasible);
    // brute force over a ∈ {FALSE, TRUE}
    let o = brute_force_oracle(&p, 1).unwrap();
    assert_eq!(o.kind(), VerdictKind::Violated);
    assert_eq!(o.trace(), v.trace());
}

#[test]
fn full_int_input_branches_65536_ways() {
    let p = problem("PROGRAM P\nVAR_INPUT i : INT; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\nq := i > 5;\n//#ASSERT q OR i <= 5\nEND_PROGRAM\n");
    assert_eq!(p.net.branching_factor(), 65536);
    let v = check(&p, &EngineConfig { bound: 2, ..Default::default() });
    assert_eq!(v.kind(), VerdictKind::Satisfied);
    assert_eq!(v.stats.branching_factor, 65536);
}

#[test]
fn counter_needs_several_cycles() {
    let src = "PROGRAM P\nVAR_INPUT up : BOOL; END_VAR\nVAR n : INT; END_VAR\n\
               IF up THEN n := n + 1; END_IF;\n//#ASSERT n < 3\nEND_PROGRAM\n";
    let p = problem(src);
    let v = check(&p, &EngineConfig { bound: 2, ..Default::default() });
    assert_eq!(v.kind(), VerdictKind::BoundReached);
    for k in [3, 4, 10] {
        let v = check(&p, &EngineConfig { bound: k, ..Default::default() });
        assert_eq!(v.kind(), VerdictKind::Violated);
        assert_eq!(v.violation_cycle(), Some(3));
    }
    let o = brute_force_oracle(&p, 3).unwrap();
    assert_eq!(o.violation_cycle(), Some(3));
    assert_eq!(o.trace(), check(&p, &EngineConfig::default()).trace());
}

#[test]
fn state_revisits_close_the_search() {
    let src = "PROGRAM P\nVAR_INPUT t : BOOL; END_VAR\nVAR s : BOOL; END_VAR\n\
               IF t THEN s := NOT s; END_IF;\n//#ASSERT s OR NOT s\nEND_PROGRAM\n";
    let v = check(&problem(src), &EngineConfig { bound: 50, ..Default::default() });
    assert_eq!(v.kind(), VerdictKind::Satisfied);
    assert_eq!(v.stats.states_explored, 2);
    assert!(v.stats.cycles_completed <= 3);
}

#[test]
fn division_by_zero_is_a_fault() {
    let src =
        "PROGRAM P\nVAR_INPUT d : INT; END_VAR\nVAR q : INT; END_VAR\nq := 100 / d;\n//#ASSERT TRUE\nEND_PROGRAM\n";
    let mut p = problem(src);
    let d = p.net.var_by_name("d").unwrap().id;
    p.net.set_input_domain(d, crate::Domain::Range(-8, 7));
    let v = check(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Fault);
    let t = v.trace().unwrap();
    assert!(matches!(t.violation.unwrap().kind, ViolationKind::Fault(_)));
    assert_eq!(brute_force_oracle(&p, 2).unwrap().kind(), VerdictKind::Fault);
}

#[test]
fn state_cap_reports_bound_reached() {
    let src = "PROGRAM P\nVAR_INPUT up : BOOL; END_VAR\nVAR n : INT; END_VAR\n\
               IF up THEN n := n + 1; END_IF;\n//#ASSERT n >= 0 OR n < 0\nEND_PROGRAM\n";
    let v = check(&problem(src), &EngineConfig { bound: 100, max_states: 10 });
    assert_eq!(v.outcome, Outcome::BoundReached { cap_hit: true });
    assert!(v.stats.cap_hit);
}

#[test]
fn oracle_counts_sequences_and_guards_tractability() {
    let src = "PROGRAM P\nVAR_INPUT a : BOOL; b : BOOL; END_VAR\n//#ASSERT TRUE\nEND_PROGRAM\n";
    let p = problem(src);
    let o = brute_force_oracle(&p, 2).unwrap();
    assert_eq!(o.kind(), VerdictKind::BoundReached);
    assert_eq!(o.stats.states_explored, 16);
    assert!(brute_force_oracle(&p, 4).is_err());
    let wide = problem("PROGRAM P\nVAR_INPUT i : INT; j : INT; END_VAR\n//#ASSERT TRUE\nEND_PROGRAM\n");
    assert!(matches!(brute_force_oracle(&wide, 1), Err(OracleError::TooManyInputs(_))));
}

#[test]
fn deterministic_verdicts() {
    let p = problem(IFQ);
    assert_eq!(check(&p, &EngineConfig::default()), check(&p, &EngineConfig::default()));
}

#[test]
fn every_frontier_state_sees_every_input() {
    // the violation needs the first input value from the second state
    let src = "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR s : INT; END_VAR\n\
               IF s = 0 THEN IF a THEN s := 1; ELSE s := 2; END_IF;\n\
               ELSIF s = 1 AND NOT a THEN s := 3; END_IF;\n//#ASSERT s <> 3\nEND_PROGRAM\n";
    let p = problem(src);
    let v = check(&p, &EngineConfig::default());
    assert_eq!(v.kind(), VerdictKind::Violated);
    assert_eq!(v.violation_cycle(), Some(2));
    assert_eq!(v.stats.cycles_executed, 2 + 2 + 1);
}
