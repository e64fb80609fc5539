use super::*;
use crate::cfa::{dump, ExprKind};
use crate::engine::{check, EngineConfig, VerdictKind};
use crate::test_util::problem;
use crate::types::Domain;

fn all_on() -> ReductionSwitches {
    ReductionSwitches { fold: true, unreach: true, coi: true, valueset: true }
}

fn verdict(p: &VerificationProblem) -> VerdictKind {
    check(p, &EngineConfig { bound: 4, ..Default::default() }).kind()
}

#[test]
fn false_guard_branch_disappears() {
    let p = problem(
        "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\n\
         IF 1 = 2 THEN q := TRUE; ELSE q := a; END_IF;\n//#ASSERT q = a\nEND_PROGRAM\n",
    );
    let (f, r) = constant_fold(&p);
    assert!(r.assignments_removed >= 1);
    assert!(f.net.main.transitions.iter().all(|t| t.guard.as_const() != Some(0)));
    let (u, r) = eliminate_unreachable(&f);
    assert!(r.locations_removed >= 1);
    assert!(!dump(&u.net).contains("TRUE;\n") || !dump(&u.net).contains("q := TRUE"));
    assert_eq!(verdict(&p), verdict(&u));
}

#[test]
fn arithmetic_folds_with_wraparound() {
    let p = problem(
        "PROGRAM P\nVAR_OUTPUT x : INT; y : INT; END_VAR\nx := 2 + 3;\ny := 32767 + 1;\n//#ASSERT y < 0\nEND_PROGRAM\n",
    );
    let (f, r) = constant_fold(&p);
    assert!(r.constants_folded >= 2);
    let consts: alloc::vec::Vec<i64> =
        f.net.main.transitions.iter().flat_map(|t| t.assignments.iter()).filter_map(|a| a.value.as_const()).collect();
    assert!(consts.contains(&5));
    assert!(consts.contains(&-32768));
    assert_eq!(verdict(&f), VerdictKind::Satisfied);
}

#[test]
fn cone_drops_unrelated_state() {
    let p = problem(
        "PROGRAM P\nVAR_INPUT a : BOOL; c : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; z : INT; END_VAR\n\
         q := a;\nIF c THEN z := z + 1; END_IF;\n//#ASSERT q = a\nEND_PROGRAM\n",
    );
    let (r, rep) = cone_of_influence(&p);
    assert!(r.net.var_by_name("z").is_none());
    assert!(r.net.var_by_name("c").is_none());
    assert!(rep.variables_removed >= 2);
    assert_eq!(r.net.branching_factor(), 2);
    assert!(verdict(&r).agrees(verdict(&p)));
}

#[test]
fn cone_keeps_control_dependences() {
    let p = problem(
        "PROGRAM P\nVAR_INPUT a : BOOL; b : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; z : BOOL; END_VAR\n\
         q := FALSE;\nIF a THEN q := b; END_IF;\nz := b;\n//#ASSERT NOT q\nEND_PROGRAM\n",
    );
    let (r, _) = cone_of_influence(&p);
    assert!(r.net.var_by_name("a").is_some());
    assert!(r.net.var_by_name("b").is_some());
    assert!(r.net.var_by_name("z").is_none());
    assert_eq!(verdict(&r), VerdictKind::Violated);
    assert_eq!(verdict(&p), VerdictKind::Violated);
}

#[test]
fn cone_keeps_faults() {
    let p = problem(
        "PROGRAM P\nVAR_INPUT d : INT; END_VAR\nVAR z : INT; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\n\
         z := 10 / d;\nq := TRUE;\n//#ASSERT q\nEND_PROGRAM\n",
    );
    let mut p = p;
    let d = p.net.var_by_name("d").unwrap().id;
    p.net.set_input_domain(d, Domain::Range(-2, 2));
    let (r, _) = cone_of_influence(&p);
    assert_eq!(verdict(&r), VerdictKind::Fault);
}

#[test]
fn value_set_keeps_one_value_per_class() {
    let p = problem(
        "PROGRAM P\nVAR_INPUT i : INT; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\nq := i > 5;\n//#ASSERT q OR i <= 5\nEND_PROGRAM\n",
    );
    assert_eq!(p.net.branching_factor(), 65536);
    let i = p.net.var_by_name("i").unwrap().id;
    let (r, rep) = value_set_abstraction(&p, i);
    assert!(!rep.refused);
    assert_eq!(rep.domains_restricted, 1);
    assert_eq!(r.net.var(i).domain, Domain::Values(alloc::vec![-32768, 4, 5, 6, 32767]));
    assert_eq!(r.net.branching_factor(), 5);
    let h = r.net.main.havoc().unwrap();
    let a = h.assignments.iter().find(|a| a.target.var == i).unwrap();
    assert!(matches!(&a.value.kind, ExprKind::Nondet(d) if d.size() == 5));
}

#[test]
fn value_set_refuses_arithmetic_uses() {
    let p = problem(
        "PROGRAM P\nVAR_INPUT i : INT; j : INT; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\nq := i + j > 5;\n//#ASSERT TRUE\nEND_PROGRAM\n",
    );
    let i = p.net.var_by_name("i").unwrap().id;
    let (r, rep) = value_set_abstraction(&p, i);
    assert!(rep.refused);
    assert!(rep.reason.is_some());
    assert_eq!(r.net, p.net);
}

#[test]
fn pipeline_is_idempotent_and_shrinks() {
    let srcs = [
        "PROGRAM P\nVAR_INPUT a : BOOL; i : INT; END_VAR\nVAR_OUTPUT q : BOOL; z : INT; END_VAR\nVAR k : INT := 3; END_VAR\n\
         IF i > k THEN q := a; ELSE q := FALSE; END_IF;\nz := z + 1;\n//#ASSERT q OR NOT a OR i <= 3\nEND_PROGRAM\n",
        "PROGRAM P\nVAR_INPUT up : BOOL; END_VAR\nVAR n : INT; m : INT; END_VAR\n\
         IF up THEN n := n + 1; END_IF;\nWHILE m < 2 DO m := m + 1; END_WHILE;\n//#ASSERT n < 3\nEND_PROGRAM\n",
    ];
    for src in srcs {
        let p = problem(src);
        let (r1, _) = reduce(&p, &all_on());
        let (r2, _) = reduce(&r1, &all_on());
        assert_eq!(dump(&r1.net), dump(&r2.net));
        let (s0, s1) = (Size::of(&p.net), Size::of(&r1.net));
        assert!(s1.locations <= s0.locations && s1.transitions <= s0.transitions && s1.variables <= s0.variables);
        assert!(r1.net.branching_factor() <= p.net.branching_factor());
        assert!(verdict(&r1).agrees(verdict(&p)));
    }
}

#[test]
fn default_pipeline_skips_value_sets() {
    let p = problem("PROGRAM P\nVAR_INPUT i : INT; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\nq := i > 5;\n//#ASSERT TRUE\nEND_PROGRAM\n");
    let (_, reps) = reduce(&p, &ReductionSwitches::default());
    assert_eq!(
        reps.iter().map(|r| r.pass).collect::<alloc::vec::Vec<_>>(),
        [Pass::ConstantFold, Pass::EliminateUnreachable, Pass::ConeOfInfluence]
    );
}
