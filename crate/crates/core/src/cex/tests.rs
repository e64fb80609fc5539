use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::engine::{check, EngineConfig};
use crate::test_util::problem;

const IFQ: &str = "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\n\
                   IF a THEN q := TRUE; END_IF;\n//#ASSERT NOT q\nEND_PROGRAM\n";

fn step(inputs: &[(&str, Value)]) -> Step {
    Step { inputs: inputs.iter().map(|(n, v)| (String::from(*n), *v)).collect(), choices: Vec::new() }
}

#[test]
fn replay_rejects_bad_input_lists() {
    let p = problem(IFQ);
    assert_eq!(replay(&p.net, &p.property, &[]), Err(ReplayError::NoCycles));
    assert!(matches!(replay(&p.net, &p.property, &[step(&[])]), Err(ReplayError::MissingInput { cycle: 1, .. })));
    let extra = step(&[("a", Value::Bool(false)), ("zz", Value::Bool(true))]);
    assert!(matches!(replay(&p.net, &p.property, &[extra]), Err(ReplayError::UnknownInput { .. })));
    let wrong = step(&[("a", Value::Int(3))]);
    assert!(matches!(replay(&p.net, &p.property, &[wrong]), Err(ReplayError::BadValue { .. })));
}

#[test]
fn constant_program_replays_identically() {
    let src = "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR x : INT := 4; y : BOOL; END_VAR\n\
               x := 4; y := TRUE;\n//#ASSERT x = 4\nEND_PROGRAM\n";
    let p = problem(src);
    let steps =
        vec![step(&[("a", Value::Bool(false))]), step(&[("a", Value::Bool(true))]), step(&[("a", Value::Bool(false))])];
    let t = replay(&p.net, &p.property, &steps).unwrap();
    assert_eq!(t.len(), 3);
    assert!(t.violation.is_none());
    assert!(t.cycles.windows(2).all(|w| w[0].end == w[1].end));
    assert_eq!(t, replay(&p.net, &p.property, &steps).unwrap());
}

#[test]
fn simulator_file_format_and_round_trip() {
    let src = "PROGRAM P\nVAR_INPUT a : BOOL; n : INT; END_VAR\nVAR s : INT; END_VAR\n\
               s := s + n;\n//#ASSERT s <> 2\nEND_PROGRAM\n";
    let p = problem(src);
    let steps = vec![
        step(&[("a", Value::Bool(true)), ("n", Value::Int(5))]),
        step(&[("a", Value::Bool(false)), ("n", Value::Int(-3))]),
    ];
    let t = replay(&p.net, &p.property, &steps).unwrap();
    assert_eq!(t.violation.map(|v| v.cycle), Some(2));
    let text = emit_simulator_inputs(&t).unwrap();
    assert_eq!(text, "cycle;a;n\n1;TRUE;5\n2;FALSE;-3\n");
    let back = parse_simulator_inputs(&text).unwrap();
    assert_eq!(replay(&p.net, &p.property, &back).unwrap(), t);
    assert_eq!(emit_simulator_inputs(&Trace { cycles: Vec::new(), violation: None }), Err(SimulatorError::Empty));
    assert!(parse_simulator_inputs("cycle;a\n1;maybe\n").is_err());
}

#[test]
fn engine_traces_validate_feasible() {
    let p = problem(IFQ);
    let v = check(&p, &EngineConfig::default());
    assert_eq!(validate(&p, v.trace().unwrap()), ValidationResult::Feasible);
}

#[test]
fn trace_contradicting_loop_effect_is_spurious() {
    let src = "PROGRAM P\nVAR_INPUT k : BOOL; END_VAR\nVAR i : INT; acc : INT; END_VAR\n\
               acc := 0;\nFOR i := 1 TO 3 DO acc := acc + i; END_FOR;\n//#ASSERT acc = 6\nEND_PROGRAM\n";
    let p = problem(src);
    let steps = vec![step(&[("k", Value::Bool(false))]), step(&[("k", Value::Bool(true))])];
    let mut t = replay(&p.net, &p.property, &steps).unwrap();
    assert!(t.violation.is_none());
    // claim the loop stopped one iteration early in the second cycle
    for (n, v) in &mut t.cycles[1].end {
        if n == "acc" {
            *v = Value::Int(3);
        }
    }
    let anchor = p.property.check_points(&p.net)[0].0;
    t.violation = Some(Violation { cycle: 2, location: anchor, kind: ViolationKind::Property });
    assert_eq!(validate(&p, &t), ValidationResult::Spurious { cycle: 2, variable: Some("acc".into()) });
}

#[test]
fn localization_of_guarded_assignment() {
    let p = problem(IFQ);
    let t = check(&p, &EngineConfig::default()).trace().unwrap().clone();
    let r = localize(&p, &t).unwrap();
    assert_eq!(r.entries.len(), 2, "{r:?}");
    let (asg, guard) = (&r.entries[0], &r.entries[1]);
    assert_eq!(asg.kind, localize::EntryKind::Assignment);
    assert_eq!(asg.variable, "q");
    assert_eq!(asg.score, 0.5);
    assert_eq!(&IFQ[asg.span.start as usize..asg.span.end as usize], "q := TRUE;");
    assert_eq!(guard.kind, localize::EntryKind::Guard);
    assert!((guard.score - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(&IFQ[guard.span.start as usize..guard.span.end as usize], "a");
}

#[test]
fn localization_skips_unrelated_statements() {
    let src = "PROGRAM P\nVAR_INPUT a : BOOL; b : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; z : BOOL; END_VAR\n\
               z := b;\nIF a THEN q := TRUE; END_IF;\n//#ASSERT NOT q\nEND_PROGRAM\n";
    let p = problem(src);
    let t = check(&p, &EngineConfig::default()).trace().unwrap().clone();
    let r = localize(&p, &t).unwrap();
    assert!(r.entries.iter().all(|e| e.variable != "z"));
    assert_eq!(r.entries.len(), 2);
}

#[test]
fn constant_property_has_empty_slice() {
    let src = "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR q : BOOL; END_VAR\nq := a;\n//#ASSERT FALSE\nEND_PROGRAM\n";
    let p = problem(src);
    let t = check(&p, &EngineConfig::default()).trace().unwrap().clone();
    assert!(localize(&p, &t).unwrap().entries.is_empty());
}

#[test]
fn localization_follows_data_across_cycles() {
    let src = "PROGRAM P\nVAR_INPUT up : BOOL; END_VAR\nVAR n : INT; m : INT; END_VAR\n\
               m := 7;\nIF up THEN n := n + 1; END_IF;\n//#ASSERT n < 2\nEND_PROGRAM\n";
    let p = problem(src);
    let t = check(&p, &EngineConfig::default()).trace().unwrap().clone();
    assert_eq!(t.len(), 2);
    let r = localize(&p, &t).unwrap();
    assert!(r.entries.iter().all(|e| e.variable != "m"));
    assert!(r.entries.windows(2).all(|w| w[0].score >= w[1].score));
    assert_eq!(r.entries[0].variable, "n");
}

#[test]
fn localization_requires_a_feasible_trace() {
    let p = problem(IFQ);
    let mut t = check(&p, &EngineConfig::default()).trace().unwrap().clone();
    t.cycles[0].inputs[0].1 = Value::Bool(false);
    assert_eq!(localize(&p, &t), Err(LocalizeError::NotFeasible));
}

#[test]
fn concrete_replay_restores_sliced_variables() {
    let src = "PROGRAM P\nVAR_INPUT a : BOOL; b : BOOL; END_VAR\nVAR q : BOOL; z : BOOL; END_VAR\n\
               z := b; IF a THEN q := TRUE; END_IF;\n//#ASSERT NOT q\nEND_PROGRAM\n";
    let p = problem(src);
    let (q, _) = crate::reductions::cone_of_influence(&p);
    let v = check(&q, &EngineConfig::default());
    let t = v.trace().unwrap();
    assert!(t.cycles[0].end.iter().all(|(n, _)| n != "z"));
    let full = replay_concrete(&p, t).unwrap();
    assert_eq!(full.violation.map(|v| v.cycle), Some(1));
    assert_eq!(full.cycles[0].inputs.len(), 2);
    assert!(full.cycles[0].end.iter().any(|(n, _)| n == "z"));
}
