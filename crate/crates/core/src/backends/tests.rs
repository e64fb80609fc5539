use alloc::format;
use alloc::string::String;

use super::*;
use crate::cex::{validate, ValidationResult};
use crate::engine::VerdictKind;
use crate::test_util::problem;

const IFQ: &str = "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\n\
                   IF a THEN q := TRUE; END_IF;\n//#ASSERT NOT q\nEND_PROGRAM\n";
const LOOP: &str = "PROGRAM P\nVAR_INPUT n : INT; END_VAR\nVAR i : INT; acc : INT; END_VAR\n\
                    acc := 0;\nFOR i := 1 TO 5 DO acc := acc + i; END_FOR;\n\
                    REPEAT acc := acc - 1; UNTIL acc < 10 END_REPEAT;\n//#ASSERT acc < 20 OR n > 0\nEND_PROGRAM\n";
const DYN: &str = "PROGRAM P\nVAR_INPUT i : INT; END_VAR\nVAR a : ARRAY[1..3] OF INT; END_VAR\n\
                   VAR_OUTPUT q : INT; END_VAR\nq := a[i];\n//#ASSERT q = 0\nEND_PROGRAM\n";

fn run(output: &str) -> ToolRun {
    ToolRun { output: output.into(), exit_code: Some(0), ..ToolRun::default() }
}

#[test]
fn smv_declares_locations_cells_and_guarded_invariant() {
    let m = emit_smv(&problem(IFQ)).unwrap();
    assert_eq!(m.format, ModelFormat::Smv);
    assert!(m.text.starts_with("-- "));
    assert_eq!(m.text.matches("MODULE ").count(), 1);
    assert!(m.text.contains("  a : boolean;\n"));
    assert!(m.text.contains("  q : boolean;\n"));
    assert!(m.text.contains(&format!("  {} : {{l0, ", m.control)));
    assert!(m.text.contains("IVAR\n  in_a : boolean;\n"));
    let spec = m.text.lines().find(|l| l.starts_with("INVARSPEC NAME ")).unwrap();
    assert!(spec.contains(&m.property_label));
    assert!(spec.contains(&format!("({} = l", m.control)));
    assert!(spec.contains("-> !q"));
}

#[test]
fn smv_words_and_restricted_inputs() {
    let mut p = problem("PROGRAM P\nVAR_INPUT i : INT; END_VAR\nVAR_OUTPUT q : DINT; END_VAR\nq := -32768;\n//#ASSERT i > -5\nEND_PROGRAM\n");
    let i = p.net.var_by_name("i").unwrap().id;
    p.net.set_input_domain(i, Domain::values(alloc::vec![-5, 3]));
    let m = emit_smv(&p).unwrap();
    assert!(m.text.contains("  i : signed word[16];\n"));
    assert!(m.text.contains("  q : signed word[32];\n"));
    assert!(m.text.contains("-0sd32_32768"));
    assert!(m.text.contains("(in_i = -0sd16_5 | in_i = 0sd16_3)"));
    assert!(m.text.contains("(i > -0sd16_5)"));
}

#[test]
fn smv_rejects_dynamic_indexing() {
    let p = problem(DYN);
    match emit_smv(&p) {
        Err(BackendError::Unsupported { feature, span }) => {
            assert!(feature.contains("dynamic"));
            assert_eq!(&DYN[span.start as usize..span.end as usize], "i");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn c_is_structured_and_keeps_loops() {
    let m = emit_c(&problem(LOOP));
    assert!(!m.text.contains("goto"));
    assert!(!m.text.contains("switch"));
    assert!(m.text.contains("while (i <= 5) {"));
    assert!(m.text.contains("if (acc < 10) {\n                break;\n            } else {\n"));
    assert_eq!(m.text.matches("while (").count(), 3, "{}", m.text);
    assert!(m.text.contains("int16_t nondet_int16(void);"));
    assert!(m.text.contains("typedef signed short int16_t;"));
    assert!(m.text.contains("__CPROVER_assert("));
    assert!(m.text.contains("break;"));
}

#[test]
fn c_dynamic_indexing_uses_native_arrays() {
    let m = emit_c(&problem(DYN));
    assert!(m.text.contains("int16_t a[3] = {0, 0, 0};"));
    assert!(m.text.contains("a[i - 1]"));
}

#[test]
fn emitters_are_deterministic() {
    for src in [IFQ, LOOP] {
        let p = problem(src);
        assert_eq!(emit_smv(&p).unwrap().text, emit_smv(&p).unwrap().text);
        assert_eq!(emit_c(&p).text, emit_c(&p).text);
    }
}

#[test]
fn name_map_is_a_bijection() {
    let src = "PROGRAM P\nVAR_INPUT next : BOOL; init : BOOL; END_VAR\nVAR x : ARRAY[0..2] OF BOOL; main : BOOL; short : BOOL; END_VAR\n\
               main := next AND init;\nshort := main;\n//#ASSERT TRUE\nEND_PROGRAM\n";
    let p = problem(src);
    for m in [emit_smv(&p).unwrap(), emit_c(&p)] {
        assert!(!m.map.is_empty());
        let mut seen = alloc::collections::BTreeSet::new();
        for (name, id) in m.map.iter() {
            assert_eq!(m.map.name(id), Some(name));
            assert!(seen.insert(String::from(id)));
            assert!(id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
            assert!(!SMV_KEYWORDS.contains(&id) || m.format == ModelFormat::C);
            assert!(!C_KEYWORDS.contains(&id) || m.format == ModelFormat::Smv);
        }
    }
}

#[test]
fn tool_markers() {
    let m = emit_smv(&problem(IFQ)).unwrap();
    let sat = run("*** This is NuSMV\n-- invariant (loc = l4 -> !q) is true\n");
    assert_eq!(parse_tool_output(&sat, &m).kind(), VerdictKind::Satisfied);
    assert_eq!(parse_tool_output(&run("segmentation fault"), &m).kind(), VerdictKind::Unknown);
    let slow = ToolRun { timed_out: true, wall_ms: 1000, ..ToolRun::default() };
    assert_eq!(parse_tool_output(&slow, &m).kind(), VerdictKind::Unknown);
    let c = emit_c(&problem(IFQ));
    assert_eq!(
        parse_tool_output(&run("** 0 of 1 failed\nVERIFICATION SUCCESSFUL\n"), &c).kind(),
        VerdictKind::BoundReached
    );
    assert_eq!(parse_tool_output(&run("\n"), &c).kind(), VerdictKind::Unknown);
}

#[test]
fn smv_counterexample_is_replayed() {
    let p = problem(IFQ);
    let m = emit_smv(&p).unwrap();
    let cs = m.net.main.cycle_start.unwrap();
    let after = m.net.main.havoc().unwrap().target;
    let loc = &m.control;
    let out = format!(
        "-- invariant ({loc} = l9 -> !q) is false\n-- as demonstrated by the following execution sequence\n\
         Trace Description: AG alpha Counterexample\nTrace Type: Counterexample\n\
         \x20 -> State: 1.1 <-\n    {loc} = l0\n    a = FALSE\n    q = FALSE\n\
         \x20 -> Input: 1.2 <-\n    in_a = FALSE\n\
         \x20 -> State: 1.2 <-\n    {loc} = l{}\n\
         \x20 -> Input: 1.3 <-\n    in_a = TRUE\n\
         \x20 -> State: 1.3 <-\n    {loc} = l{}\n    a = TRUE\n",
        cs.0, after.0
    );
    let v = parse_tool_output(&run(&out), &m);
    assert_eq!(v.kind(), VerdictKind::Violated, "{out}\n{v:?}");
    let t = v.trace().unwrap();
    assert_eq!(t.len(), 1, "{out}\n{t:?}");
    assert_eq!(t.cycles[0].inputs, alloc::vec![(String::from("a"), crate::Value::Bool(true))]);
    assert_eq!(validate(&p, t), ValidationResult::Feasible);
}

#[test]
fn cbmc_counterexample_is_replayed_or_flagged() {
    let p = problem(IFQ);
    let m = emit_c(&p);
    let trace = |a: &str| {
        format!(
            "CBMC version 5\n\nTrace for {label}:\n\nState 1 file m.c line 5 thread 0\n----\n  scan_cycle=0u (0)\n\n\
             State 9 file m.c function main line 14 thread 0\n----\n  scan_cycle=1u (00000001)\n\n\
             State 10 file m.c function main line 15 thread 0\n----\n  in_a={a} (00000001)\n  a={a} (00000001)\n  q=TRUE\n\n\
             Violated property:\n  file m.c function main line 20 thread 0\n  {label}\n  !q\n\n\
             ** 1 of 1 failed\nVERIFICATION FAILED\n",
            label = m.property_label
        )
    };
    let v = parse_tool_output(&run(&trace("TRUE")), &m);
    assert_eq!(v.kind(), VerdictKind::Violated);
    assert_eq!(validate(&p, v.trace().unwrap()), ValidationResult::Feasible);
    // a claim the program cannot reproduce
    let v = parse_tool_output(&run(&trace("FALSE")), &m);
    assert_eq!(v.kind(), VerdictKind::Violated);
    let t = v.trace().unwrap();
    assert_eq!(t.cycles[0].end, alloc::vec![(String::from("q"), crate::Value::Bool(true))]);
    assert!(matches!(validate(&p, t), ValidationResult::Spurious { cycle: 1, .. }));
}
