use alloc::string::ToString;
use alloc::vec::Vec;

use super::*;

fn src(text: &str) -> SourceUnit {
    SourceUnit::new("test.st", text)
}

fn errors(text: &str) -> Vec<alloc::string::String> {
    parse(&src(text)).unwrap_err().0.into_iter().map(|d| d.message).collect()
}

#[test]
fn function_block_with_one_assignment() {
    let ast = parse(&src(
        "FUNCTION_BLOCK FB1 VAR_INPUT a:BOOL; END_VAR VAR_OUTPUT q:BOOL; END_VAR q := a; END_FUNCTION_BLOCK",
    ))
    .unwrap();
    assert_eq!(ast.units.len(), 1);
    let u = &ast.units[0];
    assert_eq!(u.kind, UnitKind::FunctionBlock);
    assert_eq!(u.body.stmts.len(), 1);
    assert!(matches!(u.body.stmts[0].kind, StmtKind::Assign { .. }));
}

#[test]
fn bool_plus_int_is_a_type_mismatch() {
    let errs = errors("PROGRAM P VAR q : BOOL; END_VAR q := TRUE + 1; END_PROGRAM");
    assert!(errs.iter().any(|m| m.contains("type mismatch")), "{errs:?}");
}

#[test]
fn for_loop_bounds() {
    let ast =
        parse(&src("PROGRAM P VAR i : INT; s : INT; END_VAR FOR i := 0 TO 9 DO s := s + i; END_FOR; END_PROGRAM"))
            .unwrap();
    match &ast.units[0].body.stmts[0].kind {
        StmtKind::For { from, to, step, body, .. } => {
            assert_eq!(from.kind, ExprKind::Int(0));
            assert_eq!(to.kind, ExprKind::Int(9));
            assert_eq!(*step, 1);
            assert_eq!(body.stmts.len(), 1);
        }
        other => panic!("expected FOR, got {other:?}"),
    }
}

#[test]
fn every_expression_is_typed_after_resolution() {
    let ast =
        parse(&src("PROGRAM P VAR_INPUT a : BOOL; n : INT; END_VAR VAR x : DINT; arr : ARRAY[1..4] OF INT; END_VAR
         IF a AND n > 3 THEN x := 70000 + 1; arr[n] := -n MOD 2; END_IF; END_PROGRAM"))
        .unwrap();
    fn check_block(b: &Block) {
        for s in &b.stmts {
            match &s.kind {
                StmtKind::Assign { value, target } => {
                    value.walk(&mut |e| assert!(e.ty.is_some(), "{e:?}"));
                    if let Some(i) = &target.index {
                        assert_eq!(i.ty, Some(ScalarType::Int));
                    }
                }
                StmtKind::If { branches, .. } => {
                    for (c, b) in branches {
                        c.walk(&mut |e| assert!(e.ty.is_some()));
                        check_block(b);
                    }
                }
                _ => {}
            }
        }
    }
    check_block(&ast.units[0].body);
}

#[test]
fn literal_takes_context_type() {
    let ast = parse(&src("PROGRAM P VAR x : DINT; END_VAR x := 1 + 2; END_PROGRAM")).unwrap();
    let StmtKind::Assign { value, .. } = &ast.units[0].body.stmts[0].kind else { panic!() };
    assert_eq!(value.ty, Some(ScalarType::Dint));
}

#[test]
fn int_and_dint_do_not_mix() {
    let errs = errors("PROGRAM P VAR a : INT; b : DINT; END_VAR b := a + b; END_PROGRAM");
    assert!(errs.iter().any(|m| m.contains("type mismatch")), "{errs:?}");
}

#[test]
fn literal_out_of_range() {
    let errs = errors("PROGRAM P VAR a : INT; END_VAR a := 40000; END_PROGRAM");
    assert!(errs.iter().any(|m| m.contains("out of range")), "{errs:?}");
}

#[test]
fn syntax_error_lists_expected_tokens() {
    let errs = errors("PROGRAM P VAR a : INT; END_VAR a 1; END_PROGRAM");
    assert!(errs[0].contains("expected one of"), "{errs:?}");
    assert!(errs[0].contains(":="), "{errs:?}");
}

#[test]
fn undeclared_identifier() {
    let errs = errors("PROGRAM P VAR a : INT; END_VAR a := b; END_PROGRAM");
    assert!(errs.iter().any(|m| m.contains("undeclared identifier `b`")), "{errs:?}");
}

#[test]
fn duplicate_declaration() {
    let errs = errors("PROGRAM P VAR a : INT; a : BOOL; END_VAR END_PROGRAM");
    assert!(errs.iter().any(|m| m.contains("duplicate declaration")), "{errs:?}");
}

#[test]
fn identifiers_are_case_sensitive() {
    let errs = errors("PROGRAM P VAR On : BOOL; END_VAR on := TRUE; END_PROGRAM");
    assert!(errs.iter().any(|m| m.contains("undeclared identifier `on`")), "{errs:?}");
}

#[test]
fn exit_outside_loop() {
    let errs = errors("PROGRAM P EXIT; END_PROGRAM");
    assert!(errs.iter().any(|m| m.contains("EXIT")), "{errs:?}");
}

#[test]
fn function_block_instances_and_calls() {
    let ast = parse(&src(
        "FUNCTION_BLOCK Latch VAR_INPUT set : BOOL; END_VAR VAR_OUTPUT q : BOOL; END_VAR IF set THEN q := TRUE; END_IF; END_FUNCTION_BLOCK
         FUNCTION Inc : INT VAR_INPUT v : INT; END_VAR Inc := v + 1; END_FUNCTION
         PROGRAM Main VAR_INPUT s : BOOL; END_VAR VAR l : Latch; out : BOOL; n : INT; END_VAR
           l(set := s, q => out);
           n := Inc(n) + Inc(v := 2);
           out := out OR l.q;
         END_PROGRAM",
    ))
    .unwrap();
    let main = ast.unit("Main").unwrap();
    let StmtKind::Call(call) = &main.body.stmts[0].kind else { panic!() };
    assert_eq!(call.resolved, Some(CallKind::Instance { instance: "l".to_string(), block: "Latch".to_string() }));
}

#[test]
fn instance_members_are_read_only() {
    let errs = errors(
        "FUNCTION_BLOCK F VAR_OUTPUT q : BOOL; END_VAR END_FUNCTION_BLOCK
         PROGRAM P VAR f : F; END_VAR f.q := TRUE; END_PROGRAM",
    );
    assert!(errs.iter().any(|m| m.contains("cannot be assigned")), "{errs:?}");
}

fn assertions(text: &str) -> Result<Vec<AssertionDirective>, Diagnostics> {
    load(&[src(text)]).map(|p| p.assertions)
}

#[test]
fn assert_comment_between_statements() {
    let text = "PROGRAM P VAR_OUTPUT On : BOOL; Off : BOOL; END_VAR\n On := TRUE;\n //#ASSERT On<>Off\n Off := FALSE;\nEND_PROGRAM";
    let prog = load(&[src(text)]).unwrap();
    assert_eq!(prog.assertions.len(), 1);
    let a = &prog.assertions[0];
    assert_eq!(a.expression_text, "On<>Off");
    assert_eq!(a.name, None);
    assert_eq!(a.anchor, Anchor { block: prog.ast.units[0].body.id, index: 1 });
    assert!(matches!(a.expr.kind, ExprKind::Binary { op: crate::ops::BinOp::Ne, .. }));
    // the expression span points into the comment
    assert_eq!(&text[a.expr.span.start as usize..a.expr.span.end as usize], "On<>Off");
}

#[test]
fn named_assertion_in_nested_block() {
    let text = "PROGRAM P VAR_INPUT c : BOOL; END_VAR VAR x : INT; END_VAR\n IF c THEN\n x := 1;\n //#ASSERT:pos x > 0\n END_IF;\nEND_PROGRAM";
    let prog = load(&[src(text)]).unwrap();
    let a = &prog.assertions[0];
    assert_eq!(a.name.as_deref(), Some("pos"));
    let StmtKind::If { branches, .. } = &prog.ast.units[0].body.stmts[0].kind else { panic!() };
    assert_eq!(a.anchor, Anchor { block: branches[0].1.id, index: 1 });
}

#[test]
fn zero_assertions() {
    assert!(assertions("PROGRAM P VAR x : INT; END_VAR // plain comment\n x := 1; END_PROGRAM").unwrap().is_empty());
}

#[test]
fn non_bool_assertion_is_rejected() {
    let err = assertions("PROGRAM P VAR count : INT; END_VAR\n//#ASSERT count\nEND_PROGRAM").unwrap_err();
    assert!(err.0[0].message.contains("expected BOOL"), "{err:?}");
}

#[test]
fn assertion_in_declarations_is_rejected() {
    let err = assertions("PROGRAM P VAR x : BOOL; //#ASSERT x\n END_VAR END_PROGRAM").unwrap_err();
    assert!(err.0[0].message.contains("outside"), "{err:?}");
}

#[test]
fn multiple_files_share_a_namespace() {
    let a = SourceUnit::new("a.st", "FUNCTION Neg : BOOL VAR_INPUT x : BOOL; END_VAR Neg := NOT x; END_FUNCTION");
    let b = SourceUnit::new("b.st", "PROGRAM P VAR y : BOOL; END_VAR y := Neg(y); END_PROGRAM").with_file(1);
    let ast = parse_sources(&[a, b]).unwrap();
    assert_eq!(ast.units.len(), 2);
    assert_eq!(ast.unit("P").unwrap().span.file, 1);
}
