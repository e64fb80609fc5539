#![cfg(unix)]

use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use stverif::job::ToolConfig;
use stverif::tools::{check_external, default_args, resolve_tool, run_external, ToolError};
use stverif_core::backends::{emit_c, emit_smv};
use stverif_core::cfa::build_cfa;
use stverif_core::engine::VerdictKind;
use stverif_core::requirements::{assertions_to_problems, BackendKind, VerificationProblem};
use stverif_core::syntax::{load, SourceUnit};

fn problem() -> VerificationProblem {
    let src =
        "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\nq := a;\n//#ASSERT q = a\nEND_PROGRAM\n";
    let prog = load(&[SourceUnit::new("p.st", src)]).unwrap();
    let net = build_cfa(&prog.ast, "P", &prog.assertions).unwrap();
    assertions_to_problems(&net).unwrap().remove(0)
}

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&p, fs::Permissions::from_mode(0o755)).unwrap();
    p
}

fn tool(backend: BackendKind, path: &Path, timeout: Duration) -> ToolConfig {
    ToolConfig { backend, path: Some(path.to_path_buf()), timeout, extra_args: None }
}

#[test]
fn missing_executable() {
    let e = resolve_tool(BackendKind::NuSmv, Some(Path::new("/nonexistent/NuSMV")), None).unwrap_err();
    assert!(matches!(e, ToolError::Missing { tool: "NuSMV", .. }), "{e}");
    let d = tempfile::tempdir().unwrap();
    let e = resolve_tool(BackendKind::Cbmc, Some(Path::new("no-such-cbmc-binary")), Some(d.path())).unwrap_err();
    assert!(matches!(e, ToolError::Missing { .. }));
}

#[test]
fn tool_directory_is_searched() {
    let d = tempfile::tempdir().unwrap();
    fs::create_dir(d.path().join("bin")).unwrap();
    let exe = script(&d.path().join("bin"), "cbmc", "exit 0");
    assert_eq!(resolve_tool(BackendKind::Cbmc, None, Some(d.path())).unwrap(), exe);
    let rel = script(d.path(), "mycbmc", "exit 0");
    assert_eq!(resolve_tool(BackendKind::Cbmc, Some(Path::new("mycbmc")), Some(d.path())).unwrap(), rel);
}

#[test]
fn hung_tool_is_killed_at_the_timeout() {
    let d = tempfile::tempdir().unwrap();
    let exe = script(d.path(), "NuSMV", "sleep 30");
    let model = emit_smv(&problem()).unwrap();
    let start = Instant::now();
    let run = run_external(&tool(BackendKind::NuSmv, &exe, Duration::from_millis(300)), &model, 3, None).unwrap();
    assert!(run.timed_out);
    assert!(start.elapsed() < Duration::from_secs(10));
    let (v, _) = check_external(&tool(BackendKind::NuSmv, &exe, Duration::from_millis(300)), &model, 3, None).unwrap();
    assert_eq!(v.kind(), VerdictKind::Unknown);
}

#[test]
fn healthy_run_is_parsed() {
    let d = tempfile::tempdir().unwrap();
    let exe = script(d.path(), "NuSMV", "echo \"*** This is NuSMV (fake)\"\necho \"-- invariant (prop) is true\"");
    let model = emit_smv(&problem()).unwrap();
    let (v, run) = check_external(&tool(BackendKind::NuSmv, &exe, Duration::from_secs(20)), &model, 3, None).unwrap();
    assert_eq!(run.exit_code, Some(0));
    assert!(!run.output.is_empty());
    assert!(run.command.last().unwrap().ends_with(".smv"));
    assert!(v.kind().agrees(VerdictKind::Satisfied), "{v:?}");
}

#[test]
fn failing_tool_is_an_error() {
    let d = tempfile::tempdir().unwrap();
    let exe = script(d.path(), "cbmc", "echo 'usage error' >&2\nexit 6");
    let model = emit_c(&problem());
    let e = check_external(&tool(BackendKind::Cbmc, &exe, Duration::from_secs(20)), &model, 3, None).unwrap_err();
    match e {
        ToolError::Failed { code, output, .. } => {
            assert_eq!(code, Some(6));
            assert!(output.contains("usage error"));
        }
        e => panic!("{e}"),
    }
}

#[test]
fn arguments() {
    assert_eq!(default_args(BackendKind::Cbmc, 4), ["--partial-loops", "--unwind", "5", "--trace"]);
    assert!(default_args(BackendKind::NuSmv, 4).is_empty());
    let d = tempfile::tempdir().unwrap();
    let exe = script(d.path(), "cbmc", "echo \"$@\"\necho VERIFICATION SUCCESSFUL");
    let mut cfg = tool(BackendKind::Cbmc, &exe, Duration::from_secs(20));
    cfg.extra_args = Some(vec!["--bounds-check".into()]);
    let run = run_external(&cfg, &emit_c(&problem()), 4, None).unwrap();
    assert!(run.output.starts_with("--bounds-check "), "{}", run.output);
    assert!(!run.output.contains("--unwind"));
}
