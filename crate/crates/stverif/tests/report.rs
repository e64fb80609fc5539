use std::fs;

use stverif::job::parse_job;
use stverif::pipeline::{run_job, RunOptions};
use stverif::Report;

const COUNTER: &str = "PROGRAM Counter\nVAR_INPUT up : BOOL; END_VAR\nVAR n : INT; END_VAR\n\
IF up THEN n := n + 1; END_IF;\n//#ASSERT:low n < 2\n//#ASSERT:nonneg n >= 0\nEND_PROGRAM\n";

fn run(src: &str, entry: &str, extra: &str) -> (tempfile::TempDir, Vec<Report>) {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.st"), src).unwrap();
    let cfg = parse_job(&format!("source = p.st\nentry = {entry}\nreq.type = assertion\n{extra}"), d.path()).unwrap();
    let out = run_job(&cfg, &RunOptions::default());
    (d, out.reports)
}

#[test]
fn satisfied_report() {
    let (d, reports) = run(COUNTER, "Counter", "req.select = nonneg\nbound = 3\n");
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert_eq!(r.verdict, "bound_reached");
    let (_, reports) = run("PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\n//#ASSERT a OR NOT a\nEND_PROGRAM\n", "P", "");
    let r = &reports[0];
    assert_eq!(r.verdict, "satisfied");
    assert!(r.to_text().contains("SATISFIED"));
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["verdict"], "satisfied");
    for field in [
        "verdict",
        "cycles",
        "states_explored",
        "reductions",
        "counterexample",
        "localization",
        "backend",
        "duration_ms",
        "timestamp",
    ] {
        assert!(json.get(field).is_some(), "{field}");
    }
    drop(d);
}

#[test]
fn violated_report_has_one_row_per_cycle() {
    let (d, reports) = run(COUNTER, "Counter", "req.select = low\n");
    let r = &reports[0];
    assert_eq!(r.verdict, "violated");
    assert_eq!(r.cycles, 2);
    let c = r.counterexample.as_ref().unwrap();
    assert_eq!(c.rows.len(), 2);
    assert_eq!(c.violation_cycle, 2);
    assert_eq!(c.validation, "feasible");
    let csv = c.simulator_inputs.as_ref().unwrap();
    assert_eq!(fs::read_to_string(csv).unwrap(), "cycle;up\n1;TRUE\n2;TRUE\n");
    assert!(r.to_text().contains("VIOLATED"));
    assert!(d.path().join("low.report.txt").is_file());
    assert!(d.path().join("low.report.json").is_file());
}

#[test]
fn renderings_are_deterministic_and_round_trip() {
    let (d, reports) = run(COUNTER, "Counter", "");
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.to_text(), r.to_text());
        assert_eq!(r.to_json(), r.to_json());
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(&back, r);
        let written = fs::read_to_string(d.path().join(format!("{}.report.json", r.name))).unwrap();
        assert_eq!(&Report::from_json(&written).unwrap(), r);
        // only the timestamp distinguishes reports of identical runs
        let mut other = r.clone();
        other.timestamp = "1970-01-01T00:00:00.000Z".into();
        let strip = |s: String| {
            s.lines().filter(|l| !l.contains("timestamp") && !l.starts_with("Timestamp")).collect::<Vec<_>>().join("\n")
        };
        assert_eq!(strip(other.to_json()), strip(r.to_json()));
        assert_eq!(strip(other.to_text()), strip(r.to_text()));
    }
}

#[test]
fn front_end_errors_become_error_reports() {
    let (_d, reports) = run("PROGRAM P\nVAR x : BOOL END_VAR\nEND_PROGRAM\n", "P", "");
    assert_eq!(reports[0].verdict, "error");
    assert!(reports[0].message.as_ref().unwrap().contains("p.st:"), "{:?}", reports[0].message);
    let (_d, reports) = run(COUNTER, "Missing", "");
    assert_eq!(reports[0].verdict, "error");
    let (_d, reports) = run(COUNTER, "Counter", "req.select = nope\n");
    assert!(reports[0].message.as_ref().unwrap().contains("nope"));
}

#[test]
fn pattern_reports() {
    let src = "PROGRAM P\nVAR_INPUT a : BOOL; b : BOOL; END_VAR\nVAR_OUTPUT x : BOOL; y : BOOL; END_VAR\n\
               x := a;\ny := a AND b;\nEND_PROGRAM\n";
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.st"), src).unwrap();
    let job = |alpha: &str, beta: &str| {
        let text = format!(
            "source = p.st\nentry = P\nreq.type = pattern\nreq.pattern = P1\nreq.alpha = {alpha}\nreq.beta = {beta}\n"
        );
        run_job(&parse_job(&text, d.path()).unwrap(), &RunOptions::default())
    };
    let ok = job("y", "x");
    assert_eq!(ok.reports[0].verdict, "satisfied");
    assert!(ok.reports[0].requirement.text.starts_with("If y is true at the end of the PLC cycle"));
    let bad = job("x", "y");
    assert_eq!(bad.reports[0].verdict, "violated");
    assert_eq!(bad.exit_code, 1);
    let typo = job("x", "y + 1");
    assert_eq!(typo.reports[0].verdict, "error");
    assert_eq!(typo.exit_code, 3);
}

#[test]
fn iterative_reports_list_rounds() {
    let src = "FUNCTION F : BOOL\nVAR_INPUT x : BOOL; END_VAR\nF := FALSE;\nEND_FUNCTION\n\
               PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\nVAR_OUTPUT q : BOOL; END_VAR\nq := F(x := a);\n//#ASSERT NOT q\nEND_PROGRAM\n";
    let (_d, reports) = run(src, "P", "iterative = on\n");
    let r = &reports[0];
    assert_eq!(r.verdict, "satisfied");
    assert_eq!(r.iterations.len(), 2);
    assert_eq!(r.iterations[0].abstracted, ["F"]);
    assert!(r.iterations[0].validation.as_ref().unwrap().starts_with("spurious"));
    assert!(r.reductions.is_empty());
    assert!(r.to_text().contains("Iterations"));
}
