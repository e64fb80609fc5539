use std::fs;
use std::path::Path;
use std::time::Duration;

use stverif::job::{load_job, parse_job, ConfigError, RequirementSpec};
use stverif_core::requirements::BackendKind;

fn dir_with_source() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.st"), "PROGRAM P\nVAR_INPUT a : BOOL; END_VAR\n//#ASSERT a OR NOT a\nEND_PROGRAM\n")
        .unwrap();
    d
}

fn parse(d: &Path, text: &str) -> Result<stverif::JobConfig, ConfigError> {
    parse_job(text, d)
}

#[test]
fn minimal_job_gets_defaults() {
    let d = dir_with_source();
    let c = parse(d.path(), "source = p.st\nentry = P\nreq.type = assertion\n").unwrap();
    assert_eq!(c.bound, 10);
    assert_eq!(c.max_states, 10_000_000);
    assert_eq!(c.tool.backend, BackendKind::Engine);
    assert_eq!(c.tool.timeout, Duration::from_secs(120));
    assert_eq!(c.requirement, RequirementSpec::Assertions { select: vec![] });
    assert!(!c.iterative);
    assert!(c.formats.text && c.formats.json);
    assert!(c.reductions.fold && c.reductions.unreach && c.reductions.coi && !c.reductions.valueset);
    assert_eq!(c.sources, vec![d.path().join("p.st")]);
    assert_eq!(c.output, d.path());
}

#[test]
fn unknown_key_is_named() {
    let d = dir_with_source();
    let e = parse(d.path(), "source = p.st\nentry = P\nreq.type = assertion\nfoo=1\n").unwrap_err();
    assert!(matches!(&e, ConfigError::UnknownKey { line: 4, key } if key == "foo"), "{e}");
    assert!(e.to_string().contains("foo"));
}

#[test]
fn mandatory_keys() {
    let d = dir_with_source();
    for (text, key) in [
        ("entry = P\nreq.type = assertion\n", "source"),
        ("source = p.st\nreq.type = assertion\n", "entry"),
        ("source = p.st\nentry = P\n", "req.type"),
    ] {
        match parse(d.path(), text) {
            Err(ConfigError::Missing(k)) => assert_eq!(k, key),
            other => panic!("{key}: {other:?}"),
        }
    }
}

#[test]
fn pattern_job() {
    let d = dir_with_source();
    let c = parse(
        d.path(),
        "# door interlock\nsource = p.st\nentry = P\nreq.type = pattern\nreq.pattern = P1\nreq.alpha = a\nreq.beta = a = TRUE\n",
    )
    .unwrap();
    assert_eq!(
        c.requirement,
        RequirementSpec::Pattern { id: "P1".into(), alpha: Some("a".into()), beta: Some("a = TRUE".into()) }
    );
}

#[test]
fn malformed_values() {
    let d = dir_with_source();
    let base = "source = p.st\nentry = P\nreq.type = assertion\n";
    for extra in [
        "bound = ten",
        "bound = 0",
        "backend = spin",
        "reduce.coi = maybe",
        "backend.timeout_s = -1",
        "report.formats = pdf",
        "max_states = many",
    ] {
        let e = parse(d.path(), &format!("{base}{extra}\n")).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { .. }), "{extra}: {e}");
    }
    assert!(matches!(parse(d.path(), &format!("{base}bound\n")), Err(ConfigError::Syntax { line: 4 })));
    assert!(matches!(parse(d.path(), &format!("{base}bound = 3\nbound = 4\n")), Err(ConfigError::Duplicate { .. })));
    assert!(matches!(
        parse(d.path(), "source = q.st\nentry = P\nreq.type = assertion\n"),
        Err(ConfigError::MissingSource(_))
    ));
}

#[test]
fn conflicting_keys() {
    let d = dir_with_source();
    for text in [
        "source = p.st\nentry = P\nreq.type = assertion\nreq.pattern = P1\n",
        "source = p.st\nentry = P\nreq.type = pattern\nreq.pattern = P2\nreq.select = x\n",
        "source = p.st\nentry = P\nreq.type = assertion\niterative = on\nbackend = cbmc\n",
    ] {
        assert!(matches!(parse(d.path(), text), Err(ConfigError::Conflict(_))), "{text}");
    }
}

#[test]
fn all_keys_parse() {
    let d = dir_with_source();
    let c = parse(
        d.path(),
        "source = p.st\nentry = P\nreq.type = assertion\nreq.select = a1, a2\n\
         reduce.fold = off\nreduce.unreach = off\nreduce.coi = off\nreduce.valueset = on\n\
         backend = nusmv\nbackend.path = /opt/nusmv/bin/NuSMV\nbackend.timeout_s = 2.5\nbackend.extra_args = -dynamic -coi\n\
         bound = 7\nmax_states = 1000\niterative = off\niterative.max_iters = 3\noutput = reports\nreport.formats = json\n",
    )
    .unwrap();
    assert_eq!(c.requirement, RequirementSpec::Assertions { select: vec!["a1".into(), "a2".into()] });
    assert!(!c.reductions.fold && !c.reductions.unreach && !c.reductions.coi && c.reductions.valueset);
    assert_eq!(c.tool.backend, BackendKind::NuSmv);
    assert_eq!(c.tool.path.as_deref(), Some(Path::new("/opt/nusmv/bin/NuSMV")));
    assert_eq!(c.tool.timeout, Duration::from_millis(2500));
    assert_eq!(c.tool.extra_args, Some(vec!["-dynamic".to_string(), "-coi".to_string()]));
    assert_eq!((c.bound, c.max_states, c.max_iters), (7, 1000, 3));
    assert_eq!(c.output, d.path().join("reports"));
    assert!(c.formats.json && !c.formats.text);
}

#[test]
fn load_resolves_relative_to_the_job() {
    let d = dir_with_source();
    let job = d.path().join("check.job");
    fs::write(&job, "source = p.st\nentry = P\nreq.type = assertion\n").unwrap();
    let c = load_job(&job).unwrap();
    assert_eq!(c.job.as_deref(), Some(job.as_path()));
    assert_eq!(c.sources, vec![d.path().join("p.st")]);
    assert!(matches!(load_job(&d.path().join("none.job")), Err(ConfigError::Io { .. })));
}
