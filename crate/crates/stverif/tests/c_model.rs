//! Emitted C models compile (syntax and types) with the system C compiler.

use std::fs;
use std::process::Command;

use stverif_core::backends::emit_c;
use stverif_core::testing::random_program;

const PRELUDE: &str = "void __CPROVER_assert(_Bool, const char *);\nvoid __CPROVER_assume(_Bool);\n";

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

#[test]
fn generated_models_compile() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let d = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let m = emit_c(&random_program(seed).problem());
        let path = d.path().join(format!("m{seed}.c"));
        fs::write(&path, format!("{PRELUDE}{}", m.text)).unwrap();
        let o = Command::new(cc).args(["-fsyntax-only", "-std=c99", "-w"]).arg(&path).output().unwrap();
        assert!(o.status.success(), "seed {seed}:\n{}\n{}", String::from_utf8_lossy(&o.stderr), m.text);
    }
}
