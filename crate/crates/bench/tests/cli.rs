use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aeicp-bench"))
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(bench().arg("--help")), 0);
    assert_eq!(code(bench().arg("frobnicate")), 1);
    assert_eq!(code(bench().args(["bench", "--variant", ""])), 1);
    assert_eq!(code(bench().args(["solve", "--variant", "nope"])), 1);
    assert_eq!(code(bench().args(["solve", "--formulation", "dcp3", "--variant", "bdcae"])), 1);
    let missing = dir.path().join("missing");
    assert_eq!(code(bench().args(["bench", "--nep-dir"]).arg(&missing)), 2);
}

#[test]
fn gen_then_solve_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst");
    let st = bench()
        .args(["gen", "--n", "4", "--count", "2", "--seed", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success());
    assert!(out.join("rand4_1_A.mtx").exists() && out.join("rand4_1_B.mtx").exists());

    let trace = dir.path().join("trace.csv");
    let o = bench()
        .args(["solve", "--formulation", "dcp1", "--variant", "BDCAe", "--maxit", "20", "--matrix"])
        .arg(out.join("rand4_0_A.mtx"))
        .arg("--out")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("rand4_0_A DCP1 BDCAe"), "{stdout}");
    let text = std::fs::read_to_string(trace).unwrap();
    assert!(text.starts_with("k,f,E,"));
}

#[test]
fn check_suites_pass() {
    let o = bench().args(["check", "--seed", "1"]).output().unwrap();
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(o.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}
