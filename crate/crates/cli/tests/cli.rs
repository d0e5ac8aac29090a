use std::path::PathBuf;
use std::process::{Command, Output};

fn cbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbc")).args(args).output().unwrap()
}

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(name).display().to_string()
}

fn have_cc() -> bool {
    cbc_core::driver::find_cc().is_some()
}

#[test]
fn check_clean_file() {
    let o = cbc(&["check", &corpus("interface.cbc")]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn check_reports_one_line_per_error() {
    let o = cbc(&["check", &corpus("neg/ret_in_seg.cbc")]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("E-RET-IN-SEG"));
}

#[test]
fn missing_input_is_a_diagnostic() {
    let o = cbc(&["check", "/nonexistent/x.cbc"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compile_writes_unit_runtime_and_script() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let o = cbc(&["compile", "--backend", "direct", "--emit-dir", &d, &corpus("hello.cbc")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["hello.c", "cbc_rt.h", "cbc_rt.c", "build.sh"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let c = std::fs::read_to_string(dir.path().join("hello.c")).unwrap();
    assert!(c.contains("#define CBC_DIRECT 1"));
    if have_cc() {
        let b = Command::new("sh").arg(dir.path().join("build.sh")).output().unwrap();
        assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
        let run = Command::new(dir.path().join("hello")).output().unwrap();
        assert_eq!(run.status.code(), Some(0));
    }
}

#[test]
fn compile_dumps_lowering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let o = cbc(&["compile", "--dump-lowered", "--dump-paracopy", "--emit-dir", &d, &corpus("carg.cbc")]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.starts_with("maxframe 64\n"), "{out}");
    assert!(out.contains("segment carg4 id 4"));
}

#[test]
fn cps_to_file_then_check_strict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv1.cbc").display().to_string();
    for opt in ["none", "fuse"] {
        let o = cbc(&["cps", "--roots", "f0", "--cps-opt", opt, &corpus("conv1.c"), "-o", &out]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let o = cbc(&["check", "--strict-cbc", &out]);
        assert_eq!(o.status.code(), Some(0), "{opt}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn cps_rejects_unsupported_input() {
    let o = cbc(&["cps", "--roots", "main", &corpus("hello.cbc")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("E-CPS-UNSUPPORTED"));
}

#[test]
fn bench_small_run() {
    if !have_cc() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let o = cbc(&["bench", "--loop", "100", "--preset", "plain", "--dir", &d]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().filter(|l| l.starts_with("variant=")).count(), 3);
    assert!(out.lines().filter(|l| l.starts_with("variant=")).all(|l| l.contains("result=720") && l.contains("status=ok")));
    let records = std::fs::read_to_string(dir.path().join("bench.records")).unwrap();
    assert_eq!(records.lines().count(), 3);
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(cbc(&["compile", "--backend", "nope", "x"]).status.code(), Some(2));
}
