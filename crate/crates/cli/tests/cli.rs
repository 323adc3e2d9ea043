use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fwreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwreg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn example(dir: &TempDir, name: &str) -> PathBuf {
    let path = dir.path().join(format!("{name}.txt"));
    let o = fwreg(&["example", name, "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shift_naturals_not_transfixed() {
    let dir = TempDir::new().unwrap();
    let inst = example(&dir, "zshift-N");
    let o = fwreg(&["transfix", s(&inst)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict not-transfixed\n"));
}

#[test]
fn broken_action_fails_validation() {
    let dir = TempDir::new().unwrap();
    let inst = example(&dir, "z2-broken");
    let o = fwreg(&["validate", s(&inst)]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("violation containment s s 1\n"));
}

#[test]
fn regularize_then_verify() {
    let dir = TempDir::new().unwrap();
    let inst = example(&dir, "z2-a1");
    let cert = dir.path().join("cert.txt");
    let o = fwreg(&["regularize", s(&inst), "--out", s(&cert)]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&cert).unwrap();
    assert!(text.contains("\nu: eta c1 c2\n"));
    let o = fwreg(&["verify", s(&cert)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "accepted\n");

    fs::write(&cert, text.replace("stage 0 l: c0\n", "stage 0 l: c1\n")).unwrap();
    let o = fwreg(&["verify", s(&cert)]);
    assert_eq!(o.status.code(), Some(10));
}

#[test]
fn strips_from_a_file() {
    let dir = TempDir::new().unwrap();
    let inst = example(&dir, "z2-a1");
    let strips = dir.path().join("strips.txt");
    fs::write(&strips, "# strip for the closed points\nstrip 0: c0\n").unwrap();
    let o = fwreg(&["regularize", s(&inst), "--transfixer", "cert", s(&strips)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("param strip 0: c0\n"));

    fs::write(&strips, "strip 0: eta\n").unwrap();
    let o = fwreg(&["regularize", s(&inst), "--transfixer", "cert", s(&strips)]);
    assert_eq!(o.status.code(), Some(9));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let inst = example(&dir, "z2-a2");
    let a = fwreg(&["noetherian-core", s(&inst)]);
    let b = fwreg(&["noetherian-core", s(&inst)]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn error_families_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "points a b\ngroup free s\nmap s: a -> c\n").unwrap();
    let o = fwreg(&["validate", s(&bad)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3, column 13"));

    assert_eq!(fwreg(&["validate", s(&dir.path().join("missing.txt"))]).status.code(), Some(3));
    assert_eq!(fwreg(&["frobnicate"]).status.code(), Some(2));

    let shift = example(&dir, "zshift-evens");
    let o = fwreg(&["transfix", s(&shift)]);
    assert_eq!(o.status.code(), Some(7));

    let cremona = example(&dir, "cremona-3");
    let o = fwreg(&["regularize", s(&cremona), "--radius", "1"]);
    assert!(matches!(o.status.code(), Some(6) | Some(9)), "{:?}", o.status);
}

#[test]
fn example_list_names_every_instance() {
    let o = fwreg(&["example", "list"]);
    let names = stdout(&o);
    assert!(names.lines().any(|l| l == "cremona-9"));
    assert!(names.lines().any(|l| l == "zshift-singleton"));
}
