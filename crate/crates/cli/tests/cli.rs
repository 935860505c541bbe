use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const M0: &str = r#"{"worlds":["w0","w1"],"valuation":{"p":["w0"]},
  "sigma":{"w0":[[],["w0"]],"w1":[[],["w1"]]},"world":"w0"}"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("inqml-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &PathBuf, file: &str, text: &str) -> PathBuf {
    let p = dir.join(file);
    fs::write(&p, text).unwrap();
    p
}

fn inqml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inqml")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_examples() {
    let d = scratch("check");
    let m = write(&d, "m0.json", M0);
    let m = m.to_str().unwrap();
    let o = inqml(&["check", m, "?p", "--state", "w0,w1"]);
    assert_eq!(stdout(&o).trim(), "unsupported");
    let o = inqml(&["check", m, "bot", "--state", ""]);
    assert_eq!(stdout(&o).trim(), "supported");
    let o = inqml(&["check", m, "[+] ?p", "--world", "w0", "--strategy", "graded"]);
    assert_eq!(stdout(&o).trim(), "supported");
    let o = inqml(&["check", m, "p & q", "--trace"]);
    assert_eq!(o.status.code(), Some(2));
    let o = inqml(&["check", m, "p -> p", "--trace"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().count() > 1);
}

#[test]
fn translate_examples() {
    let o = inqml(&["translate", "p"]);
    let out = stdout(&o);
    assert!(out.contains("forall x1. (x1 in L -> P(x1))"), "{out}");
    assert!(out.contains("flat=0"));
    assert!(stdout(&inqml(&["translate", "?p"])).contains("tuple length=2"));
    assert_eq!(stdout(&inqml(&["translate", "p", "--variant", "world"])).lines().next(), Some("P(x)"));
    assert_eq!(inqml(&["translate", "p &"]).status.code(), Some(2));
}

#[test]
fn validate_and_closure() {
    let d = scratch("validate");
    let m = write(&d, "m0.json", M0);
    assert_eq!(stdout(&inqml(&["validate", m.to_str().unwrap()])).trim(), "proper");
    let pseudo = write(&d, "pseudo.json", r#"{"worlds":["w0"],"sigma":{"w0":[["w0"]]}}"#);
    let pseudo = pseudo.to_str().unwrap();
    assert_eq!(stdout(&inqml(&["validate", pseudo])).trim(), "pseudo");
    let closed = inqml(&["closure", pseudo]);
    let c = write(&d, "closed.json", &stdout(&closed));
    assert_eq!(stdout(&inqml(&["validate", c.to_str().unwrap()])).trim(), "proper");

    let rel = inqml(&["encode", m.to_str().unwrap(), "--policy", "full"]);
    assert!(rel.status.success());
    let r = write(&d, "rel.json", &stdout(&rel));
    let r = r.to_str().unwrap();
    assert_eq!(stdout(&inqml(&["validate", r, "--relational"])).trim(), "model");
    let sc = write(&d, "sc.json", &stdout(&inqml(&["closure", r, "--state-closure"])));
    assert_eq!(stdout(&inqml(&["validate", sc.to_str().unwrap(), "--relational"])).trim(), "model");
}

#[test]
fn grade_and_bisim() {
    assert_eq!(stdout(&inqml(&["grade", "?p vv [] ?q"])).trim(), "flat=2 modal_depth=1");
    let d = scratch("bisim");
    let a = write(&d, "a.json", M0);
    let b = write(&d, "b.json", &M0.replace("\"world\":\"w0\"", "\"world\":\"w1\""));
    let o = inqml(&["bisim", a.to_str().unwrap(), b.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["equivalent"], false);
    assert!(!v["witness"].is_null());
    let o = inqml(&["bisim", a.to_str().unwrap(), a.to_str().unwrap(), "--level", "2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["equivalent"], true);
}

#[test]
fn fuzz_determinism_and_exit_codes() {
    let args = ["fuzz", "--seed", "5", "--trials", "40", "--json"];
    let a = inqml(&args);
    let b = inqml(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let plain = stdout(&inqml(&["fuzz", "--seed", "5", "--trials", "40"]));
    assert!(plain.starts_with("0 failures / "), "{plain}");
    assert_eq!(inqml(&["fuzz", "--max-worlds", "0"]).status.code(), Some(2));
}

#[test]
fn mutant_bundles_replay() {
    let d = scratch("mutant");
    let dir = d.join("bundles");
    let o = inqml(&[
        "fuzz",
        "--trials",
        "200",
        "--checks",
        "fragment",
        "--mutant",
        "box-guard-swapped",
        "--bundles",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let files: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in files {
        let r = inqml(&["replay", f.to_str().unwrap()]);
        assert_eq!(r.status.code(), Some(1));
        assert!(stdout(&r).starts_with("reproduced"));
    }
}
