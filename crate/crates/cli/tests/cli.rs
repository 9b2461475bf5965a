use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo").join(name)
}

fn npls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npls")).args(args).output().expect("npls runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_accepts_the_story() {
    let o = npls(&["check", path(&demo("story.npl"))]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert_eq!(text(&o.stdout), "ok\n");
}

#[test]
fn check_reports_where_the_terminator_is_missing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.npl");
    fs::write(&p, "np t {\n  norm n1: p -> fail(x)\n  norm n2: q -> fail(y).\n}\n").unwrap();
    let o = npls(&["check", path(&p)]);
    assert_eq!(code(&o), 1);
    let err = text(&o.stderr);
    assert!(err.contains("bad.npl:3:3:"), "{err}");
}

#[test]
fn check_rejects_unresolved_sanction_rules() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("dangling.npl");
    fs::write(&p, "np t { norm n1: p -> obligation(a, true, q, `1 second`) if unfulfilled: nowhere. }").unwrap();
    let o = npls(&["check", path(&p)]);
    assert_eq!(code(&o), 1);
    assert!(text(&o.stderr).contains("unresolved sanction rule"), "{}", text(&o.stderr));
}

#[test]
fn missing_files_are_io_errors() {
    let o = npls(&["check", "/nonexistent/story.npl"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn story_scripts_meet_their_expectations() {
    let dir = tempfile::tempdir().unwrap();
    for (script, golden) in [("story_unfulfilled.script", "story_unfulfilled.jsonl"), ("story_fulfilled.script", "story_fulfilled.jsonl")] {
        let trace = dir.path().join(golden);
        let o = npls(&["run", path(&demo("story.npl")), path(&demo(script)), "--trace", path(&trace)]);
        assert_eq!(code(&o), 0, "{script}: {}", text(&o.stderr));
        let want = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(golden);
        assert_eq!(fs::read_to_string(&trace).unwrap(), fs::read_to_string(want).unwrap(), "{script}");
    }
}

#[test]
fn expectations_may_skip_events() {
    let o = npls(&["run", path(&demo("story.npl")), path(&demo("story_short.script"))]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
}

#[test]
fn bob_is_not_sanctioned_when_he_applies_the_fine() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.script");
    let mut src = fs::read_to_string(demo("story_fulfilled.script")).unwrap();
    src.push_str("tick 10 seconds.\nexpect sanction(bob, S).\n");
    fs::write(&script, src).unwrap();
    let o = npls(&["run", path(&demo("story.npl")), path(&script)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn empty_script_writes_an_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("empty.script");
    fs::write(&script, "// nothing\n\n").unwrap();
    let trace = dir.path().join("t.jsonl");
    let o = npls(&["run", path(&demo("story.npl")), path(&script), "--trace", path(&trace)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert_eq!(fs::read(&trace).unwrap(), b"");
}

#[test]
fn unmet_expectation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.script");
    fs::write(&script, "assert vl(20).\ntick 1 second.\nexpect sanction(alice, fine(20)).\n").unwrap();
    let o = npls(&["run", path(&demo("story.npl")), path(&script)]);
    assert_eq!(code(&o), 3);
    let err = text(&o.stderr);
    assert!(err.contains("line 3") && err.contains("sanction(alice, fine(20))"), "{err}");

    // order matters: the n1 sanction comes before the n2 instance
    fs::write(&script, "assert vl(20).\nassert extra(10).\ntick 3 seconds.\nexpect created(n2).\nexpect sanction(alice, X).\n").unwrap();
    let o = npls(&["run", path(&demo("story.npl")), path(&script)]);
    assert_eq!(code(&o), 3);
    assert!(text(&o.stderr).contains("line 5"), "{}", text(&o.stderr));
}

#[test]
fn malformed_script_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.script");
    fs::write(&script, "assert vl(20)\n").unwrap();
    let o = npls(&["run", path(&demo("story.npl")), path(&script)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn repl_reads_commands_from_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_npls"))
        .args(["repl", path(&demo("story.npl"))])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"assert vl(20).\ntick 3 seconds\nsanctions\nquit\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(code(&o), 0);
    let out = text(&o.stdout);
    assert!(out.contains("[3000] sanction(alice, fine(20)) by sr1 on n1#1"), "{out}");
}

fn summary(o: &Output) -> toml::Table {
    assert_eq!(code(o), 0, "{}", text(&o.stderr));
    text(&o.stdout).parse().unwrap()
}

#[test]
fn compliant_scenario_has_no_sanctions() {
    let s = summary(&npls(&["scenario", "myjoghurt", "--config", path(&demo("myjoghurt_compliant.toml"))]));
    for (id, n) in s["sanctions"].as_table().unwrap() {
        assert_eq!(n.as_integer(), Some(0), "{id}");
    }
    assert_eq!(s["fulfilled"].as_integer(), s["orders"].as_integer());
}

#[test]
fn clogging_scenario_cleans_valves() {
    let s = summary(&npls(&["scenario", "myjoghurt", "--config", path(&demo("myjoghurt_clog.toml"))]));
    assert!(s["sanctions"]["S2"].as_integer().unwrap() >= 1);
}

#[test]
fn scenario_traces_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        summary(&npls(&["scenario", "myjoghurt", "--config", path(&demo("myjoghurt_clog.toml")), "--seed", seed, "--trace", path(&p)]));
        fs::read(p).unwrap()
    };
    let a = run("a.jsonl", "11");
    assert!(!a.is_empty());
    assert_eq!(a, run("b.jsonl", "11"));
    assert_ne!(a, run("c.jsonl", "12"));
}

#[test]
fn bad_config_and_unknown_scenario_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    fs::write(&p, "units = 2\nvalves = 3\n").unwrap();
    assert_eq!(code(&npls(&["scenario", "myjoghurt", "--config", path(&p)])), 1);
    assert_eq!(code(&npls(&["scenario", "omelette"])), 1);
    assert_eq!(code(&npls(&["frobnicate"])), 1);
}
