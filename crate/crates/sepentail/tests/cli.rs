use std::path::PathBuf;
use std::process::{Command, Output};

fn example(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples").join(name);
    p.to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sepentail-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn sepentail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepentail"))
        .args(args)
        .env_remove("SEPENTAIL_FUEL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_valid_with_backedge() {
    let o = sepentail(&["check", &example("infinite_pq.sep")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.starts_with("VALID\n"));
    assert!(text.contains("backedges: 1\n"), "{}", text);
}

#[test]
fn check_invalid_prints_a_countermodel() {
    let o = sepentail(&["check", &example("ls_als.sep")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("countermodel:"));
}

#[test]
fn certificate_round_trip_through_verify() {
    let cert = scratch("pq.cert");
    let dot = scratch("pq.dot");
    let o = sepentail(&[
        "check",
        &example("infinite_pq.sep"),
        "--cert",
        cert.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));

    let ok = sepentail(&["verify", cert.to_str().unwrap(), &example("infinite_pq.sep")]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).starts_with("ACCEPTED"));

    let other = sepentail(&["verify", cert.to_str().unwrap(), &example("ls_compose.sep")]);
    assert_eq!(other.status.code(), Some(1));
    assert!(stdout(&other).starts_with("REJECTED"));

    // a certificate whose proof no longer matches its header
    let text = std::fs::read_to_string(&cert).unwrap();
    let tampered = scratch("tampered.cert");
    let line = text.lines().find(|l| l.contains("rule=UL")).expect("an unfolding step");
    std::fs::write(&tampered, text.replacen(line, &line.replacen("rule=UL", "rule=Sk", 1), 1)).unwrap();
    let bad = sepentail(&["verify", tampered.to_str().unwrap(), &example("infinite_pq.sep")]);
    assert_eq!(bad.status.code(), Some(1), "{}", stdout(&bad));
}

#[test]
fn fuel_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_sepentail"))
        .args(["check", "--no-oracle", &example("infinite_pq.sep")])
        .env("SEPENTAIL_FUEL", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("UNKNOWN"));
    // the flag wins over the variable
    let o = Command::new(env!("CARGO_BIN_EXE_sepentail"))
        .args(["check", "--fuel", "100000", &example("infinite_pq.sep")])
        .env("SEPENTAIL_FUEL", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_errors() {
    assert_eq!(sepentail(&["check", "/nonexistent/problem.sep"]).status.code(), Some(3));
    assert_eq!(sepentail(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(sepentail(&["check", "--strategy", "sideways", &example("ls_compose.sep")]).status.code(), Some(3));
    let broken = scratch("broken.sep");
    std::fs::write(&broken, "theory empty\nsid { p(x) <= x -> (x) }\nentail { p(x) |- }\n").unwrap();
    let o = sepentail(&["check", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.sep"));
}

#[test]
fn oracle_command() {
    let o = sepentail(&["oracle", &example("ils_als.sep")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("countermodel:"));
    let o = sepentail(&["oracle", &example("ls_compose.sep"), "--locations", "4", "--heap", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("VALID up to 4 locations and 3 cells"));
}

#[test]
fn preprocess_output_reparses() {
    let trace = scratch("elimeq-trace");
    let o = sepentail(&["preprocess", &example("elimeq_step1.sep"), "--eliminate-eq", "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for i in 1..=4 {
        assert!(trace.join(format!("step{}.sep", i)).exists());
    }
    let p = sepentail::parse_problem_with(&stdout(&o), sepentail::ParseOptions { assume_established: true });
    assert!(p.is_ok(), "{:?}\n{}", p.err(), stdout(&o));
}

#[test]
fn small_fuzz_run_agrees() {
    let o = sepentail(&["fuzz", "--seed", "3", "--count", "5", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 disagreements"));
}
