use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dagwood::amm::{apply_sequence, Mode, Tolerance};
use dagwood_cli::game_file::parse_txs;
use dagwood_cli::SolutionReport;

fn games() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../games")
}

fn game(name: &str) -> String {
    games().join(name).to_string_lossy().into_owned()
}

fn dagwood(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dagwood")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> SolutionReport {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("report parses")
}

fn solve_to_file(name: &str, dir: &tempfile::TempDir) -> PathBuf {
    let out = dir.path().join(format!("{name}.report.json"));
    let o = dagwood(&["solve", &game(name), "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn solve_example_1() {
    let r = report(&dagwood(&["solve", &game("example1.json"), "--format", "json"]));
    assert!((r.predicted_gain - 5000.0).abs() <= 50.0, "{}", r.predicted_gain);
    assert_eq!(r.txs.len(), 3);
    assert_eq!(r.layers.iter().map(|l| l.label.as_str()).collect::<Vec<_>>(), ["swap-inner", "final-swap"]);
    assert!(r.oracle.is_none());
}

#[test]
fn solve_with_verification() {
    let r = report(&dagwood(&["solve", "--verify", &game("example2.json"), "--format", "json"]));
    let o = r.oracle.expect("oracle section");
    assert!(o.relative_gap <= 1e-3, "{}", o.relative_gap);
    assert!((r.predicted_gain - 5700.0).abs() <= 114.0);
}

#[test]
fn verification_is_deterministic_for_a_seed() {
    let run = || stdout(&dagwood(&["solve", "--verify", "--seed", "7", &game("example1.json"), "--format", "json"]));
    assert_eq!(run(), run());
}

#[test]
fn underfunded_users_need_auto_funding() {
    let o = dagwood(&["solve", &game("underfunded.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot fund"), "{}", stderr(&o));
    let r = report(&dagwood(&["solve", "--auto-fund-users", &game("underfunded.json"), "--format", "json"]));
    assert!((r.predicted_gain - 5000.0).abs() <= 50.0);
}

#[test]
fn invalid_input_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"prices\": {\"t0\": 1},\n  \"miner\": \n}").unwrap();
    let o = dagwood(&["solve", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.json:4:"), "{}", stderr(&o));

    let unpriced = dir.path().join("unpriced.json");
    let text = std::fs::read_to_string(game("example1.json")).unwrap().replace("\"t1\": 1000", "\"t9\": 1000");
    std::fs::write(&unpriced, text).unwrap();
    let o = dagwood(&["solve", unpriced.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no price"), "{}", stderr(&o));

    let o = dagwood(&["solve", "does-not-exist.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn trace_of_the_single_swap_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let r = solve_to_file("example1.json", &dir);
    let o = dagwood(&[
        "trace",
        &game("example1.json"),
        "--txs",
        r.to_str().unwrap(),
        "--auto-fund-users",
        "--precision",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let reserves: Vec<&str> = text.lines().filter(|l| l.contains("reserves")).collect();
    assert_eq!(reserves.len(), 4);
    for (line, want) in reserves.iter().zip(["(100.0, 100.0)", "(88.8, 112.7)", "(128.8, 77.7)", "(100.0, 100.0)"]) {
        assert!(line.contains(want), "{line} lacks {want}");
    }
    assert!(text.lines().last().unwrap().contains("M +5000.0"), "{text}");
}

#[test]
fn trace_of_the_five_transaction_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let r = solve_to_file("example2.json", &dir);
    let o = dagwood(&[
        "trace",
        &game("example2.json"),
        "--txs",
        r.to_str().unwrap(),
        "--auto-fund-users",
        "--precision",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let last = text.lines().rfind(|l| l.contains("reserves")).unwrap();
    assert!(last.contains("(134.6, 134.6)"), "{last}");
}

#[test]
fn trace_csv_has_one_row_per_state() {
    let dir = tempfile::tempdir().unwrap();
    let r = solve_to_file("example2.json", &dir);
    let o = dagwood(&["trace", &game("example2.json"), "--txs", r.to_str().unwrap(), "--auto-fund-users", "--csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rows = csv::Reader::from_reader(o.stdout.as_slice());
    let header = rows.headers().unwrap().clone();
    assert_eq!(&header[2], "LP(t0,t1).r0");
    let records: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 6);
    let r0: f64 = records[5][2].parse().unwrap();
    assert!((r0 - 134.6).abs() < 0.05);
}

#[test]
fn trace_names_the_rejecting_rule() {
    // the pool swap alone asks for more than the AMM pays
    let o = dagwood(&["trace", &game("example1.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[Swap]") && stderr(&o).contains("SlippageExceeded"), "{}", stderr(&o));
    assert!(stdout(&o).contains("step 0"));
}

#[test]
fn reports_replay_to_their_trace() {
    for name in ["example1.json", "example2.json"] {
        let o = dagwood(&["solve", &game(name), "--format", "json"]);
        let text = stdout(&o);
        let r = report(&o);
        let txs = parse_txs(&text, Path::new(name)).unwrap();
        let start = r.trace[0].to_state().unwrap();
        let replay = apply_sequence(&start, &txs, Mode::Strict, &Tolerance::default()).unwrap();
        assert_eq!(replay.trace.len(), r.trace.len());
        for (got, want) in replay.trace.iter().zip(&r.trace) {
            // numbers round-trip exactly, so the replay is bit-identical
            assert_eq!(*got, want.to_state().unwrap());
        }
    }
}
