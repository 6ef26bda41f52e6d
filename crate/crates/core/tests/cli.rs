mod common;

use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use clap::Parser;
use common::toy::{pre, proc, table};
use proptest::prelude::*;
use scj2_core::checker::{explore, load, ExploreLimits, Status, Verdict};
use scj2_core::cli::export::graph_text;
use scj2_core::cli::serve::{self, handle, Session};
use scj2_core::cli::{
    exit_status, run, Cli, EXIT_FAILS, EXIT_HOLDS, EXIT_INCONCLUSIVE, EXIT_USAGE,
};
use scj2_core::framework::AssembleOptions;
use scj2_core::kernel::{term, Composition, StepPolicy};

fn program(rel: &str) -> String {
    format!("{}/programs/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn scj2(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_scj2"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run_args(args: &[&str]) -> (i32, String) {
    let cli = Cli::try_parse_from(std::iter::once("scj2").chain(args.iter().copied())).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(cli, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("scj2-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn missing_file_is_a_usage_error() {
    let (code, _, err) = scj2(&["check", "--all", "/no/such/file.scj2"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("cannot read"), "{err}");
}

#[test]
fn no_property_is_a_usage_error() {
    let (code, _, _) = scj2(&["check", &program("flatbuffer.scj2")]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, _, _) = scj2(&["check", "--bogus", &program("flatbuffer.scj2")]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn flatbuffer_holds() {
    let (code, out, _) = scj2(&["check", "--all", &program("flatbuffer.scj2")]);
    assert_eq!(code, EXIT_HOLDS, "{out}");
}

#[test]
fn double_registration_fails() {
    let f = program("mutations/double_register.scj2");
    let (code, out, _) = scj2(&["check", "--exception", "illegalStateException", &f]);
    assert_eq!(code, EXIT_FAILS, "{out}");
}

#[test]
fn truncated_run_is_inconclusive() {
    let f = program("flatbuffer.scj2");
    let (code, _) = run_args(&["check", "--deadlock", "--max-states", "5", &f]);
    assert_eq!(code, EXIT_INCONCLUSIVE);
}

#[test]
fn structured_report_matches_exit_status() {
    for (rel, flag) in [
        ("flatbuffer.scj2", "--all"),
        ("mutations/no_notify.scj2", "--deadlock"),
        ("mutations/low_ceiling.scj2", "--all"),
    ] {
        let (code, out) = run_args(&["check", flag, "--format", "structured", &program(rel)]);
        let json: serde_json::Value = serde_json::from_str(&out).unwrap();
        let statuses: Vec<&str> = json["verdicts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v["status"].as_str().unwrap())
            .collect();
        let expected = if statuses.contains(&"fails") {
            EXIT_FAILS
        } else if statuses.contains(&"inconclusive") {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_HOLDS
        };
        assert_eq!(code, expected, "{rel}: {statuses:?}");
    }
}

fn verdict(status: Status) -> Verdict {
    Verdict {
        property: "p".into(),
        status,
        counterexample: None,
        trace_labels: Vec::new(),
        final_system_state: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exit_status_is_worst_verdict(codes in prop::collection::vec(0..3u8, 0..8)) {
        let vs: Vec<Verdict> = codes
            .iter()
            .map(|c| verdict([Status::Holds, Status::Fails, Status::Inconclusive][*c as usize]))
            .collect();
        let expected = if codes.contains(&1) {
            EXIT_FAILS
        } else if codes.contains(&2) {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_HOLDS
        };
        prop_assert_eq!(exit_status(&vs), expected);
    }
}

#[test]
fn toy_graph_has_two_nodes_and_one_edge() {
    let comp = Composition::new(table(), vec![proc("P", pre(0, term::skip()), &["a"])]);
    let g = explore(&comp, &ExploreLimits::default()).unwrap();
    let text = graph_text(&comp, &g);
    assert!(
        text.starts_with("graph states 2 transitions 1 partial false\n"),
        "{text}"
    );
    assert_eq!(text.lines().filter(|l| l.starts_with("node ")).count(), 2);
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with("edge "))
            .collect::<Vec<_>>(),
        ["edge 0 1 a()"]
    );
}

fn export(args: &[&str], name: &str) -> String {
    let path = scratch(name);
    let p = path.to_str().unwrap();
    let mut all = vec!["export", "-o", p];
    all.extend_from_slice(args);
    let (code, _) = run_args(&all);
    assert_eq!(code, EXIT_HOLDS);
    assert!(path.with_extension("channels").exists());
    std::fs::read_to_string(&path).unwrap()
}

#[test]
fn export_counts_match_check() {
    let f = program("flatbuffer.scj2");
    let text = export(&[&f], "flat.graph");
    let (_, out) = run_args(&["check", "--deadlock", "--format", "structured", &f]);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    let header = format!(
        "graph states {} transitions {} partial false",
        json["states"], json["transitions"]
    );
    assert_eq!(text.lines().next().unwrap(), header);
    let nodes = text.lines().filter(|l| l.starts_with("node ")).count();
    let edges = text.lines().filter(|l| l.starts_with("edge ")).count();
    assert_eq!(nodes as u64, json["states"].as_u64().unwrap());
    assert_eq!(edges as u64, json["transitions"].as_u64().unwrap());
}

#[test]
fn truncated_export_is_marked_partial() {
    let f = program("flatbuffer.scj2");
    let text = export(&["--max-states", "10", &f], "partial.graph");
    assert!(text.lines().next().unwrap().ends_with("partial true"));
    assert!(text.contains(" unexpanded"));
}

fn flatbuffer_session() -> Session {
    let src = std::fs::read_to_string(program("flatbuffer.scj2")).unwrap();
    let l = load(&src, AssembleOptions::default()).unwrap();
    Session::new(l.composition, StepPolicy::default()).unwrap()
}

fn body(r: (u16, String)) -> serde_json::Value {
    serde_json::from_str(&r.1).unwrap()
}

#[test]
fn step_and_backtrack_are_inverse() {
    let mut s = flatbuffer_session();
    let mut ids = vec![body(handle(&mut s, "GET", "/state", ""))["stateId"].clone()];
    for _ in 0..12 {
        let events = body(handle(&mut s, "GET", "/events", ""));
        let n = events["events"].as_array().unwrap().len();
        assert!(n > 0);
        let (code, text) = handle(
            &mut s,
            "POST",
            "/step",
            &format!("{{\"index\": {}}}", n - 1),
        );
        assert_eq!(code, 200, "{text}");
        ids.push(serde_json::from_str::<serde_json::Value>(&text).unwrap()["stateId"].clone());
    }
    for expected in ids.iter().rev().skip(1) {
        let r = body(handle(&mut s, "POST", "/backtrack", ""));
        assert_eq!(&r["stateId"], expected);
    }
    assert_eq!(handle(&mut s, "POST", "/backtrack", "").0, 409);
}

#[test]
fn reset_returns_to_the_start() {
    let mut s = flatbuffer_session();
    let first = body(handle(&mut s, "GET", "/events", ""));
    assert!(first["events"][0]["event"]
        .as_str()
        .unwrap()
        .starts_with("getSequencerCall"));
    handle(&mut s, "POST", "/step", "{\"index\": 0}");
    let r = body(handle(&mut s, "POST", "/reset", ""));
    assert!(r["trace"].as_array().unwrap().is_empty());
    assert_eq!(body(handle(&mut s, "GET", "/events", "")), first);
}

#[test]
fn bad_requests_are_rejected() {
    let mut s = flatbuffer_session();
    assert_eq!(handle(&mut s, "POST", "/step", "{\"index\": 999}").0, 400);
    assert_eq!(handle(&mut s, "POST", "/step", "nonsense").0, 400);
    assert_eq!(
        handle(
            &mut s,
            "POST",
            "/trace",
            "{\"events\": [\"tick()\", \"nope(\"]}"
        )
        .0,
        400
    );
    assert_eq!(handle(&mut s, "GET", "/nowhere", "").0, 404);
}

#[test]
fn deadlock_trace_loads_into_a_stuck_session() {
    let f = program("mutations/no_notify.scj2");
    let (code, out) = run_args(&["check", "--deadlock", "--format", "structured", &f]);
    assert_eq!(code, EXIT_FAILS);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    let trace = &json["verdicts"][0]["counterexample"]["trace"];
    let src = std::fs::read_to_string(&f).unwrap();
    let l = load(&src, AssembleOptions::default()).unwrap();
    let mut s = Session::new(l.composition, StepPolicy::default()).unwrap();
    let req = serde_json::json!({ "events": trace }).to_string();
    let (code, text) = handle(&mut s, "POST", "/trace", &req);
    assert_eq!(code, 200, "{text}");
    let state: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(&state["trace"], trace);
    assert!(body(handle(&mut s, "GET", "/events", ""))["events"]
        .as_array()
        .unwrap()
        .is_empty());
}

fn http(port: u16, method: &str, path: &str, payload: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )
    .unwrap();
    let mut text = String::new();
    stream.read_to_string(&mut text).unwrap();
    let status = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = text.split("\r\n\r\n").nth(1).unwrap_or("").to_string();
    assert!(text.contains("Access-Control-Allow-Origin: *"), "{text}");
    (status, body)
}

#[test]
fn http_round_trip() {
    let server = Arc::new(serve::bind(0).unwrap());
    let port = server.server_addr().to_ip().unwrap().port();
    let handle = {
        let server = server.clone();
        std::thread::spawn(move || {
            let mut s = flatbuffer_session();
            serve::run(&server, &mut s);
        })
    };
    let (code, state) = http(port, "GET", "/state", "");
    assert_eq!(code, 200);
    let start: serde_json::Value = serde_json::from_str(&state).unwrap();
    let (code, _) = http(port, "POST", "/step", "{\"index\": 0}");
    assert_eq!(code, 200);
    let (code, back) = http(port, "POST", "/backtrack", "");
    assert_eq!(code, 200);
    let back: serde_json::Value = serde_json::from_str(&back).unwrap();
    assert_eq!(back["stateId"], start["stateId"]);
    assert_eq!(http(port, "OPTIONS", "/step", "").0, 204);
    server.unblock();
    handle.join().unwrap();
}
