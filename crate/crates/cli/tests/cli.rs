use std::fs;
use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use ghostlist_core::harness::fixtures::w1;
use ghostlist_core::io::{load_graph, save_graph};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ghostlist"));
    c.env_remove("GHOSTLIST_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, preset: &str, seed: &str) -> PathBuf {
    let path = dir.join(format!("{preset}-{seed}.json"));
    let out = run(&["generate", "--preset", preset, "--seed", seed, "--out", p(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

/// Kills the server when the test ends.
struct Server {
    child: Child,
    url: String,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(graph: &Path, extra: &[&str]) -> Server {
    let mut child = bin()
        .args(["serve", "--graph", p(graph), "--port", "0"])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = line
        .trim()
        .strip_prefix("listening on ")
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();
    Server { child, url }
}

fn report_files(dir: &Path) -> Vec<Vec<u8>> {
    ["curves.csv", "pervictim.csv", "summary.json"]
        .iter()
        .map(|f| fs::read(dir.join(f)).unwrap())
        .collect()
}

#[test]
fn generate_presets() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = load_graph(generate(dir.path(), "mixed", "42")).unwrap();
    assert_eq!(mixed.users.len(), 115);
    assert!(mixed.validate().is_empty());
    let public = load_graph(generate(dir.path(), "public", "1")).unwrap();
    assert_eq!(public.users.len(), 1000);
    assert!(public.users.values().all(|u| u.privacy.is_public()));
}

#[test]
fn generate_overrides_and_param_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("small.json");
    let r = run(&["generate", "--set", "n_users=12", "--set", "n_groups=0", "--out", p(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let g = load_graph(&out).unwrap();
    assert_eq!(g.users.len(), 12);
    assert!(g.groups.is_empty());

    let params = dir.path().join("params.json");
    fs::write(&params, r#"{"n_users": 7, "fraction_public_profiles": 1.0}"#).unwrap();
    let r = run(&["generate", "--params", p(&params), "--out", p(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(load_graph(&out).unwrap().users.len(), 7);

    fs::write(&params, r#"{"n_users": 7, "colour": 1}"#).unwrap();
    assert_eq!(code(&run(&["generate", "--params", p(&params), "--out", p(&out)])), 1);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let flag = generate(dir.path(), "mixed", "42");
    let env_path = dir.path().join("env.json");
    let out = bin()
        .env("GHOSTLIST_SEED", "42")
        .args(["generate", "--out", p(&env_path)])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(&flag).unwrap(), fs::read(&env_path).unwrap());
    let other = generate(dir.path(), "mixed", "43");
    assert_ne!(fs::read(&flag).unwrap(), fs::read(&other).unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("w1.json");
    save_graph(&w1(), &graph).unwrap();
    let g = p(&graph);
    let out = p(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["generate", "--seed", "1"],
        vec!["generate", "--preset", "huge", "--out", "x.json"],
        vec!["generate", "--seed", "minus-one", "--out", "x.json"],
        vec!["generate", "--set", "n_users", "--out", "x.json"],
        vec!["generate", "--set", "no_such=3", "--out", "x.json"],
        vec!["generate", "--set", "picture_friend_bias=2.0", "--out", "x.json"],
        vec!["serve"],
        vec!["serve", "--graph", g, "--port", "70000"],
        vec!["crawl", "--out", out],
        vec!["crawl", "--graph", g, "--url", "http://127.0.0.1:9", "--out", out],
        vec!["crawl", "--graph", g, "--truth", g, "--out", out],
        vec!["crawl", "--graph", g, "--strategy", "s9", "--out", out],
        vec!["crawl", "--graph", g, "--accounts", "0", "--out", out],
        vec!["crawl", "--graph", g, "--victims", "random:x", "--out", out],
        vec!["crawl", "--graph", g, "--sample-size", "0", "--out", out],
        vec!["crawl", "--graph", g, "--rate-limit", "0", "--out", out],
        vec!["crawl", "--graph", g],
        vec!["report"],
    ];
    for args in cases {
        let r = run(&args);
        assert_eq!(code(&r), 2, "{args:?}: {}", stderr(&r));
    }
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["crawl", "--help"])), 0);
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("w1.json");
    save_graph(&w1(), &graph).unwrap();
    let out = dir.path().join("out");
    let cases: Vec<Vec<&str>> = vec![
        vec!["serve", "--graph", "/definitely/missing.json", "--port", "0"],
        vec!["crawl", "--graph", "/definitely/missing.json", "--out", p(&out)],
        vec!["crawl", "--graph", p(&graph), "--victims", "all-private", "--out", p(&out)],
        vec!["crawl", "--graph", p(&graph), "--victims", "1,99", "--out", p(&out)],
        vec!["crawl", "--url", "http://127.0.0.1:9", "--victims", "1", "--out", p(&out)],
        vec!["crawl", "--url", "http://127.0.0.1:9", "--victims", "all", "--out", p(&out)],
        vec!["generate", "--out", "/definitely/missing/dir/g.json"],
        vec!["report", "--in", "/definitely/missing"],
    ];
    for args in cases {
        let r = run(&args);
        assert_eq!(code(&r), 1, "{args:?}: {}", stderr(&r));
        assert!(stderr(&r).starts_with("error: "), "{args:?}");
    }
    let r = run(&["serve", "--graph", "/definitely/missing.json"]);
    assert!(stderr(&r).contains("/definitely/missing.json"));
}

#[test]
fn occupied_port_fails() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("w1.json");
    save_graph(&w1(), &graph).unwrap();
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let r = run(&["serve", "--graph", p(&graph), "--port", &port]);
    assert_eq!(code(&r), 1, "{}", stderr(&r));
}

#[test]
fn served_mutual_page_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("w1.json");
    save_graph(&w1(), &graph).unwrap();
    let server = serve(&graph, &[]);
    let resp = reqwest::blocking::Client::new()
        .get(format!("{}/mutual/1/2", server.url))
        .header("x-account-id", "0")
        .send()
        .unwrap();
    assert_eq!(resp.status(), 200);
    let body: serde_json::Value = serde_json::from_str(&resp.text().unwrap()).unwrap();
    assert_eq!(body["are_friends"], true);
    assert!(body["since"].as_str().unwrap().starts_with('2'));
    assert_eq!(body["mutual_friends"], serde_json::json!([]));
}

#[test]
fn crawl_writes_four_curves() {
    let dir = tempfile::tempdir().unwrap();
    let graph = generate(dir.path(), "mixed", "42");
    let out = dir.path().join("r");
    let r = run(&[
        "crawl", "--graph", p(&graph), "--strategy", "all", "--victims", "all-private",
        "--seed", "7", "--out", p(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let curves = fs::read_to_string(out.join("curves.csv")).unwrap();
    let mut lines = curves.lines();
    assert_eq!(lines.next(), Some("strategy,requests,time,mean_found"));
    let mut seen: Vec<&str> = Vec::new();
    let mut last: Option<(&str, f64)> = None;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        let mean: f64 = cols[3].parse().unwrap();
        if let Some((s, prev)) = last {
            if s == cols[0] {
                assert!(mean >= prev, "{line}");
            }
        }
        if seen.last() != Some(&cols[0]) {
            seen.push(cols[0]);
        }
        last = Some((cols[0], mean));
    }
    assert_eq!(seen, vec!["S1", "S2", "S3", "S4"]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["strategies"].as_array().unwrap().len(), 4);
    assert!(out.join("traces").read_dir().unwrap().count() > 0);
}

#[test]
fn zero_budget_gives_empty_traces() {
    let dir = tempfile::tempdir().unwrap();
    let graph = generate(dir.path(), "mixed", "3");
    let out = dir.path().join("r");
    let r = run(&["crawl", "--graph", p(&graph), "--budget", "0", "--out", p(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    for entry in fs::read_dir(out.join("traces")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2, "{text}");
        assert!(lines[1].contains("\"terminated\":\"budget_reached\""), "{text}");
        assert!(lines[1].contains("\"requests\":0"), "{text}");
    }
}

#[test]
fn remote_crawl_matches_local_crawl() {
    let dir = tempfile::tempdir().unwrap();
    let graph = generate(dir.path(), "mixed", "11");
    let common = ["--strategy", "s1,s2,s3,s4,gasc,gdesc", "--victims", "random:10", "--seed", "5", "--budget", "50"];
    let local = dir.path().join("local");
    let mut args = vec!["crawl", "--graph", p(&graph), "--out", p(&local)];
    args.extend(common);
    let r = run(&args);
    assert_eq!(code(&r), 0, "{}", stderr(&r));

    let server = serve(&graph, &[]);
    let remote = dir.path().join("remote");
    let mut args = vec!["crawl", "--url", &server.url, "--truth", p(&graph), "--out", p(&remote)];
    args.extend(common);
    let r = run(&args);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(report_files(&local), report_files(&remote));
}

#[test]
fn report_recomputation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let graph = generate(dir.path(), "mixed", "8");
    let out = dir.path().join("r");
    let r = run(&["crawl", "--graph", p(&graph), "--victims", "all", "--seed", "2", "--out", p(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let before = report_files(&out);
    let again = dir.path().join("again");
    let r = run(&["report", "--in", p(&out), "--out", p(&again)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(report_files(&again), before);
    let r = run(&["report", "--in", p(&out.join("traces")), "--out", p(&again)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(report_files(&again), before);
    let r = run(&["report", "--in", p(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(report_files(&out), before);
}

#[test]
fn report_rejects_empty_and_corrupt_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let r = run(&["report", "--in", p(&empty)]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("no traces"), "{}", stderr(&r));

    let graph = dir.path().join("w1.json");
    save_graph(&w1(), &graph).unwrap();
    let out = dir.path().join("r");
    let r = run(&["crawl", "--graph", p(&graph), "--victims", "1", "--strategy", "s2", "--out", p(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let trace = out.join("traces").join("S2-u1.jsonl");
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[3] = "{\"no\":3,\"t\":1.5,\"kind\":".into();
    fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let r = run(&["report", "--in", p(&out)]);
    assert_eq!(code(&r), 1);
    let err = stderr(&r);
    assert!(err.contains("S2-u1.jsonl") && err.contains("line 4"), "{err}");
}

#[test]
fn end_to_end_runs_are_byte_identical() {
    let outputs: Vec<Vec<Vec<u8>>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let graph = generate(dir.path(), "mixed", "42");
            let out = dir.path().join("r");
            let r = run(&["crawl", "--graph", p(&graph), "--seed", "7", "--budget", "80", "--out", p(&out)]);
            assert_eq!(code(&r), 0, "{}", stderr(&r));
            let again = dir.path().join("again");
            assert_eq!(code(&run(&["report", "--in", p(&out), "--out", p(&again)])), 0);
            let mut files = vec![fs::read(&graph).unwrap()];
            files.extend(report_files(&out));
            files.extend(report_files(&again));
            files
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[cfg(unix)]
#[test]
fn serve_stops_cleanly_on_sigterm() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("w1.json");
    save_graph(&w1(), &graph).unwrap();
    let mut server = serve(&graph, &[]);
    let pid = server.child.id().to_string();
    assert!(Command::new("kill").args(["-TERM", &pid]).status().unwrap().success());
    let status = server.child.wait().unwrap();
    assert_eq!(status.code(), Some(0));
}
