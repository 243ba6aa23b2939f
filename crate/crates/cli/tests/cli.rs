use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn ireen(args: &[&str]) -> Output {
    ireen_env(args, &[])
}

fn ireen_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ireen"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn gen(dir: &Path, mode: &str, test: usize) {
    let out = ireen(&["gen-dataset", "--out", dir.to_str().unwrap(), "--test", &test.to_string(), "--mode", mode]);
    ok(&out);
}

#[test]
fn gen_dataset_is_reproducible_and_flags_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    gen(&a, "random", 8);
    gen(&b, "random", 8);
    gen(&c, "crafted", 8);
    for file in ["test.jsonl", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let mode = |dir: &Path| {
        let text = std::fs::read_to_string(dir.join("test.jsonl")).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        first["mode"].as_str().unwrap().to_string()
    };
    assert_eq!(mode(&a), "random");
    assert_eq!(mode(&c), "crafted");
}

#[test]
fn synthesize_evaluate_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let runs = tmp.path().join("runs");
    gen(&data, "random", 6);
    let (data_s, runs_s) = (data.to_str().unwrap(), runs.to_str().unwrap());
    let out = ireen(&["synthesize", "--dataset", data_s, "--out", runs_s, "--iterations", "2", "--seed", "3"]);
    ok(&out);
    let run = runs.join("random-n2-s50").join("seed-3");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["identity"]["seed"], 3);
    assert_eq!(manifest["records"], 6);
    assert!(manifest["config_hash"].as_str().unwrap().len() >= 16);

    let out = ireen(&["evaluate", run.to_str().unwrap(), "--dataset", data_s]);
    ok(&out);
    let curves = std::fs::read_to_string(run.join("curves.csv")).unwrap();
    assert!(curves.lines().any(|l| l.contains("iteration") && l.contains("exact_match")));
    assert!(run.join("verdicts.jsonl").exists());

    let out = ireen(&["compare", run.to_str().unwrap(), run.to_str().unwrap()]);
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        assert_eq!((cols[1], cols[2], cols[3]), ("0", "6", "0"), "{line}");
    }
}

#[test]
fn synthesis_is_byte_identical_across_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, "random", 4);
    let mut outputs = Vec::new();
    for name in ["r1", "r2"] {
        let dir = tmp.path().join(name);
        let out = ireen(&[
            "synthesize",
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--iterations",
            "2",
            "--workers",
            if name == "r1" { "1" } else { "2" },
        ]);
        ok(&out);
        outputs.push(std::fs::read(dir.join("random-n2-s50/seed-0/runs.jsonl")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let out = ireen(&["synthesize", "--dataset", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "iterations = 3\nnot_a_key = 1\n").unwrap();
    let out = ireen(&["synthesize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = ireen_env(&["synthesize"], &[("IREEN_ITERATIONS", "0")]);
    assert_eq!(out.status.code(), Some(2));

    let out = ireen(&["synthesize"]);
    assert_eq!(out.status.code(), Some(2), "no dataset given");
}

#[test]
fn unreachable_service_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, "random", 3);
    let cfg = tmp.path().join("remote.toml");
    std::fs::write(&cfg, "generator = \"remote\"\ntimeout_secs = 2\n[synth]\nendpoint = \"http://127.0.0.1:9\"\n").unwrap();
    let out = ireen(&[
        "synthesize",
        "--config",
        cfg.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        tmp.path().join("runs").to_str().unwrap(),
        "--iterations",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn batch_check_reads_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ireen"))
        .arg("batch-check")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let input = r#"{"id":"a","program":"def run(): turnLeft()","pairs":[]}
{"id":"b","program":"def run(): {","pairs":[]}
"#;
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    ok(&out);
    let lines: Vec<serde_json::Value> =
        String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["parsed"], true);
    assert_eq!(lines[1]["parsed"], false);
}
