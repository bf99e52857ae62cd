use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

const FSD: &str = env!("CARGO_BIN_EXE_fsd");

fn fsd(dir: &Path, args: &[&str]) -> Output {
    Command::new(FSD).args(args).current_dir(dir).env_remove("FSD_SEED").output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "status {:?}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn ids(record: &Value) -> Vec<u64> {
    record["ids"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect()
}

fn tmp() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().to_path_buf();
    (dir, path)
}

#[test]
fn zero_length_generation() {
    let (_g, dir) = tmp();
    let out = fsd(&dir, &["generate", "--variant", "greedy", "--len", "0", "--num-prompts", "4", "--out", "g.jsonl"]);
    ok(&out);
    let records = jsonl(&dir.join("g.jsonl"));
    assert_eq!(records.len(), 4);
    for r in &records {
        assert_eq!(r["schema"], "fsd.generation/1");
        assert!(ids(r).is_empty());
        assert_eq!(r["prompt_ids"].as_array().unwrap().len(), 32);
    }
    assert!(dir.join("g.jsonl.manifest.json").exists());
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let (_g, dir) = tmp();
    for variant in ["fsd", "fsd-vec", "top-p"] {
        let out = format!("{variant}.jsonl");
        ok(&fsd(&dir, &["generate", "--variant", variant, "--len", "40", "--num-prompts", "5", "--seed", "7", "--jobs", "3", "--out", &out]));
        let manifest = format!("{out}.manifest.json");
        let again = format!("{variant}.again.jsonl");
        ok(&fsd(&dir, &["rerun", &manifest, "--out", &again]));
        let a = std::fs::read(dir.join(&out)).unwrap();
        let b = std::fs::read(dir.join(&again)).unwrap();
        assert_eq!(a, b, "{variant}");
        let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(&manifest)).unwrap()).unwrap();
        assert_eq!(m["schema"], "fsd.manifest/1");
        assert_eq!(m["run"]["command"], "generate");
        assert_eq!(m["run"]["decode"]["seed"], 7);
    }
}

#[test]
fn jobs_do_not_change_output() {
    let (_g, dir) = tmp();
    ok(&fsd(&dir, &["generate", "--len", "30", "--num-prompts", "6", "--out", "one.jsonl"]));
    ok(&fsd(&dir, &["generate", "--len", "30", "--num-prompts", "6", "--jobs", "4", "--out", "four.jsonl"]));
    assert_eq!(std::fs::read(dir.join("one.jsonl")).unwrap(), std::fs::read(dir.join("four.jsonl")).unwrap());
}

#[test]
fn seed_env_overrides_flag() {
    let (_g, dir) = tmp();
    let run = |seed_env: Option<&str>, out: &str| {
        let mut cmd = Command::new(FSD);
        cmd.args(["generate", "--variant", "top-k", "--len", "30", "--num-prompts", "2", "--seed", "1", "--out", out]).current_dir(&dir);
        match seed_env {
            Some(s) => cmd.env("FSD_SEED", s),
            None => cmd.env_remove("FSD_SEED"),
        };
        ok(&cmd.output().unwrap());
        jsonl(&dir.join(out))
    };
    let flag = run(None, "a.jsonl");
    let env = run(Some("99"), "b.jsonl");
    assert_eq!(flag[0]["seed"], 1);
    assert_eq!(env[0]["seed"], 99);
    assert_eq!(env[1]["seed"], 100);
    assert_ne!(ids(&flag[0]), ids(&env[0]));
}

#[test]
fn config_file_and_flag_precedence() {
    let (_g, dir) = tmp();
    std::fs::write(dir.join("cfg.json"), r#"{"variant":"fsd","alpha":0.0,"n":2,"len":12,"punct":"none"}"#).unwrap();
    ok(&fsd(&dir, &["generate", "--config", "cfg.json", "--num-prompts", "3", "--out", "c.jsonl"]));
    ok(&fsd(&dir, &["generate", "--variant", "greedy", "--len", "12", "--num-prompts", "3", "--out", "g.jsonl"]));
    let (c, g) = (jsonl(&dir.join("c.jsonl")), jsonl(&dir.join("g.jsonl")));
    for (a, b) in c.iter().zip(&g) {
        assert_eq!(ids(a), ids(b), "alpha 0 reduces to greedy");
    }
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("c.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["details"]["config"]["order_n"], 2);

    ok(&fsd(&dir, &["generate", "--config", "cfg.json", "--len", "5", "--num-prompts", "1", "--out", "o.jsonl"]));
    assert_eq!(ids(&jsonl(&dir.join("o.jsonl"))[0]).len(), 5);

    std::fs::write(dir.join("bad.json"), r#"{"alfa":1}"#).unwrap();
    assert_eq!(fsd(&dir, &["generate", "--config", "bad.json"]).status.code(), Some(1));
}

#[test]
fn prompt_files() {
    let (_g, dir) = tmp();
    std::fs::write(dir.join("p.jsonl"), "{\"text\":\"the License\"}\n\n{\"ids\":[5,6,7]}\n").unwrap();
    ok(&fsd(&dir, &["generate", "--prompts", "p.jsonl", "--len", "8", "--out", "g.jsonl"]));
    let records = jsonl(&dir.join("g.jsonl"));
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["prompt"], "the License");
    assert_eq!(records[1]["prompt_ids"], serde_json::json!([5, 6, 7]));

    std::fs::write(dir.join("bad.jsonl"), "{\"text\":\"ok\"}\n{\"other\":1}\n").unwrap();
    let out = fsd(&dir, &["generate", "--prompts", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.jsonl:2"));

    std::fs::write(dir.join("oov.jsonl"), "{\"ids\":[999999]}\n").unwrap();
    assert_eq!(fsd(&dir, &["generate", "--prompts", "oov.jsonl"]).status.code(), Some(3));
}

#[test]
fn usage_errors_exit_one() {
    let (_g, dir) = tmp();
    for args in [
        &["generate", "--backend", "gpt:whatever"][..],
        &["generate", "--beta", "1.5"],
        &["generate", "--no-such-flag"],
        &["generate", "--hidden", "proj:x"],
        &["frobnicate"],
    ] {
        assert_eq!(fsd(&dir, args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn backend_failures_exit_two() {
    let (_g, dir) = tmp();
    std::fs::write(dir.join("p.jsonl"), "{\"ids\":[1]}\n").unwrap();
    let out = fsd(&dir, &["generate", "--backend", "bridge-cmd:true", "--prompts", "p.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fsd(&dir, &["generate", "--backend", "bridge-tcp:127.0.0.1:1", "--prompts", "p.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fsd(&dir, &["generate", "--backend", "bridge-cmd:/no/such/binary", "--prompts", "p.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bridge_over_stdio_matches_builtin() {
    let (_g, dir) = tmp();
    std::fs::write(dir.join("p.jsonl"), "{\"text\":\"The Free Software Foundation may publish\"}\n{\"text\":\"When a class definition is\"}\n").unwrap();
    let bridge = format!("bridge-cmd:'{FSD}' serve --mode stdio");
    for variant in ["fsd", "fsd-vec", "greedy"] {
        ok(&fsd(&dir, &["generate", "--variant", variant, "--prompts", "p.jsonl", "--len", "40", "--out", "local.jsonl"]));
        ok(&fsd(&dir, &["generate", "--backend", &bridge, "--variant", variant, "--prompts", "p.jsonl", "--len", "40", "--out", "remote.jsonl"]));
        let (l, r) = (jsonl(&dir.join("local.jsonl")), jsonl(&dir.join("remote.jsonl")));
        for (a, b) in l.iter().zip(&r) {
            assert_eq!(ids(a), ids(b), "{variant}");
            assert_eq!(a["continuation"], b["continuation"]);
            assert!(b["failure"].is_null());
        }
    }
}

#[test]
fn bridge_over_tcp() {
    let (_g, dir) = tmp();
    let mut server = Command::new(FSD).args(["serve", "--mode", "tcp"]).stderr(Stdio::piped()).spawn().unwrap();
    let mut line = String::new();
    BufReader::new(server.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_owned();
    std::fs::write(dir.join("p.jsonl"), "{\"text\":\"the Program\"}\n").unwrap();
    let backend = format!("bridge-tcp:{addr}");
    ok(&fsd(&dir, &["generate", "--backend", &backend, "--prompts", "p.jsonl", "--len", "16", "--out", "t.jsonl"]));
    assert_eq!(ids(&jsonl(&dir.join("t.jsonl"))[0]).len(), 16);
    server.kill().unwrap();
    server.wait().unwrap();
}

#[test]
fn eval_fixtures_and_errors() {
    let (_g, dir) = tmp();
    std::fs::write(dir.join("g.jsonl"), "{\"ids\":[0,1,0,1]}\n{\"continuation\":\"a a a a\"}\n").unwrap();
    ok(&fsd(&dir, &["eval", "g.jsonl", "--per-n", "--out", "e.jsonl"]));
    let e = jsonl(&dir.join("e.jsonl"));
    let close = |v: &Value, x: f64| (v.as_f64().unwrap() - x).abs() < 1e-12;
    assert!(close(&e[0]["report"]["rep_2"], 1.0 / 3.0));
    assert!(close(&e[0]["report"]["diversity"], 2.0 / 3.0));
    assert!(close(&e[1]["report"]["rep_2"], 2.0 / 3.0));
    assert_eq!(e[2]["kind"], "summary");
    assert!(close(&e[2]["summary"]["rep_2"], 0.5));
    let per_n: Vec<&Value> = e.iter().filter(|r| r["kind"] == "per_n").collect();
    assert_eq!(per_n.len(), 4);
    assert!(e.iter().all(|r| r["schema"] == "fsd.eval/1"));

    std::fs::write(dir.join("distinct.jsonl"), "{\"continuation\":\"a b c d e f\"}\n{\"ids\":[1,2,3,4,5]}\n").unwrap();
    ok(&fsd(&dir, &["eval", "distinct.jsonl", "--out", "d.jsonl"]));
    assert_eq!(jsonl(&dir.join("d.jsonl")).last().unwrap()["summary"]["diversity"], 1.0);

    std::fs::write(dir.join("bad.jsonl"), "{\"ids\":[1]}\n{\"ids\":[1,\n").unwrap();
    let out = fsd(&dir, &["eval", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.jsonl:2"));
    assert_eq!(fsd(&dir, &["eval", "missing.jsonl"]).status.code(), Some(3));
}

#[test]
fn eval_smoothing_ablation() {
    let (_g, dir) = tmp();
    let common = ["generate", "--num-prompts", "20", "--len", "256", "--punct", "none", "--stopwords", "none"];
    ok(&fsd(&dir, &[&common[..], &["--out", "s.jsonl"]].concat()));
    ok(&fsd(&dir, &[&common[..], &["--smoothing", "off", "--out", "u.jsonl"]].concat()));
    let rep2 = |file: &str| {
        let out = format!("{file}.eval");
        ok(&fsd(&dir, &["eval", file, "--per-n", "--out", &out]));
        jsonl(&dir.join(out)).into_iter().find(|r| r["kind"] == "per_n" && r["n"] == 2).unwrap()["rep"].as_f64().unwrap()
    };
    assert!(rep2("u.jsonl") > rep2("s.jsonl"));
}

#[test]
fn bench_csv() {
    let (_g, dir) = tmp();
    ok(&fsd(&dir, &["bench", "--num-prompts", "2", "--lengths", "16,32", "--variants", "greedy,fsd,fsd-vec", "--out", "b.csv", "--per-step", "s.csv"]));
    let mut reader = csv::Reader::from_path(dir.join("b.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, ["schema", "variant", "length", "prompts", "mean_step_us", "mean_instance_ms", "diversity", "rep_2", "rep_3", "rep_4"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| &r[0] == "fsd.bench/1"));
    assert_eq!((&rows[0][1], &rows[0][2]), ("greedy", "16"));
    let steps = csv::Reader::from_path(dir.join("s.csv")).unwrap().records().count();
    assert_eq!(steps, 3 * 2 * 32);

    let out = fsd(&dir, &["bench", "--num-prompts", "1", "--lengths", "8", "--variants", "greedy"]);
    ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
}

#[test]
fn builtin_corpus_file_backend() {
    let (_g, dir) = tmp();
    std::fs::write(dir.join("c.txt"), "a b c a b d a b c e ".repeat(20)).unwrap();
    ok(&fsd(&dir, &["generate", "--backend", "builtin:c.txt", "--num-prompts", "2", "--prompt-len", "4", "--len", "10", "--out", "g.jsonl"]));
    assert_eq!(jsonl(&dir.join("g.jsonl")).len(), 2);
    assert_eq!(fsd(&dir, &["generate", "--backend", "builtin:missing.txt"]).status.code(), Some(3));
}
