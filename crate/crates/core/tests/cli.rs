use std::path::Path;
use std::process::{Command, Output};

fn medshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medshare")).args(args).output().unwrap()
}

fn demo_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo_run.json")
        .display()
        .to_string()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = demo_config();
    for out in [&a, &b] {
        let o = medshare(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["result.csv", "transcript.jsonl"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&read(&a.join("report.json"))).unwrap();
    assert_eq!(report["n"], 3);
    assert_eq!(report["result_rows"], 45);

    let o = medshare(&["audit", "--config", &cfg, "--transcript", a.join("transcript.jsonl").to_str().unwrap()]);
    assert!(o.status.success());
    let audit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(audit["pass"], true);

    let c = dir.path().join("c");
    medshare(&["run", "--config", &cfg, "--seed", "43", "--out", c.to_str().unwrap()]);
    assert_ne!(read(&a.join("transcript.jsonl")), read(&c.join("transcript.jsonl")));
}

#[test]
fn gen_data_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = medshare(&["gen-data", "--n", "100", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(read(&out)).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.starts_with("sno,personid,zipcode,diseasename,age,medicine\n"));
    let again = dir.path().join("e.csv");
    medshare(&["gen-data", "--n", "100", "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(read(&out), read(&again));
}

#[test]
fn stats_is_deterministic() {
    let a = medshare(&["stats", "--seed", "5"]);
    let b = medshare(&["stats", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("n,family,parameter,mean_abs_error,variance_abs_error\n"));
    assert!(text.contains("100,uniform,0.0,0.0,0.0"));
}

#[test]
fn keys_demo_output() {
    let o = medshare(&["keys-demo", "--m", "2", "--seed", "1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("1 of 2 ciphertexts decrypt"));
    assert_eq!(medshare(&["keys-demo", "--m", "2", "--seed", "1"]).stdout, text.as_bytes());

    let o = medshare(&["keys-demo", "--m", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 2"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let write = |name: &str, body: String| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.display().to_string()
    };
    let a = fixtures.join("hospital_a.csv").display().to_string();

    let no_match = write(
        "none.json",
        format!(r#"{{"seed":1,"providers":[{{"identity":"h","csv":"{a}"}}],"query":{{"column":"diseasename","op":"eq","value":"Malaria"}}}}"#),
    );
    let out = dir.path().join("none");
    let o = medshare(&["run", "--config", &no_match, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(read(&out.join("result.csv")).is_empty());

    let partial = write(
        "partial.json",
        format!(r#"{{"seed":1,"providers":[{{"identity":"h","csv":"{a}"}}],"timeouts":{{"keyset_timeout_ms":0}}}}"#),
    );
    let o = medshare(&["run", "--config", &partial, "--out", dir.path().join("p").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let bad_m = write("m.json", format!(r#"{{"seed":1,"m":1,"providers":[{{"identity":"h","csv":"{a}"}}]}}"#));
    assert_eq!(medshare(&["run", "--config", &bad_m]).status.code(), Some(2));
    assert_eq!(medshare(&["run"]).status.code(), Some(2));
}

#[test]
fn failing_audit_exits_six() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo_config();
    let out = dir.path().join("r");
    medshare(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let text = String::from_utf8(read(&out.join("transcript.jsonl"))).unwrap();
    // Relay a provider's real identity to the client.
    let alias_line = text.lines().find(|l| l.contains(r#""msg_type":"Bundle""#) && l.contains(r#""direction":"outbound""#)).unwrap();
    let v: serde_json::Value = serde_json::from_str(alias_line).unwrap();
    let alias = v["envelope"]["from"]["token"].as_str().unwrap().to_string();
    let tampered = text.replacen(&format!(r#""token":"{alias}""#), r#""token":"hospital-a""#, 1);
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, tampered).unwrap();
    let o = medshare(&["audit", "--config", &cfg, "--transcript", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["source_anonymity"]["pass"], false);
}
