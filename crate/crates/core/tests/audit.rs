mod common;

use common::{golden_config, synthetic_config};
use medshare::cli::{audit, audit_file, run_end_to_end, run_session, SessionRun};
use medshare::transport::{Direction, MsgType, Role, Transcript, TranscriptEntry};

fn audit_run(run: &SessionRun, transcript: &Transcript) -> medshare::cli::AuditReport {
    let sources: Vec<_> = run.sources.values().collect();
    audit(transcript, &sources)
}

#[test]
fn honest_runs_pass_across_grid() {
    for m in [2, 8] {
        for k in [1, 3, 5] {
            for seed in 0..20 {
                let run = run_session(&synthetic_config(seed, k, m)).unwrap();
                let report = audit_run(&run, &run.transcript);
                assert!(report.pass, "m={m} k={k} seed={seed}: {report:#?}");
                assert_eq!(run.client.n(), Some(k));
            }
        }
    }
}

#[test]
fn plaintext_bundle_fails_opacity() {
    let run = run_session(&golden_config(42)).unwrap();
    let mut entries = run.transcript.entries().to_vec();
    let victim = entries
        .iter_mut()
        .find(|e| e.direction == Direction::Inbound && e.envelope.msg_type == MsgType::Bundle)
        .unwrap();
    let owner = victim.envelope.from.token.clone();
    victim.envelope.payload = run.sources[&owner].to_csv_bytes();
    let report = audit_run(&run, &Transcript::from_entries(entries).unwrap());
    assert!(!report.payload_opacity.pass);
    assert!(!report.pass);
    assert!(report.source_anonymity.pass);
}

#[test]
fn base64_wrapped_plaintext_fails_opacity() {
    let run = run_session(&golden_config(42)).unwrap();
    let mut entries = run.transcript.entries().to_vec();
    let victim = entries
        .iter_mut()
        .find(|e| e.direction == Direction::Outbound && e.envelope.msg_type == MsgType::Bundle)
        .unwrap();
    let csv = run.sources["hospital-a"].to_csv_bytes();
    let fake = medshare::keyprotocol::EncryptedBundle {
        alias: medshare::keyprotocol::Alias(victim.envelope.from.token.clone()),
        payloads: vec![csv.clone(); 8],
    };
    victim.envelope.payload = medshare::keyprotocol::wire::encode_bundle(&fake);
    let report = audit_run(&run, &Transcript::from_entries(entries).unwrap());
    assert!(!report.payload_opacity.pass);
}

fn move_entry(entries: &mut Vec<TranscriptEntry>, from: usize, to: usize) {
    let mut e = entries.remove(from);
    e.timestamp_us = entries[to - 1].timestamp_us;
    entries.insert(to, e);
}

#[test]
fn count_before_acks_fails_ordering() {
    let run = run_session(&golden_config(42)).unwrap();
    let mut entries = run.transcript.entries().to_vec();
    let count = entries
        .iter()
        .position(|e| e.envelope.msg_type == MsgType::Count && e.envelope.to.role == Role::Client)
        .unwrap();
    let first_ack = entries.iter().position(|e| e.envelope.msg_type == MsgType::Ack).unwrap();
    move_entry(&mut entries, count, first_ack);
    let report = audit_run(&run, &Transcript::from_entries(entries).unwrap());
    assert!(!report.step_ordering.pass, "{report:#?}");
    assert!(!report.n_consistency.pass);
}

#[test]
fn bundle_before_response_fails_ordering() {
    let run = run_session(&golden_config(5)).unwrap();
    let mut entries = run.transcript.entries().to_vec();
    let bundle = entries.iter().position(|e| e.envelope.msg_type == MsgType::Bundle).unwrap();
    let blinded = entries
        .iter()
        .position(|e| e.envelope.msg_type == MsgType::BlindedResponse)
        .unwrap();
    move_entry(&mut entries, bundle, blinded);
    let report = audit_run(&run, &Transcript::from_entries(entries).unwrap());
    assert!(!report.step_ordering.pass);
}

#[test]
fn identity_in_client_bound_message_fails_anonymity() {
    let run = run_session(&golden_config(42)).unwrap();

    let mut entries = run.transcript.entries().to_vec();
    let relay = entries
        .iter_mut()
        .find(|e| e.direction == Direction::Outbound && e.envelope.msg_type == MsgType::Bundle)
        .unwrap();
    relay.envelope.from.token = "hospital-b".into();
    assert!(!audit_run(&run, &Transcript::from_entries(entries).unwrap()).source_anonymity.pass);

    let mut entries = run.transcript.entries().to_vec();
    let count = entries
        .iter_mut()
        .find(|e| e.envelope.msg_type == MsgType::Count && e.envelope.to.role == Role::Client)
        .unwrap();
    count.envelope.payload = br#"{"n":3,"from":["clinic-c"]}"#.to_vec();
    assert!(!audit_run(&run, &Transcript::from_entries(entries).unwrap()).source_anonymity.pass);
}

#[test]
fn inflated_count_fails_consistency() {
    let run = run_session(&golden_config(42)).unwrap();
    let mut entries = run.transcript.entries().to_vec();
    let count = entries
        .iter_mut()
        .find(|e| e.envelope.msg_type == MsgType::Count && e.envelope.to.role == Role::Client)
        .unwrap();
    count.envelope.payload = br#"{"n":4}"#.to_vec();
    let report = audit_run(&run, &Transcript::from_entries(entries).unwrap());
    assert!(!report.n_consistency.pass);
    assert!(report.step_ordering.pass);
}

#[test]
fn aborted_and_empty_sessions_pass() {
    let mut cfg = golden_config(2);
    cfg.timeouts.keyset_timeout_ms = 0;
    let run = run_session(&cfg).unwrap();
    assert!(audit_run(&run, &run.transcript).pass);

    let mut cfg = golden_config(2);
    cfg.query = medshare::datastore::Query::eq("diseasename", "Malaria");
    let run = run_session(&cfg).unwrap();
    assert!(audit_run(&run, &run.transcript).pass);
}

#[test]
fn audits_written_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = golden_config(11);
    run_end_to_end(&cfg, dir.path()).unwrap();
    let run = run_session(&cfg).unwrap();
    let sources: Vec<_> = run.sources.values().collect();
    let report = audit_file(&dir.path().join("transcript.jsonl"), &sources).unwrap();
    assert!(report.pass);

    std::fs::write(dir.path().join("bad.jsonl"), "{not json}\n").unwrap();
    assert!(audit_file(&dir.path().join("bad.jsonl"), &sources).is_err());
}
