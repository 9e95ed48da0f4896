mod common;

use std::collections::BTreeMap;

use common::{csv_provider, golden_config, synthetic_config};
use medshare::cli::{run_session, CliError, RunConfig};
use medshare::datastore::{match_query, Query};
use medshare::keyprotocol::{count_decryptable, Alias};
use medshare::perturb::PerturbationPolicy;
use medshare::roles::ClientPhase;
use medshare::transport::{Direction, MsgType, Role};

#[test]
fn golden_run_conserves_rows() {
    let run = run_session(&golden_config(42)).unwrap();
    assert_eq!(run.client.phase(), ClientPhase::Done);
    assert_eq!(run.client.n(), Some(3));
    let expected: usize = run.sources.values().map(|t| t.len()).sum();
    assert_eq!(run.outcome().unwrap().len(), expected);
    assert!(run.errors.is_empty(), "{:?}", run.errors);
}

#[test]
fn network_log_equals_mediator_log() {
    let run = run_session(&golden_config(3)).unwrap();
    assert_eq!(&run.transcript, run.mediator.transcript());
}

#[test]
fn message_types_follow_protocol_steps() {
    let run = run_session(&golden_config(8)).unwrap();
    let mut collapsed: Vec<MsgType> = Vec::new();
    for e in run.transcript.entries() {
        if collapsed.last() != Some(&e.envelope.msg_type) {
            collapsed.push(e.envelope.msg_type);
        }
    }
    assert_eq!(
        collapsed,
        [
            MsgType::Query,
            MsgType::Ack,
            MsgType::Count,
            MsgType::KeySet,
            MsgType::BlindedResponse,
            MsgType::Bundle
        ]
    );
}

#[test]
fn key_set_arrives_before_bundle_per_provider() {
    let run = run_session(&synthetic_config(5, 5, 4)).unwrap();
    let mut first_seen: BTreeMap<(String, MsgType), usize> = BTreeMap::new();
    for (i, e) in run.transcript.entries().iter().enumerate() {
        if e.direction == Direction::Outbound && e.envelope.to.role == Role::Client {
            first_seen.entry((e.envelope.from.token.clone(), e.envelope.msg_type)).or_insert(i);
        }
    }
    for alias in run.client.bundles().keys() {
        let ks = first_seen[&(alias.0.clone(), MsgType::KeySet)];
        let b = first_seen[&(alias.0.clone(), MsgType::Bundle)];
        assert!(ks < b);
    }
}

#[test]
fn relayed_payloads_are_untouched() {
    let run = run_session(&golden_config(9)).unwrap();
    let entries = run.transcript.entries();
    for t in [MsgType::KeySet, MsgType::BlindedResponse, MsgType::Bundle] {
        let inbound: Vec<_> = entries
            .iter()
            .filter(|e| e.direction == Direction::Inbound && e.envelope.msg_type == t)
            .map(|e| &e.envelope.payload)
            .collect();
        let mut outbound: Vec<_> = entries
            .iter()
            .filter(|e| e.direction == Direction::Outbound && e.envelope.msg_type == t)
            .map(|e| &e.envelope.payload)
            .collect();
        let mut inbound = inbound;
        inbound.sort();
        outbound.sort();
        assert_eq!(inbound, outbound, "{t}");
        assert_eq!(inbound.len(), 3);
    }
}

#[test]
fn client_sees_aliases_only() {
    let run = run_session(&golden_config(10)).unwrap();
    let ids: Vec<&String> = run.sources.keys().collect();
    for e in run.transcript.entries() {
        if e.envelope.to.role == Role::Client && e.direction == Direction::Outbound {
            assert!(!ids.contains(&&e.envelope.from.token));
        }
    }
    let aliases: Vec<&Alias> = run.client.bundles().keys().collect();
    assert_eq!(aliases.len(), 3);
    assert!(aliases.iter().all(|a| a.0.len() == 16));
}

#[test]
fn every_bundle_opens_exactly_once() {
    for m in [2, 8] {
        let run = run_session(&synthetic_config(77, 3, m)).unwrap();
        for b in run.client.bundles().values() {
            assert_eq!(b.payloads.len(), m);
            assert_eq!(count_decryptable(b, run.client.keypair()), 1);
        }
    }
}

#[test]
fn zero_noise_returns_matched_rows() {
    let mut cfg = golden_config(4);
    cfg.policy = PerturbationPolicy::hospital(0.0).unwrap();
    cfg.query = Query::range("age", 30.0, 60.0);
    let run = run_session(&cfg).unwrap();
    let mut expected: Vec<String> = Vec::new();
    for t in run.sources.values() {
        let hit = match_query(t, &cfg.query).unwrap();
        let kept: Vec<&str> = hit.schema().names().filter(|n| *n != "personid").collect();
        let csv = String::from_utf8(hit.project(&kept).unwrap().to_csv_bytes()).unwrap();
        expected.extend(csv.lines().skip(1).map(str::to_string));
    }
    let got_csv = String::from_utf8(run.outcome().unwrap().to_csv_bytes()).unwrap();
    let mut got: Vec<String> = got_csv.lines().skip(1).map(str::to_string).collect();
    expected.sort();
    got.sort();
    assert_eq!(got, expected);
}

#[test]
fn no_match_is_no_providers() {
    let mut cfg = golden_config(1);
    cfg.query = Query::eq("diseasename", "Malaria");
    let run = run_session(&cfg).unwrap();
    assert_eq!(run.client.n(), Some(0));
    assert!(matches!(run.outcome(), Err(CliError::NoProviders)));
    assert_eq!(CliError::NoProviders.exit_code(), 3);
}

#[test]
fn missing_key_sets_abort_the_session() {
    let mut cfg = golden_config(2);
    cfg.timeouts.keyset_timeout_ms = 0;
    let run = run_session(&cfg).unwrap();
    match run.outcome() {
        Err(e @ CliError::PartialProviderFailure(_)) => assert_eq!(e.exit_code(), 4),
        other => panic!("expected partial failure, got {other:?}"),
    }
}

#[test]
fn single_provider_subset_query() {
    let mut cfg = RunConfig::new(6, vec![csv_provider("hospital-a", "hospital_a.csv"), csv_provider("hospital-b", "hospital_b.csv")]);
    cfg.query = Query::eq("diseasename", "Swine flu");
    let run = run_session(&cfg).unwrap();
    assert_eq!(run.client.n(), Some(1));
    assert_eq!(run.outcome().unwrap().len(), 1);
}
