//! Post-hoc checks over a mediator transcript.
//!
//! Every check reports findings rather than stopping at the first one. The
//! checks are necessary conditions only: a clean report does not prove a
//! run private, a dirty one proves it was not.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::datastore::{Cell, Table};
use crate::roles::messages::{BroadcastPayload, CountPayload};
use crate::transport::{Direction, MsgType, Role, Transcript, TranscriptEntry};

use super::CliError;

/// Source cells shorter than this are too likely to occur by chance in
/// encoded ciphertext to be searched for.
pub const MIN_SENSITIVE_LEN: usize = 5;

/// JSON fields whose string values are base64 key or ciphertext material.
const OPAQUE_FIELDS: [&str; 3] = ["keys", "slots", "payloads"];

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub pass: bool,
    pub findings: Vec<String>,
}

impl CheckResult {
    fn from_findings(findings: Vec<String>) -> Self {
        Self {
            pass: findings.is_empty(),
            findings,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub sessions: usize,
    pub entries: usize,
    /// No client-bound envelope names a provider.
    pub source_anonymity: CheckResult,
    /// No relayed key, response or bundle payload contains source data.
    pub payload_opacity: CheckResult,
    /// Per provider, the protocol stages appear in order.
    pub step_ordering: CheckResult,
    /// The count the client was told matches acks, key sets and bundles.
    pub n_consistency: CheckResult,
    /// Things worth knowing that are not failures.
    pub notes: Vec<String>,
    pub pass: bool,
}

/// Audit `transcript` against the providers' source tables.
pub fn audit(transcript: &Transcript, sources: &[&Table]) -> AuditReport {
    let sessions = group_sessions(transcript.entries());
    let mut notes = Vec::new();
    let source_anonymity = CheckResult::from_findings(check_anonymity(transcript.entries()));
    let payload_opacity = CheckResult::from_findings(check_opacity(transcript.entries(), sources));
    let mut ordering = Vec::new();
    let mut consistency = Vec::new();
    for (sid, entries) in &sessions {
        check_ordering(sid, entries, &mut ordering, &mut notes);
        check_n(sid, entries, &mut consistency);
    }
    let step_ordering = CheckResult::from_findings(ordering);
    let n_consistency = CheckResult::from_findings(consistency);
    let pass = source_anonymity.pass && payload_opacity.pass && step_ordering.pass && n_consistency.pass;
    AuditReport {
        sessions: sessions.len(),
        entries: transcript.len(),
        source_anonymity,
        payload_opacity,
        step_ordering,
        n_consistency,
        notes,
        pass,
    }
}

/// The source-anonymity check on its own; needs no source tables.
pub fn source_anonymity(transcript: &Transcript) -> CheckResult {
    CheckResult::from_findings(check_anonymity(transcript.entries()))
}

/// Read a JSONL transcript and audit it.
pub fn audit_file(path: &Path, sources: &[&Table]) -> Result<AuditReport, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let transcript = Transcript::read_jsonl(std::io::BufReader::new(file))?;
    Ok(audit(&transcript, sources))
}

fn group_sessions(entries: &[TranscriptEntry]) -> BTreeMap<&str, Vec<&TranscriptEntry>> {
    let mut out: BTreeMap<&str, Vec<&TranscriptEntry>> = BTreeMap::new();
    for e in entries {
        out.entry(e.envelope.session_id.as_str()).or_default().push(e);
    }
    out
}

fn is_outbound_to(e: &TranscriptEntry, role: Role) -> bool {
    e.direction == Direction::Outbound && e.envelope.to.role == role
}

fn is_inbound_from(e: &TranscriptEntry, role: Role) -> bool {
    e.direction == Direction::Inbound && e.envelope.from.role == role
}

/// Physical provider addresses: whoever the mediator sent to or heard from
/// directly under the provider role.
fn provider_identities(entries: &[TranscriptEntry]) -> BTreeSet<String> {
    entries
        .iter()
        .filter_map(|e| {
            if is_inbound_from(e, Role::Provider) {
                Some(e.envelope.from.token.clone())
            } else if is_outbound_to(e, Role::Provider) {
                Some(e.envelope.to.token.clone())
            } else {
                None
            }
        })
        .collect()
}

/// String leaves of a JSON value, skipping base64 key and ciphertext lists.
fn visible_strings<'a>(v: &'a Value, key: Option<&str>, out: &mut Vec<&'a str>) {
    match v {
        Value::String(s) => out.push(s),
        Value::Array(items) => {
            if key.is_some_and(|k| OPAQUE_FIELDS.contains(&k)) {
                return;
            }
            for item in items {
                visible_strings(item, key, out);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                out.push(k);
                visible_strings(item, Some(k), out);
            }
        }
        _ => {}
    }
}

fn check_anonymity(entries: &[TranscriptEntry]) -> Vec<String> {
    let identities = provider_identities(entries);
    let mut findings = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        if !is_outbound_to(e, Role::Client) {
            continue;
        }
        let env = &e.envelope;
        for field in [&env.from.token, &env.to.token, &env.session_id] {
            if identities.contains(field) {
                findings.push(format!("entry {i}: {} to client carries provider identity {field}", env.msg_type));
            }
        }
        match serde_json::from_slice::<Value>(&env.payload) {
            Ok(v) => {
                let mut leaves = Vec::new();
                visible_strings(&v, None, &mut leaves);
                for id in &identities {
                    if leaves.iter().any(|s| s.contains(id.as_str())) {
                        findings.push(format!("entry {i}: {} payload names provider {id}", env.msg_type));
                    }
                }
            }
            Err(_) => {
                for id in identities.iter().filter(|id| id.len() >= 4) {
                    if contains(&env.payload, id.as_bytes()) {
                        findings.push(format!("entry {i}: {} payload contains provider {id}", env.msg_type));
                    }
                }
            }
        }
    }
    findings
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn sensitive_strings(sources: &[&Table]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in sources {
        for row in t.rows() {
            for cell in row {
                let s = match cell {
                    Cell::Text(s) => s.trim().to_string(),
                    Cell::Number(_) => cell.to_string(),
                };
                if s.len() >= MIN_SENSITIVE_LEN {
                    out.insert(s);
                }
            }
        }
    }
    out
}

/// Every byte string a payload exposes: the raw bytes, and the decoded
/// form of each base64 string leaf.
fn payload_views(payload: &[u8]) -> Vec<Vec<u8>> {
    let mut views = vec![payload.to_vec()];
    if let Ok(v) = serde_json::from_slice::<Value>(payload) {
        let mut stack = vec![&v];
        while let Some(v) = stack.pop() {
            match v {
                Value::String(s) => {
                    if let Ok(bytes) = crate::b64::decode(s) {
                        views.push(bytes);
                    }
                }
                Value::Array(items) => stack.extend(items),
                Value::Object(map) => stack.extend(map.values()),
                _ => {}
            }
        }
    }
    views
}

fn check_opacity(entries: &[TranscriptEntry], sources: &[&Table]) -> Vec<String> {
    let sensitive = sensitive_strings(sources);
    let mut findings = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let env = &e.envelope;
        if !matches!(env.msg_type, MsgType::KeySet | MsgType::BlindedResponse | MsgType::Bundle) {
            continue;
        }
        let views = payload_views(&env.payload);
        for s in &sensitive {
            if views.iter().any(|v| contains(v, s.as_bytes())) {
                findings.push(format!("entry {i}: {} payload exposes source value {s:?}", env.msg_type));
            }
        }
    }
    findings
}

/// Which provider a transcript entry belongs to and how far into the
/// protocol it is. `None` for entries that concern every provider.
fn stage(e: &TranscriptEntry, owner: &BTreeMap<&str, &str>) -> Result<Option<(Option<String>, u8)>, String> {
    let env = &e.envelope;
    let inbound = e.direction == Direction::Inbound;
    let lane_of_alias = |alias: &str| {
        owner
            .get(alias)
            .map(|s| s.to_string())
            .ok_or_else(|| format!("{} for unknown alias {alias}", env.msg_type))
    };
    let r = match (env.msg_type, inbound) {
        (MsgType::Query, true) => (None, 1),
        (MsgType::Query, false) => (Some(env.to.token.clone()), 2),
        (MsgType::Ack, true) => (Some(env.from.token.clone()), 3),
        (MsgType::Count, false) if env.to.role == Role::Client => (None, 4),
        (MsgType::Count, false) => (Some(env.to.token.clone()), 4),
        (MsgType::KeySet, true) => (Some(env.from.token.clone()), 5),
        (MsgType::KeySet, false) => (Some(lane_of_alias(&env.from.token)?), 5),
        (MsgType::BlindedResponse, true) => (Some(lane_of_alias(&env.to.token)?), 6),
        (MsgType::BlindedResponse, false) => (Some(env.to.token.clone()), 7),
        (MsgType::Bundle, true) => (Some(env.from.token.clone()), 8),
        (MsgType::Bundle, false) => (Some(lane_of_alias(&env.from.token)?), 8),
        (MsgType::Abort, _) => return Ok(None),
        (t, _) => return Err(format!("{t} in unexpected direction")),
    };
    Ok(Some(r))
}

fn check_ordering(sid: &str, entries: &[&TranscriptEntry], findings: &mut Vec<String>, notes: &mut Vec<String>) {
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    let mut broadcast: Vec<(String, String)> = Vec::new();
    for e in entries {
        if e.direction == Direction::Outbound && e.envelope.msg_type == MsgType::Query {
            match serde_json::from_slice::<BroadcastPayload>(&e.envelope.payload) {
                Ok(b) => broadcast.push((b.alias.0, e.envelope.to.token.clone())),
                Err(err) => findings.push(format!("session {sid}: unreadable broadcast: {err}")),
            }
        }
    }
    for (alias, id) in &broadcast {
        owner.insert(alias, id);
    }

    match entries.first() {
        Some(e) if e.direction == Direction::Inbound && e.envelope.msg_type == MsgType::Query => {}
        _ => findings.push(format!("session {sid}: does not open with the client's query")),
    }

    let mut staged = Vec::with_capacity(entries.len());
    for e in entries {
        match stage(e, &owner) {
            Ok(Some(s)) => staged.push(s),
            Ok(None) => {}
            Err(m) => findings.push(format!("session {sid}: {m}")),
        }
    }
    let lanes: BTreeSet<&String> = staged.iter().filter_map(|(l, _)| l.as_ref()).collect();
    for lane in lanes {
        let ranks: Vec<u8> = staged
            .iter()
            .filter(|(l, _)| l.is_none() || l.as_ref() == Some(lane))
            .map(|&(_, r)| r)
            .collect();
        let ordered = ranks.windows(2).all(|w| w[0] <= w[1]);
        if ordered {
            continue;
        }
        // An ack after the count that led nowhere is a late ack the
        // mediator ignored, not a reordering.
        if ranks.iter().all(|&r| r <= 4) {
            notes.push(format!("session {sid}: ack from {lane} arrived after the count"));
            continue;
        }
        findings.push(format!("session {sid}: stages for {lane} out of order: {ranks:?}"));
    }
}

fn check_n(sid: &str, entries: &[&TranscriptEntry], findings: &mut Vec<String>) {
    let aborted = entries.iter().any(|e| e.envelope.msg_type == MsgType::Abort);
    let Some(pos) = entries
        .iter()
        .position(|e| is_outbound_to(e, Role::Client) && e.envelope.msg_type == MsgType::Count)
    else {
        if !aborted {
            findings.push(format!("session {sid}: client was never given a count"));
        }
        return;
    };
    let n = match serde_json::from_slice::<CountPayload>(&entries[pos].envelope.payload) {
        Ok(c) => c.n,
        Err(err) => {
            findings.push(format!("session {sid}: unreadable count: {err}"));
            return;
        }
    };
    let acked: BTreeSet<&str> = entries[..pos]
        .iter()
        .filter(|e| is_inbound_from(e, Role::Provider) && e.envelope.msg_type == MsgType::Ack)
        .map(|e| e.envelope.from.token.as_str())
        .collect();
    if acked.len() != n {
        findings.push(format!("session {sid}: count {n} but {} providers acked", acked.len()));
    }
    let relayed = |t: MsgType| {
        entries
            .iter()
            .filter(|e| is_outbound_to(e, Role::Client) && e.envelope.msg_type == t)
            .count()
    };
    for (t, got) in [(MsgType::KeySet, relayed(MsgType::KeySet)), (MsgType::Bundle, relayed(MsgType::Bundle))] {
        let bad = if aborted { got > n } else { got != n };
        if bad {
            findings.push(format!("session {sid}: count {n} but {got} {t} messages reached the client"));
        }
    }
    if entries.iter().filter(|e| is_outbound_to(e, Role::Client) && e.envelope.msg_type == MsgType::Count).count() > 1 {
        findings.push(format!("session {sid}: client was given more than one count"));
    }
}
