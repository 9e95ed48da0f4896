use rand_chacha::ChaCha20Rng;

use crate::datastore::{match_query, Table};
use crate::keyprotocol::{self, generate_key_set, multi_encrypt, unwrap, Alias, KeySet};
use crate::perturb::{perturb_table, PerturbationPolicy};
use crate::transport::{Envelope, MsgType, Party, SeqCounter};

use super::messages::{self, AckPayload, BroadcastPayload};
use super::RoleError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProviderPhase {
    AwaitingQuery,
    Acked,
    KeysSent,
    Done,
    Failed,
}

#[derive(Clone, Debug)]
struct Engagement {
    session_id: String,
    alias: Alias,
    m: usize,
    matched: Table,
    keyset: Option<KeySet>,
}

/// A data holder. Answers matching queries with its perturbed rows,
/// encrypted to every candidate key the client's blinded response yields.
#[derive(Clone, Debug)]
pub struct ProviderState {
    me: Party,
    mediator: Party,
    phase: ProviderPhase,
    store: Table,
    policy: PerturbationPolicy,
    rng: ChaCha20Rng,
    seq: SeqCounter,
    engagement: Option<Engagement>,
}

impl ProviderState {
    pub fn new(
        identity: impl Into<String>,
        mediator: Party,
        store: Table,
        policy: PerturbationPolicy,
        rng: ChaCha20Rng,
    ) -> Result<Self, RoleError> {
        policy.validate(store.schema())?;
        Ok(Self {
            me: Party::provider(identity),
            mediator,
            phase: ProviderPhase::AwaitingQuery,
            store,
            policy,
            rng,
            seq: SeqCounter::default(),
            engagement: None,
        })
    }

    pub fn party(&self) -> &Party {
        &self.me
    }

    pub fn identity(&self) -> &str {
        &self.me.token
    }

    pub fn phase(&self) -> ProviderPhase {
        self.phase
    }

    pub fn store(&self) -> &Table {
        &self.store
    }

    pub fn policy(&self) -> &PerturbationPolicy {
        &self.policy
    }

    /// Rows this provider matched for the current session, unperturbed.
    pub fn matched(&self) -> Option<&Table> {
        self.engagement.as_ref().map(|e| &e.matched)
    }

    pub fn key_set(&self) -> Option<&KeySet> {
        self.engagement.as_ref().and_then(|e| e.keyset.as_ref())
    }

    /// Advance on one delivered message. Any error leaves the provider
    /// `Failed`.
    pub fn step(&mut self, env: Envelope) -> Result<Vec<Envelope>, RoleError> {
        let out = self.apply(env);
        if out.is_err() {
            self.phase = ProviderPhase::Failed;
        }
        out
    }

    fn envelope(&mut self, to: Party, msg_type: MsgType, payload: Vec<u8>) -> Envelope {
        let seq = self.seq.next(&self.me, &to);
        let session_id = self
            .engagement
            .as_ref()
            .map(|e| e.session_id.clone())
            .unwrap_or_default();
        Envelope {
            session_id,
            from: self.me.clone(),
            to,
            msg_type,
            seq,
            payload,
        }
    }

    fn out_of_order(&self, msg: MsgType) -> RoleError {
        RoleError::ProtocolOrder {
            phase: format!("{:?}", self.phase),
            msg,
        }
    }

    fn apply(&mut self, env: Envelope) -> Result<Vec<Envelope>, RoleError> {
        if let Some(e) = &self.engagement {
            if env.session_id != e.session_id {
                return Err(RoleError::UnknownSession(env.session_id));
            }
        }
        match (self.phase, env.msg_type) {
            (ProviderPhase::AwaitingQuery, MsgType::Query) => {
                let req: BroadcastPayload = messages::from_bytes(&env.payload)?;
                // Queries this store cannot answer are declined silently,
                // same as an empty match.
                let matched = match match_query(&self.store, &req.query) {
                    Ok(t) if !t.is_empty() => t,
                    _ => return Ok(vec![]),
                };
                self.engagement = Some(Engagement {
                    session_id: env.session_id,
                    alias: req.alias,
                    m: req.m,
                    matched,
                    keyset: None,
                });
                self.phase = ProviderPhase::Acked;
                let ack = messages::to_bytes(&AckPayload::default());
                Ok(vec![self.envelope(self.mediator.clone(), MsgType::Ack, ack)])
            }
            (ProviderPhase::Acked, MsgType::Count) => {
                let e = self.engagement.as_mut().expect("acked");
                let ks = generate_key_set(e.m, e.alias.clone(), &mut self.rng)?;
                let body = keyprotocol::wire::encode_key_set(&ks);
                e.keyset = Some(ks);
                let to = Party::client(e.session_id.clone());
                self.phase = ProviderPhase::KeysSent;
                Ok(vec![self.envelope(to, MsgType::KeySet, body)])
            }
            (ProviderPhase::KeysSent, MsgType::BlindedResponse) => {
                let blinded = keyprotocol::wire::decode_blinded(&env.payload)
                    .map_err(|e| RoleError::Malformed(e.to_string()))?;
                let e = self.engagement.as_ref().expect("keys sent");
                let ks = e.keyset.as_ref().expect("keys sent");
                let candidates = unwrap(ks, &blinded)?;
                let policy = self.policy.restricted_to(e.matched.schema());
                let released = perturb_table(&e.matched, &policy, &mut self.rng)?;
                let bundle = multi_encrypt(e.alias.clone(), &released.to_csv_bytes(), &candidates, &mut self.rng)?;
                let to = Party::client(e.session_id.clone());
                self.phase = ProviderPhase::Done;
                Ok(vec![self.envelope(to, MsgType::Bundle, keyprotocol::wire::encode_bundle(&bundle))])
            }
            (ProviderPhase::Done | ProviderPhase::Failed, t) => Err(self.out_of_order(t)),
            (_, MsgType::Abort) => {
                self.phase = ProviderPhase::Failed;
                Ok(vec![])
            }
            (_, t) => Err(self.out_of_order(t)),
        }
    }
}
