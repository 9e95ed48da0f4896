use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;

use crate::datastore::{Query, Schema, Table};
use crate::keyprotocol::{
    self, blind, open_bundle, select_index, Alias, ClientKeypair, EncryptedBundle, KeySet,
    Selection,
};
use crate::transport::{Envelope, MsgType, Party, Role, SeqCounter};

use super::messages::{self, AbortPayload, CountPayload, QueryPayload};
use super::{consolidate, random_token, RoleError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClientPhase {
    Idle,
    AwaitingCount,
    AwaitingKeySets,
    AwaitingBundles,
    Done,
    Failed,
}

#[derive(Clone, Debug)]
pub enum ClientEvent {
    Start(Query),
    Message(Envelope),
}

/// The querying party. Knows the mediator and the shared schema, learns
/// `N` and the providers' aliases, never their identities.
#[derive(Clone, Debug)]
pub struct ClientState {
    me: Party,
    mediator: Party,
    schema: Schema,
    m: usize,
    session_id: String,
    phase: ClientPhase,
    keypair: ClientKeypair,
    rng: ChaCha20Rng,
    seq: SeqCounter,
    n: Option<usize>,
    keysets: BTreeMap<Alias, KeySet>,
    selections: BTreeMap<Alias, Selection>,
    bundles: BTreeMap<Alias, EncryptedBundle>,
    result: Option<Table>,
}

impl ClientState {
    /// `m` is the key-set size requested from every provider.
    pub fn new(
        token: impl Into<String>,
        mediator: Party,
        schema: Schema,
        m: usize,
        mut rng: ChaCha20Rng,
    ) -> Result<Self, RoleError> {
        if m < 2 {
            return Err(keyprotocol::KeyError::KeySetTooSmall(m).into());
        }
        let keypair = ClientKeypair::generate(&mut rng);
        let session_id = format!("s-{}", random_token(&mut rng));
        Ok(Self {
            me: Party::client(token),
            mediator,
            schema,
            m,
            session_id,
            phase: ClientPhase::Idle,
            keypair,
            rng,
            seq: SeqCounter::default(),
            n: None,
            keysets: BTreeMap::new(),
            selections: BTreeMap::new(),
            bundles: BTreeMap::new(),
            result: None,
        })
    }

    pub fn party(&self) -> &Party {
        &self.me
    }

    pub fn phase(&self) -> ClientPhase {
        self.phase
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    /// Number of contributing providers, once the mediator has reported it.
    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn selections(&self) -> &BTreeMap<Alias, Selection> {
        &self.selections
    }

    pub fn bundles(&self) -> &BTreeMap<Alias, EncryptedBundle> {
        &self.bundles
    }

    pub fn keypair(&self) -> &ClientKeypair {
        &self.keypair
    }

    /// Consolidated result, present once the phase is `Done`.
    pub fn result(&self) -> Option<&Table> {
        self.result.as_ref()
    }

    /// Advance on one event. Any error leaves the client `Failed`.
    pub fn step(&mut self, event: ClientEvent) -> Result<Vec<Envelope>, RoleError> {
        let out = self.apply(event);
        if out.is_err() {
            self.phase = ClientPhase::Failed;
        }
        out
    }

    fn envelope(&mut self, to: Party, msg_type: MsgType, payload: Vec<u8>) -> Envelope {
        let seq = self.seq.next(&self.me, &to);
        Envelope {
            session_id: self.session_id.clone(),
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

    fn apply(&mut self, event: ClientEvent) -> Result<Vec<Envelope>, RoleError> {
        let env = match event {
            ClientEvent::Start(query) => {
                if self.phase != ClientPhase::Idle {
                    return Err(self.out_of_order(MsgType::Query));
                }
                query.validate(&self.schema)?;
                let body = messages::to_bytes(&QueryPayload { m: self.m, query });
                let env = self.envelope(self.mediator.clone(), MsgType::Query, body);
                self.phase = ClientPhase::AwaitingCount;
                return Ok(vec![env]);
            }
            ClientEvent::Message(env) => env,
        };
        if env.session_id != self.session_id {
            return Err(RoleError::UnknownSession(env.session_id));
        }

        match (self.phase, env.msg_type) {
            (ClientPhase::Done | ClientPhase::Failed, t) => Err(self.out_of_order(t)),
            (_, MsgType::Abort) => {
                let body: AbortPayload = messages::from_bytes(&env.payload)?;
                Err(RoleError::PartialProviderFailure(body.reason))
            }
            (ClientPhase::AwaitingCount, MsgType::Count) => {
                let CountPayload { n } = messages::from_bytes(&env.payload)?;
                self.n = Some(n);
                if n == 0 {
                    return Err(RoleError::NoProviders);
                }
                self.phase = ClientPhase::AwaitingKeySets;
                Ok(vec![])
            }
            (ClientPhase::AwaitingKeySets, MsgType::KeySet) => {
                let alias = Self::sender_alias(&env)?;
                let ks = keyprotocol::wire::decode_key_set(&env.payload)
                    .map_err(|e| RoleError::Malformed(e.to_string()))?;
                if ks.alias() != &alias {
                    return Err(RoleError::Malformed(format!(
                        "key set for {} relayed from {alias}",
                        ks.alias()
                    )));
                }
                if ks.m() != self.m {
                    return Err(RoleError::Malformed(format!(
                        "key set of {} keys, session uses {}",
                        ks.m(),
                        self.m
                    )));
                }
                if self.keysets.insert(alias.clone(), ks).is_some() {
                    return Err(RoleError::Malformed(format!("second key set from {alias}")));
                }
                if self.keysets.len() < self.n.expect("count known") {
                    return Ok(vec![]);
                }
                let mut out = Vec::with_capacity(self.keysets.len());
                let keysets = std::mem::take(&mut self.keysets);
                for (alias, ks) in &keysets {
                    let sel = select_index(ks, &mut self.rng);
                    let blinded = blind(ks, &sel, self.keypair.public(), &mut self.rng)?;
                    self.selections.insert(alias.clone(), sel);
                    let body = keyprotocol::wire::encode_blinded(&blinded);
                    out.push(self.envelope(
                        Party::provider(alias.as_str()),
                        MsgType::BlindedResponse,
                        body,
                    ));
                }
                self.keysets = keysets;
                self.phase = ClientPhase::AwaitingBundles;
                Ok(out)
            }
            (ClientPhase::AwaitingBundles, MsgType::Bundle) => {
                let alias = Self::sender_alias(&env)?;
                if !self.selections.contains_key(&alias) {
                    return Err(RoleError::UnknownAlias(alias.0));
                }
                let bundle = keyprotocol::wire::decode_bundle(&env.payload)
                    .map_err(|e| RoleError::Malformed(e.to_string()))?;
                if self.bundles.insert(alias.clone(), bundle).is_some() {
                    return Err(RoleError::Malformed(format!("second bundle from {alias}")));
                }
                if self.bundles.len() < self.n.expect("count known") {
                    return Ok(vec![]);
                }
                let mut tables = Vec::with_capacity(self.bundles.len());
                for (alias, bundle) in &self.bundles {
                    let plain = open_bundle(bundle, &self.keypair).map_err(|source| {
                        RoleError::DecryptFailure {
                            alias: alias.0.clone(),
                            source,
                        }
                    })?;
                    tables.push(Table::read_csv_subset(&plain[..], &self.schema)?);
                }
                self.result = Some(consolidate(tables, &mut self.rng)?);
                self.phase = ClientPhase::Done;
                Ok(vec![])
            }
            (_, t) => Err(self.out_of_order(t)),
        }
    }

    fn sender_alias(env: &Envelope) -> Result<Alias, RoleError> {
        if env.from.role != Role::Provider {
            return Err(RoleError::Malformed(format!(
                "{} must be relayed under a provider alias",
                env.msg_type
            )));
        }
        Ok(Alias(env.from.token.clone()))
    }
}
