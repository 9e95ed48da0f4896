use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha20Rng;

use crate::keyprotocol::Alias;
use crate::transport::{Direction, Envelope, MsgType, Output, Party, Role, SeqCounter, SimTime, Transcript};

use super::messages::{self, AbortPayload, BroadcastPayload, CountPayload, QueryPayload};
use super::{random_token, RoleError, Timeouts};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MediatorTimer {
    AckDeadline(String),
    KeySetDeadline(String),
    BundleDeadline(String),
}

#[derive(Clone, Debug)]
pub enum MediatorEvent {
    Message(Envelope),
    Timer(MediatorTimer),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionPhase {
    CollectingAcks,
    Counted,
    Closed,
    Failed,
}

/// Per-session bookkeeping. `N` is fixed when the ack deadline fires.
#[derive(Clone, Debug)]
pub struct Session {
    pub client: Party,
    pub phase: SessionPhase,
    pub acked: BTreeSet<String>,
    pub n: Option<usize>,
    aliases: BTreeMap<String, Alias>,
    owners: BTreeMap<Alias, String>,
    keysets: BTreeSet<String>,
    blinded: BTreeSet<String>,
    /// Blinded responses waiting for the rest of the batch.
    held: Vec<(String, Vec<u8>)>,
    bundles: BTreeSet<String>,
}

impl Session {
    pub fn alias_of(&self, identity: &str) -> Option<&Alias> {
        self.aliases.get(identity)
    }

    pub fn owner_of(&self, alias: &Alias) -> Option<&str> {
        self.owners.get(alias).map(String::as_str)
    }
}

/// The relay between client and providers. It counts acknowledgements and
/// rewrites sender identities; it never originates protocol content.
#[derive(Clone, Debug)]
pub struct MediatorState {
    me: Party,
    registry: BTreeSet<String>,
    sessions: BTreeMap<String, Session>,
    transcript: Transcript,
    notes: Vec<String>,
    timeouts: Timeouts,
    rng: ChaCha20Rng,
    seq: SeqCounter,
}

impl MediatorState {
    pub fn new(token: impl Into<String>, timeouts: Timeouts, rng: ChaCha20Rng) -> Self {
        Self {
            me: Party::mediator(token),
            registry: BTreeSet::new(),
            sessions: BTreeMap::new(),
            transcript: Transcript::new(),
            notes: Vec::new(),
            timeouts,
            rng,
            seq: SeqCounter::default(),
        }
    }

    pub fn party(&self) -> &Party {
        &self.me
    }

    /// Returns false if the identity was already registered.
    pub fn register(&mut self, identity: impl Into<String>) -> bool {
        self.registry.insert(identity.into())
    }

    pub fn registry(&self) -> &BTreeSet<String> {
        &self.registry
    }

    pub fn session(&self, id: &str) -> Option<&Session> {
        self.sessions.get(id)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// Human-readable notes, e.g. late acknowledgements that were ignored.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    fn log(&mut self, direction: Direction, env: &Envelope, now: SimTime) {
        self.transcript
            .append(direction, env.clone(), now)
            .expect("mediator steps are fed monotone time");
    }

    fn envelope(&mut self, session: &str, from: Party, to: Party, msg_type: MsgType, payload: Vec<u8>) -> Envelope {
        let seq = self.seq.next(&from, &to);
        Envelope {
            session_id: session.to_string(),
            from,
            to,
            msg_type,
            seq,
            payload,
        }
    }

    fn session_mut(&mut self, id: &str) -> Result<&mut Session, RoleError> {
        self.sessions
            .get_mut(id)
            .ok_or_else(|| RoleError::UnknownSession(id.to_string()))
    }

    /// Advance on one event. Every inbound message and every message sent
    /// is appended to the transcript.
    pub fn step(
        &mut self,
        now: SimTime,
        event: MediatorEvent,
    ) -> Result<Vec<Output<MediatorTimer>>, RoleError> {
        let mut outs = match event {
            MediatorEvent::Message(env) => {
                self.log(Direction::Inbound, &env, now);
                self.on_message(env)?
            }
            MediatorEvent::Timer(t) => self.on_timer(t)?,
        };
        for o in &mut outs {
            if let Output::Send(env) = o {
                let env = env.clone();
                self.log(Direction::Outbound, &env, now);
            }
        }
        Ok(outs)
    }

    fn on_message(&mut self, env: Envelope) -> Result<Vec<Output<MediatorTimer>>, RoleError> {
        match env.msg_type {
            MsgType::Query => self.open_session(env),
            MsgType::Ack => {
                self.known_provider(&env.from)?;
                let sid = env.session_id.clone();
                let identity = env.from.token.clone();
                let session = self.session_mut(&sid)?;
                if session.phase != SessionPhase::CollectingAcks {
                    self.notes
                        .push(format!("late ack from {identity} in session {sid} ignored"));
                    return Ok(vec![]);
                }
                session.acked.insert(identity);
                Ok(vec![])
            }
            MsgType::KeySet | MsgType::BlindedResponse | MsgType::Bundle | MsgType::Abort => {
                let starts_bundle_wait = env.msg_type == MsgType::BlindedResponse
                    && self
                        .sessions
                        .get(&env.session_id)
                        .is_some_and(|s| s.blinded.is_empty());
                let sid = env.session_id.clone();
                let is_abort = env.msg_type == MsgType::Abort;
                let relayed = self.relay(env)?;
                let mut outs: Vec<_> = relayed.into_iter().map(Output::Send).collect();
                if starts_bundle_wait {
                    outs.push(Output::Timer {
                        after_us: self.timeouts.bundle_us(),
                        tag: MediatorTimer::BundleDeadline(sid.clone()),
                    });
                }
                let s = self.session_mut(&sid)?;
                if is_abort {
                    s.phase = SessionPhase::Failed;
                } else if s.n.is_some_and(|n| s.bundles.len() == n) {
                    s.phase = SessionPhase::Closed;
                }
                Ok(outs)
            }
            MsgType::Count => Err(RoleError::ProtocolOrder {
                phase: "mediator".into(),
                msg: MsgType::Count,
            }),
        }
    }

    fn known_provider(&self, from: &Party) -> Result<(), RoleError> {
        if from.role != Role::Provider || !self.registry.contains(&from.token) {
            return Err(RoleError::UnknownProvider(from.to_string()));
        }
        Ok(())
    }

    fn open_session(&mut self, env: Envelope) -> Result<Vec<Output<MediatorTimer>>, RoleError> {
        if env.from.role != Role::Client {
            return Err(RoleError::Malformed(format!("query from {}", env.from)));
        }
        if self.sessions.contains_key(&env.session_id) {
            return Err(RoleError::ProtocolOrder {
                phase: "session already open".into(),
                msg: MsgType::Query,
            });
        }
        let request: QueryPayload = messages::from_bytes(&env.payload)?;
        let sid = env.session_id.clone();
        let mut session = Session {
            client: env.from.clone(),
            phase: SessionPhase::CollectingAcks,
            acked: BTreeSet::new(),
            n: None,
            aliases: BTreeMap::new(),
            owners: BTreeMap::new(),
            keysets: BTreeSet::new(),
            blinded: BTreeSet::new(),
            held: Vec::new(),
            bundles: BTreeSet::new(),
        };
        for identity in &self.registry {
            let alias = loop {
                let a = Alias(random_token(&mut self.rng));
                if !session.owners.contains_key(&a) {
                    break a;
                }
            };
            session.aliases.insert(identity.clone(), alias.clone());
            session.owners.insert(alias, identity.clone());
        }

        let from = Party::client(sid.clone());
        let mut outs = Vec::with_capacity(self.registry.len() + 1);
        let targets: Vec<(String, Alias)> = session
            .aliases
            .iter()
            .map(|(i, a)| (i.clone(), a.clone()))
            .collect();
        self.sessions.insert(sid.clone(), session);
        for (identity, alias) in targets {
            let body = messages::to_bytes(&BroadcastPayload {
                alias,
                m: request.m,
                query: request.query.clone(),
            });
            let env = self.envelope(&sid, from.clone(), Party::provider(identity), MsgType::Query, body);
            outs.push(Output::Send(env));
        }
        outs.push(Output::Timer {
            after_us: self.timeouts.ack_us(),
            tag: MediatorTimer::AckDeadline(sid),
        });
        Ok(outs)
    }

    fn on_timer(&mut self, timer: MediatorTimer) -> Result<Vec<Output<MediatorTimer>>, RoleError> {
        match timer {
            MediatorTimer::AckDeadline(sid) => {
                let session = self.session_mut(&sid)?;
                if session.phase != SessionPhase::CollectingAcks {
                    return Ok(vec![]);
                }
                let n = session.acked.len();
                session.n = Some(n);
                session.phase = if n == 0 {
                    SessionPhase::Closed
                } else {
                    SessionPhase::Counted
                };
                let client = session.client.clone();
                let acked: Vec<String> = session.acked.iter().cloned().collect();
                let body = messages::to_bytes(&CountPayload { n });
                let me = self.me.clone();
                let mut outs = vec![Output::Send(self.envelope(&sid, me.clone(), client, MsgType::Count, body.clone()))];
                for identity in acked {
                    outs.push(Output::Send(self.envelope(
                        &sid,
                        me.clone(),
                        Party::provider(identity),
                        MsgType::Count,
                        body.clone(),
                    )));
                }
                if n > 0 {
                    outs.push(Output::Timer {
                        after_us: self.timeouts.keyset_us(),
                        tag: MediatorTimer::KeySetDeadline(sid),
                    });
                }
                Ok(outs)
            }
            MediatorTimer::KeySetDeadline(sid) => {
                let s = self.session_mut(&sid)?;
                let (got, n) = (s.keysets.len(), s.n.unwrap_or(0));
                if s.phase != SessionPhase::Counted || got >= n {
                    return Ok(vec![]);
                }
                Ok(self.abort(&sid, format!("partial provider failure: {got} of {n} key sets arrived")))
            }
            MediatorTimer::BundleDeadline(sid) => {
                let s = self.session_mut(&sid)?;
                let (got, n) = (s.bundles.len(), s.n.unwrap_or(0));
                if s.phase != SessionPhase::Counted || got >= n {
                    return Ok(vec![]);
                }
                Ok(self.abort(&sid, format!("partial provider failure: {got} of {n} bundles arrived")))
            }
        }
    }

    fn abort(&mut self, sid: &str, reason: String) -> Vec<Output<MediatorTimer>> {
        let s = self.sessions.get_mut(sid).expect("caller checked");
        s.phase = SessionPhase::Failed;
        let client = s.client.clone();
        let acked: Vec<String> = s.acked.iter().cloned().collect();
        let body = messages::to_bytes(&AbortPayload { reason });
        let me = self.me.clone();
        let mut outs = vec![Output::Send(self.envelope(sid, me.clone(), client, MsgType::Abort, body.clone()))];
        for identity in acked {
            outs.push(Output::Send(self.envelope(
                sid,
                me.clone(),
                Party::provider(identity),
                MsgType::Abort,
                body.clone(),
            )));
        }
        outs
    }

    /// Forward a key set, blinded response, bundle or abort with the sender
    /// identity replaced. Provider-bound messages carry only the session
    /// id; client-bound messages carry only the provider's alias. Payload
    /// bytes pass through untouched.
    pub fn relay(&mut self, inbound: Envelope) -> Result<Vec<Envelope>, RoleError> {
        let sid = inbound.session_id.clone();
        let session = self
            .sessions
            .get(&sid)
            .ok_or_else(|| RoleError::UnknownSession(sid.clone()))?;
        if matches!(session.phase, SessionPhase::Closed | SessionPhase::Failed) {
            return Err(RoleError::ProtocolOrder {
                phase: format!("{:?}", session.phase),
                msg: inbound.msg_type,
            });
        }

        match inbound.from.role {
            Role::Provider => {
                let identity = inbound.from.token.clone();
                if !session.acked.contains(&identity) {
                    return Err(RoleError::UnknownProvider(inbound.from.to_string()));
                }
                if inbound.msg_type != MsgType::Abort && session.phase != SessionPhase::Counted {
                    return Err(RoleError::ProtocolOrder {
                        phase: format!("{:?}", session.phase),
                        msg: inbound.msg_type,
                    });
                }
                let alias = session.aliases[&identity].clone();
                let client = session.client.clone();
                let s = self.sessions.get_mut(&sid).expect("checked");
                let fresh = match inbound.msg_type {
                    MsgType::KeySet => s.keysets.insert(identity.clone()),
                    MsgType::Bundle => s.bundles.insert(identity.clone()),
                    MsgType::Abort => true,
                    other => {
                        return Err(RoleError::ProtocolOrder {
                            phase: "provider relay".into(),
                            msg: other,
                        })
                    }
                };
                if !fresh {
                    return Err(RoleError::Malformed(format!(
                        "duplicate {} from {identity}",
                        inbound.msg_type
                    )));
                }
                let env = self.envelope(
                    &sid,
                    Party::provider(alias.0),
                    client,
                    inbound.msg_type,
                    inbound.payload,
                );
                Ok(vec![env])
            }
            Role::Client => {
                if inbound.from != session.client {
                    return Err(RoleError::Malformed(format!("{} is not this session's client", inbound.from)));
                }
                let from = Party::client(sid.clone());
                match inbound.msg_type {
                    MsgType::BlindedResponse => {
                        let alias = Alias(inbound.to.token.clone());
                        let identity = session
                            .owner_of(&alias)
                            .filter(|i| session.acked.contains(*i))
                            .ok_or_else(|| RoleError::UnknownAlias(alias.0.clone()))?
                            .to_string();
                        let s = self.sessions.get_mut(&sid).expect("checked");
                        if !s.blinded.insert(identity.clone()) {
                            return Err(RoleError::Malformed(format!("duplicate response for {alias}")));
                        }
                        // Responses go out together once all N are in, so
                        // their timing says nothing about which alias is whom.
                        s.held.push((identity, inbound.payload));
                        if s.held.len() < s.n.unwrap_or(0) {
                            return Ok(vec![]);
                        }
                        let held = std::mem::take(&mut s.held);
                        Ok(held
                            .into_iter()
                            .map(|(identity, payload)| {
                                self.envelope(&sid, from.clone(), Party::provider(identity), MsgType::BlindedResponse, payload)
                            })
                            .collect())
                    }
                    MsgType::Abort => {
                        let acked: Vec<String> = session.acked.iter().cloned().collect();
                        Ok(acked
                            .into_iter()
                            .map(|i| {
                                self.envelope(&sid, from.clone(), Party::provider(i), MsgType::Abort, inbound.payload.clone())
                            })
                            .collect())
                    }
                    other => Err(RoleError::ProtocolOrder {
                        phase: "client relay".into(),
                        msg: other,
                    }),
                }
            }
            Role::Mediator => Err(RoleError::Malformed("mediator cannot relay to itself".into())),
        }
    }
}
