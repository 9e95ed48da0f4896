//! Client, mediator and provider as message-driven state machines.
//!
//! One session runs as:
//!
//! 1. client → mediator: `Query` (with the key-set size `m`)
//! 2. mediator → every registered provider: `Query`, tagged with a fresh alias
//! 3. matching providers → mediator: `Ack`; others stay silent
//! 4. at the ack deadline, mediator → client and acked providers: `Count(N)`
//! 5. providers → client: `KeySet` of `m` keys, relayed under the alias
//! 6. client → providers: one `BlindedResponse` per key set, relayed
//! 7. providers perturb their matched rows and reply with a `Bundle`
//! 8. client opens each bundle and consolidates the rows
//!
//! Each state owns its seeded random source, so a step is a pure function
//! of the state and the event.

mod client;
mod mediator;
pub mod messages;
mod provider;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::datastore::{DataError, Table};
use crate::keyprotocol::KeyError;
use crate::perturb::PerturbError;
use crate::transport::{Envelope, Input, MsgType, Node, Output, SimTime};

pub use client::{ClientEvent, ClientPhase, ClientState};
pub use mediator::{MediatorEvent, MediatorState, MediatorTimer, Session, SessionPhase};
pub use provider::{ProviderPhase, ProviderState};

#[derive(Debug, thiserror::Error)]
pub enum RoleError {
    #[error("{msg} not expected in phase {phase}")]
    ProtocolOrder { phase: String, msg: MsgType },
    #[error("unknown provider {0}")]
    UnknownProvider(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown alias {0}")]
    UnknownAlias(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("no provider holds matching data")]
    NoProviders,
    #[error("session aborted: {0}")]
    PartialProviderFailure(String),
    #[error("bundle from {alias} could not be opened: {source}")]
    DecryptFailure { alias: String, source: KeyError },
    #[error("result tables disagree on columns: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
}

/// Simulated-time limits enforced by the mediator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timeouts {
    pub ack_deadline_ms: u64,
    pub keyset_timeout_ms: u64,
    pub bundle_timeout_ms: u64,
}

impl Default for Timeouts {
    fn default() -> Self {
        Self {
            ack_deadline_ms: 2_000,
            keyset_timeout_ms: 5_000,
            bundle_timeout_ms: 10_000,
        }
    }
}

impl Timeouts {
    pub(crate) fn ack_us(&self) -> u64 {
        self.ack_deadline_ms * 1_000
    }

    pub(crate) fn keyset_us(&self) -> u64 {
        self.keyset_timeout_ms * 1_000
    }

    pub(crate) fn bundle_us(&self) -> u64 {
        self.bundle_timeout_ms * 1_000
    }
}

/// 16 lowercase hex characters.
pub(crate) fn random_token<R: RngCore + ?Sized>(rng: &mut R) -> String {
    let mut b = [0u8; 8];
    rng.fill_bytes(&mut b);
    b.iter().map(|x| format!("{x:02x}")).collect()
}

/// Union of the providers' decrypted tables, rows shuffled so that no
/// ordering hints at where a row came from.
pub fn consolidate<R: RngCore + ?Sized>(tables: Vec<Table>, rng: &mut R) -> Result<Table, RoleError> {
    let mut iter = tables.into_iter();
    let Some(first) = iter.next() else {
        return Ok(Table::empty(crate::datastore::Schema::new(vec![])?));
    };
    let schema = first.schema().clone();
    let mut rows = first.into_rows();
    for t in iter {
        if t.schema() != &schema {
            return Err(RoleError::SchemaMismatch(format!(
                "{:?} vs {:?}",
                schema.names().collect::<Vec<_>>(),
                t.schema().names().collect::<Vec<_>>()
            )));
        }
        rows.extend(t.into_rows());
    }
    rows.shuffle(rng);
    Ok(Table::new(schema, rows)?)
}

/// Client step: `(state, event) → (state′, messages)`.
pub fn step_client(
    state: &ClientState,
    event: ClientEvent,
) -> (ClientState, Result<Vec<Envelope>, RoleError>) {
    let mut next = state.clone();
    let out = next.step(event);
    (next, out)
}

/// Mediator step at simulated time `now`.
pub fn step_mediator(
    state: &MediatorState,
    now: SimTime,
    event: MediatorEvent,
) -> (MediatorState, Result<Vec<Output<MediatorTimer>>, RoleError>) {
    let mut next = state.clone();
    let out = next.step(now, event);
    (next, out)
}

/// Provider step on one delivered message.
pub fn step_provider(
    state: &ProviderState,
    env: Envelope,
) -> (ProviderState, Result<Vec<Envelope>, RoleError>) {
    let mut next = state.clone();
    let out = next.step(env);
    (next, out)
}

/// Any of the three roles, wrapped for the simulator. Step errors are kept
/// in `errors` rather than aborting the run.
#[derive(Debug)]
pub struct Participant {
    pub role: ParticipantRole,
    pub errors: Vec<RoleError>,
}

#[derive(Debug)]
pub enum ParticipantRole {
    /// The client plus the query it issues on `Start`.
    Client(ClientState, crate::datastore::Query),
    Mediator(MediatorState),
    Provider(ProviderState),
}

impl Participant {
    pub fn client(state: ClientState, query: crate::datastore::Query) -> Self {
        Self {
            role: ParticipantRole::Client(state, query),
            errors: Vec::new(),
        }
    }

    pub fn mediator(state: MediatorState) -> Self {
        Self {
            role: ParticipantRole::Mediator(state),
            errors: Vec::new(),
        }
    }

    pub fn provider(state: ProviderState) -> Self {
        Self {
            role: ParticipantRole::Provider(state),
            errors: Vec::new(),
        }
    }

    pub fn as_client(&self) -> Option<&ClientState> {
        match &self.role {
            ParticipantRole::Client(c, _) => Some(c),
            _ => None,
        }
    }

    pub fn as_mediator(&self) -> Option<&MediatorState> {
        match &self.role {
            ParticipantRole::Mediator(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_provider(&self) -> Option<&ProviderState> {
        match &self.role {
            ParticipantRole::Provider(p) => Some(p),
            _ => None,
        }
    }
}

impl Node for Participant {
    type Timer = MediatorTimer;

    fn handle(&mut self, now: SimTime, input: Input<MediatorTimer>) -> Vec<Output<MediatorTimer>> {
        let result = match (&mut self.role, input) {
            (ParticipantRole::Client(c, q), Input::Start) => c.step(ClientEvent::Start(q.clone())).map(sends),
            (ParticipantRole::Client(c, _), Input::Deliver(env)) => c.step(ClientEvent::Message(env)).map(sends),
            (ParticipantRole::Mediator(m), Input::Deliver(env)) => m.step(now, MediatorEvent::Message(env)),
            (ParticipantRole::Mediator(m), Input::Timer(t)) => m.step(now, MediatorEvent::Timer(t)),
            (ParticipantRole::Provider(p), Input::Deliver(env)) => p.step(env).map(sends),
            _ => Ok(vec![]),
        };
        result.unwrap_or_else(|e| {
            self.errors.push(e);
            vec![]
        })
    }
}

fn sends(envs: Vec<Envelope>) -> Vec<Output<MediatorTimer>> {
    envs.into_iter().map(Output::Send).collect()
}
