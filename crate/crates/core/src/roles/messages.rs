//! JSON payload bodies carried inside envelopes. Key-exchange payloads
//! (key sets, blinded responses, bundles) live in `keyprotocol::wire`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datastore::Query;
use crate::keyprotocol::Alias;

use super::RoleError;

/// Client → mediator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryPayload {
    pub m: usize,
    pub query: Query,
}

/// Mediator → each registered provider: the client's request plus the
/// alias the provider will be known by in this session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadcastPayload {
    pub alias: Alias,
    pub m: usize,
    pub query: Query,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AckPayload {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountPayload {
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbortPayload {
    pub reason: String,
}

pub fn to_bytes<T: Serialize>(body: &T) -> Vec<u8> {
    serde_json::to_vec(body).expect("payload is serializable")
}

pub fn from_bytes<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, RoleError> {
    serde_json::from_slice(bytes).map_err(|e| RoleError::Malformed(e.to_string()))
}
