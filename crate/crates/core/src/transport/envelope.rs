use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Frames larger than this are rejected before any parsing.
pub const MAX_FRAME_LEN: usize = 64 * 1024 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("frame error: {0}")]
    Frame(String),
    #[error("unknown message type {0:?}")]
    UnknownMessage(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Client,
    Mediator,
    Provider,
}

/// A wire address: a role plus an identity, alias or session token.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Party {
    pub role: Role,
    pub token: String,
}

impl Party {
    pub fn new(role: Role, token: impl Into<String>) -> Self {
        Self {
            role,
            token: token.into(),
        }
    }

    pub fn client(token: impl Into<String>) -> Self {
        Self::new(Role::Client, token)
    }

    pub fn mediator(token: impl Into<String>) -> Self {
        Self::new(Role::Mediator, token)
    }

    pub fn provider(token: impl Into<String>) -> Self {
        Self::new(Role::Provider, token)
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let role = match self.role {
            Role::Client => "client",
            Role::Mediator => "mediator",
            Role::Provider => "provider",
        };
        write!(f, "{role}:{}", self.token)
    }
}

/// The closed set of protocol messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MsgType {
    Query,
    Ack,
    Count,
    KeySet,
    BlindedResponse,
    Bundle,
    Abort,
}

impl MsgType {
    pub const ALL: [MsgType; 7] = [
        MsgType::Query,
        MsgType::Ack,
        MsgType::Count,
        MsgType::KeySet,
        MsgType::BlindedResponse,
        MsgType::Bundle,
        MsgType::Abort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MsgType::Query => "Query",
            MsgType::Ack => "Ack",
            MsgType::Count => "Count",
            MsgType::KeySet => "KeySet",
            MsgType::BlindedResponse => "BlindedResponse",
            MsgType::Bundle => "Bundle",
            MsgType::Abort => "Abort",
        }
    }
}

impl FromStr for MsgType {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MsgType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CodecError::UnknownMessage(s.to_string()))
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One wire message. Field order here is the canonical JSON key order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub session_id: String,
    pub from: Party,
    pub to: Party,
    pub msg_type: MsgType,
    pub seq: u64,
    #[serde(with = "crate::b64")]
    pub payload: Vec<u8>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvelope {
    session_id: String,
    from: Party,
    to: Party,
    msg_type: String,
    seq: u64,
    payload: String,
}

impl Envelope {
    /// Canonical JSON body without the length prefix.
    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("envelope is serializable")
    }

    pub fn from_json(body: &[u8]) -> Result<Envelope, CodecError> {
        let raw: RawEnvelope =
            serde_json::from_slice(body).map_err(|e| CodecError::Schema(e.to_string()))?;
        let msg_type = raw.msg_type.parse()?;
        let payload =
            crate::b64::decode(&raw.payload).map_err(|e| CodecError::Schema(e.to_string()))?;
        Ok(Envelope {
            session_id: raw.session_id,
            from: raw.from,
            to: raw.to,
            msg_type,
            seq: raw.seq,
            payload,
        })
    }
}

/// `u32` big-endian body length followed by the canonical JSON body.
pub fn encode(env: &Envelope) -> Vec<u8> {
    let body = env.to_json();
    assert!(body.len() <= MAX_FRAME_LEN, "envelope exceeds frame limit");
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

/// Inverse of [`encode`]. The input must be exactly one frame.
pub fn decode(frame: &[u8]) -> Result<Envelope, CodecError> {
    if frame.len() < 4 {
        return Err(CodecError::Frame(format!(
            "{} bytes is shorter than the length prefix",
            frame.len()
        )));
    }
    let declared = u32::from_be_bytes(frame[..4].try_into().expect("4 bytes")) as usize;
    if declared > MAX_FRAME_LEN {
        return Err(CodecError::Frame(format!("declared length {declared} over limit")));
    }
    let body = &frame[4..];
    if body.len() != declared {
        return Err(CodecError::Frame(format!(
            "declared length {declared}, body has {} bytes",
            body.len()
        )));
    }
    Envelope::from_json(body)
}

pub fn write_frame<W: Write>(out: &mut W, env: &Envelope) -> Result<(), CodecError> {
    out.write_all(&encode(env))?;
    Ok(())
}

/// Read one frame from a stream. `Ok(None)` on clean end of stream.
pub fn read_frame<R: Read>(input: &mut R) -> Result<Option<Envelope>, CodecError> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let n = input.read(&mut prefix[got..])?;
        if n == 0 {
            return if got == 0 {
                Ok(None)
            } else {
                Err(CodecError::Frame("stream ended inside length prefix".into()))
            };
        }
        got += n;
    }
    let declared = u32::from_be_bytes(prefix) as usize;
    if declared > MAX_FRAME_LEN {
        return Err(CodecError::Frame(format!("declared length {declared} over limit")));
    }
    let mut body = vec![0u8; declared];
    input
        .read_exact(&mut body)
        .map_err(|_| CodecError::Frame("stream ended inside frame body".into()))?;
    Envelope::from_json(&body).map(Some)
}
