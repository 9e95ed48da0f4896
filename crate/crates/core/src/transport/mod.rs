//! Wire envelopes, the transcript of hub traffic, and the simulated network.

mod envelope;
mod simnet;
mod transcript;

pub use envelope::{
    decode, encode, read_frame, write_frame, CodecError, Envelope, MsgType, Party, Role,
    MAX_FRAME_LEN,
};
pub use simnet::{simnet_run, Input, Node, Output, SimConfig, SimError, SimOutcome, SimTime};
pub use transcript::{Direction, SeqCounter, Transcript, TranscriptEntry, TranscriptError};
