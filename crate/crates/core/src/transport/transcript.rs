use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::envelope::{Envelope, Party};

/// Direction relative to the hub (the mediator) that owns the transcript.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Inbound,
    Outbound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub direction: Direction,
    pub timestamp_us: u64,
    pub envelope: Envelope,
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("timestamp {at} precedes last entry at {last}")]
    TimeWentBackwards { last: u64, at: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Append-only log of hub traffic with non-decreasing timestamps.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(
        &mut self,
        direction: Direction,
        envelope: Envelope,
        timestamp_us: u64,
    ) -> Result<(), TranscriptError> {
        if let Some(last) = self.entries.last() {
            if timestamp_us < last.timestamp_us {
                return Err(TranscriptError::TimeWentBackwards {
                    last: last.timestamp_us,
                    at: timestamp_us,
                });
            }
        }
        self.entries.push(TranscriptEntry {
            direction,
            timestamp_us,
            envelope,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), TranscriptError> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Transcript, TranscriptError> {
        let mut t = Transcript::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: TranscriptEntry =
                serde_json::from_str(&line).map_err(|err| TranscriptError::Parse {
                    line: i + 1,
                    message: err.to_string(),
                })?;
            t.append(e.direction, e.envelope, e.timestamp_us)
                .map_err(|err| TranscriptError::Parse {
                    line: i + 1,
                    message: err.to_string(),
                })?;
        }
        Ok(t)
    }

    /// Build from raw entries, e.g. a mutated copy. Timestamps are checked.
    pub fn from_entries(entries: Vec<TranscriptEntry>) -> Result<Transcript, TranscriptError> {
        let mut t = Transcript::new();
        for e in entries {
            t.append(e.direction, e.envelope, e.timestamp_us)?;
        }
        Ok(t)
    }
}

/// Per directed `(from, to)` pair sequence numbers, starting at 0.
#[derive(Clone, Debug, Default)]
pub struct SeqCounter {
    next: BTreeMap<(Party, Party), u64>,
}

impl SeqCounter {
    pub fn next(&mut self, from: &Party, to: &Party) -> u64 {
        let slot = self.next.entry((from.clone(), to.clone())).or_insert(0);
        let seq = *slot;
        *slot += 1;
        seq
    }
}
