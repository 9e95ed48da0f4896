//! Deterministic in-memory star network.
//!
//! Every non-hub party talks only to the hub; the hub addresses parties by
//! the envelope's `to` field. Delivery is lossless and FIFO per directed
//! node pair. Cross-pair interleaving comes from seeded per-message latency,
//! so a run is a pure function of the parties, the initial inputs and the
//! seed. The hub's inbound and outbound traffic is recorded as the
//! transcript.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::envelope::{Envelope, Party};
use super::transcript::{Direction, Transcript};

/// Simulated time in microseconds.
pub type SimTime = u64;

#[derive(Clone, Debug, PartialEq)]
pub enum Input<T> {
    /// Kick-off event; what it means is up to the party.
    Start,
    Deliver(Envelope),
    Timer(T),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Output<T> {
    Send(Envelope),
    /// Fire `Input::Timer(tag)` at this party after `after_us`.
    Timer { after_us: u64, tag: T },
}

/// A party driven by the simulator.
pub trait Node {
    type Timer: Clone + Debug;

    fn handle(&mut self, now: SimTime, input: Input<Self::Timer>) -> Vec<Output<Self::Timer>>;
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub step_cap: usize,
    pub base_latency_us: u64,
    pub jitter_us: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            step_cap: 100_000,
            base_latency_us: 1_000,
            jitter_us: 4_000,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SimError {
    #[error("step cap {0} reached with events still pending")]
    StepCapExceeded(usize),
    #[error("no party at {0}")]
    UnknownDestination(String),
    #[error("sequence number {seq} from {from} to {to} is not increasing")]
    SeqViolation { from: String, to: String, seq: u64 },
}

pub struct SimOutcome<N> {
    pub transcript: Transcript,
    pub nodes: BTreeMap<Party, N>,
    pub end_time: SimTime,
    pub steps: usize,
}

enum Event<T> {
    Deliver { to: Party, env: Envelope },
    Timer { at: Party, tag: T },
}

struct Sim<N: Node> {
    cfg: SimConfig,
    hub: Party,
    nodes: BTreeMap<Party, N>,
    rng: ChaCha20Rng,
    queue: BinaryHeap<Reverse<(SimTime, u64)>>,
    pending: BTreeMap<u64, Event<N::Timer>>,
    order: u64,
    pair_clock: BTreeMap<(Party, Party), SimTime>,
    last_seq: BTreeMap<(Party, Party), u64>,
    transcript: Transcript,
}

impl<N: Node> Sim<N> {
    fn push(&mut self, at: SimTime, ev: Event<N::Timer>) {
        let k = self.order;
        self.order += 1;
        self.queue.push(Reverse((at, k)));
        self.pending.insert(k, ev);
    }

    fn emit(&mut self, now: SimTime, sender: &Party, outs: Vec<Output<N::Timer>>) -> Result<(), SimError> {
        for out in outs {
            match out {
                Output::Timer { after_us, tag } => {
                    self.push(now + after_us, Event::Timer { at: sender.clone(), tag })
                }
                Output::Send(env) => {
                    let pair = (env.from.clone(), env.to.clone());
                    if let Some(&prev) = self.last_seq.get(&pair) {
                        if env.seq <= prev {
                            return Err(SimError::SeqViolation {
                                from: env.from.to_string(),
                                to: env.to.to_string(),
                                seq: env.seq,
                            });
                        }
                    }
                    self.last_seq.insert(pair, env.seq);

                    let dest = if *sender == self.hub {
                        env.to.clone()
                    } else {
                        self.hub.clone()
                    };
                    if !self.nodes.contains_key(&dest) {
                        return Err(SimError::UnknownDestination(dest.to_string()));
                    }
                    if *sender == self.hub {
                        self.transcript
                            .append(Direction::Outbound, env.clone(), now)
                            .expect("simulated clock is monotone");
                    }
                    let latency =
                        self.cfg.base_latency_us + self.rng.gen_range(0..=self.cfg.jitter_us);
                    let clock = self
                        .pair_clock
                        .entry((sender.clone(), dest.clone()))
                        .or_insert(0);
                    let at = (now + latency).max(*clock);
                    *clock = at;
                    self.push(at, Event::Deliver { to: dest, env });
                }
            }
        }
        Ok(())
    }
}

/// Run until no events remain. Initial inputs are handled at time 0 in
/// the given order.
pub fn simnet_run<N: Node>(
    nodes: BTreeMap<Party, N>,
    hub: Party,
    initial: Vec<(Party, Input<N::Timer>)>,
    cfg: SimConfig,
) -> Result<SimOutcome<N>, SimError> {
    if !nodes.contains_key(&hub) {
        return Err(SimError::UnknownDestination(hub.to_string()));
    }
    let mut sim = Sim {
        rng: ChaCha20Rng::seed_from_u64(cfg.seed),
        cfg,
        hub,
        nodes,
        queue: BinaryHeap::new(),
        pending: BTreeMap::new(),
        order: 0,
        pair_clock: BTreeMap::new(),
        last_seq: BTreeMap::new(),
        transcript: Transcript::new(),
    };

    let mut steps = 0usize;
    let mut now: SimTime = 0;
    let mut initial = initial.into_iter();

    loop {
        let (party, input) = if let Some((party, input)) = initial.next() {
            (party, input)
        } else if let Some(Reverse((at, k))) = sim.queue.pop() {
            now = at;
            match sim.pending.remove(&k).expect("queued event") {
                Event::Deliver { to, env } => {
                    if to == sim.hub {
                        sim.transcript
                            .append(Direction::Inbound, env.clone(), now)
                            .expect("simulated clock is monotone");
                    }
                    (to, Input::Deliver(env))
                }
                Event::Timer { at, tag } => (at, Input::Timer(tag)),
            }
        } else {
            break;
        };

        if steps >= sim.cfg.step_cap {
            return Err(SimError::StepCapExceeded(sim.cfg.step_cap));
        }
        steps += 1;

        let node = sim
            .nodes
            .get_mut(&party)
            .ok_or_else(|| SimError::UnknownDestination(party.to_string()))?;
        let outs = node.handle(now, input);
        sim.emit(now, &party, outs)?;
    }

    Ok(SimOutcome {
        transcript: sim.transcript,
        nodes: sim.nodes,
        end_time: now,
        steps,
    })
}
