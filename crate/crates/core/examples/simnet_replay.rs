//! The simulated network is deterministic: the same seed gives the same
//! transcript byte for byte, and a transcript survives a JSONL round trip.

use medshare::cli::{run_session, ProviderSource, RunConfig};
use medshare::transport::{Direction, Transcript};

fn config(seed: u64) -> RunConfig {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let mut cfg = RunConfig::new(
        seed,
        vec![ProviderSource {
            identity: "hospital-a".into(),
            csv: Some(format!("{fixtures}/hospital_a.csv").into()),
            synthetic: None,
        }],
    );
    cfg.m = 2;
    cfg
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let first = run_session(&config(11))?.transcript.to_jsonl_bytes();
    let second = run_session(&config(11))?.transcript.to_jsonl_bytes();
    let other = run_session(&config(12))?.transcript.to_jsonl_bytes();
    println!("same seed identical: {}", first == second);
    println!("other seed identical: {}", first == other);

    let parsed = Transcript::read_jsonl(&first[..])?;
    println!("round trip identical: {}", parsed.to_jsonl_bytes() == first);
    for e in parsed.entries() {
        let arrow = match e.direction {
            Direction::Inbound => "->",
            Direction::Outbound => "<-",
        };
        println!(
            "{:>9} µs {arrow} {:<16} {} => {}",
            e.timestamp_us, e.envelope.msg_type, e.envelope.from, e.envelope.to
        );
    }
    Ok(())
}
