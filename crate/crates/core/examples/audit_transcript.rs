//! Audit a mediator transcript, then tamper with it and watch the checks
//! fail.

use medshare::cli::{audit, run_session, ProviderSource, RunConfig};
use medshare::transport::{Direction, MsgType, Role, Transcript};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let cfg = RunConfig::new(
        5,
        ["a", "b"]
            .iter()
            .map(|x| ProviderSource {
                identity: format!("hospital-{x}"),
                csv: Some(format!("{fixtures}/hospital_{x}.csv").into()),
                synthetic: None,
            })
            .collect(),
    );
    let run = run_session(&cfg)?;
    let sources: Vec<_> = run.sources.values().collect();
    let clean = audit(&run.transcript, &sources);
    println!("honest run: pass = {}", clean.pass);

    // A provider that "encrypts" by sending its rows in the clear.
    let mut entries = run.transcript.entries().to_vec();
    let bundle = entries.iter_mut().find(|e| e.envelope.msg_type == MsgType::Bundle).unwrap();
    bundle.envelope.payload = run.sources["hospital-a"].to_csv_bytes();
    let leaked = audit(&Transcript::from_entries(entries)?, &sources);
    println!("plaintext bundle: opacity pass = {}", leaked.payload_opacity.pass);
    for f in leaked.payload_opacity.findings.iter().take(3) {
        println!("  {f}");
    }

    // A mediator that tells the client who answered.
    let mut entries = run.transcript.entries().to_vec();
    let relay = entries
        .iter_mut()
        .find(|e| e.direction == Direction::Outbound && e.envelope.msg_type == MsgType::KeySet && e.envelope.to.role == Role::Client)
        .unwrap();
    relay.envelope.from.token = "hospital-b".into();
    let named = audit(&Transcript::from_entries(entries)?, &sources);
    println!("named provider: anonymity pass = {}", named.source_anonymity.pass);
    Ok(())
}
