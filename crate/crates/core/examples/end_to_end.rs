//! A full session in the simulated network: two fixture hospitals and one
//! synthetic clinic answer a query through the mediator.
//!
//! `cargo run --example end_to_end -- [seed]`

use medshare::cli::{run_session, ProviderSource, RunConfig, SyntheticSource};
use medshare::datastore::Query;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let mut cfg = RunConfig::new(
        seed,
        vec![
            ProviderSource {
                identity: "hospital-a".into(),
                csv: Some(format!("{fixtures}/hospital_a.csv").into()),
                synthetic: None,
            },
            ProviderSource {
                identity: "hospital-b".into(),
                csv: Some(format!("{fixtures}/hospital_b.csv").into()),
                synthetic: None,
            },
            ProviderSource {
                identity: "clinic-c".into(),
                csv: None,
                synthetic: Some(SyntheticSource { n: 40, seed: 3, spec: None }),
            },
        ],
    );
    cfg.query = Query::range("age", 30.0, 60.0);

    let run = run_session(&cfg)?;
    let result = run.outcome()?;
    println!("N = {}, {} rows after consolidation", run.client.n().unwrap_or(0), result.len());
    println!("aliases seen by the client: {:?}", run.client.bundles().keys().collect::<Vec<_>>());
    println!("mediator handled {} envelopes in {} simulated µs", run.transcript.len(), run.end_time_us);
    print!("{}", String::from_utf8(result.to_csv_bytes())?.lines().take(6).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
