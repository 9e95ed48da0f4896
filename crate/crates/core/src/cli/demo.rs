use std::fmt::Write;
use std::path::Path;

use crate::datastore::{gen_synthetic, Schema, SyntheticSpec, Table};
use crate::keyprotocol::{
    blind, count_decryptable, generate_key_set, multi_encrypt, open_bundle, select_index, unwrap,
    Alias, ClientKeypair, KeyError,
};
use crate::seed::rng_for;

use super::{write_file, CliError};

/// Hospital-shaped synthetic records.
pub fn gen_data(n: usize, seed: u64) -> Result<Table, CliError> {
    Ok(gen_synthetic(n, seed, &Schema::hospital(), &SyntheticSpec::hospital())?)
}

pub fn gen_data_to(n: usize, seed: u64, out: &Path) -> Result<Table, CliError> {
    let table = gen_data(n, seed)?;
    write_file(out, &table.to_csv_bytes())?;
    Ok(table)
}

fn short(bytes: &[u8]) -> String {
    bytes[..6].iter().map(|b| format!("{b:02x}")).collect::<String>() + "…"
}

/// Heading that opens the part of the walkthrough the provider sees.
pub const PROVIDER_VIEW: &str = "-- what the provider sees";

/// A step-by-step walkthrough of one key exchange with `m` keys. The
/// section after [`PROVIDER_VIEW`] only shows what the provider learns, so
/// it never mentions the client's choice.
pub fn keys_demo(m: usize, seed: u64) -> Result<String, KeyError> {
    let mut prov_rng = rng_for(seed, "demo/provider");
    let mut client_rng = rng_for(seed, "demo/client");
    let mut s = String::new();

    let ks = generate_key_set(m, Alias("demo".into()), &mut prov_rng)?;
    writeln!(s, "-- provider publishes {m} symmetric keys under alias {}", ks.alias()).unwrap();
    for (i, k) in ks.keys().iter().enumerate() {
        writeln!(s, "  key[{i}] {}", short(k.as_bytes())).unwrap();
    }

    let kp = ClientKeypair::generate(&mut client_rng);
    let sel = select_index(&ks, &mut client_rng);
    let blinded = blind(&ks, &sel, kp.public(), &mut client_rng)?;
    writeln!(s, "\n-- client, privately").unwrap();
    writeln!(s, "  public key {}", short(kp.public().as_bytes())).unwrap();
    writeln!(s, "  chosen slot {} of {m}; the other slots carry fresh decoy keys", sel.index()).unwrap();

    let candidates = unwrap(&ks, &blinded)?;
    writeln!(s, "\n{PROVIDER_VIEW}").unwrap();
    writeln!(s, "  {} slots, each opens to a well-formed public key:", blinded.slots.len()).unwrap();
    for (i, pk) in candidates.iter().enumerate() {
        writeln!(s, "  candidate[{i}] {}", short(pk.as_bytes())).unwrap();
    }
    writeln!(s, "  the payload is encrypted to every candidate").unwrap();

    let message = b"perturbed rows would go here";
    let bundle = multi_encrypt(ks.alias().clone(), message, &candidates, &mut prov_rng)?;
    let opened = open_bundle(&bundle, &kp)?;
    writeln!(s, "\n-- client opens the bundle").unwrap();
    writeln!(
        s,
        "  {} of {} ciphertexts decrypt: {:?}",
        count_decryptable(&bundle, &kp),
        bundle.payloads.len(),
        String::from_utf8_lossy(&opened)
    )
    .unwrap();
    Ok(s)
}
