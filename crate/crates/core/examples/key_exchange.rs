//! One oblivious key exchange, step by step: the provider offers `m` keys,
//! the client secretly picks one, and the provider encrypts to every
//! candidate without learning which one the client can open.

use medshare::keyprotocol::{
    blind, count_decryptable, generate_key_set, multi_encrypt, open_bundle, select_index, unwrap,
    wire, Alias, ClientKeypair,
};
use medshare::seed::rng_for;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut provider_rng = rng_for(7, "provider");
    let mut client_rng = rng_for(7, "client");

    let keyset = generate_key_set(8, Alias("3f9a0c51d2e47b68".into()), &mut provider_rng)?;
    println!("key set: {} bytes on the wire", wire::encode_key_set(&keyset).len());

    let keypair = ClientKeypair::generate(&mut client_rng);
    let selection = select_index(&keyset, &mut client_rng);
    let response = blind(&keyset, &selection, keypair.public(), &mut client_rng)?;
    println!("client picked slot {} (kept private)", selection.index());

    let candidates = unwrap(&keyset, &response)?;
    println!("provider recovered {} candidate public keys", candidates.len());

    let bundle = multi_encrypt(keyset.alias().clone(), b"sno,age\n1,31.7\n", &candidates, &mut provider_rng)?;
    println!(
        "bundle: {} ciphertexts, {} open for the client",
        bundle.payloads.len(),
        count_decryptable(&bundle, &keypair)
    );
    println!("{}", String::from_utf8(open_bundle(&bundle, &keypair)?)?);

    // A different client cannot open anything.
    let stranger = ClientKeypair::generate(&mut client_rng);
    println!("stranger opens {} of them", count_decryptable(&bundle, &stranger));
    Ok(())
}
