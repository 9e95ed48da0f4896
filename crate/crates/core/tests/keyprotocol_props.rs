use medshare::keyprotocol::{
    blind, count_decryptable, generate_key_set, multi_encrypt, open_bundle, select_index, unwrap,
    wire, Alias, ClientKeypair, KeyError, Selection,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn roundtrip(m: usize, index: usize, payload: &[u8], seed: u64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let ks = generate_key_set(m, Alias("a1b2c3d4e5f60718".into()), &mut rng).unwrap();
    let ks = wire::decode_key_set(&wire::encode_key_set(&ks)).unwrap();
    let kp = ClientKeypair::generate(&mut rng);
    let sel = Selection::new(ks.alias().clone(), index, m).unwrap();
    let blinded = blind(&ks, &sel, kp.public(), &mut rng).unwrap();
    let blinded = wire::decode_blinded(&wire::encode_blinded(&blinded)).unwrap();
    let candidates = unwrap(&ks, &blinded).unwrap();
    assert_eq!(candidates.len(), m);
    assert_eq!(&candidates[index], kp.public());
    let bundle = multi_encrypt(ks.alias().clone(), payload, &candidates, &mut rng).unwrap();
    let bundle = wire::decode_bundle(&wire::encode_bundle(&bundle)).unwrap();
    assert_eq!(count_decryptable(&bundle, &kp), 1);
    assert_eq!(open_bundle(&bundle, &kp).unwrap(), payload);
    assert!(kp.open(&bundle.payloads[index]).is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_payload_roundtrip(
        m in proptest::sample::select(vec![2usize, 4, 8, 16]),
        pick in any::<prop::sample::Index>(),
        payload in proptest::collection::vec(any::<u8>(), 0..4096),
        seed in any::<u64>(),
    ) {
        roundtrip(m, pick.index(m), &payload, seed);
    }
}

#[test]
fn megabyte_payload_roundtrip() {
    let payload: Vec<u8> = (0..1 << 20).map(|i| (i * 7 + 3) as u8).collect();
    for (i, m) in [2, 4, 8, 16].into_iter().enumerate() {
        roundtrip(m, m - 1 - i.min(m - 1), &payload, i as u64);
    }
}

#[test]
fn random_selection_is_roughly_uniform() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let ks = generate_key_set(2, Alias("x".into()), &mut rng).unwrap();
    let zeros = (0..10_000).filter(|_| select_index(&ks, &mut rng).index() == 0).count();
    let freq = zeros as f64 / 10_000.0;
    assert!((0.48..=0.52).contains(&freq), "{freq}");
}

#[test]
fn stranger_opens_nothing() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let ks = generate_key_set(8, Alias("x".into()), &mut rng).unwrap();
    let kp = ClientKeypair::generate(&mut rng);
    let sel = select_index(&ks, &mut rng);
    let candidates = unwrap(&ks, &blind(&ks, &sel, kp.public(), &mut rng).unwrap()).unwrap();
    let bundle = multi_encrypt(ks.alias().clone(), b"rows", &candidates, &mut rng).unwrap();
    let stranger = ClientKeypair::generate(&mut rng);
    assert_eq!(count_decryptable(&bundle, &stranger), 0);
    assert_eq!(open_bundle(&bundle, &stranger), Err(KeyError::NoDecryptableEntry));
}
