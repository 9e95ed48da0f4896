use medshare::transport::{decode, encode, read_frame, write_frame, Envelope, MsgType, Party, Role};
use proptest::prelude::*;

fn party() -> impl Strategy<Value = Party> {
    (
        prop_oneof![Just(Role::Client), Just(Role::Mediator), Just(Role::Provider)],
        "[a-zA-Z0-9_:\\-\"\\\\ é]{0,24}",
    )
        .prop_map(|(role, token)| Party::new(role, token))
}

fn envelope() -> impl Strategy<Value = Envelope> {
    (
        "[ -~]{0,32}",
        party(),
        party(),
        proptest::sample::select(MsgType::ALL.to_vec()),
        any::<u64>(),
        proptest::collection::vec(any::<u8>(), 0..512),
    )
        .prop_map(|(session_id, from, to, msg_type, seq, payload)| Envelope {
            session_id,
            from,
            to,
            msg_type,
            seq,
            payload,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn frame_roundtrip(env in envelope()) {
        let frame = encode(&env);
        prop_assert_eq!(u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize, frame.len() - 4);
        prop_assert_eq!(decode(&frame).unwrap(), env.clone());
        // Canonical: re-encoding the decoded envelope is byte-identical.
        prop_assert_eq!(encode(&decode(&frame).unwrap()), frame);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn stream_roundtrip(envs in proptest::collection::vec(envelope(), 0..8)) {
        let mut buf = Vec::new();
        for e in &envs {
            write_frame(&mut buf, e).unwrap();
        }
        let mut cursor = &buf[..];
        let mut back = Vec::new();
        while let Some(e) = read_frame(&mut cursor).unwrap() {
            back.push(e);
        }
        prop_assert_eq!(back, envs);
    }

    #[test]
    fn truncated_frames_are_rejected(env in envelope(), cut in 1usize..64) {
        let frame = encode(&env);
        let cut = cut.min(frame.len());
        prop_assert!(decode(&frame[..frame.len() - cut]).is_err());
    }
}
