use alpir::bits::BitString;
use alpir::netsim::wire::{Frame, Hello, WireError, TAG_ERROR};
use alpir::netsim::{Dealer, ErrorCode};
use alpir::scheme::{plan_partition, Answer, MessageStore, QueryVector};
use alpir::{stream_rng, SystemParams};
use proptest::prelude::*;

fn bits() -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..80).prop_map(BitString::from_bits)
}

fn frame() -> impl Strategy<Value = Frame> {
    prop_oneof![
        (any::<u8>(), any::<[u32; 5]>()).prop_map(|(version, [a, b, c, d, e])| Frame::Hello(Hello {
            version,
            db_index: a,
            n_databases: b,
            n_messages: c,
            message_bits: d,
            key_bits: e,
        })),
        (any::<u64>(), prop::collection::vec(any::<u32>(), 0..40)).prop_map(|(session_id, v)| Frame::Query {
            session_id,
            query: QueryVector(v.into_iter().map(|x| x as usize).collect()),
        }),
        (any::<u64>(), bits(), bits()).prop_map(|(session_id, masked, open)| Frame::Answer {
            session_id,
            answer: Answer { masked, open },
        }),
        (any::<u8>(), ".{0,40}").prop_map(|(c, m)| Frame::error(ErrorCode(c), m)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn encode_decode_identity(f in frame()) {
        let bytes = f.encode();
        prop_assert_eq!(u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize, bytes.len() - 4);
        prop_assert_eq!(Frame::decode_exact(&bytes).unwrap(), f.clone());
        let mut two = bytes.clone();
        two.extend_from_slice(&bytes);
        let (first, used) = Frame::decode(&two).unwrap();
        prop_assert_eq!((first, used), (f, bytes.len()));
    }

    #[test]
    fn fuzzed_bytes_never_crash_the_server(raw in prop::collection::vec(any::<u8>(), 0..64), splice in any::<bool>()) {
        let params = SystemParams::new(2, 2, 3, 1.5f64.ln(), 4.0 / 15.0).unwrap();
        let layout = plan_partition(&params).unwrap();
        let store = MessageStore::random(&layout, &mut stream_rng(1, 1));
        let server = Dealer::new(store, layout).provision().remove(0);
        let mut bytes = raw;
        if splice && bytes.len() >= 5 {
            // keep a consistent header so the payload parser gets exercised
            let len = (bytes.len() - 4) as u32;
            bytes[..4].copy_from_slice(&len.to_be_bytes());
            bytes[4] = 0x01 + bytes[4] % 5;
        }
        let reply = server.handle(&bytes);
        match Frame::decode_exact(&bytes) {
            Ok(Frame::Hello(_)) => prop_assert_eq!(reply.tag(), alpir::netsim::wire::TAG_HELLO),
            Ok(Frame::Query { query, .. }) if query.validate(2, 2).is_ok() => {
                prop_assert_eq!(reply.tag(), alpir::netsim::wire::TAG_ANSWER)
            }
            _ => prop_assert_eq!(reply.tag(), TAG_ERROR),
        }
    }
}

#[test]
fn decode_rejects_every_strict_prefix() {
    let f = Frame::Answer {
        session_id: 9,
        answer: Answer {
            masked: BitString::from_bit_str("1"),
            open: BitString::from_bit_str("10"),
        },
    };
    let bytes = f.encode();
    for cut in 0..bytes.len() {
        assert!(matches!(
            Frame::decode(&bytes[..cut]),
            Err(WireError::Incomplete { .. })
        ));
    }
}
