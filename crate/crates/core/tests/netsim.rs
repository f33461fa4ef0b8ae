use std::sync::{Arc, Mutex};

use alpir::bits::BitString;
use alpir::netsim::{
    launch, memory_pair, run_trials, spawn_server, Client, ClientConfig, Dealer, ErrorCode, Frame, NetError, Transport,
    TransportError, TransportKind, TrialConfig,
};
use alpir::scheme::{plan_partition, MessageStore, PathChoice, PathClass, QueryVector};
use alpir::{stream_rng, SystemParams};

fn example() -> SystemParams {
    SystemParams::new(2, 2, 3, 1.5f64.ln(), 4.0 / 15.0).unwrap()
}

fn example_client(relabel: bool) -> (Client, MessageStore) {
    let params = example();
    let layout = plan_partition(&params).unwrap();
    let store = MessageStore::new(
        vec![BitString::from_bit_str("101"), BitString::from_bit_str("011")],
        BitString::from_bit_str("1"),
        &layout,
    )
    .unwrap();
    let (transports, _) = launch(store.clone(), layout, TransportKind::Memory).unwrap();
    let cfg = ClientConfig {
        params,
        layout,
        relabel_databases: relabel,
    };
    (Client::connect(cfg, transports).unwrap(), store)
}

#[test]
fn low_and_high_cost_sessions() {
    let (mut client, store) = example_client(true);
    let mut rng = stream_rng(1, 0);
    for base in [vec![0, 0], vec![0, 1]] {
        let (w, rec) = client
            .retrieve_path(&PathChoice::new(base, 1, 2).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(rec.path_class, PathClass::LowCost);
        assert_eq!(rec.bits_downloaded, 4);
        assert_eq!(rec.leaked_bits, 0);
        assert!(rec.decode_ok);
        assert_eq!(Some(&w), store.message(1));
    }
    for base in [vec![1, 0], vec![1, 1]] {
        let (w, rec) = client
            .retrieve_path(&PathChoice::new(base, 1, 2).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(rec.path_class, PathClass::HighCost);
        assert_eq!(rec.bits_downloaded, 6);
        assert_eq!(rec.leaked_bits, 2);
        assert_eq!(Some(&w), store.message(1));
    }
}

#[test]
fn out_of_range_desired_sends_nothing() {
    let params = example();
    let layout = plan_partition(&params).unwrap();
    let sent = Arc::new(Mutex::new(0usize));
    let (a, b) = memory_pair();
    let (c, d) = memory_pair();
    let store = MessageStore::random(&layout, &mut stream_rng(0, 0));
    let mut states = Dealer::new(store, layout).provision().into_iter();
    spawn_server(states.next().unwrap(), b);
    spawn_server(states.next().unwrap(), d);
    let transports: Vec<Box<dyn Transport>> = vec![
        Box::new(Counting {
            inner: a,
            sent: sent.clone(),
        }),
        Box::new(Counting {
            inner: c,
            sent: sent.clone(),
        }),
    ];
    let cfg = ClientConfig {
        params,
        layout,
        relabel_databases: false,
    };
    let mut client = Client::connect(cfg, transports).unwrap();
    let before = *sent.lock().unwrap();
    let err = client.retrieve(2, &mut stream_rng(0, 1)).unwrap_err();
    assert!(matches!(err, NetError::DesiredOutOfRange { desired: 2, .. }));
    assert_eq!(*sent.lock().unwrap(), before);
}

struct Counting<T> {
    inner: T,
    sent: Arc<Mutex<usize>>,
}

impl<T: Transport> Transport for Counting<T> {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        *self.sent.lock().unwrap() += 1;
        self.inner.send_bytes(frame)
    }

    fn recv_bytes(&mut self) -> Result<Option<Vec<u8>>, TransportError> {
        self.inner.recv_bytes()
    }
}

/// Records everything one server receives, into a log only that server's tap can reach.
struct Tap<T> {
    inner: T,
    log: Arc<Mutex<Vec<Vec<u8>>>>,
}

impl<T: Transport> Transport for Tap<T> {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        self.inner.send_bytes(frame)
    }

    fn recv_bytes(&mut self) -> Result<Option<Vec<u8>>, TransportError> {
        let r = self.inner.recv_bytes()?;
        if let Some(b) = &r {
            self.log.lock().unwrap().push(b.clone());
        }
        Ok(r)
    }
}

#[test]
fn servers_see_only_their_own_queries() {
    let params = SystemParams::new(3, 3, 4, 1.0, 0.1).unwrap();
    let layout = plan_partition(&params).unwrap();
    let store = MessageStore::random(&layout, &mut stream_rng(5, u64::MAX));
    let states = Dealer::new(store, layout).provision();

    // every copy of the store is independent memory
    let ptrs: Vec<*const MessageStore> = states.iter().map(|s| s.store() as *const _).collect();
    assert!(ptrs.windows(2).all(|w| w[0] != w[1]));

    let mut logs = Vec::new();
    let mut handles = Vec::new();
    let mut transports: Vec<Box<dyn Transport>> = Vec::new();
    for state in states {
        let (client_end, server_end) = memory_pair();
        let log = Arc::new(Mutex::new(Vec::new()));
        handles.push(spawn_server(
            state,
            Tap {
                inner: server_end,
                log: log.clone(),
            },
        ));
        logs.push(log);
        transports.push(Box::new(client_end));
    }
    let cfg = ClientConfig {
        params,
        layout,
        relabel_databases: true,
    };
    let mut client = Client::connect(cfg, transports).unwrap();
    let sessions = 200;
    let mut sent: Vec<Vec<QueryVector>> = vec![Vec::new(); 3];
    for i in 0..sessions {
        let mut rng = stream_rng(9, i);
        client.retrieve((i % 3) as usize, &mut rng).unwrap();
        for (server, q) in client.last_queries() {
            sent[*server].push(q.clone());
        }
    }
    drop(client);
    for h in handles {
        h.join().unwrap().unwrap();
    }
    for (db, log) in logs.iter().enumerate() {
        let log = log.lock().unwrap();
        assert_eq!(log.len(), 1 + sessions as usize, "hello plus one query per session");
        let seen: Vec<QueryVector> = log[1..]
            .iter()
            .map(|b| match Frame::decode_exact(b).unwrap() {
                Frame::Query { query, .. } => query,
                other => panic!("server {db} received {other:?}"),
            })
            .collect();
        assert_eq!(seen, sent[db]);
    }
}

#[test]
fn memory_and_tcp_records_are_identical() {
    let params = SystemParams::new(3, 2, 4, 0.7, 0.2).unwrap();
    let mut cfg = TrialConfig::new(params, 500, 42);
    let mem = run_trials(&cfg).unwrap();
    cfg.transport = TransportKind::Tcp;
    let tcp = run_trials(&cfg).unwrap();
    assert_eq!(mem.records, tcp.records);
    assert_eq!(mem.query_counts, tcp.query_counts);
    assert_eq!(mem.decode_failures, 0);
}

#[test]
fn single_session_is_reproducible() {
    let cfg = TrialConfig::new(example(), 1, 11);
    let a = run_trials(&cfg).unwrap();
    let b = run_trials(&cfg).unwrap();
    assert_eq!(a.records.len(), 1);
    assert_eq!(a.records, b.records);
    assert!([4, 6].contains(&a.records[0].bits_downloaded));
}

#[test]
fn class_frequencies_follow_the_path_law() {
    let stats = run_trials(&TrialConfig::new(example(), 20_000, 3)).unwrap();
    assert!((stats.expected_low_fraction - 0.6).abs() < 1e-12);
    let sigma = (0.6f64 * 0.4 / 20_000.0).sqrt();
    assert!(
        (stats.low_cost_fraction - 0.6).abs() < 4.0 * sigma,
        "{}",
        stats.low_cost_fraction
    );
    assert_eq!(stats.decode_failures, 0);
    assert!(stats.records.iter().all(|r| [4, 6].contains(&r.bits_downloaded)));
    let answered: u64 = stats.server_stats.iter().map(|s| s.answered).sum();
    assert_eq!(answered, 2 * 20_000);
}

#[test]
fn relabeling_does_not_change_costs() {
    let params = SystemParams::new(3, 3, 4, 1.0, 0.1).unwrap();
    let mut cfg = TrialConfig::new(params, 2_000, 8);
    let on = run_trials(&cfg).unwrap();
    cfg.relabel_databases = false;
    let off = run_trials(&cfg).unwrap();
    let bits = |s: &alpir::netsim::TrialStats| s.records.iter().map(|r| r.bits_downloaded).collect::<Vec<_>>();
    assert_eq!(off.decode_failures, 0);
    // relabeling consumes randomness after the path draw, so paths agree per session
    assert_eq!(bits(&on), bits(&off));
}

#[test]
fn error_answer_aborts_the_session() {
    let params = example();
    let layout = plan_partition(&params).unwrap();
    let (a, b) = memory_pair();
    let (c, mut d) = memory_pair();
    let store = MessageStore::random(&layout, &mut stream_rng(0, 0));
    let state = Dealer::new(store, layout).provision().remove(0);
    spawn_server(state, b);
    // a fake second server that greets correctly and then refuses
    let fake = std::thread::spawn(move || {
        let hello = match d.recv_frame().unwrap() {
            Frame::Hello(h) => h,
            other => panic!("{other:?}"),
        };
        d.send_frame(&Frame::Hello(alpir::netsim::Hello { db_index: 1, ..hello }))
            .unwrap();
        d.recv_frame().unwrap();
        d.send_frame(&Frame::error(ErrorCode::OUT_OF_RANGE, "no")).unwrap();
    });
    let cfg = ClientConfig {
        params,
        layout,
        relabel_databases: false,
    };
    let mut client = Client::connect(cfg, vec![Box::new(a), Box::new(c)]).unwrap();
    let err = client.retrieve(0, &mut stream_rng(0, 0)).unwrap_err();
    assert!(matches!(err, NetError::ServerError { db: 1, code: 3, .. }), "{err}");
    fake.join().unwrap();
}
