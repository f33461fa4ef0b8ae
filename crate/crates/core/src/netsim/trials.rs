//! Seeded multi-session runs over a live deployment.

use std::collections::BTreeMap;
use std::net::{TcpListener, TcpStream};
use std::thread::{self, JoinHandle};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::client::{Client, ClientConfig, NetError, SessionRecord};
use super::server::{serve, spawn_server, Dealer, ServeStats};
use super::transport::{memory_pair, StreamTransport, Transport, TransportError};
use crate::params::SystemParams;
use crate::scheme::{path_distribution, plan_partition, MessageStore, PartitionLayout, PathClass, QueryVector};
use crate::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Memory,
    Tcp,
}

type ServerHandle = JoinHandle<Result<ServeStats, TransportError>>;
type Deployment = (Vec<Box<dyn Transport>>, Vec<ServerHandle>);

/// Starts one server thread per database and returns the client ends.
pub fn launch(store: MessageStore, layout: PartitionLayout, kind: TransportKind) -> std::io::Result<Deployment> {
    let states = Dealer::new(store, layout).provision();
    let mut clients: Vec<Box<dyn Transport>> = Vec::with_capacity(states.len());
    let mut handles = Vec::with_capacity(states.len());
    for state in states {
        match kind {
            TransportKind::Memory => {
                let (client, server) = memory_pair();
                handles.push(spawn_server(state, server));
                clients.push(Box::new(client));
            }
            TransportKind::Tcp => {
                let listener = TcpListener::bind("127.0.0.1:0")?;
                let addr = listener.local_addr()?;
                handles.push(
                    thread::Builder::new()
                        .name(format!("alpir-db{}-tcp", state.db_index()))
                        .spawn(move || {
                            let (stream, _) = listener.accept()?;
                            let mut t = StreamTransport::tcp(stream)?;
                            serve(&state, &mut t)
                        })?,
                );
                clients.push(Box::new(StreamTransport::tcp(TcpStream::connect(addr)?)?));
            }
        }
    }
    Ok((clients, handles))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub params: SystemParams,
    pub sessions: u64,
    pub seed: u64,
    pub transport: TransportKind,
    pub relabel_databases: bool,
    /// Replaces the planned layout, e.g. to inject an undersized key.
    pub layout: Option<PartitionLayout>,
}

impl TrialConfig {
    pub fn new(params: SystemParams, sessions: u64, seed: u64) -> Self {
        Self {
            params,
            sessions,
            seed,
            transport: TransportKind::Memory,
            relabel_databases: true,
            layout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub sessions: u64,
    pub layout: PartitionLayout,
    /// Mean downloaded bits divided by `L`.
    pub mean_cost: f64,
    pub std_error: f64,
    pub analytic_cost: f64,
    pub low_cost_fraction: f64,
    /// `N p`
    pub expected_low_fraction: f64,
    pub mean_leaked_bits: f64,
    pub max_leaked_bits: u64,
    pub decode_failures: u64,
    /// Sessions per desired message, keyed by `(server, query)`.
    #[serde(skip)]
    pub query_counts: BTreeMap<(usize, QueryVector), Vec<u64>>,
    pub records: Vec<SessionRecord>,
    pub server_stats: Vec<ServeStats>,
}

impl TrialStats {
    pub fn relative_error(&self) -> f64 {
        (self.mean_cost - self.analytic_cost).abs() / self.analytic_cost
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrialError {
    #[error("at least one session is required")]
    NoSessions,
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Scheme(#[from] crate::scheme::SchemeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("server {db} failed: {source}")]
    Server { db: usize, source: TransportError },
    #[error("server thread {0} panicked")]
    ServerPanic(usize),
}

/// Session `i` draws its desired message and path from stream `i` of `seed`;
/// the store comes from the last stream. Results depend only on the config.
pub fn run_trials(cfg: &TrialConfig) -> Result<TrialStats, TrialError> {
    if cfg.sessions == 0 {
        return Err(TrialError::NoSessions);
    }
    let layout = match cfg.layout {
        Some(l) => l,
        None => plan_partition(&cfg.params)?,
    };
    let dist = path_distribution(&cfg.params)?;
    let store = MessageStore::random(&layout, &mut stream_rng(cfg.seed, u64::MAX));
    let reference = store.clone();
    let (transports, handles) = launch(store, layout, cfg.transport)?;
    let client_cfg = ClientConfig {
        params: cfg.params,
        layout,
        relabel_databases: cfg.relabel_databases,
    };

    let k = layout.n_messages;
    let l = layout.message_bits as f64;
    let mut records = Vec::with_capacity(cfg.sessions as usize);
    let mut query_counts: BTreeMap<(usize, QueryVector), Vec<u64>> = BTreeMap::new();
    let outcome = (|| -> Result<(), TrialError> {
        let mut client = Client::connect(client_cfg, transports)?;
        for i in 0..cfg.sessions {
            let mut rng = stream_rng(cfg.seed, i);
            let desired = rng.gen_range(0..k);
            let (message, mut record) = client.retrieve(desired, &mut rng)?;
            record.decode_ok &= Some(&message) == reference.message(desired);
            for (server, q) in client.last_queries() {
                query_counts.entry((*server, q.clone())).or_insert_with(|| vec![0; k])[desired] += 1;
            }
            records.push(record);
        }
        Ok(())
    })();

    let mut server_stats = Vec::with_capacity(handles.len());
    for (db, h) in handles.into_iter().enumerate() {
        match h.join() {
            Ok(Ok(s)) => server_stats.push(s),
            // a client-side failure usually explains the server's, so report that one
            Ok(Err(source)) if outcome.is_ok() => return Err(TrialError::Server { db, source }),
            Ok(Err(_)) => {}
            Err(_) => return Err(TrialError::ServerPanic(db)),
        }
    }
    outcome?;

    let t = records.len() as f64;
    let (mut sum, mut sum_sq, mut low, mut leaked, mut max_leaked, mut failures) = (0.0, 0.0, 0u64, 0u64, 0u64, 0u64);
    for r in &records {
        let c = r.bits_downloaded as f64 / l;
        sum += c;
        sum_sq += c * c;
        low += u64::from(r.path_class == PathClass::LowCost);
        leaked += r.leaked_bits;
        max_leaked = max_leaked.max(r.leaked_bits);
        failures += u64::from(!r.decode_ok);
    }
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0);
    Ok(TrialStats {
        sessions: cfg.sessions,
        layout,
        mean_cost: mean,
        std_error: (var / t).sqrt(),
        analytic_cost: dist.expected_cost(&layout),
        low_cost_fraction: low as f64 / t,
        expected_low_fraction: dist.low_cost_mass(),
        mean_leaked_bits: leaked as f64 / t,
        max_leaked_bits: max_leaked,
        decode_failures: failures,
        query_counts,
        records,
        server_stats,
    })
}
