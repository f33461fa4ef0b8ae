//! The retrieving user.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::transport::{Transport, TransportError};
use super::wire::{ErrorCode, Frame, Hello, PROTOCOL_VERSION};
use crate::bits::BitString;
use crate::params::SystemParams;
use crate::scheme::{
    decode, make_queries, path_distribution, residual_view, sample_path, PartitionLayout, PathChoice, PathClass,
    PathDistribution, QueryVector, SchemeError,
};

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("database {db}: {source}")]
    Transport {
        db: usize,
        #[source]
        source: TransportError,
    },
    #[error("expected {expected} server connections, got {actual}")]
    ServerCount { expected: usize, actual: usize },
    #[error("desired message {desired} is out of range for {n_messages} messages")]
    DesiredOutOfRange { desired: usize, n_messages: usize },
    #[error("database {db} does not match the client configuration: {detail}")]
    HelloMismatch { db: usize, detail: String },
    #[error("session {session_id} aborted: database {db} returned error {code:#04x}: {message}")]
    ServerError {
        session_id: u64,
        db: usize,
        code: u8,
        message: String,
    },
    #[error("session {session_id}: database {db} sent an unexpected {what}")]
    Protocol { session_id: u64, db: usize, what: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    pub params: SystemParams,
    pub layout: PartitionLayout,
    /// Send each session's queries to a uniformly relabeled set of databases.
    pub relabel_databases: bool,
}

/// Bookkeeping for one retrieval. `desired` is 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: u64,
    pub desired: usize,
    pub path_class: PathClass,
    pub bits_downloaded: u64,
    pub decode_ok: bool,
    /// Length of the open-part residual the user sees about other messages.
    pub leaked_bits: u64,
    /// Query frame bytes sent; not part of the download cost.
    pub bytes_uploaded: u64,
}

impl SessionRecord {
    pub const CSV_HEADER: &'static str = "session_id,desired,class,bits,leaked_bits";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.session_id, self.desired, self.path_class, self.bits_downloaded, self.leaked_bits
        )
    }
}

pub struct Client {
    config: ClientConfig,
    dist: PathDistribution,
    servers: Vec<Box<dyn Transport>>,
    next_session: u64,
    last_queries: Vec<(usize, QueryVector)>,
}

impl Client {
    /// Exchanges Hello frames with every server and checks that each one
    /// serves the configured layout under its expected index.
    pub fn connect(config: ClientConfig, mut servers: Vec<Box<dyn Transport>>) -> Result<Self, NetError> {
        let n = config.layout.n_databases;
        if servers.len() != n {
            return Err(NetError::ServerCount {
                expected: n,
                actual: servers.len(),
            });
        }
        let dist = path_distribution(&config.params)?;
        let expected = Hello {
            version: PROTOCOL_VERSION,
            db_index: 0,
            n_databases: n as u32,
            n_messages: config.layout.n_messages as u32,
            message_bits: config.layout.message_bits as u32,
            key_bits: config.layout.key_bits as u32,
        };
        for (db, t) in servers.iter_mut().enumerate() {
            let net = |source| NetError::Transport { db, source };
            t.send_frame(&Frame::Hello(Hello {
                db_index: db as u32,
                ..expected
            }))
            .map_err(net)?;
            match t.recv_frame().map_err(net)? {
                Frame::Hello(h)
                    if h == Hello {
                        db_index: db as u32,
                        ..expected
                    } => {}
                Frame::Hello(h) => {
                    return Err(NetError::HelloMismatch {
                        db,
                        detail: format!("got {h:?}"),
                    })
                }
                other => {
                    return Err(NetError::HelloMismatch {
                        db,
                        detail: format!("reply tag {:#04x}", other.tag()),
                    })
                }
            }
        }
        Ok(Self {
            config,
            dist,
            servers,
            next_session: 0,
            last_queries: Vec::new(),
        })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    /// `(server, query)` pairs sent in the most recent session.
    pub fn last_queries(&self) -> &[(usize, QueryVector)] {
        &self.last_queries
    }

    /// Samples a path for `desired` and runs one session.
    pub fn retrieve<R: Rng + ?Sized>(
        &mut self,
        desired: usize,
        rng: &mut R,
    ) -> Result<(BitString, SessionRecord), NetError> {
        let k = self.config.layout.n_messages;
        if desired >= k {
            return Err(NetError::DesiredOutOfRange { desired, n_messages: k });
        }
        let choice = sample_path(&self.dist, desired, rng);
        self.retrieve_path(&choice, rng)
    }

    /// Runs one session along a fixed path. `rng` only drives relabeling.
    pub fn retrieve_path<R: Rng + ?Sized>(
        &mut self,
        choice: &PathChoice,
        rng: &mut R,
    ) -> Result<(BitString, SessionRecord), NetError> {
        let n = self.config.layout.n_databases;
        let k = self.config.layout.n_messages;
        if choice.desired >= k || choice.base.len() != k {
            return Err(NetError::DesiredOutOfRange {
                desired: choice.desired,
                n_messages: k,
            });
        }
        let queries = make_queries(choice, n);
        let mut targets: Vec<usize> = (0..n).collect();
        if self.config.relabel_databases {
            targets.shuffle(rng);
        }
        let session_id = self.next_session;
        self.next_session += 1;

        self.last_queries = targets.iter().copied().zip(queries.iter().cloned()).collect();
        let mut bytes_uploaded = 0u64;
        for (q, &db) in queries.iter().zip(&targets) {
            let frame = Frame::Query {
                session_id,
                query: q.clone(),
            }
            .encode();
            bytes_uploaded += frame.len() as u64;
            self.servers[db]
                .send_bytes(&frame)
                .map_err(|source| NetError::Transport { db, source })?;
        }

        // Collect every reply before judging any, so one failing server does
        // not leave stale answers queued on the others.
        let replies: Vec<(usize, Result<Frame, TransportError>)> =
            targets.iter().map(|&db| (db, self.servers[db].recv_frame())).collect();
        let mut answers = Vec::with_capacity(n);
        for (db, reply) in replies {
            match reply.map_err(|source| NetError::Transport { db, source })? {
                Frame::Answer { session_id: s, answer } if s == session_id => answers.push(answer),
                Frame::Answer { session_id: s, .. } => {
                    return Err(NetError::Protocol {
                        session_id,
                        db,
                        what: format!("answer for session {s}"),
                    })
                }
                Frame::Error {
                    code: ErrorCode(code),
                    message,
                } => {
                    return Err(NetError::ServerError {
                        session_id,
                        db,
                        code,
                        message,
                    })
                }
                other => {
                    return Err(NetError::Protocol {
                        session_id,
                        db,
                        what: format!("frame with tag {:#04x}", other.tag()),
                    })
                }
            }
        }

        let bits_downloaded = answers.iter().map(|a| a.bits() as u64).sum();
        let (message, decode_ok, leaked_bits) = match decode(&answers, &queries, choice.desired) {
            Ok(w) => {
                let view = residual_view(&answers, &queries, &w, choice.desired, &self.config.layout);
                let leaked = view.leaked_bits() as u64;
                (w, true, leaked)
            }
            Err(_) => (BitString::new(), false, 0),
        };
        let record = SessionRecord {
            session_id,
            desired: choice.desired,
            path_class: choice.class,
            bits_downloaded,
            decode_ok,
            leaked_bits,
            bytes_uploaded,
        };
        Ok((message, record))
    }
}
