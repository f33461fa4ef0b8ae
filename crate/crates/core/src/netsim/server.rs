//! Database servers.
//!
//! A server owns its own copy of the store and sees only the frames that
//! arrive on its own transport. Nothing in [`ServerState`] can reach another
//! server.

use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};

use super::transport::{Transport, TransportError};
use super::wire::{ErrorCode, Frame, Hello, PROTOCOL_VERSION};
use crate::scheme::{answer, MessageStore, PartitionLayout, SchemeError};

pub struct ServerState {
    db_index: usize,
    store: MessageStore,
    layout: PartitionLayout,
}

impl ServerState {
    pub fn new(db_index: usize, store: MessageStore, layout: PartitionLayout) -> Self {
        Self {
            db_index,
            store,
            layout,
        }
    }

    pub fn db_index(&self) -> usize {
        self.db_index
    }

    pub fn store(&self) -> &MessageStore {
        &self.store
    }

    pub fn hello(&self) -> Hello {
        Hello {
            version: PROTOCOL_VERSION,
            db_index: self.db_index as u32,
            n_databases: self.layout.n_databases as u32,
            n_messages: self.layout.n_messages as u32,
            message_bits: self.layout.message_bits as u32,
            key_bits: self.layout.key_bits as u32,
        }
    }

    /// Response to one raw frame. Always exactly one frame.
    pub fn handle(&self, bytes: &[u8]) -> Frame {
        let frame = match Frame::decode_exact(bytes) {
            Ok(f) => f,
            Err(e) => return Frame::error(ErrorCode::for_wire_error(&e), e.to_string()),
        };
        match frame {
            Frame::Hello(_) => Frame::Hello(self.hello()),
            Frame::Query { session_id, query } => match answer(&self.store, &self.layout, &query) {
                Ok(answer) => Frame::Answer { session_id, answer },
                Err(e @ (SchemeError::IndexOutOfRange { .. } | SchemeError::QueryArity { .. })) => {
                    Frame::error(ErrorCode::OUT_OF_RANGE, e.to_string())
                }
                Err(e) => Frame::error(ErrorCode::MALFORMED, e.to_string()),
            },
            Frame::Answer { .. } | Frame::Error { .. } => {
                Frame::error(ErrorCode::UNEXPECTED, "servers only accept hello and query frames")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServeStats {
    pub frames: u64,
    pub answered: u64,
    pub errors: u64,
    pub answer_bits: u64,
}

/// Answers frames until the peer disconnects. A stream that breaks inside a
/// frame gets one final Error frame.
pub fn serve<T: Transport>(state: &ServerState, transport: &mut T) -> Result<ServeStats, TransportError> {
    let mut stats = ServeStats::default();
    loop {
        let bytes = match transport.recv_bytes() {
            Ok(Some(b)) => b,
            Ok(None) => return Ok(stats),
            Err(TransportError::Truncated(n)) => {
                stats.frames += 1;
                stats.errors += 1;
                let msg = format!("stream ended after {n} bytes of a frame");
                let _ = transport.send_frame(&Frame::error(ErrorCode::TRUNCATED, msg));
                return Ok(stats);
            }
            Err(TransportError::BadLength(len)) => {
                stats.frames += 1;
                stats.errors += 1;
                let msg = format!("invalid frame length {len}");
                let _ = transport.send_frame(&Frame::error(ErrorCode::MALFORMED, msg));
                return Ok(stats);
            }
            Err(e) => return Err(e),
        };
        stats.frames += 1;
        let reply = state.handle(&bytes);
        match &reply {
            Frame::Answer { answer, .. } => {
                stats.answered += 1;
                stats.answer_bits += answer.bits() as u64;
            }
            Frame::Error { .. } => stats.errors += 1,
            _ => {}
        }
        match transport.send_frame(&reply) {
            Ok(()) => {}
            Err(TransportError::Closed) => return Ok(stats),
            Err(e) => return Err(e),
        }
    }
}

/// Trusted setup that hands every server its own copy of the store and key
/// before any session starts.
pub struct Dealer {
    store: MessageStore,
    layout: PartitionLayout,
}

impl Dealer {
    pub fn new(store: MessageStore, layout: PartitionLayout) -> Self {
        Self { store, layout }
    }

    pub fn provision(&self) -> Vec<ServerState> {
        (0..self.layout.n_databases)
            .map(|d| ServerState::new(d, self.store.clone(), self.layout))
            .collect()
    }
}

/// Runs `serve` on its own thread, taking ownership of the state and transport.
pub fn spawn_server<T: Transport + 'static>(
    state: ServerState,
    mut transport: T,
) -> JoinHandle<Result<ServeStats, TransportError>> {
    thread::Builder::new()
        .name(format!("alpir-db{}", state.db_index))
        .spawn(move || serve(&state, &mut transport))
        .expect("spawn server thread")
}
