//! A client and `N` database servers exchanging length-prefixed frames.
//!
//! Each server runs on its own thread with a private copy of the store and
//! talks only to the client, over in-memory channels or localhost TCP.

pub mod client;
pub mod server;
pub mod transport;
pub mod trials;
pub mod wire;

pub use client::{Client, ClientConfig, NetError, SessionRecord};
pub use server::{serve, spawn_server, Dealer, ServeStats, ServerState};
pub use transport::{memory_pair, MemoryTransport, StreamTransport, Transport, TransportError};
pub use trials::{launch, run_trials, TransportKind, TrialConfig, TrialError, TrialStats};
pub use wire::{ErrorCode, Frame, Hello, WireError};
