//! Protocol instance parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("number of databases must be at least 1, got {0}")]
    NoDatabases(usize),
    #[error("number of messages must be at least 2, got {0}")]
    TooFewMessages(usize),
    #[error("message length must be at least 1 bit")]
    EmptyMessage,
    #[error("user privacy budget must be a non-negative number, got {0}")]
    InvalidEps(f64),
    #[error("database privacy budget must be a finite non-negative number, got {0}")]
    InvalidDelta(f64),
    #[error("message length {message_bits} is not divisible by N-1 = {parts}")]
    IndivisibleLength { message_bits: usize, parts: usize },
}

/// A single AL-PIR instance: `N` replicated databases holding `K` messages of
/// `L` bits each, with user budget `eps` (nats, may be `+inf`) and database
/// budget `delta` (fraction of `L`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_databases: usize,
    pub n_messages: usize,
    pub message_bits: usize,
    pub eps: f64,
    pub delta: f64,
}

impl SystemParams {
    pub fn new(
        n_databases: usize,
        n_messages: usize,
        message_bits: usize,
        eps: f64,
        delta: f64,
    ) -> Result<Self, ParamsError> {
        let params = Self {
            n_databases,
            n_messages,
            message_bits,
            eps,
            delta,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for closed-form evaluation only. The message length is set
    /// to the smallest value compatible with subpacketization.
    pub fn for_bounds(n_databases: usize, n_messages: usize, eps: f64, delta: f64) -> Result<Self, ParamsError> {
        Self::new(
            n_databases,
            n_messages,
            n_databases.saturating_sub(1).max(1),
            eps,
            delta,
        )
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.n_databases < 1 {
            return Err(ParamsError::NoDatabases(self.n_databases));
        }
        if self.n_messages < 2 {
            return Err(ParamsError::TooFewMessages(self.n_messages));
        }
        if self.message_bits < 1 {
            return Err(ParamsError::EmptyMessage);
        }
        if self.eps.is_nan() || self.eps < 0.0 {
            return Err(ParamsError::InvalidEps(self.eps));
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(ParamsError::InvalidDelta(self.delta));
        }
        if self.n_databases >= 2 && !self.message_bits.is_multiple_of(self.n_databases - 1) {
            return Err(ParamsError::IndivisibleLength {
                message_bits: self.message_bits,
                parts: self.n_databases - 1,
            });
        }
        Ok(())
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    /// Bits per subpacket, `L / (N-1)`. Zero for a single database.
    pub fn subpacket_bits(&self) -> usize {
        if self.n_databases < 2 {
            0
        } else {
            self.message_bits / (self.n_databases - 1)
        }
    }

    /// Number of retrieval paths, `N^K`, if it fits in a `u64`.
    pub fn path_count(&self) -> Option<u64> {
        (self.n_databases as u64).checked_pow(u32::try_from(self.n_messages).ok()?)
    }

    /// Database leakage budget in bits, `delta * L`.
    pub fn leakage_budget_bits(&self) -> f64 {
        self.delta * self.message_bits as f64
    }
}
