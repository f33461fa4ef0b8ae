//! Asymmetric leaky private information retrieval.
//!
//! A user retrieves one of `K` messages replicated on `N` non-colluding
//! databases. Two privacy budgets are traded for download cost: `eps` bounds
//! how much the queries reveal about which message is wanted, and `delta`
//! bounds how many bits (as a fraction of the message length) the user learns
//! about the other messages. The databases share a secret key that pads the
//! part of each answer the user is not allowed to learn.
//!
//! - [`bounds`]: closed-form cost, key-size and threshold bounds.
//! - [`scheme`]: the retrieval scheme (layout, path sampling, queries,
//!   answers, decoding).
//! - [`leakage`]: analytic, exact-enumeration and Monte-Carlo audits of both
//!   budgets.
//! - [`netsim`]: a framed client/server deployment with in-memory and TCP
//!   transports.
//!
//! ```
//! use alpir::{bounds, scheme, SystemParams};
//! use rand::SeedableRng;
//!
//! let params = SystemParams::new(2, 2, 3, 1.5f64.ln(), 4.0 / 15.0).unwrap();
//! assert!((bounds::d_upper(&params).unwrap() - 1.6).abs() < 1e-12);
//!
//! let layout = scheme::plan_partition(&params).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let store = scheme::MessageStore::random(&layout, &mut rng);
//! let dist = scheme::path_distribution(&params).unwrap();
//! let path = scheme::sample_path(&dist, 1, &mut rng);
//! let queries = scheme::make_queries(&path, params.n_databases);
//! let answers: Vec<_> = queries.iter().map(|q| scheme::answer(&store, &layout, q).unwrap()).collect();
//! let message = scheme::decode(&answers, &queries, 1).unwrap();
//! assert_eq!(Some(&message), store.message(1));
//! ```

pub mod bits;
pub mod bounds;
pub mod leakage;
pub mod netsim;
pub mod params;
pub mod scheme;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use bits::BitString;
pub use bounds::{BoundsConfig, BoundsReport, Regime};
pub use params::{ParamsError, SystemParams};
pub use scheme::{Answer, MessageStore, PartitionLayout, PathChoice, PathClass, PathDistribution, QueryVector};

/// Independent deterministic RNG stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
