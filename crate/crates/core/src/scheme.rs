//! The path-biased retrieval scheme with shared-randomness masking.
//!
//! Each message of `L` bits is split into a masked part and an open part, and
//! each part into `N - 1` equal subpackets. Subpacket `0` of either part is
//! the empty string. A retrieval path is a base vector `x` with one entry in
//! `[0, N)` per message; database `d` (0-based) receives `x` with the desired
//! coordinate shifted by `d + 1` modulo `N` and answers with the XOR of the
//! referenced subpackets, masking the first part with the shared key.
//!
//! Paths whose undesired coordinates are all zero are low-cost: one database
//! returns only the key. All other paths are high-cost. Low-cost paths are
//! drawn with probability `p` each and high-cost paths with `q` each, where
//! `p / q = e^eps`.
//!
//! Message bit layout (offsets within one message):
//!
//! ```text
//! [ masked subpacket 1 | ... | masked subpacket N-1 | open subpacket 1 | ... | open subpacket N-1 ]
//!   key_bits each                                     open_subpacket_bits each
//! ```

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::bounds::{self, BoundsError};
use crate::params::{ParamsError, SystemParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("the scheme needs at least 2 databases")]
    SingleDatabase,
    #[error("key of {key_bits} bits exceeds the subpacket size of {subpacket_bits} bits")]
    KeyTooLarge { key_bits: usize, subpacket_bits: usize },
    #[error("query has {actual} entries, expected {expected}")]
    QueryArity { expected: usize, actual: usize },
    #[error("query index {index} for message {message} is out of range [0, {n_databases})")]
    IndexOutOfRange {
        message: usize,
        index: usize,
        n_databases: usize,
    },
    #[error("message index {0} is out of range")]
    MessageOutOfRange(usize),
    #[error("store does not match layout: {0}")]
    StoreMismatch(String),
    #[error("inconsistent query set: {0}")]
    InconsistentQueries(String),
    #[error("instance exceeds the enumeration cap of {0} cases")]
    TooLargeToEnumerate(u64),
}

/// How each message is cut into masked and open subpackets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionLayout {
    pub n_databases: usize,
    pub n_messages: usize,
    pub message_bits: usize,
    /// Size of the shared key `S`; also the size of each masked subpacket.
    pub key_bits: usize,
    pub open_subpacket_bits: usize,
    /// `N - 1`
    pub subpackets_per_part: usize,
    /// `key_bits / L`
    pub effective_alpha: f64,
    /// Database leakage actually incurred, as a fraction of `L`.
    pub effective_delta: f64,
}

impl PartitionLayout {
    pub fn masked_subpacket_bits(&self) -> usize {
        self.key_bits
    }

    /// `L / (N - 1)`, the size of one full answer.
    pub fn subpacket_bits(&self) -> usize {
        self.key_bits + self.open_subpacket_bits
    }

    /// Offset of masked subpacket `l` (1-based) within a message.
    pub fn masked_offset(&self, l: usize) -> usize {
        debug_assert!((1..=self.subpackets_per_part).contains(&l));
        (l - 1) * self.key_bits
    }

    /// Offset of open subpacket `l` (1-based) within a message.
    pub fn open_offset(&self, l: usize) -> usize {
        debug_assert!((1..=self.subpackets_per_part).contains(&l));
        self.subpackets_per_part * self.key_bits + (l - 1) * self.open_subpacket_bits
    }

    /// Bits downloaded on a low-cost path, `L + s`.
    pub fn low_cost_bits(&self) -> usize {
        self.message_bits + self.key_bits
    }

    /// Bits downloaded on a high-cost path, `N L / (N - 1)`.
    pub fn high_cost_bits(&self) -> usize {
        self.n_databases * self.subpacket_bits()
    }
}

/// Sizes the key as `ceil(alpha1 * L)` so the leakage never exceeds the budget.
pub fn plan_partition(params: &SystemParams) -> Result<PartitionLayout, SchemeError> {
    params.validate()?;
    if params.n_databases < 2 {
        return Err(SchemeError::SingleDatabase);
    }
    let alpha = bounds::alpha1_rate(params)?;
    let subpacket = params.subpacket_bits();
    // alpha * L is often an integer up to rounding, e.g. (1/3) * 3
    let raw = alpha * params.message_bits as f64;
    let key_bits = ((raw - 1e-9).ceil().max(0.0) as usize).min(subpacket);
    layout_with_key_bits(params, key_bits)
}

/// Layout with an explicit key size, bypassing the budget-driven sizing.
pub fn layout_with_key_bits(params: &SystemParams, key_bits: usize) -> Result<PartitionLayout, SchemeError> {
    params.validate()?;
    if params.n_databases < 2 {
        return Err(SchemeError::SingleDatabase);
    }
    let subpacket = params.subpacket_bits();
    if key_bits > subpacket {
        return Err(SchemeError::KeyTooLarge {
            key_bits,
            subpacket_bits: subpacket,
        });
    }
    let dist = path_distribution(params)?;
    let open = subpacket - key_bits;
    let leaked = (1.0 - dist.low_cost_mass()) * open as f64;
    Ok(PartitionLayout {
        n_databases: params.n_databases,
        n_messages: params.n_messages,
        message_bits: params.message_bits,
        key_bits,
        open_subpacket_bits: open,
        subpackets_per_part: params.n_databases - 1,
        effective_alpha: key_bits as f64 / params.message_bits as f64,
        effective_delta: leaked / params.message_bits as f64,
    })
}

/// Replicated database content: `K` messages and the shared key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStore {
    messages: Vec<BitString>,
    key: BitString,
}

impl MessageStore {
    pub fn new(messages: Vec<BitString>, key: BitString, layout: &PartitionLayout) -> Result<Self, SchemeError> {
        if messages.len() != layout.n_messages {
            return Err(SchemeError::StoreMismatch(format!(
                "{} messages, layout expects {}",
                messages.len(),
                layout.n_messages
            )));
        }
        if let Some((k, m)) = messages
            .iter()
            .enumerate()
            .find(|(_, m)| m.len() != layout.message_bits)
        {
            return Err(SchemeError::StoreMismatch(format!(
                "message {k} has {} bits, layout expects {}",
                m.len(),
                layout.message_bits
            )));
        }
        if key.len() != layout.key_bits {
            return Err(SchemeError::StoreMismatch(format!(
                "key has {} bits, layout expects {}",
                key.len(),
                layout.key_bits
            )));
        }
        Ok(Self { messages, key })
    }

    /// Uniformly random messages and key.
    pub fn random<R: Rng + ?Sized>(layout: &PartitionLayout, rng: &mut R) -> Self {
        let messages = (0..layout.n_messages)
            .map(|_| BitString::random(layout.message_bits, rng))
            .collect();
        let key = BitString::random(layout.key_bits, rng);
        Self { messages, key }
    }

    pub fn messages(&self) -> &[BitString] {
        &self.messages
    }

    pub fn message(&self, k: usize) -> Option<&BitString> {
        self.messages.get(k)
    }

    pub fn key(&self) -> &BitString {
        &self.key
    }

    fn masked_subpacket(&self, layout: &PartitionLayout, k: usize, l: usize) -> BitString {
        self.messages[k].slice(layout.masked_offset(l), layout.key_bits)
    }

    fn open_subpacket(&self, layout: &PartitionLayout, k: usize, l: usize) -> BitString {
        self.messages[k].slice(layout.open_offset(l), layout.open_subpacket_bits)
    }
}

/// Selection probabilities: `p` for each of the `N` low-cost paths and `q`
/// for each of the `N^K - N` high-cost paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathDistribution {
    pub n_databases: usize,
    pub n_messages: usize,
    pub p: f64,
    pub q: f64,
}

impl PathDistribution {
    /// Total probability of drawing a low-cost path, `N p`.
    pub fn low_cost_mass(&self) -> f64 {
        self.n_databases as f64 * self.p
    }

    pub fn probability(&self, class: PathClass) -> f64 {
        match class {
            PathClass::LowCost => self.p,
            PathClass::HighCost => self.q,
        }
    }

    /// Expected normalized download cost under `layout`.
    pub fn expected_cost(&self, layout: &PartitionLayout) -> f64 {
        let low = self.low_cost_mass();
        let l = layout.message_bits as f64;
        (low * layout.low_cost_bits() as f64 + (1.0 - low) * layout.high_cost_bits() as f64) / l
    }
}

/// `p = e^eps / (N e^eps + N^K - N)` and `q = p e^{-eps}`, written in terms of
/// `e^{-eps}` so `eps = +inf` gives `q = 0`.
pub fn path_distribution(params: &SystemParams) -> Result<PathDistribution, SchemeError> {
    let n = params.n_databases;
    let k = params.n_messages;
    if n < 2 {
        return Err(SchemeError::SingleDatabase);
    }
    if k < 2 {
        return Err(ParamsError::TooFewMessages(k).into());
    }
    let nf = n as f64;
    let high_paths = nf.powi(k as i32) - nf;
    let inv_exp = (-params.eps).exp();
    let denom = nf + high_paths * inv_exp;
    let p = 1.0 / denom;
    let q = p * inv_exp;
    Ok(PathDistribution {
        n_databases: n,
        n_messages: k,
        p,
        q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PathClass {
    LowCost,
    HighCost,
}

impl PathClass {
    pub fn of(base: &[usize], desired: usize) -> Self {
        if base.iter().enumerate().all(|(k, &x)| k == desired || x == 0) {
            PathClass::LowCost
        } else {
            PathClass::HighCost
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PathClass::LowCost => "low",
            PathClass::HighCost => "high",
        }
    }
}

impl fmt::Display for PathClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathChoice {
    pub base: Vec<usize>,
    pub desired: usize,
    pub class: PathClass,
}

impl PathChoice {
    pub fn new(base: Vec<usize>, desired: usize, n_databases: usize) -> Result<Self, SchemeError> {
        if desired >= base.len() {
            return Err(SchemeError::MessageOutOfRange(desired));
        }
        if let Some((message, &index)) = base.iter().enumerate().find(|(_, &x)| x >= n_databases) {
            return Err(SchemeError::IndexOutOfRange {
                message,
                index,
                n_databases,
            });
        }
        let class = PathClass::of(&base, desired);
        Ok(Self { base, desired, class })
    }
}

/// Draws a retrieval path without materializing all `N^K` of them.
pub fn sample_path<R: Rng + ?Sized>(dist: &PathDistribution, desired: usize, rng: &mut R) -> PathChoice {
    let n = dist.n_databases;
    let k = dist.n_messages;
    assert!(desired < k, "desired message {desired} out of range");
    let low = rng.gen::<f64>() < dist.low_cost_mass();
    let mut base = vec![0; k];
    if !low {
        // rejection of the all-zero off-coordinate pattern
        loop {
            for (j, x) in base.iter_mut().enumerate() {
                if j != desired {
                    *x = rng.gen_range(0..n);
                }
            }
            if base.iter().enumerate().any(|(j, &x)| j != desired && x != 0) {
                break;
            }
        }
    }
    base[desired] = rng.gen_range(0..n);
    let class = if low { PathClass::LowCost } else { PathClass::HighCost };
    PathChoice { base, desired, class }
}

/// Every base vector in `[0, N)^K`, in lexicographic order.
pub fn base_vectors(n_databases: usize, n_messages: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (n_databases as u64).pow(n_messages as u32);
    (0..total).map(move |mut idx| {
        let mut v = vec![0; n_messages];
        for x in v.iter_mut().rev() {
            *x = (idx % n_databases as u64) as usize;
            idx /= n_databases as u64;
        }
        v
    })
}

/// A per-database query: one subpacket index per message, `0` meaning none.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryVector(pub Vec<usize>);

impl QueryVector {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn validate(&self, n_databases: usize, n_messages: usize) -> Result<(), SchemeError> {
        if self.0.len() != n_messages {
            return Err(SchemeError::QueryArity {
                expected: n_messages,
                actual: self.0.len(),
            });
        }
        match self.0.iter().enumerate().find(|(_, &v)| v >= n_databases) {
            Some((message, &index)) => Err(SchemeError::IndexOutOfRange {
                message,
                index,
                n_databases,
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for QueryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (j, v) in self.0.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Queries for databases `0..N`: database `d` gets the desired coordinate
/// shifted by `d + 1` modulo `N`, all other coordinates unchanged.
pub fn make_queries(choice: &PathChoice, n_databases: usize) -> Vec<QueryVector> {
    (0..n_databases)
        .map(|d| {
            let mut v = choice.base.clone();
            v[choice.desired] = (choice.base[choice.desired] + d + 1) % n_databases;
            QueryVector(v)
        })
        .collect()
}

/// One database's response: the key-masked XOR and the open XOR.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Answer {
    pub masked: BitString,
    /// Empty for the all-zero query.
    pub open: BitString,
}

impl Answer {
    pub fn bits(&self) -> usize {
        self.masked.len() + self.open.len()
    }
}

/// Deterministic database response to one query.
pub fn answer(store: &MessageStore, layout: &PartitionLayout, query: &QueryVector) -> Result<Answer, SchemeError> {
    query.validate(layout.n_databases, layout.n_messages)?;
    let mut masked = store.key.clone();
    let mut open = BitString::zeros(layout.open_subpacket_bits);
    let mut any = false;
    for (k, &v) in query.indices().iter().enumerate() {
        if v == 0 {
            continue;
        }
        any = true;
        masked ^= &store.masked_subpacket(layout, k, v);
        open ^= &store.open_subpacket(layout, k, v);
    }
    if !any {
        open = BitString::new();
    }
    Ok(Answer { masked, open })
}

/// Position of each desired-coordinate value in the query set.
fn desired_positions(queries: &[QueryVector], desired: usize) -> Result<Vec<usize>, SchemeError> {
    let n = queries.len();
    if n < 2 {
        return Err(SchemeError::InconsistentQueries(format!("{n} queries")));
    }
    let mut by_value = vec![usize::MAX; n];
    for (d, q) in queries.iter().enumerate() {
        let v = *q
            .indices()
            .get(desired)
            .ok_or(SchemeError::MessageOutOfRange(desired))?;
        if v >= n {
            return Err(SchemeError::InconsistentQueries(format!(
                "desired coordinate {v} out of range"
            )));
        }
        if by_value[v] != usize::MAX {
            return Err(SchemeError::InconsistentQueries(format!(
                "desired coordinate value {v} appears twice"
            )));
        }
        by_value[v] = d;
    }
    let first = &queries[0];
    for q in queries {
        if q.indices().len() != first.indices().len()
            || q.indices()
                .iter()
                .zip(first.indices())
                .enumerate()
                .any(|(k, (a, b))| k != desired && a != b)
        {
            return Err(SchemeError::InconsistentQueries(
                "undesired coordinates differ across databases".into(),
            ));
        }
    }
    Ok(by_value)
}

/// Recovers the desired message from one session's answers.
pub fn decode(answers: &[Answer], queries: &[QueryVector], desired: usize) -> Result<BitString, SchemeError> {
    if answers.len() != queries.len() {
        return Err(SchemeError::InconsistentQueries(format!(
            "{} answers for {} queries",
            answers.len(),
            queries.len()
        )));
    }
    let pos = desired_positions(queries, desired)?;
    let base = &answers[pos[0]];
    let key_bits = base.masked.len();
    let open_bits = answers[pos[1]].open.len();
    let base_open = if base.open.is_empty() {
        BitString::zeros(open_bits)
    } else {
        base.open.clone()
    };

    let mut masked_parts = Vec::with_capacity(pos.len() - 1);
    let mut open_parts = Vec::with_capacity(pos.len() - 1);
    for &d in &pos[1..] {
        let a = &answers[d];
        if a.masked.len() != key_bits || a.open.len() != open_bits || base_open.len() != open_bits {
            return Err(SchemeError::InconsistentQueries("answer lengths differ".into()));
        }
        let mut m = a.masked.clone();
        m ^= &base.masked;
        let mut o = a.open.clone();
        o ^= &base_open;
        masked_parts.push(m);
        open_parts.push(o);
    }
    Ok(BitString::concat(masked_parts.iter().chain(open_parts.iter())))
}

/// What the user learns about undesired messages from one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResidualView {
    Empty,
    /// XOR of the open subpackets `(message, subpacket)` listed in `terms`.
    Combination {
        terms: Vec<(usize, usize)>,
        bits: BitString,
    },
}

impl ResidualView {
    pub fn leaked_bits(&self) -> usize {
        match self {
            ResidualView::Empty => 0,
            ResidualView::Combination { bits, .. } => bits.len(),
        }
    }
}

/// Strips the recovered desired subpackets from every open part. The masked
/// parts are excluded since the key pads them.
pub fn residual_view(
    answers: &[Answer],
    queries: &[QueryVector],
    decoded: &BitString,
    desired: usize,
    layout: &PartitionLayout,
) -> ResidualView {
    let first = queries[0].indices();
    let terms: Vec<(usize, usize)> = first
        .iter()
        .enumerate()
        .filter(|&(k, &x)| k != desired && x != 0)
        .map(|(k, &x)| (k, x))
        .collect();
    if terms.is_empty() {
        return ResidualView::Empty;
    }
    let mut residuals = answers.iter().zip(queries).map(|(a, q)| {
        let mut r = a.open.clone();
        let v = q.indices()[desired];
        if v != 0 {
            r ^= &decoded.slice(layout.open_offset(v), layout.open_subpacket_bits);
        }
        r
    });
    let bits = residuals.next().expect("at least one answer");
    debug_assert!(residuals.all(|r| r == bits), "open residuals disagree across databases");
    ResidualView::Combination { terms, bits }
}

/// Result of [`exhaustive_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustiveSummary {
    /// Sessions decoded: paths x desired messages x message contents x keys.
    pub cases: u64,
    pub failures: u64,
}

/// Decodes every path for every desired message, every message assignment
/// and every key under `layout`. Refuses instances above `max_cases`.
pub fn exhaustive_check(layout: &PartitionLayout, max_cases: u64) -> Result<ExhaustiveSummary, SchemeError> {
    let n = layout.n_databases;
    let k = layout.n_messages;
    let l = layout.message_bits;
    let s = layout.key_bits;
    let content_bits = (k * l + s) as u32;
    let cases = (n as u64)
        .checked_pow(k as u32)
        .and_then(|paths| paths.checked_mul(k as u64))
        .and_then(|c| c.checked_mul(1u64.checked_shl(content_bits)?))
        .filter(|&c| c <= max_cases && content_bits < 64)
        .ok_or(SchemeError::TooLargeToEnumerate(max_cases))?;

    let paths: Vec<(PathChoice, Vec<QueryVector>)> = (0..k)
        .flat_map(|desired| {
            base_vectors(n, k).map(move |base| {
                let class = PathClass::of(&base, desired);
                PathChoice { base, desired, class }
            })
        })
        .map(|c| {
            let q = make_queries(&c, n);
            (c, q)
        })
        .collect();
    let mut failures = 0;
    for content in 0..1u64 << content_bits {
        let all = BitString::from_u64(content, content_bits as usize);
        let messages = (0..k).map(|j| all.slice(j * l, l)).collect();
        let store = MessageStore::new(messages, all.slice(k * l, s), layout)?;
        for (choice, queries) in &paths {
            let answers = queries
                .iter()
                .map(|q| answer(&store, layout, q))
                .collect::<Result<Vec<_>, _>>()?;
            match decode(&answers, queries, choice.desired) {
                Ok(w) if Some(&w) == store.message(choice.desired) => {}
                _ => failures += 1,
            }
        }
    }
    Ok(ExhaustiveSummary { cases, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example_params() -> SystemParams {
        SystemParams::new(2, 2, 3, 1.5f64.ln(), 4.0 / 15.0).unwrap()
    }

    /// W1 = a1 a2 a3, W2 = b1 b2 b3, S = s
    fn example_store(layout: &PartitionLayout) -> MessageStore {
        MessageStore::new(
            vec![BitString::from_bit_str("101"), BitString::from_bit_str("011")],
            BitString::from_bit_str("1"),
            layout,
        )
        .unwrap()
    }

    #[test]
    fn partition_examples() {
        let l = plan_partition(&example_params()).unwrap();
        assert_eq!(
            (l.key_bits, l.masked_subpacket_bits(), l.open_subpacket_bits),
            (1, 1, 2)
        );
        assert!((l.effective_delta - 4.0 / 15.0).abs() < 1e-12);

        let l = plan_partition(&SystemParams::new(2, 2, 4, 0.0, 0.5).unwrap()).unwrap();
        assert_eq!((l.key_bits, l.open_subpacket_bits), (0, 4));

        let l = plan_partition(&SystemParams::new(2, 2, 4, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!((l.key_bits, l.open_subpacket_bits), (4, 0));
        assert_eq!(l.effective_delta, 0.0);
    }

    #[test]
    fn partition_rounds_key_up() {
        // alpha1 * L = 4 * (1 - 2 * 0.3) = 1.6 -> 2 bits
        let params = SystemParams::new(2, 2, 4, 0.0, 0.3).unwrap();
        let l = plan_partition(&params).unwrap();
        assert_eq!(l.key_bits, 2);
        assert!(l.effective_delta <= params.delta);
        assert_eq!((l.subpacket_bits()) * l.subpackets_per_part, params.message_bits);
    }

    #[test]
    fn partition_errors() {
        assert!(matches!(
            plan_partition(&SystemParams::new(1, 2, 3, 0.0, 0.0).unwrap()),
            Err(SchemeError::SingleDatabase)
        ));
        assert!(matches!(
            layout_with_key_bits(&example_params(), 4),
            Err(SchemeError::KeyTooLarge { .. })
        ));
    }

    #[test]
    fn path_distribution_examples() {
        let d = path_distribution(&example_params()).unwrap();
        assert!((d.p - 0.3).abs() < 1e-12 && (d.q - 0.2).abs() < 1e-12);
        let d = path_distribution(&example_params().with_eps(0.0)).unwrap();
        assert!((d.p - 0.25).abs() < 1e-15 && (d.q - 0.25).abs() < 1e-15);
        let d = path_distribution(&example_params().with_eps(f64::INFINITY)).unwrap();
        assert_eq!((d.p, d.q), (0.5, 0.0));
    }

    #[test]
    fn path_distribution_normalizes() {
        for (n, k, eps) in [(2, 2, 0.7), (3, 4, 2.0), (5, 3, 0.0), (4, 2, 30.0)] {
            let params = SystemParams::for_bounds(n, k, eps, 0.0).unwrap();
            let d = path_distribution(&params).unwrap();
            let total = n as f64 * d.p + ((n as f64).powi(k as i32) - n as f64) * d.q;
            assert!((total - 1.0).abs() < 1e-12);
            assert!(d.p >= d.q && d.q > 0.0);
            assert!((d.p / d.q - eps.exp()).abs() <= 1e-12 * eps.exp());
        }
    }

    #[test]
    fn make_queries_examples() {
        let low = PathChoice::new(vec![0, 0], 0, 2).unwrap();
        assert_eq!(
            make_queries(&low, 2),
            vec![QueryVector(vec![1, 0]), QueryVector(vec![0, 0])]
        );
        let high = PathChoice::new(vec![1, 1], 0, 2).unwrap();
        assert_eq!(high.class, PathClass::HighCost);
        assert_eq!(
            make_queries(&high, 2),
            vec![QueryVector(vec![0, 1]), QueryVector(vec![1, 1])]
        );
    }

    #[test]
    fn desired_coordinate_is_a_bijection() {
        for base in base_vectors(4, 3) {
            for desired in 0..3 {
                let choice = PathChoice::new(base.clone(), desired, 4).unwrap();
                let mut seen: Vec<usize> = make_queries(&choice, 4).iter().map(|q| q.0[desired]).collect();
                seen.sort();
                assert_eq!(seen, vec![0, 1, 2, 3]);
            }
        }
    }

    #[test]
    fn answer_examples() {
        let layout = plan_partition(&example_params()).unwrap();
        let store = example_store(&layout);
        let a = answer(&store, &layout, &QueryVector(vec![0, 0])).unwrap();
        assert_eq!(a.masked, BitString::from_bit_str("1"));
        assert!(a.open.is_empty());

        // {a1 ^ b1 ^ s, a2a3 ^ b2b3}
        let a = answer(&store, &layout, &QueryVector(vec![1, 1])).unwrap();
        assert_eq!(a.masked.to_string(), "0");
        assert_eq!(a.open.to_string(), "10");
        assert_eq!(a.bits(), 3);

        let zero = MessageStore::new(vec![BitString::zeros(3); 2], BitString::zeros(1), &layout).unwrap();
        let a = answer(&zero, &layout, &QueryVector(vec![1, 1])).unwrap();
        assert_eq!(a.masked.count_ones() + a.open.count_ones(), 0);
    }

    #[test]
    fn answer_general_path_structure() {
        // N = 4: query with v_i = N - 1 on top of undesired indices x
        let params = SystemParams::new(4, 3, 6, 1.0, 0.05).unwrap();
        let layout = plan_partition(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let store = MessageStore::random(&layout, &mut rng);
        let (i, x) = (1, [2, 0, 3]);
        let q = QueryVector(vec![x[0], 3, x[2]]);
        let a = answer(&store, &layout, &q).unwrap();

        let mut masked = store.key().clone();
        let mut open = BitString::zeros(layout.open_subpacket_bits);
        for (k, l) in [(0, x[0]), (2, x[2]), (i, 3)] {
            masked ^= &store
                .message(k)
                .unwrap()
                .slice(layout.masked_offset(l), layout.key_bits);
            open ^= &store
                .message(k)
                .unwrap()
                .slice(layout.open_offset(l), layout.open_subpacket_bits);
        }
        assert_eq!(a, Answer { masked, open });
    }

    #[test]
    fn answer_rejects_bad_queries() {
        let layout = plan_partition(&example_params()).unwrap();
        let store = example_store(&layout);
        assert!(matches!(
            answer(&store, &layout, &QueryVector(vec![0, 2])),
            Err(SchemeError::IndexOutOfRange {
                message: 1,
                index: 2,
                ..
            })
        ));
        assert!(matches!(
            answer(&store, &layout, &QueryVector(vec![0])),
            Err(SchemeError::QueryArity { .. })
        ));
    }

    #[test]
    fn decode_worked_example_paths() {
        let layout = plan_partition(&example_params()).unwrap();
        let store = example_store(&layout);
        // (nothing, W1) and (W2, W1 ^ W2)
        for base in [vec![0, 0], vec![1, 1]] {
            let choice = PathChoice::new(base, 0, 2).unwrap();
            let queries = make_queries(&choice, 2);
            let answers: Vec<_> = queries.iter().map(|q| answer(&store, &layout, q).unwrap()).collect();
            let w = decode(&answers, &queries, 0).unwrap();
            assert_eq!(&w, store.message(0).unwrap());
        }
    }

    #[test]
    fn decode_rejects_inconsistent_sets() {
        let layout = plan_partition(&example_params()).unwrap();
        let store = example_store(&layout);
        let queries = vec![QueryVector(vec![1, 0]), QueryVector(vec![1, 0])];
        let answers: Vec<_> = queries.iter().map(|q| answer(&store, &layout, q).unwrap()).collect();
        assert!(matches!(
            decode(&answers, &queries, 0),
            Err(SchemeError::InconsistentQueries(_))
        ));

        let queries = vec![QueryVector(vec![1, 0]), QueryVector(vec![0, 1])];
        let answers: Vec<_> = queries.iter().map(|q| answer(&store, &layout, q).unwrap()).collect();
        assert!(matches!(
            decode(&answers, &queries, 0),
            Err(SchemeError::InconsistentQueries(_))
        ));

        assert!(decode(&answers[..1], &queries, 0).is_err());
    }

    #[test]
    fn residual_examples() {
        let layout = plan_partition(&example_params()).unwrap();
        let store = example_store(&layout);
        let run = |base: Vec<usize>| {
            let choice = PathChoice::new(base, 0, 2).unwrap();
            let queries = make_queries(&choice, 2);
            let answers: Vec<_> = queries.iter().map(|q| answer(&store, &layout, q).unwrap()).collect();
            let w = decode(&answers, &queries, 0).unwrap();
            residual_view(&answers, &queries, &w, 0, &layout)
        };
        assert_eq!(run(vec![0, 0]), ResidualView::Empty);
        assert_eq!(run(vec![1, 0]).leaked_bits(), 0);
        // W2 open part is b2 b3 = "11"
        assert_eq!(
            run(vec![1, 1]),
            ResidualView::Combination {
                terms: vec![(1, 1)],
                bits: BitString::from_bit_str("11")
            }
        );
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let d = path_distribution(&example_params()).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_path(&d, 1, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn sampled_class_matches_base_vector() {
        let params = SystemParams::for_bounds(3, 4, 0.5, 0.0).unwrap();
        let d = path_distribution(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let c = sample_path(&d, 2, &mut rng);
            assert_eq!(c.class, PathClass::of(&c.base, 2));
            assert!(c.base.iter().all(|&x| x < 3));
        }
    }

    #[test]
    fn base_vector_enumeration() {
        let all: Vec<_> = base_vectors(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(base_vectors(3, 4).count(), 81);
    }
}
