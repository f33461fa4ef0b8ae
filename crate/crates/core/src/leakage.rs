//! Auditors for both privacy budgets.
//!
//! User-side leakage is the largest ratio, over databases, query vectors and
//! message pairs, of the probability that a database sees a given query under
//! two different desired messages; the budget is `e^eps`. Database-side
//! leakage is the mutual information, in bits, between the undesired messages
//! and everything the user sees; the budget is `delta * L`.
//!
//! Each budget is checked three ways: a closed form, an exact enumeration over
//! small instances, and a seeded Monte-Carlo run.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::bits::BitString;
use crate::bounds;
use crate::params::SystemParams;
use crate::scheme::{
    self, answer, base_vectors, decode, make_queries, path_distribution, sample_path, MessageStore, PartitionLayout,
    PathChoice, PathClass, PathDistribution, QueryVector, SchemeError,
};
use crate::stream_rng;

/// Default limit on `paths * message assignments * keys` for exact enumeration.
pub const DEFAULT_STATE_CAP: u64 = 1 << 24;

/// Minimum number of Monte-Carlo trials.
pub const MIN_TRIALS: u64 = 1_000;

/// Width of the Monte-Carlo confidence bands, in standard deviations.
pub const SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LeakageError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Bounds(#[from] bounds::BoundsError),
    #[error("enumeration needs {states} joint states, above the cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: u64 },
    #[error("at least {MIN_TRIALS} trials are required, got {0}")]
    TooFewTrials(u64),
    #[error("message prior does not match the layout: {0}")]
    PriorMismatch(String),
}

/// Largest per-structure likelihood ratio, `p / q`.
pub fn analytic_user_ratio(dist: &PathDistribution) -> f64 {
    if dist.q == 0.0 {
        f64::INFINITY
    } else {
        dist.p / dist.q
    }
}

/// Expected leaked bits: high-cost paths reveal one XOR of open subpackets.
pub fn analytic_db_leakage(params: &SystemParams, layout: &PartitionLayout) -> Result<f64, LeakageError> {
    let dist = path_distribution(params)?;
    Ok((1.0 - dist.low_cost_mass()) * layout.open_subpacket_bits as f64)
}

/// Exact probability that database `db` receives each query vector when
/// message `desired` is wanted, by summing over every base vector.
pub fn structure_probabilities(dist: &PathDistribution, desired: usize, db: usize) -> BTreeMap<QueryVector, f64> {
    let n = dist.n_databases;
    let mut out = BTreeMap::new();
    for base in base_vectors(n, dist.n_messages) {
        let class = PathClass::of(&base, desired);
        let choice = PathChoice { base, desired, class };
        let q = make_queries(&choice, n).swap_remove(db);
        *out.entry(q).or_insert(0.0) += dist.probability(class);
    }
    out
}

/// Maximum of `P(v | k1, db) / P(v | k2, db)` by exact enumeration.
pub fn exact_structure_ratio(dist: &PathDistribution, cap: u64) -> Result<f64, LeakageError> {
    let n = dist.n_databases;
    let k = dist.n_messages;
    let states = (n as u128).pow(k as u32) * (n * k) as u128;
    if states > cap as u128 {
        return Err(LeakageError::StateSpaceTooLarge { states, cap });
    }
    let mut worst: f64 = 1.0;
    for db in 0..n {
        let tables: Vec<_> = (0..k).map(|i| structure_probabilities(dist, i, db)).collect();
        for v in tables[0].keys() {
            for a in &tables {
                for b in &tables {
                    let (pa, pb) = (a.get(v).copied().unwrap_or(0.0), b.get(v).copied().unwrap_or(0.0));
                    let r = if pb == 0.0 {
                        if pa == 0.0 {
                            1.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        pa / pb
                    };
                    worst = worst.max(r);
                }
            }
        }
    }
    Ok(worst)
}

/// Distribution of message contents for the enumeration oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum MessagePrior {
    /// Independent uniform messages.
    Uniform,
    /// Known messages (zero entropy).
    Fixed(Vec<BitString>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Leaked bits when message `k` is the desired one.
    pub per_desired: Vec<f64>,
    pub max_bits: f64,
}

/// Computes `I(W_{-k}; Q, A)` in bits by enumerating every path, message
/// assignment and key. The queries are independent of the messages, so this
/// is the path-weighted sum of `I(W_{-k}; A | Q = q)`.
pub fn exact_mi_oracle(
    params: &SystemParams,
    layout: &PartitionLayout,
    prior: &MessagePrior,
    cap: u64,
) -> Result<OracleReport, LeakageError> {
    let n = layout.n_databases;
    let k = layout.n_messages;
    let l = layout.message_bits;
    let s = layout.key_bits;

    let support_bits = match prior {
        MessagePrior::Uniform => k * l,
        MessagePrior::Fixed(ms) => {
            if ms.len() != k || ms.iter().any(|m| m.len() != l) {
                return Err(LeakageError::PriorMismatch(format!(
                    "expected {k} messages of {l} bits"
                )));
            }
            0
        }
    };
    let states = (n as u128)
        .checked_pow(k as u32)
        .and_then(|paths| paths.checked_mul(1u128.checked_shl((support_bits + s) as u32)?))
        .unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(LeakageError::StateSpaceTooLarge { states, cap });
    }

    let assignments: Vec<Vec<BitString>> = match prior {
        MessagePrior::Uniform => (0..1u64 << (k * l))
            .map(|bits| {
                let all = BitString::from_u64(bits, k * l);
                (0..k).map(|j| all.slice(j * l, l)).collect()
            })
            .collect(),
        MessagePrior::Fixed(ms) => vec![ms.clone()],
    };
    let keys: Vec<BitString> = (0..1u64 << s).map(|v| BitString::from_u64(v, s)).collect();
    let weight = 1.0 / (assignments.len() * keys.len()) as f64;
    let dist = path_distribution(params)?;

    let mut per_desired = Vec::with_capacity(k);
    for desired in 0..k {
        let mut total = 0.0;
        for base in base_vectors(n, k) {
            let class = PathClass::of(&base, desired);
            let path_prob = dist.probability(class);
            if path_prob == 0.0 {
                continue;
            }
            let choice = PathChoice { base, desired, class };
            let queries = make_queries(&choice, n);

            let mut joint: HashMap<(BitString, BitString), f64> = HashMap::new();
            let mut marginal_w: HashMap<BitString, f64> = HashMap::new();
            let mut marginal_a: HashMap<BitString, f64> = HashMap::new();
            for messages in &assignments {
                let others = BitString::concat(
                    messages
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != desired)
                        .map(|(_, m)| m),
                );
                for key in &keys {
                    let store = MessageStore::new(messages.clone(), key.clone(), layout)?;
                    let mut view = BitString::new();
                    for q in &queries {
                        let a = answer(&store, layout, q)?;
                        view.extend_from(&a.masked);
                        view.extend_from(&a.open);
                    }
                    *joint.entry((others.clone(), view.clone())).or_insert(0.0) += weight;
                    *marginal_w.entry(others.clone()).or_insert(0.0) += weight;
                    *marginal_a.entry(view).or_insert(0.0) += weight;
                }
            }
            let mi: f64 = joint
                .iter()
                .map(|((w, a), &pwa)| pwa * (pwa / (marginal_w[w] * marginal_a[a])).log2())
                .sum();
            total += path_prob * mi;
        }
        per_desired.push(total);
    }
    let max_bits = per_desired.iter().copied().fold(0.0, f64::max);
    Ok(OracleReport { per_desired, max_bits })
}

/// Monte-Carlo tabulation of per-database query frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAudit {
    /// Trials per desired message.
    pub trials: u64,
    /// Counts indexed by `(database, query)`, one entry per desired message.
    pub counts: BTreeMap<(usize, QueryVector), Vec<u64>>,
    pub max_ratio: f64,
    /// `SIGMAS`-sigma half-width of `max_ratio`.
    pub half_width: f64,
    pub bound: f64,
    /// Set when some ratio's lower confidence edge exceeds `bound`.
    pub violation: bool,
}

impl QueryAudit {
    /// Pearson chi-square test of query/message independence at one database.
    /// Returns `(statistic, degrees of freedom, p-value)`.
    pub fn chi_square(&self, db: usize) -> (f64, f64, f64) {
        let rows: Vec<&Vec<u64>> = self
            .counts
            .iter()
            .filter(|((d, _), _)| *d == db)
            .map(|(_, c)| c)
            .collect();
        let cols = rows.first().map_or(0, |r| r.len());
        let total: f64 = rows.iter().flat_map(|r| r.iter()).sum::<u64>() as f64;
        let col_sums: Vec<f64> = (0..cols)
            .map(|c| rows.iter().map(|r| r[c]).sum::<u64>() as f64)
            .collect();
        let mut stat = 0.0;
        for r in &rows {
            let row_sum = r.iter().sum::<u64>() as f64;
            for (c, &obs) in r.iter().enumerate() {
                let expected = row_sum * col_sums[c] / total;
                if expected > 0.0 {
                    stat += (obs as f64 - expected).powi(2) / expected;
                }
            }
        }
        let dof = ((rows.len().max(1) - 1) * (cols.max(1) - 1)) as f64;
        let p_value = if dof == 0.0 {
            1.0
        } else {
            1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat)
        };
        (stat, dof, p_value)
    }
}

/// Ratio of two frequencies and its `SIGMAS`-sigma half-width (delta method).
fn ratio_with_band(a: u64, b: u64, trials: u64) -> (f64, f64) {
    if b == 0 {
        return if a == 0 {
            (1.0, 0.0)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
    }
    let t = trials as f64;
    let (pa, pb) = (a as f64 / t, b as f64 / t);
    let r = pa / pb;
    let rel_var = if a == 0 { 0.0 } else { (1.0 - pa) / (t * pa) } + (1.0 - pb) / (t * pb);
    (r, SIGMAS * r * rel_var.sqrt())
}

pub fn empirical_query_audit(trials: u64, params: &SystemParams, seed: u64) -> Result<QueryAudit, LeakageError> {
    if trials < MIN_TRIALS {
        return Err(LeakageError::TooFewTrials(trials));
    }
    let dist = path_distribution(params)?;
    let n = params.n_databases;
    let k = params.n_messages;
    let mut counts: BTreeMap<(usize, QueryVector), Vec<u64>> = BTreeMap::new();
    for t in 0..trials {
        let mut rng = stream_rng(seed, t);
        for desired in 0..k {
            let choice = sample_path(&dist, desired, &mut rng);
            for (db, q) in make_queries(&choice, n).into_iter().enumerate() {
                counts.entry((db, q)).or_insert_with(|| vec![0; k])[desired] += 1;
            }
        }
    }

    let bound = params.eps.exp();
    let (mut max_ratio, mut half_width, mut violation) = (1.0, 0.0, false);
    for c in counts.values() {
        for &a in c {
            for &b in c {
                let (r, hw) = ratio_with_band(a, b, trials);
                if r > max_ratio {
                    max_ratio = r;
                    half_width = hw;
                }
                if r - hw > bound {
                    violation = true;
                }
            }
        }
    }
    Ok(QueryAudit {
        trials,
        counts,
        max_ratio,
        half_width,
        bound,
        violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostAudit {
    pub trials: u64,
    /// Mean downloaded bits divided by `L`.
    pub mean_cost: f64,
    pub std_error: f64,
    /// Expected cost for the realized key size.
    pub analytic_cost: f64,
    pub low_cost_fraction: f64,
    pub decode_failures: u64,
}

impl CostAudit {
    pub fn relative_error(&self) -> f64 {
        (self.mean_cost - self.analytic_cost).abs() / self.analytic_cost
    }

    /// Whether the mean lies inside the `SIGMAS`-sigma band around the analytic cost.
    pub fn within_band(&self) -> bool {
        (self.mean_cost - self.analytic_cost).abs() <= SIGMAS * self.std_error + 1e-12
    }
}

/// Runs full sessions (sample, query, answer, decode) against a random store
/// without any transport.
pub fn empirical_cost_audit(trials: u64, params: &SystemParams, seed: u64) -> Result<CostAudit, LeakageError> {
    let layout = scheme::plan_partition(params)?;
    empirical_cost_audit_with(trials, params, &layout, seed)
}

pub fn empirical_cost_audit_with(
    trials: u64,
    params: &SystemParams,
    layout: &PartitionLayout,
    seed: u64,
) -> Result<CostAudit, LeakageError> {
    if trials < MIN_TRIALS {
        return Err(LeakageError::TooFewTrials(trials));
    }
    let dist = path_distribution(params)?;
    let store = MessageStore::random(layout, &mut stream_rng(seed, u64::MAX));
    let n = params.n_databases;
    let l = params.message_bits as f64;

    let (mut sum, mut sum_sq, mut low, mut failures) = (0.0, 0.0, 0u64, 0u64);
    for t in 0..trials {
        let mut rng = stream_rng(seed, t);
        let desired = rand::Rng::gen_range(&mut rng, 0..params.n_messages);
        let choice = sample_path(&dist, desired, &mut rng);
        if choice.class == PathClass::LowCost {
            low += 1;
        }
        let queries = make_queries(&choice, n);
        let answers = queries
            .iter()
            .map(|q| answer(&store, layout, q))
            .collect::<Result<Vec<_>, _>>()?;
        match decode(&answers, &queries, desired) {
            Ok(w) if Some(&w) == store.message(desired) => {}
            _ => failures += 1,
        }
        let cost = answers.iter().map(|a| a.bits()).sum::<usize>() as f64 / l;
        sum += cost;
        sum_sq += cost * cost;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0);
    Ok(CostAudit {
        trials,
        mean_cost: mean,
        std_error: (var / t).sqrt(),
        analytic_cost: dist.expected_cost(layout),
        low_cost_fraction: low as f64 / t,
        decode_failures: failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub user_ratio_analytic: f64,
    pub user_ratio_empirical: f64,
    pub user_ratio_half_width: f64,
    pub user_bound: f64,
    pub db_leak_analytic_bits: f64,
    /// Present when the instance is small enough to enumerate.
    pub db_leak_exact_bits: Option<f64>,
    pub db_leak_budget_bits: f64,
    pub trials: u64,
    pub user_violation: bool,
    pub db_violation: bool,
}

/// Runs every auditor on one parameter point.
pub fn audit(params: &SystemParams, trials: u64, seed: u64) -> Result<LeakageReport, LeakageError> {
    let layout = scheme::plan_partition(params)?;
    let dist = path_distribution(params)?;
    let queries = empirical_query_audit(trials, params, seed)?;
    let analytic = analytic_db_leakage(params, &layout)?;
    let exact = match exact_mi_oracle(params, &layout, &MessagePrior::Uniform, DEFAULT_STATE_CAP) {
        Ok(r) => Some(r.max_bits),
        Err(LeakageError::StateSpaceTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let budget = params.leakage_budget_bits();
    let worst = exact.unwrap_or(analytic).max(analytic);
    Ok(LeakageReport {
        user_ratio_analytic: analytic_user_ratio(&dist),
        user_ratio_empirical: queries.max_ratio,
        user_ratio_half_width: queries.half_width,
        user_bound: queries.bound,
        db_leak_analytic_bits: analytic,
        db_leak_exact_bits: exact,
        db_leak_budget_bits: budget,
        trials,
        user_violation: queries.violation,
        db_violation: worst > budget + bounds::TOLERANCE,
    })
}
