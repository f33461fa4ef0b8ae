//! Closed-form download-cost and shared-randomness bounds.
//!
//! All quantities are normalized by the message length `L`. The achievable
//! side (`d_upper`, `alpha1`, `delta1`) comes from the path-biased scheme in
//! [`crate::scheme`]; the converse side (`d_lower`, `alpha2`, `delta2`) is
//! evaluated from its closed form only.
//!
//! Every expression is written in terms of `e^{-eps}` so that very large
//! budgets do not overflow. Budgets above [`BoundsConfig::eps_max`] (and
//! `eps = +inf`) are evaluated by their exact `eps -> inf` limits.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::SystemParams;

/// Absolute tolerance for comparisons between closed-form quantities.
pub const TOLERANCE: f64 = 1e-9;

/// Default cutoff above which `eps` is treated as `+inf`.
pub const DEFAULT_EPS_MAX: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("bounds need at least 2 databases, got {0} (see `proposition_n1` for N = 1)")]
    SingleDatabase(usize),
    #[error("need at least 2 messages, got {0}")]
    TooFewMessages(usize),
    #[error("database privacy budget must be finite and non-negative, got {0}")]
    InvalidDelta(f64),
}

/// Evaluation knobs shared by every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub eps_max: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            eps_max: DEFAULT_EPS_MAX,
        }
    }
}

/// Pre-computed terms for one `(N, K, eps)` point.
#[derive(Debug, Clone, Copy)]
struct Terms {
    n: f64,
    /// `N^{K-1}`
    m: f64,
    /// `e^{-eps}`, zero in the limit.
    inv_exp: f64,
    /// `(N e^eps)^{-(K-1)}`, zero in the limit.
    inv_r_pow: f64,
    limit: bool,
}

impl Terms {
    fn new(params: &SystemParams, config: &BoundsConfig) -> Result<Self, BoundsError> {
        if params.n_databases < 2 {
            return Err(BoundsError::SingleDatabase(params.n_databases));
        }
        if params.n_messages < 2 {
            return Err(BoundsError::TooFewMessages(params.n_messages));
        }
        if !params.delta.is_finite() || params.delta < 0.0 {
            return Err(BoundsError::InvalidDelta(params.delta));
        }
        let n = params.n_databases as f64;
        let km1 = (params.n_messages - 1) as i32;
        let limit = params.eps.is_infinite() || params.eps > config.eps_max;
        let (inv_exp, inv_r_pow) = if limit {
            (0.0, 0.0)
        } else {
            let inv_exp = (-params.eps).exp();
            (inv_exp, (inv_exp / n).powi(km1))
        };
        Ok(Self {
            n,
            m: n.powi(km1),
            inv_exp,
            inv_r_pow,
            limit,
        })
    }

    /// `N e^eps`, only meaningful outside the limit.
    fn r(&self) -> f64 {
        self.n / self.inv_exp
    }

    fn delta1(&self) -> f64 {
        let a = (self.m - 1.0) * self.inv_exp;
        a / ((self.n - 1.0) * (1.0 + a))
    }

    fn delta2(&self) -> f64 {
        if self.limit {
            0.0
        } else {
            (1.0 - self.inv_r_pow) / (self.r() - 1.0)
        }
    }
}

impl BoundsConfig {
    /// Largest database leakage the scheme can use productively; at or above
    /// it no shared randomness is needed.
    pub fn delta1_threshold(&self, params: &SystemParams) -> Result<f64, BoundsError> {
        Ok(Terms::new(params, self)?.delta1())
    }

    /// Key rate used by the scheme, as a fraction of `L`.
    pub fn alpha1_rate(&self, params: &SystemParams) -> Result<f64, BoundsError> {
        let t = Terms::new(params, self)?;
        let delta = params.delta;
        if delta >= t.delta1() {
            return Ok(0.0);
        }
        // delta < delta1 implies eps is finite here
        let slope = (1.0 / t.inv_exp + t.m - 1.0) / (t.m - 1.0);
        Ok((1.0 / (t.n - 1.0) - delta * slope).max(0.0))
    }

    /// Normalized download cost achieved by the scheme (upper bound on the optimum).
    pub fn d_upper(&self, params: &SystemParams) -> Result<f64, BoundsError> {
        let t = Terms::new(params, self)?;
        let delta1 = t.delta1();
        if params.delta >= delta1 {
            return Ok(1.0 + delta1);
        }
        Ok(1.0 + 1.0 / (t.n - 1.0) - params.delta / (t.inv_exp * (t.m - 1.0)))
    }

    pub fn delta2_threshold(&self, params: &SystemParams) -> Result<f64, BoundsError> {
        Ok(Terms::new(params, self)?.delta2())
    }

    /// Lower bound on the optimal shared-randomness rate.
    pub fn alpha2_rate(&self, params: &SystemParams) -> Result<f64, BoundsError> {
        let t = Terms::new(params, self)?;
        if params.delta >= t.delta2() {
            return Ok(0.0);
        }
        Ok((1.0 / (t.r() - 1.0) - params.delta / (1.0 - t.inv_r_pow)).max(0.0))
    }

    /// Lower bound on the optimal normalized download cost.
    pub fn d_lower(&self, params: &SystemParams) -> Result<f64, BoundsError> {
        let t = Terms::new(params, self)?;
        let delta2 = t.delta2();
        if params.delta >= delta2 {
            return Ok(1.0 + delta2);
        }
        Ok(1.0 + 1.0 / (t.r() - 1.0) - params.delta * t.inv_r_pow / (1.0 - t.inv_r_pow))
    }

    /// `(d_upper / d_lower, (N - e^{-eps}) / (N - 1))`.
    pub fn gap_ratio(&self, params: &SystemParams) -> Result<(f64, f64), BoundsError> {
        let t = Terms::new(params, self)?;
        let ratio = self.d_upper(params)? / self.d_lower(params)?;
        let cap = (t.n - t.inv_exp) / (t.n - 1.0);
        Ok((ratio, cap))
    }

    pub fn classify_regime(&self, params: &SystemParams) -> Result<RegimeInfo, BoundsError> {
        let t = Terms::new(params, self)?;
        let n = t.n;
        let delta = params.delta;
        let delta1 = t.delta1();

        let info = if params.eps == 0.0 {
            if delta == 0.0 {
                RegimeInfo::exact(Regime::Spir, n / (n - 1.0))
            } else if delta >= delta1 * (1.0 - TOLERANCE) {
                let cost = (0..params.n_messages).map(|j| n.powi(-(j as i32))).sum();
                RegimeInfo::exact(Regime::Pir, cost)
            } else {
                RegimeInfo::exact(Regime::LeakyDb, n / (n - 1.0) - delta / (t.m - 1.0))
            }
        } else if t.limit && delta == 0.0 {
            RegimeInfo::exact(Regime::NoPrivacy, 1.0)
        } else if delta >= delta1 {
            RegimeInfo {
                regime: Regime::LeakyPir,
                reference: Some(ReferenceCost {
                    lower: 1.0 + t.delta2(),
                    upper: 1.0 + delta1,
                }),
            }
        } else {
            RegimeInfo {
                regime: Regime::General,
                reference: None,
            }
        };
        Ok(info)
    }

    pub fn report(&self, params: &SystemParams) -> Result<BoundsReport, BoundsError> {
        let (gap_ratio, gap_cap) = self.gap_ratio(params)?;
        Ok(BoundsReport {
            d_upper: self.d_upper(params)?,
            d_lower: self.d_lower(params)?,
            alpha1: self.alpha1_rate(params)?,
            alpha2: self.alpha2_rate(params)?,
            delta1: self.delta1_threshold(params)?,
            delta2: self.delta2_threshold(params)?,
            gap_ratio,
            gap_cap,
            regime: self.classify_regime(params)?.regime,
        })
    }
}

pub fn delta1_threshold(params: &SystemParams) -> Result<f64, BoundsError> {
    BoundsConfig::default().delta1_threshold(params)
}

pub fn alpha1_rate(params: &SystemParams) -> Result<f64, BoundsError> {
    BoundsConfig::default().alpha1_rate(params)
}

pub fn d_upper(params: &SystemParams) -> Result<f64, BoundsError> {
    BoundsConfig::default().d_upper(params)
}

pub fn delta2_threshold(params: &SystemParams) -> Result<f64, BoundsError> {
    BoundsConfig::default().delta2_threshold(params)
}

pub fn alpha2_rate(params: &SystemParams) -> Result<f64, BoundsError> {
    BoundsConfig::default().alpha2_rate(params)
}

pub fn d_lower(params: &SystemParams) -> Result<f64, BoundsError> {
    BoundsConfig::default().d_lower(params)
}

pub fn gap_ratio(params: &SystemParams) -> Result<(f64, f64), BoundsError> {
    BoundsConfig::default().gap_ratio(params)
}

pub fn classify_regime(params: &SystemParams) -> Result<RegimeInfo, BoundsError> {
    BoundsConfig::default().classify_regime(params)
}

pub fn report(params: &SystemParams) -> Result<BoundsReport, BoundsError> {
    BoundsConfig::default().report(params)
}

/// Outcome for a single database, where every message must be downloaded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleDatabaseCost {
    Infeasible,
    Cost(usize),
}

/// With `N = 1` the only private strategy is to download all `K` messages,
/// which leaks `K - 1` message-lengths about the rest.
pub fn proposition_n1(n_messages: usize, delta: f64) -> Result<SingleDatabaseCost, BoundsError> {
    if n_messages < 2 {
        return Err(BoundsError::TooFewMessages(n_messages));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(BoundsError::InvalidDelta(delta));
    }
    if delta < (n_messages - 1) as f64 {
        Ok(SingleDatabaseCost::Infeasible)
    } else {
        Ok(SingleDatabaseCost::Cost(n_messages))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "SPIR")]
    Spir,
    #[serde(rename = "PIR")]
    Pir,
    #[serde(rename = "L-PIR")]
    LeakyPir,
    #[serde(rename = "LeakyDB")]
    LeakyDb,
    NoPrivacy,
    General,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Spir => "SPIR",
            Regime::Pir => "PIR",
            Regime::LeakyPir => "L-PIR",
            Regime::LeakyDb => "LeakyDB",
            Regime::NoPrivacy => "NoPrivacy",
            Regime::General => "General",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Known optimal cost (or cost bracket) for a named regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCost {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub regime: Regime,
    pub reference: Option<ReferenceCost>,
}

impl RegimeInfo {
    fn exact(regime: Regime, cost: f64) -> Self {
        Self {
            regime,
            reference: Some(ReferenceCost {
                lower: cost,
                upper: cost,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub d_upper: f64,
    pub d_lower: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub gap_ratio: f64,
    pub gap_cap: f64,
    pub regime: Regime,
}
