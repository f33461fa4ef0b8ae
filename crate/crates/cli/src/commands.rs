use std::io::Write;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use alpir::bounds::{self, SingleDatabaseCost, TOLERANCE};
use alpir::leakage::{self, MessagePrior, DEFAULT_STATE_CAP, MIN_TRIALS};
use alpir::netsim::{run_trials, TransportKind, TrialConfig, TrialStats};
use alpir::scheme::{
    base_vectors, exhaustive_check, layout_with_key_bits, make_queries, path_distribution, plan_partition, PathChoice,
    PathClass,
};
use alpir::SystemParams;

use crate::config::{Format, Preset, RunConfig};

/// One bounds evaluation. For a single database only `d_upper`/`d_lower`
/// (both `K` when feasible) and `regime` are filled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub series: String,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub d_upper: Option<f64>,
    pub d_lower: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub gap_ratio: Option<f64>,
    pub gap_cap: Option<f64>,
    pub regime: String,
}

pub const BOUNDS_FIELDS: &[&str] = &[
    "series",
    "n",
    "k",
    "eps",
    "delta",
    "d_upper",
    "d_lower",
    "alpha1",
    "alpha2",
    "delta1",
    "delta2",
    "gap_ratio",
    "gap_cap",
    "regime",
];

pub fn bounds_row(series: &str, n: usize, k: usize, eps: f64, delta: f64) -> Result<BoundsRow> {
    let mut row = BoundsRow {
        series: series.to_string(),
        n,
        k,
        eps,
        delta,
        d_upper: None,
        d_lower: None,
        alpha1: None,
        alpha2: None,
        delta1: None,
        delta2: None,
        gap_ratio: None,
        gap_cap: None,
        regime: String::new(),
    };
    if n == 1 {
        match bounds::proposition_n1(k, delta)? {
            SingleDatabaseCost::Infeasible => row.regime = "Infeasible".into(),
            SingleDatabaseCost::Cost(c) => {
                row.d_upper = Some(c as f64);
                row.d_lower = Some(c as f64);
                row.regime = "SingleDatabase".into();
            }
        }
        return Ok(row);
    }
    let params = SystemParams::for_bounds(n, k, eps, delta)?;
    let r = bounds::report(&params)?;
    row.d_upper = Some(r.d_upper);
    row.d_lower = Some(r.d_lower);
    row.alpha1 = Some(r.alpha1);
    row.alpha2 = Some(r.alpha2);
    row.delta1 = Some(r.delta1);
    row.delta2 = Some(r.delta2);
    row.gap_ratio = Some(r.gap_ratio);
    row.gap_cap = Some(r.gap_cap);
    row.regime = r.regime.as_str().into();
    Ok(row)
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<Vec<BoundsRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            for &eps in &cfg.eps {
                for &delta in &cfg.delta {
                    rows.push(bounds_row("grid", n, k, eps, delta)?);
                }
            }
        }
    }
    Ok(rows)
}

/// Path, query and answer size for one database in one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRow {
    pub desired: usize,
    pub base: String,
    pub class: String,
    pub probability: f64,
    pub db: usize,
    pub query: String,
    pub answer_bits: usize,
    pub session_bits: usize,
    pub leaked_bits: usize,
}

pub const PATH_FIELDS: &[&str] = &[
    "desired",
    "base",
    "class",
    "probability",
    "db",
    "query",
    "answer_bits",
    "session_bits",
    "leaked_bits",
];

const MAX_TRACE_PATHS: u64 = 4096;

pub fn path_trace(cfg: &RunConfig) -> Result<Vec<PathRow>> {
    let (n, k, l, eps, delta) = cfg.point()?;
    let params = SystemParams::new(n, k, l, eps, delta)?;
    if (n as u64).checked_pow(k as u32).is_none_or(|p| p > MAX_TRACE_PATHS) {
        bail!("path trace is limited to {MAX_TRACE_PATHS} paths");
    }
    let layout = plan_partition(&params)?;
    let dist = path_distribution(&params)?;
    let mut rows = Vec::new();
    for desired in 0..k {
        for base in base_vectors(n, k) {
            let choice = PathChoice::new(base, desired, n)?;
            let queries = make_queries(&choice, n);
            let bits: Vec<usize> = queries
                .iter()
                .map(|q| layout.key_bits + if q.is_zero() { 0 } else { layout.open_subpacket_bits })
                .collect();
            let session_bits = bits.iter().sum();
            let leaked_bits = match choice.class {
                PathClass::LowCost => 0,
                PathClass::HighCost => layout.open_subpacket_bits,
            };
            let base = alpir::QueryVector(choice.base.clone()).to_string();
            for (db, q) in queries.iter().enumerate() {
                rows.push(PathRow {
                    desired,
                    base: base.clone(),
                    class: choice.class.to_string(),
                    probability: dist.probability(choice.class),
                    db,
                    query: q.to_string(),
                    answer_bits: bits[db],
                    session_bits,
                    leaked_bits,
                });
            }
        }
    }
    Ok(rows)
}

pub enum SweepOutput {
    Bounds(Vec<BoundsRow>),
    Paths(Vec<PathRow>),
}

/// `delta` used by the small-leakage preset; below both thresholds for eps in [0, 10].
pub const SMALL_LEAKAGE_DELTA: f64 = 4e-5;
pub const FIGURE_DELTAS: [f64; 4] = [0.0, 0.1, 0.2, 0.4];

fn eps_axis(cfg: &RunConfig) -> Vec<f64> {
    if cfg.eps_from_grid {
        cfg.eps.clone()
    } else {
        (0..=100).map(|i| i as f64 * 0.1).collect()
    }
}

pub fn cmd_sweep(preset: Preset, cfg: &RunConfig) -> Result<SweepOutput> {
    let eps_axis = eps_axis(cfg);
    let mut rows = Vec::new();
    match preset {
        Preset::PathTrace => return Ok(SweepOutput::Paths(path_trace(cfg)?)),
        Preset::CostVsEps => {
            for delta in FIGURE_DELTAS {
                for &eps in &eps_axis {
                    rows.push(bounds_row(&format!("delta={delta}"), 2, 2, eps, delta)?);
                }
            }
            for &eps in &eps_axis {
                let d1 = bounds::delta1_threshold(&SystemParams::for_bounds(2, 2, eps, 0.0)?)?;
                rows.push(bounds_row("delta=delta1", 2, 2, eps, d1)?);
            }
        }
        Preset::BoundsMaxLeakage | Preset::BoundsSmallLeakage => {
            let series = if preset == Preset::BoundsMaxLeakage {
                "max-leakage"
            } else {
                "small-leakage"
            };
            for n in [2, 3, 5] {
                for k in [2, 3, 4] {
                    for &eps in &eps_axis {
                        let delta = if preset == Preset::BoundsMaxLeakage {
                            let p = SystemParams::for_bounds(n, k, eps, 0.0)?;
                            bounds::delta1_threshold(&p)?.max(bounds::delta2_threshold(&p)?)
                        } else {
                            SMALL_LEAKAGE_DELTA
                        };
                        rows.push(bounds_row(series, n, k, eps, delta)?);
                    }
                }
            }
        }
    }
    Ok(SweepOutput::Bounds(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub key_bits: usize,
    pub effective_alpha: f64,
    pub mean_cost: f64,
    pub std_error: f64,
    /// Expected cost with the realized key size.
    pub analytic_cost: f64,
    pub d_upper: f64,
    pub relative_error: f64,
    pub low_fraction: f64,
    pub expected_low_fraction: f64,
    pub mean_leaked_bits: f64,
    pub db_leak_analytic_bits: f64,
    pub db_leak_exact_bits: Option<f64>,
    pub db_leak_budget_bits: f64,
    pub user_ratio_analytic: f64,
    pub user_ratio_empirical: f64,
    pub user_ratio_half_width: f64,
    pub user_bound: f64,
    pub decode_failures: u64,
    pub cost_flag: bool,
    pub user_flag: bool,
    pub db_flag: bool,
}

pub const SIMULATE_FIELDS: &[&str] = &[
    "n",
    "k",
    "l",
    "eps",
    "delta",
    "trials",
    "seed",
    "key_bits",
    "effective_alpha",
    "mean_cost",
    "std_error",
    "analytic_cost",
    "d_upper",
    "relative_error",
    "low_fraction",
    "expected_low_fraction",
    "mean_leaked_bits",
    "db_leak_analytic_bits",
    "db_leak_exact_bits",
    "db_leak_budget_bits",
    "user_ratio_analytic",
    "user_ratio_empirical",
    "user_ratio_half_width",
    "user_bound",
    "decode_failures",
    "cost_flag",
    "user_flag",
    "db_flag",
];

impl SimulateReport {
    pub fn any_flag(&self) -> bool {
        self.cost_flag || self.user_flag || self.db_flag || self.decode_failures > 0
    }
}

pub fn cmd_simulate(cfg: &RunConfig, transport: TransportKind, relabel: bool) -> Result<(SimulateReport, TrialStats)> {
    let (n, k, l, eps, delta) = cfg.point()?;
    if n == 1 {
        bail!("a single database has no scheme to simulate; `alpir bounds --n 1` reports its cost");
    }
    if cfg.trials < MIN_TRIALS {
        bail!("simulate needs at least {MIN_TRIALS} trials, got {}", cfg.trials);
    }
    let params = SystemParams::new(n, k, l, eps, delta)?;
    let mut trial_cfg = TrialConfig::new(params, cfg.trials, cfg.seed);
    trial_cfg.transport = transport;
    trial_cfg.relabel_databases = relabel;
    let stats = run_trials(&trial_cfg)?;
    let audit = leakage::audit(&params, cfg.trials, cfg.seed)?;
    let within = (stats.mean_cost - stats.analytic_cost).abs() <= leakage::SIGMAS * stats.std_error + 1e-12;
    let report = SimulateReport {
        n,
        k,
        l,
        eps,
        delta,
        trials: cfg.trials,
        seed: cfg.seed,
        key_bits: stats.layout.key_bits,
        effective_alpha: stats.layout.effective_alpha,
        mean_cost: stats.mean_cost,
        std_error: stats.std_error,
        analytic_cost: stats.analytic_cost,
        d_upper: bounds::d_upper(&params)?,
        relative_error: stats.relative_error(),
        low_fraction: stats.low_cost_fraction,
        expected_low_fraction: stats.expected_low_fraction,
        mean_leaked_bits: stats.mean_leaked_bits,
        db_leak_analytic_bits: audit.db_leak_analytic_bits,
        db_leak_exact_bits: audit.db_leak_exact_bits,
        db_leak_budget_bits: audit.db_leak_budget_bits,
        user_ratio_analytic: audit.user_ratio_analytic,
        user_ratio_empirical: audit.user_ratio_empirical,
        user_ratio_half_width: audit.user_ratio_half_width,
        user_bound: audit.user_bound,
        decode_failures: stats.decode_failures,
        cost_flag: !within,
        user_flag: audit.user_violation,
        db_flag: audit.db_violation,
    };
    Ok((report, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

pub const CHECK_FIELDS: &[&str] = &["check", "passed", "detail"];

fn check(name: &str, passed: bool, detail: impl Into<String>) -> CheckRow {
    CheckRow {
        check: name.into(),
        passed,
        detail: detail.into(),
    }
}

const GRID_N: [usize; 3] = [2, 3, 5];
const GRID_K: [usize; 3] = [2, 3, 4];

fn grid_points() -> impl Iterator<Item = (usize, usize, f64, f64)> {
    GRID_N.into_iter().flat_map(|n| {
        GRID_K.into_iter().flat_map(move |k| {
            (0..=20).flat_map(move |e| (0..=20).map(move |d| (n, k, e as f64 * 0.25, d as f64 * 0.05)))
        })
    })
}

fn first_failure<I: Iterator<Item = Result<Option<String>>>>(it: I) -> Result<(bool, String)> {
    let mut count = 0;
    for r in it {
        count += 1;
        if let Some(msg) = r? {
            return Ok((false, msg));
        }
    }
    Ok((true, format!("{count} cases")))
}

pub fn spir_point_check() -> Result<CheckRow> {
    let (ok, detail) = first_failure(GRID_N.into_iter().map(|n| {
        let p = SystemParams::for_bounds(n, 2, 0.0, 0.0)?;
        let target = n as f64 / (n as f64 - 1.0);
        let rate = 1.0 / (n as f64 - 1.0);
        let r = bounds::report(&p)?;
        let bad = (r.d_upper - target).abs() > 1e-12
            || (r.d_lower - target).abs() > 1e-12
            || (r.alpha1 - rate).abs() > 1e-12
            || (r.alpha2 - rate).abs() > 1e-12;
        Ok(bad.then(|| {
            format!(
                "N={n}: d_upper={} d_lower={} alpha1={} alpha2={}",
                r.d_upper, r.d_lower, r.alpha1, r.alpha2
            )
        }))
    }))?;
    Ok(check("spir_point", ok, detail))
}

pub fn pir_point_check() -> Result<CheckRow> {
    let cases = [2usize, 3]
        .into_iter()
        .flat_map(|n| [2usize, 3, 4].into_iter().map(move |k| (n, k)));
    let (ok, detail) = first_failure(cases.map(|(n, k)| {
        let d1 = bounds::delta1_threshold(&SystemParams::for_bounds(n, k, 0.0, 0.0)?)?;
        let du = bounds::d_upper(&SystemParams::for_bounds(n, k, 0.0, d1)?)?;
        let target: f64 = (0..k).map(|j| (n as f64).powi(-(j as i32))).sum();
        Ok(((du - target).abs() > 1e-12).then(|| format!("N={n} K={k}: {du} vs {target}")))
    }))?;
    Ok(check("pir_point", ok, detail))
}

pub fn gap_law_check() -> Result<CheckRow> {
    let (ok, detail) = first_failure(grid_points().map(|(n, k, eps, delta)| {
        let p = SystemParams::for_bounds(n, k, eps, delta)?;
        let (ratio, cap) = bounds::gap_ratio(&p)?;
        let bad = ratio > cap + TOLERANCE || (eps == 0.0 && (ratio - 1.0).abs() > TOLERANCE);
        Ok(bad.then(|| format!("({n},{k},{eps},{delta}): ratio {ratio} cap {cap}")))
    }))?;
    Ok(check("gap_law", ok, detail))
}

pub fn threshold_order_check() -> Result<CheckRow> {
    let (ok, detail) = first_failure(grid_points().map(|(n, k, eps, delta)| {
        let r = bounds::report(&SystemParams::for_bounds(n, k, eps, delta)?)?;
        let bad = r.delta1 < r.delta2 - TOLERANCE || r.alpha1 < r.alpha2 - TOLERANCE || r.alpha2 < 0.0;
        Ok(bad.then(|| format!("({n},{k},{eps},{delta}): {r:?}")))
    }))?;
    Ok(check("threshold_order", ok, detail))
}

pub fn continuity_check() -> Result<CheckRow> {
    let cases = GRID_N.into_iter().flat_map(|n| {
        GRID_K
            .into_iter()
            .flat_map(move |k| (0..=20).map(move |e| (n, k, e as f64 * 0.25)))
    });
    let below = |x: f64| if x > 0.0 { x * (1.0 - 1e-15) } else { 0.0 };
    let (ok, detail) = first_failure(cases.map(|(n, k, eps)| {
        let p = SystemParams::for_bounds(n, k, eps, 0.0)?;
        let (d1, d2) = (bounds::delta1_threshold(&p)?, bounds::delta2_threshold(&p)?);
        let up = (bounds::d_upper(&p.with_delta(d1))? - bounds::d_upper(&p.with_delta(below(d1)))?).abs();
        let lo = (bounds::d_lower(&p.with_delta(d2))? - bounds::d_lower(&p.with_delta(below(d2)))?).abs();
        Ok((up > 1e-12 || lo > 1e-12).then(|| format!("({n},{k},{eps}): jumps {up} {lo}")))
    }))?;
    Ok(check("boundary_continuity", ok, detail))
}

pub fn zero_eps_check() -> Result<CheckRow> {
    let (ok, detail) = first_failure(grid_points().filter(|p| p.2 == 0.0).map(|(n, k, eps, delta)| {
        let r = bounds::report(&SystemParams::for_bounds(n, k, eps, delta)?)?;
        let bad = (r.d_upper - r.d_lower).abs() > 1e-12
            || (r.alpha1 - r.alpha2).abs() > 1e-12
            || (r.delta1 - r.delta2).abs() > 1e-12;
        Ok(bad.then(|| format!("({n},{k},0,{delta}): {r:?}")))
    }))?;
    Ok(check("zero_eps_equalities", ok, detail))
}

pub fn proposition_check() -> Result<CheckRow> {
    let cases = [2usize, 3, 5].into_iter().flat_map(|k| {
        [0.0, k as f64 - 1.5, k as f64 - 1.0, k as f64]
            .into_iter()
            .map(move |d| (k, d))
    });
    let (ok, detail) = first_failure(cases.map(|(k, delta)| {
        let got = bounds::proposition_n1(k, delta.max(0.0))?;
        let want = if delta.max(0.0) < k as f64 - 1.0 {
            SingleDatabaseCost::Infeasible
        } else {
            SingleDatabaseCost::Cost(k)
        };
        Ok((got != want).then(|| format!("K={k} delta={delta}: {got:?}")))
    }))?;
    Ok(check("proposition_n1", ok, detail))
}

/// `(N, K, L, key sizes)` decoded exhaustively.
pub const EXHAUSTIVE_CASES: &[(usize, usize, usize, &[usize])] = &[(2, 2, 2, &[0, 1]), (3, 2, 4, &[0, 1, 2])];

pub fn exhaustive_correctness_check() -> Result<CheckRow> {
    let mut total = 0;
    for &(n, k, l, keys) in EXHAUSTIVE_CASES {
        let params = SystemParams::new(n, k, l, 0.5, 0.0)?;
        for &s in keys {
            let layout = layout_with_key_bits(&params, s)?;
            let summary = exhaustive_check(&layout, 1 << 22)?;
            total += summary.cases;
            if summary.failures > 0 {
                return Ok(check(
                    "exhaustive_correctness",
                    false,
                    format!(
                        "({n},{k},{l}) s={s}: {} of {} sessions failed",
                        summary.failures, summary.cases
                    ),
                ));
            }
        }
    }
    Ok(check("exhaustive_correctness", true, format!("{total} sessions")))
}

pub fn structure_law_check() -> Result<CheckRow> {
    let cases = GRID_N.into_iter().flat_map(|n| {
        GRID_K
            .into_iter()
            .flat_map(move |k| (0..=20).map(move |e| (n, k, e as f64 * 0.25)))
    });
    let (ok, detail) = first_failure(cases.map(|(n, k, eps)| {
        let dist = path_distribution(&SystemParams::for_bounds(n, k, eps, 0.0)?)?;
        let analytic = leakage::analytic_user_ratio(&dist);
        let exact = leakage::exact_structure_ratio(&dist, DEFAULT_STATE_CAP)?;
        let tol = 1e-12 * eps.exp();
        let bad = (analytic - eps.exp()).abs() > tol || (exact - eps.exp()).abs() > tol;
        Ok(bad.then(|| format!("({n},{k},{eps}): analytic {analytic} exact {exact}")))
    }))?;
    Ok(check("structure_law", ok, detail))
}

/// Small instances where the mutual information is enumerated exactly.
pub const ORACLE_CASES: &[(usize, usize, usize, f64, f64)] = &[
    (2, 2, 1, 0.0, 0.0),
    (2, 2, 2, 0.4, 0.1),
    (2, 2, 3, 0.405_465_108_108_164_4, 0.266_666_666_666_666_7),
    (2, 3, 2, 1.0, 0.3),
    (3, 2, 2, 0.7, 0.2),
    (3, 2, 4, 2.0, 1.0),
];

pub fn oracle_agreement_check() -> Result<CheckRow> {
    let (ok, detail) = first_failure(ORACLE_CASES.iter().map(|&(n, k, l, eps, delta)| {
        let params = SystemParams::new(n, k, l, eps, delta)?;
        let layout = plan_partition(&params)?;
        let exact = leakage::exact_mi_oracle(&params, &layout, &MessagePrior::Uniform, DEFAULT_STATE_CAP)?;
        let analytic = leakage::analytic_db_leakage(&params, &layout)?;
        let budget = params.leakage_budget_bits();
        let bad =
            exact.per_desired.iter().any(|b| (b - analytic).abs() > TOLERANCE) || exact.max_bits > budget + TOLERANCE;
        Ok(bad.then(|| {
            format!(
                "({n},{k},{l},{eps},{delta}): exact {} analytic {analytic} budget {budget}",
                exact.max_bits
            )
        }))
    }))?;
    Ok(check("oracle_agreement", ok, detail))
}

/// Database leakage at one point, optionally with a key one bit short.
pub fn point_leakage_check(params: &SystemParams, short_key: bool) -> Result<CheckRow> {
    let planned = plan_partition(params)?;
    let layout = if short_key {
        if planned.key_bits == 0 {
            bail!("the planned key is already empty at this point; nothing to shorten");
        }
        layout_with_key_bits(params, planned.key_bits - 1)?
    } else {
        planned
    };
    let analytic = leakage::analytic_db_leakage(params, &layout)?;
    let (leak, how) = match leakage::exact_mi_oracle(params, &layout, &MessagePrior::Uniform, DEFAULT_STATE_CAP) {
        Ok(r) => (r.max_bits.max(analytic), "exact"),
        Err(leakage::LeakageError::StateSpaceTooLarge { .. }) => (analytic, "analytic"),
        Err(e) => return Err(e.into()),
    };
    let budget = params.leakage_budget_bits();
    Ok(check(
        "db_leakage_at_point",
        leak <= budget + TOLERANCE,
        format!(
            "key {} bits, {how} leakage {leak} bits, budget {budget} bits",
            layout.key_bits
        ),
    ))
}

pub fn cost_accounting_check() -> Result<CheckRow> {
    let cases = GRID_N.into_iter().flat_map(|n| {
        GRID_K.into_iter().flat_map(move |k| {
            [(0.0, 0.0), (0.5, 0.1), (2.0, 0.05), (5.0, 1.0)]
                .into_iter()
                .map(move |(e, d)| (n, k, e, d))
        })
    });
    let (ok, detail) = first_failure(cases.map(|(n, k, eps, delta)| {
        let params = SystemParams::new(n, k, 12 * (n - 1), eps, delta)?;
        let layout = plan_partition(&params)?;
        let dist = path_distribution(&params)?;
        let nf = n as f64;
        let closed = 1.0 + 1.0 / (nf - 1.0) - dist.p * nf * (1.0 / (nf - 1.0) - layout.effective_alpha);
        let got = dist.expected_cost(&layout);
        Ok(((got - closed).abs() > 1e-12).then(|| format!("({n},{k},{eps},{delta}): {got} vs {closed}")))
    }))?;
    Ok(check("cost_accounting", ok, detail))
}

pub fn cmd_verify(cfg: &RunConfig, inject_short_key: bool) -> Result<Vec<CheckRow>> {
    let (n, k, l, eps, delta) = cfg.point()?;
    if n == 1 {
        let verdict = match bounds::proposition_n1(k, delta)? {
            SingleDatabaseCost::Infeasible => format!("K={k} delta={delta}: infeasible, needs delta >= {}", k - 1),
            SingleDatabaseCost::Cost(c) => format!("K={k} delta={delta}: cost {c}"),
        };
        return Ok(vec![check("proposition_n1_point", true, verdict)]);
    }
    let params = SystemParams::new(n, k, l, eps, delta).context("verify point")?;
    Ok(vec![
        spir_point_check()?,
        pir_point_check()?,
        gap_law_check()?,
        threshold_order_check()?,
        continuity_check()?,
        zero_eps_check()?,
        proposition_check()?,
        exhaustive_correctness_check()?,
        structure_law_check()?,
        oracle_agreement_check()?,
        cost_accounting_check()?,
        point_leakage_check(&params, inject_short_key)?,
    ])
}

/// Writes rows as CSV (with header) or one JSON object per line.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], header: &[&str], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::JsonLines => {
            let mut out = out;
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}
