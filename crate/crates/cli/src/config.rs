//! Flag resolution: command line, then `ALPIR_*` environment variables, then
//! an optional `key=value` config file, then built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use alpir::netsim::TransportKind;

/// Inclusive linear grid `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            bail!("grid bounds must be finite");
        }
        if step <= 0.0 {
            bail!("grid step must be positive, got {step}");
        }
        if stop < start {
            bail!("grid stop {stop} is below start {start}");
        }
        Ok(Self { start, stop, step })
    }

    /// Points are `start + i * step`, so long grids do not drift.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            bail!("expected start:stop:step, got {s:?}");
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .with_context(|| format!("bad grid number {x:?}"))
        };
        Grid::new(num(a)?, num(b)?, num(c)?)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Format {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transport {
    Memory,
    Tcp,
}

impl From<Transport> for TransportKind {
    fn from(t: Transport) -> Self {
        match t {
            Transport::Memory => TransportKind::Memory,
            Transport::Tcp => TransportKind::Tcp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Scheme cost against eps for N = K = 2 and several delta.
    CostVsEps,
    /// Both bounds against eps with delta above both thresholds.
    BoundsMaxLeakage,
    /// Both bounds against eps with delta = 4e-5.
    BoundsSmallLeakage,
    /// Every path, query and answer size at one parameter point.
    PathTrace,
}

#[derive(Debug, Parser)]
#[command(
    name = "alpir",
    version,
    about = "Asymmetric leaky PIR: bounds, sweeps, simulation and verification"
)]
pub struct Cli {
    /// key=value file supplying values for any flag not given otherwise
    #[arg(long, global = true, env = "ALPIR_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form bounds over a parameter grid
    Bounds(CommonArgs),
    /// Figure data presets
    Sweep {
        #[arg(long, value_enum)]
        preset: Preset,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run sessions against simulated servers and compare with the analysis
    Simulate {
        #[arg(long, value_enum, env = "ALPIR_TRANSPORT")]
        transport: Option<Transport>,
        /// Send queries to databases in their natural order
        #[arg(long)]
        no_relabel: bool,
        /// Also write one CSV row per session here
        #[arg(long, env = "ALPIR_RECORDS")]
        records: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Self-check suite; exits nonzero on any failure
    Verify {
        /// Shrink the key by one bit at the configured point
        #[arg(long)]
        inject_short_key: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Databases (comma-separated list allowed for bounds)
    #[arg(long, env = "ALPIR_N", value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Messages (comma-separated list allowed for bounds)
    #[arg(long, env = "ALPIR_K", value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Message length in bits
    #[arg(long, env = "ALPIR_L")]
    pub l: Option<usize>,
    /// User privacy budget (natural log scale); `inf` allowed
    #[arg(long, env = "ALPIR_EPS", conflicts_with = "eps_grid")]
    pub eps: Option<f64>,
    #[arg(long, env = "ALPIR_DELTA", conflicts_with = "delta_grid")]
    pub delta: Option<f64>,
    #[arg(long, env = "ALPIR_EPS_GRID")]
    pub eps_grid: Option<Grid>,
    #[arg(long, env = "ALPIR_DELTA_GRID")]
    pub delta_grid: Option<Grid>,
    #[arg(long, env = "ALPIR_TRIALS")]
    pub trials: Option<u64>,
    #[arg(long, env = "ALPIR_SEED")]
    pub seed: Option<u64>,
    /// Output file (stdout when absent)
    #[arg(long, env = "ALPIR_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, env = "ALPIR_FORMAT")]
    pub format: Option<Format>,
}

/// Fully resolved settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub l: usize,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    /// Whether `eps` came from a grid rather than a single value.
    pub eps_from_grid: bool,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_N: usize = 2;
pub const DEFAULT_K: usize = 2;
pub const DEFAULT_L: usize = 3;
pub const DEFAULT_DELTA: f64 = 4.0 / 15.0;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 0;

pub fn default_eps() -> f64 {
    1.5f64.ln()
}

const CONFIG_KEYS: &[&str] = &[
    "n",
    "k",
    "l",
    "eps",
    "delta",
    "eps_grid",
    "delta_grid",
    "trials",
    "seed",
    "out",
    "format",
    "transport",
    "records",
];

/// Reads `key=value` lines; `#` starts a comment, dashes in keys are accepted.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value", i + 1))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key {key:?}", i + 1);
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("config {key}={v:?}: {e}")))
        .transpose()
}

fn list_from_file(file: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<usize>>> {
    file.get(key)
        .map(|v| {
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|e| anyhow!("config {key}={v:?}: {e}"))
                })
                .collect()
        })
        .transpose()
}

pub fn format_from_file(file: &BTreeMap<String, String>) -> Result<Option<Format>> {
    file.get("format")
        .map(|v| Format::from_str(v, true).map_err(|e| anyhow!("config format={v:?}: {e}")))
        .transpose()
}

pub fn transport_from_file(file: &BTreeMap<String, String>) -> Result<Option<Transport>> {
    file.get("transport")
        .map(|v| Transport::from_str(v, true).map_err(|e| anyhow!("config transport={v:?}: {e}")))
        .transpose()
}

impl CommonArgs {
    pub fn resolve(self, file: &BTreeMap<String, String>) -> Result<RunConfig> {
        let n = match self.n {
            Some(v) => v,
            None => list_from_file(file, "n")?.unwrap_or_else(|| vec![DEFAULT_N]),
        };
        let k = match self.k {
            Some(v) => v,
            None => list_from_file(file, "k")?.unwrap_or_else(|| vec![DEFAULT_K]),
        };
        if n.is_empty() || k.is_empty() {
            bail!("--n and --k need at least one value");
        }
        let l = match self.l {
            Some(v) => v,
            None => from_file(file, "l")?.unwrap_or(DEFAULT_L),
        };

        let eps_value = match self.eps {
            Some(v) => Some(v),
            None if self.eps_grid.is_some() => None,
            None => from_file(file, "eps")?,
        };
        let eps_grid = match self.eps_grid {
            Some(g) => Some(g),
            None if eps_value.is_some() => None,
            None => from_file::<Grid>(file, "eps_grid")?,
        };
        let (eps, eps_from_grid) = match (eps_value, eps_grid) {
            (Some(_), Some(_)) => bail!("config gives both eps and eps_grid"),
            (Some(v), None) => (vec![v], false),
            (None, Some(g)) => (g.values(), true),
            (None, None) => (vec![default_eps()], false),
        };

        let delta_value = match self.delta {
            Some(v) => Some(v),
            None if self.delta_grid.is_some() => None,
            None => from_file(file, "delta")?,
        };
        let delta_grid = match self.delta_grid {
            Some(g) => Some(g),
            None if delta_value.is_some() => None,
            None => from_file::<Grid>(file, "delta_grid")?,
        };
        let delta = match (delta_value, delta_grid) {
            (Some(_), Some(_)) => bail!("config gives both delta and delta_grid"),
            (Some(v), None) => vec![v],
            (None, Some(g)) => g.values(),
            (None, None) => vec![DEFAULT_DELTA],
        };

        let trials = match self.trials {
            Some(v) => v,
            None => from_file(file, "trials")?.unwrap_or(DEFAULT_TRIALS),
        };
        let seed = match self.seed {
            Some(v) => v,
            None => from_file(file, "seed")?.unwrap_or(DEFAULT_SEED),
        };
        let out = match self.out {
            Some(p) => Some(p),
            None => from_file::<PathBuf>(file, "out")?,
        };
        let format = match self.format {
            Some(f) => f,
            None => format_from_file(file)?.unwrap_or(Format::Csv),
        };
        Ok(RunConfig {
            n,
            k,
            l,
            eps,
            delta,
            eps_from_grid,
            trials,
            seed,
            out,
            format,
        })
    }
}

impl RunConfig {
    /// The single point for subcommands that take one.
    pub fn point(&self) -> Result<(usize, usize, usize, f64, f64)> {
        match (
            self.n.as_slice(),
            self.k.as_slice(),
            self.eps.as_slice(),
            self.delta.as_slice(),
        ) {
            ([n], [k], [eps], [delta]) => Ok((*n, *k, self.l, *eps, *delta)),
            _ => bail!("this subcommand takes a single n, k, eps and delta"),
        }
    }
}
