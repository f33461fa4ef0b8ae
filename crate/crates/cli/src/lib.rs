//! Command-line front end: bound tables, figure data, simulations and a
//! verification suite. `main.rs` only parses arguments and calls [`run`].
//!
//! Every flag can also be set through an `ALPIR_<FLAG>` environment variable
//! (`ALPIR_EPS_GRID`, `ALPIR_SEED`, ...) or a `key=value` file passed with
//! `--config`. The command line wins over the environment, which wins over the
//! file.

pub mod commands;
pub mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use alpir::netsim::SessionRecord;
use commands::{
    cmd_bounds, cmd_simulate, cmd_sweep, cmd_verify, write_rows, SweepOutput, BOUNDS_FIELDS, CHECK_FIELDS, PATH_FIELDS,
    SIMULATE_FIELDS,
};
use config::{read_config_file, transport_from_file, Cli, Command, Transport};

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Runs one invocation. `Ok(false)` means the command ran but a check or
/// audit failed.
pub fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => read_config_file(p)?,
        None => Default::default(),
    };
    match cli.command {
        Command::Bounds(common) => {
            let cfg = common.resolve(&file)?;
            let rows = cmd_bounds(&cfg)?;
            write_rows(&rows, BOUNDS_FIELDS, cfg.format, output(cfg.out.as_deref())?)?;
            Ok(true)
        }
        Command::Sweep { preset, common } => {
            let cfg = common.resolve(&file)?;
            let out = output(cfg.out.as_deref())?;
            match cmd_sweep(preset, &cfg)? {
                SweepOutput::Bounds(rows) => write_rows(&rows, BOUNDS_FIELDS, cfg.format, out)?,
                SweepOutput::Paths(rows) => write_rows(&rows, PATH_FIELDS, cfg.format, out)?,
            }
            Ok(true)
        }
        Command::Simulate {
            transport,
            no_relabel,
            records,
            common,
        } => {
            let transport = match transport {
                Some(t) => t,
                None => transport_from_file(&file)?.unwrap_or(Transport::Memory),
            };
            let records = records.or_else(|| file.get("records").map(Into::into));
            let cfg = common.resolve(&file)?;
            let (report, stats) = cmd_simulate(&cfg, transport.into(), !no_relabel)?;
            if let Some(path) = records {
                let mut w =
                    BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                writeln!(w, "{}", SessionRecord::CSV_HEADER)?;
                for r in &stats.records {
                    writeln!(w, "{}", r.csv_row())?;
                }
                w.flush()?;
            }
            let passed = !report.any_flag();
            write_rows(&[report], SIMULATE_FIELDS, cfg.format, output(cfg.out.as_deref())?)?;
            Ok(passed)
        }
        Command::Verify {
            inject_short_key,
            common,
        } => {
            let cfg = common.resolve(&file)?;
            let rows = cmd_verify(&cfg, inject_short_key)?;
            let passed = rows.iter().all(|r| r.passed);
            for r in &rows {
                eprintln!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.check);
            }
            write_rows(&rows, CHECK_FIELDS, cfg.format, output(cfg.out.as_deref())?)?;
            Ok(passed)
        }
    }
}
