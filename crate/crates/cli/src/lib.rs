//! Pipelines behind the `qniff` binary: simulate synthetic shot data,
//! infer noise parameters, apply filters, and emit report tables.
//!
//! Every command reads a JSON [`RunConfig`](config::RunConfig) and works in
//! one run directory. All randomness is derived from the config seed, so a
//! rerun with the same config reproduces every file byte for byte.

pub mod config;
pub mod error;
pub mod filter;
pub mod infer;
pub mod report;
pub mod rundir;
pub mod sensitivity;
pub mod simulate;

use std::path::Path;

pub use config::{FilterMode, MethodSelector, PriorConfig, Resolved, RunConfig};
pub use error::{CliError, CliResult};

/// Tags for child seeds. Part of the reproducibility contract.
pub mod seeds {
    pub const TEST: u64 = 0x7465_7374;
    pub const SLOT: u64 = 0x1000;
    pub const CALIBRATION: u64 = 0x2000;
    pub const PRIOR: u64 = 0x3000;
    pub const INFER: u64 = 0x4000;
}

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "QNIFF_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Infer,
    Filter,
    Report,
    Sensitivity,
}

/// Size the global rayon pool from `QNIFF_THREADS`. Results do not depend
/// on the pool size.
pub fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool that already exists (tests, repeated calls) is left alone
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Load the config, apply the seed override, and run one command in `out`.
/// The resolved config is written to `out/config.json`.
pub fn run(cmd: Command, config_path: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    let resolved = cfg.resolve(base)?;
    run_resolved(cmd, &resolved, out)
}

pub fn run_resolved(cmd: Command, r: &Resolved, out: &Path) -> CliResult<()> {
    match cmd {
        Command::Simulate | Command::Sensitivity => rundir::ensure_dir(out)?,
        _ if !out.is_dir() => {
            return Err(CliError::Io(format!("{}: run directory does not exist", out.display())));
        }
        _ => {}
    }
    rundir::write_bytes(&out.join(rundir::CONFIG), r.config.to_json().as_bytes())?;
    match cmd {
        Command::Simulate => simulate::cmd_simulate(r, out),
        Command::Infer => infer::cmd_infer(r, out),
        Command::Filter => filter::cmd_filter(r, out).map(|_| ()),
        Command::Report => report::cmd_report(out).map(|_| ()),
        Command::Sensitivity => sensitivity::cmd_sensitivity(r, out).map(|_| ()),
    }
}
