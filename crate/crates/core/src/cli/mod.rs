//! The `lact` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 I/O or file
//! format error, 4 numeric failure.

mod args;
mod commands;
mod config;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use commands::{
    cmd_eval, cmd_fit, cmd_reconstruct, cmd_simulate, cmd_sweep, record_stem, sweep_csv,
    ModelChoice, ReconstructOptions, SWEEP_CSV_HEADER,
};
pub use config::{GuidanceSettings, ProtocolConfig, RunConfig};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::ShapeMismatch { .. } => EXIT_CONFIG,
        Error::Io { .. } | Error::Format(_) => EXIT_IO,
        Error::Numeric(_) => EXIT_NUMERIC,
    }
}

/// Effective configuration: defaults, then the config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    match &cli.command {
        Command::Simulate(a) => {
            a.protocol.apply(&mut cfg);
            if let Some(c) = a.count {
                cfg.protocol.count = c;
            }
        }
        Command::Fit(a) => {
            a.protocol.apply(&mut cfg);
            a.schedule.apply(&mut cfg);
            if let Some(v) = a.examples {
                cfg.fit.examples = v;
            }
            if let Some(v) = a.draws {
                cfg.fit.draws = v;
            }
            if let Some(v) = a.ridge {
                cfg.fit.ridge = v;
            }
            if a.mu_from_fbp {
                cfg.guidance.mu = crate::pipeline::MuSource::Fbp;
            }
        }
        Command::Reconstruct(a) => {
            a.schedule.apply(&mut cfg);
            a.guidance.apply(&mut cfg);
        }
        Command::Sweep(a) => {
            a.schedule.apply(&mut cfg);
            a.guidance.apply(&mut cfg);
            if let Some(v) = &a.betas {
                cfg.sweep.betas = v.clone();
            }
            if let Some(v) = &a.errors {
                cfg.sweep.errors = v.clone();
            }
            if let Some(v) = a.runs {
                cfg.sweep.runs = v;
            }
        }
        Command::Eval(_) | Command::ShowConfig => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cfg, &a.out, a.keep_phantom).map(drop),
        Command::Fit(a) => cmd_fit(cfg, &a.out).map(drop),
        Command::Reconstruct(a) => {
            let model = ModelChoice::load(a.model.model.as_deref(), a.model.oracle)?;
            let opts = ReconstructOptions {
                png: a.png,
                trace: a.trace,
            };
            cmd_reconstruct(cfg, &a.data, &model, &a.out, &opts).map(drop)
        }
        Command::Eval(a) => cmd_eval(&a.data, &a.recon, &a.out).map(drop),
        Command::Sweep(a) => {
            let model = ModelChoice::load(a.model.model.as_deref(), a.model.oracle)?;
            cmd_sweep(cfg, &a.data, &model, &a.out).map(drop)
        }
        Command::ShowConfig => {
            print!("{}", cfg.to_toml()?);
            Ok(())
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = resolve_config(&cli).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| execute(&cli, &cfg))
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
