//! `ekm`: command-line front end for conditional expert Kaplan–Meier
//! estimation.
//!
//! Every run reads an optional TOML configuration, writes CSV tables whose
//! first line records the configuration hash and seed, and finishes with a
//! `manifest.json`. Failures leave an `error.json` and exit with code 2
//! (invalid input) or 3 (numerical failure).

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::error::CliError;
use crate::output::{resolve_out_dir, write_error, RunOutput};

/// Seed used when neither `--seed` nor the configuration sets one.
pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Parser)]
#[command(
    name = "ekm",
    version,
    about = "Conditional expert Kaplan–Meier estimation"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides EKM_OUT_DIR and `out_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate conditional survival curves with pointwise intervals.
    Fit {
        /// Drop invalid rows instead of failing.
        #[arg(long)]
        skip_bad: bool,
    },
    /// Select a bandwidth by functional cross-validation.
    Cv {
        #[arg(long)]
        skip_bad: bool,
        /// Check the leave-one-out shortcut against direct refits.
        #[arg(long)]
        verify_loo: bool,
    },
    /// Draw a portfolio from the disability model.
    Simulate {
        /// Also write the latent times x, y, c.
        #[arg(long)]
        keep_latents: bool,
    },
    /// Run the Monte Carlo study.
    McStudy {
        /// 300 replications of 10,000 subjects.
        #[arg(long)]
        full_scale: bool,
    },
    /// Bias functional and biased limit of a partially informed expert.
    Bias {
        #[arg(long)]
        skip_bad: bool,
    },
    /// Convert loan records to (w, delta, covariates).
    LoanConvert {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Observation cut-off, YYYY-MM-DD.
        #[arg(long)]
        cutoff: Option<String>,
    },
    /// Generate a synthetic loan portfolio.
    LoanSynth {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        cutoff: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit { .. } => "fit",
            Command::Cv { .. } => "cv",
            Command::Simulate { .. } => "simulate",
            Command::McStudy { .. } => "mc-study",
            Command::Bias { .. } => "bias",
            Command::LoanConvert { .. } => "loan-convert",
            Command::LoanSynth { .. } => "loan-synth",
        }
    }
}

fn dispatch(ctx: &mut Context, command: Command) -> Result<(), CliError> {
    match command {
        Command::Fit { skip_bad } => commands::fit(ctx, skip_bad),
        Command::Cv {
            skip_bad,
            verify_loo,
        } => commands::cv(ctx, skip_bad, verify_loo),
        Command::Simulate { keep_latents } => commands::simulate(ctx, keep_latents),
        Command::McStudy { full_scale } => commands::mc_study(ctx, full_scale),
        Command::Bias { skip_bad } => commands::bias(ctx, skip_bad),
        Command::LoanConvert { input, cutoff } => {
            commands::loan_convert(ctx, input, cutoff.as_deref())
        }
        Command::LoanSynth { n, cutoff } => commands::loan_synth(ctx, n, cutoff.as_deref()),
    }
}

fn execute(cli: Cli) -> Result<PathBuf, (PathBuf, CliError)> {
    let fallback = resolve_out_dir(cli.out.as_deref(), None);
    let loaded = config::load(cli.config.as_deref()).map_err(|e| (fallback.clone(), e))?;
    let out_dir = resolve_out_dir(
        cli.out.as_deref(),
        loaded
            .config
            .out_dir
            .as_ref()
            .map(|p| loaded.resolve(p))
            .as_deref(),
    );
    let seed = cli.seed.or(loaded.config.seed).unwrap_or(DEFAULT_SEED);
    let out = RunOutput::new(out_dir.clone(), cli.command.name(), &loaded.sha256, seed);
    let mut ctx = Context { loaded, seed, out };
    let command = cli.command;
    let body = |ctx: &mut Context| dispatch(ctx, command);
    let result = match cli.threads {
        Some(0) => Err(CliError::Validation("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| body(&mut ctx)),
            Err(e) => Err(CliError::Validation(format!(
                "cannot start {n} threads: {e}"
            ))),
        },
        None => body(&mut ctx),
    };
    result.map_err(|e| (out_dir.clone(), e))?;
    ctx.out.finish().map_err(|e| (out_dir, e))
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(dir) => {
            eprintln!("wrote {}", dir.display());
            0
        }
        Err((dir, e)) => {
            eprintln!("error: {e}");
            write_error(&dir, &e);
            i32::from(e.exit_code())
        }
    }
}
