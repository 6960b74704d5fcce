//! Command-line front end: configuration, run orchestration, snapshots and
//! CSV output for the double-diffusive convection solver.

pub mod checks;
pub mod config;
pub mod csv;
pub mod error;
pub mod run;
pub mod snapshot;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ddc", version, about = "Double-diffusive convection solver and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation described by a config file.
    Run {
        /// `key = value` config file.
        config: PathBuf,
        /// Refuse to start when dt exceeds the monitored restriction.
        #[arg(long)]
        strict: bool,
        /// Override `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Temporal convergence and algebraic identities of the periodic solver.
    ValidateNse {
        /// Grid points per direction on [0, 2 pi)^2.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Viscosity.
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        /// Decreasing timesteps, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 5e-3, 2.5e-3])]
        ks: Vec<f64>,
        /// Seed of the random fields for the identity checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// G-norm constants, two-step identity and recursion bounds.
    GstabCheck {
        /// Random field triples for the two-step identity.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Grid size for the identity check.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Synthetic sequences for the recursion and growth bounds.
        #[arg(long, default_value_t = 1000)]
        trajectories: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one config at several timesteps and compare differences and
    /// time averages.
    SweepDt {
        config: PathBuf,
        /// Timesteps, comma separated, largest first.
        #[arg(long, value_delimiter = ',', required = true)]
        dts: Vec<f64>,
        /// Fraction of the run forming the late window.
        #[arg(long, default_value_t = 0.25)]
        tail: f64,
        /// Averaging window `t_a,t_b`; defaults to the late window.
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', default_values_t = vec!["energy".to_string(), "grad_temp_sq".to_string()])]
        functionals: Vec<String>,
        /// Parent directory for the per-timestep runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Windowed averages of a functional over a diagnostics CSV.
    Stats {
        csv: PathBuf,
        /// A column name or a combination like `energy+0.5*grad_temp_sq`.
        #[arg(long, default_value = "energy")]
        functional: String,
        /// Averaging window `t_a,t_b`; defaults to the whole file.
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<f64>>,
    },
    /// Build the lifting and print its norms and smallness margins.
    LiftingReport { config: PathBuf },
}

fn pair(v: Option<Vec<f64>>) -> CliResult<Option<(f64, f64)>> {
    match v.as_deref() {
        None => Ok(None),
        Some([a, b]) => Ok(Some((*a, *b))),
        Some(w) => Err(CliError::Config {
            line: None,
            msg: format!("--window takes two values t_a,t_b, got {}", w.len()),
        }),
    }
}

/// Executes a parsed command, returning the text to print.
pub fn dispatch(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Run { config, strict, out } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.strict |= strict;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let s = run::execute(&cfg)?;
            let mut text = String::new();
            for w in &s.warnings {
                text.push_str(&format!("warning: {w}\n"));
            }
            text.push_str(&format!(
                "{} steps written to {} (epsilon {:e}, k_max at start {:e})\n",
                s.steps,
                s.out_dir.display(),
                s.epsilon,
                s.k_max
            ));
            Ok(text)
        }
        Command::ValidateNse { n, mu, t_end, ks, seed } => {
            let rep = checks::nse_suite(&checks::NseOptions {
                n,
                mu,
                t_end,
                ks,
                seed,
                ..Default::default()
            })?;
            finish_report(rep)
        }
        Command::GstabCheck {
            samples,
            grid,
            trajectories,
            seed,
        } => finish_report(checks::gstab_suite(&checks::GstabOptions {
            samples,
            grid_n: grid,
            trajectories,
            seed,
        })?),
        Command::SweepDt {
            config,
            dts,
            tail,
            window,
            functionals,
            out,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let rep = run::sweep_dt(&cfg, &dts, tail, pair(window)?, &functionals)?;
            Ok(rep.render())
        }
        Command::Stats { csv, functional, window } => {
            let r = run::stats(&csv, &functional, pair(window)?)?;
            Ok(format!(
                "functional {}\nwindow [{}, {}]\ncount {}\nmean {:.16e}\nvariance {:.16e}\ntail_weighted {:.16e}\n",
                r.functional, r.window.0, r.window.1, r.count, r.mean, r.variance, r.tail_weighted
            ))
        }
        Command::LiftingReport { config } => run::lifting_report(&RunConfig::load(&config)?),
    }
}

fn finish_report(rep: checks::CheckReport) -> CliResult<String> {
    let text = rep.render();
    if rep.passed() {
        Ok(text)
    } else {
        Err(CliError::CheckFailed(format!("\n{text}")))
    }
}

/// Parses `args`, runs, prints, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
