use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use noma_experiments::config::Scenario;
use noma_experiments::selftest::{self, SelftestOptions};
use noma_experiments::table::{now_unix, Table};
use noma_experiments::{intercept, learn, RunError};
use noma_secrecy::persist::Model;
use noma_secrecy::specfun::SpecFunConfig;

/// Intercept-probability sweeps, allocation-network training and benchmarks.
#[derive(Debug, Parser)]
#[command(name = "noma-sec", version)]
struct Cli {
    /// Scenario file (TOML, or a CSV produced by this tool).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo trials per point; overrides the scenario.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output path (CSV, or the model file for `train`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Intercept probability against transmit SNR.
    InterceptVsSnr,
    /// Intercept probability against the splitting factor.
    InterceptVsRho,
    /// Train the allocation network and save it.
    Train,
    /// Oracle, network and random allocation against the splitting factor.
    Compare {
        /// Model file written by `train`.
        #[arg(long, default_value = "model.txt")]
        model: PathBuf,
    },
    /// Run the built-in verification suite.
    Selftest {
        /// Relative tolerance handed to the special functions (test hook).
        #[arg(long, hide = true)]
        specfun_rel_tol: Option<f64>,
    },
}

fn read(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn scenario(cli: &Cli) -> Result<Scenario, RunError> {
    let mut sc = match &cli.config {
        Some(p) => Scenario::parse(&read(p)?)?,
        None => Scenario::default(),
    };
    if let Some(s) = cli.seed {
        sc.seed = s;
    }
    if let Some(t) = cli.trials {
        sc.mc_trials = t;
    }
    sc.validate()?;
    Ok(sc)
}

fn emit(table: &Table, sc: &Scenario, out: &Path) -> Result<(), RunError> {
    write(out, &table.render(&sc.to_toml(), now_unix()))?;
    eprintln!("wrote {} rows to {}", table.rows.len(), out.display());
    Ok(())
}

fn out_or(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: &Cli) -> Result<(), RunError> {
    match &cli.command {
        Command::InterceptVsSnr => {
            let sc = scenario(cli)?;
            emit(&intercept::intercept_vs_snr(&sc)?, &sc, &out_or(cli, "intercept_vs_snr.csv"))
        }
        Command::InterceptVsRho => {
            let sc = scenario(cli)?;
            emit(&intercept::intercept_vs_rho(&sc)?, &sc, &out_or(cli, "intercept_vs_rho.csv"))
        }
        Command::Train => {
            let sc = scenario(cli)?;
            let out = out_or(cli, "model.txt");
            let outcome = learn::train_model(&sc)?;
            write(&out, &outcome.model.encode())?;
            let mut loss = out.clone().into_os_string();
            loss.push(".loss.csv");
            emit(&outcome.history_table(), &sc, Path::new(&loss))?;
            print!("{}", outcome.report());
            Ok(())
        }
        Command::Compare { model } => {
            let sc = scenario(cli)?;
            let m = Model::decode(&read(model)?)
                .map_err(|e| RunError::Validation(format!("{}: {e}", model.display())))?;
            let table = learn::compare(&sc, &m)?;
            emit(&table, &sc, &out_or(cli, "compare.csv"))
        }
        Command::Selftest { specfun_rel_tol } => {
            let mut opts = SelftestOptions {
                seed: cli.seed.unwrap_or(1),
                ..SelftestOptions::default()
            };
            if let Some(t) = specfun_rel_tol {
                opts.specfun = SpecFunConfig {
                    rel_tol: *t,
                    ..opts.specfun
                };
            }
            let report = selftest::run(&opts);
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(RunError::Numerical(format!("selftest failed: {}", report.failures().join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: could not start {w} workers: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
