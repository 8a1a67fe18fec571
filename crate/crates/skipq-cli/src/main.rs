//! `skipq` — command-line front end.
//!
//! Subcommands map one-to-one onto library operations:
//!
//! ```text
//! skipq simulate <config>              one experiment row
//! skipq sweep <config> --eps 0.4,0.2   heavy-traffic sweep
//! skipq stability <config>             closed-form stability facts
//! skipq bounds <config>                collapse/delay bound constants
//! skipq table1 [--scale f]             the seven-row comparison preset
//! skipq unstable-demo <config>         drift slope with confidence interval
//! ```
//!
//! Results go to stdout as CSV; progress and warnings go to stderr. Exit
//! codes: 0 success, 2 configuration refusal (bad config file, infeasible
//! law, load outside the stability region), 1 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skipq::config::SystemConfig;
use skipq::error::{Error, Result};
use skipq::harness::{
    instability_demo, run_experiment, sweep_heavy_traffic, table1_preset, ExperimentResult,
};
use skipq::report::{bounds_csv, experiment_csv, stability_csv, write_csv};

#[derive(Parser)]
#[command(
    name = "skipq",
    version,
    about = "Parallel-queue simulator and analysis toolkit for sample-and-skip dispatching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a `key = value` config file
    config: PathBuf,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write the result CSV here as well as to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's replication count
    #[arg(long)]
    replications: Option<usize>,
    /// Simulate even if the load is outside the stability region
    #[arg(long)]
    allow_unstable: bool,
}

impl RunArgs {
    fn load(&self) -> Result<SystemConfig> {
        let mut cfg = SystemConfig::from_file(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(reps) = self.replications {
            cfg.replications = reps;
        }
        if self.allow_unstable {
            cfg.allow_unstable = true;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.display().to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and emit its result row
    Simulate(RunArgs),
    /// Run a heavy-traffic sweep: for each slack ε, set E[A(1)] = Σμ − ε
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// Comma-separated slack values, e.g. --eps 0.4,0.2,0.1,0.05
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
    /// Closed-form stability facts for the configured system
    Stability {
        /// Path to a `key = value` config file
        config: PathBuf,
        /// Write the CSV here as well as to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collapse and delay bound constants for the configured system
    Bounds {
        /// Path to a `key = value` config file
        config: PathBuf,
        /// Write the CSV here as well as to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seven-row policy comparison preset
    Table1 {
        /// Horizon multiplier (1.0 = 2×10⁸ measured slots per row)
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Override the preset's shared seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the preset's replication count
        #[arg(long)]
        replications: Option<usize>,
        /// Write the result CSV here as well as to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Demonstrate (in)stability: least-squares drift of the total queue
    UnstableDemo(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_refusal() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => {
            let cfg = args.load()?;
            let row = run_experiment(&cfg)?;
            emit_rows(&[row], cfg.out.as_deref())
        }
        Command::Sweep { args, eps } => {
            let cfg = args.load()?;
            let rows = sweep_heavy_traffic(&cfg, &eps)?;
            emit_rows(&rows, cfg.out.as_deref())
        }
        Command::Stability { config, out } => {
            let cfg = SystemConfig::from_file(&config)?;
            let resolved = cfg.resolved_policy()?;
            let d = if resolved.samples { resolved.d } else { 0 };
            let report = skipq::analysis::stability_report(
                &cfg.service.mu,
                d,
                cfg.arrival.n_lambda,
            )?;
            emit_text(&stability_csv(&report), out.as_deref().map(path_str).as_deref())
        }
        Command::Bounds { config, out } => {
            let cfg = SystemConfig::from_file(&config)?;
            let resolved = cfg.resolved_policy()?;
            if !resolved.samples || resolved.d < 1 {
                return Err(Error::Precondition(
                    "bound constants need a polling policy with d ≥ 1".into(),
                ));
            }
            let eps = cfg.epsilon();
            let mut report = skipq::analysis::n2_bound(
                &cfg.service.mu,
                resolved.k,
                resolved.d,
                cfg.arrival.a_max,
                cfg.service.s_max as f64,
                cfg.arrival.n_sigma_lambda_sq / cfg.n as f64,
                cfg.service.sigma_mu_max_sq(),
                eps,
            )?;
            report.upper_rhs = Some(skipq::analysis::upper_bound_rhs(
                eps,
                cfg.n,
                resolved.k,
                resolved.d,
                cfg.arrival.n_sigma_lambda_sq,
                cfg.service.sigma_mu_sq_sum(),
                cfg.arrival.a_max,
                cfg.service.s_max as f64,
                report.n2,
            )?);
            report.lower_rhs = Some(
                skipq::analysis::lower_bound_rhs(
                    eps,
                    cfg.n,
                    cfg.arrival.n_sigma_lambda_sq,
                    cfg.service.sigma_mu_sq_sum(),
                    cfg.service.s_max as f64,
                )?
                .value,
            );
            emit_text(&bounds_csv(&report), out.as_deref().map(path_str).as_deref())
        }
        Command::Table1 {
            scale,
            seed,
            replications,
            out,
        } => {
            let mut configs = table1_preset(scale)?;
            let total = configs.len();
            let mut rows = Vec::with_capacity(total);
            for (i, cfg) in configs.iter_mut().enumerate() {
                if let Some(seed) = seed {
                    cfg.seed = seed;
                }
                if let Some(reps) = replications {
                    cfg.replications = reps;
                }
                let resolved = cfg.resolved_policy()?;
                eprintln!(
                    "[{}/{total}] {} n={} k={} d={} … ",
                    i + 1,
                    cfg.policy.label(),
                    cfg.n,
                    resolved.k,
                    resolved.d
                );
                rows.push(run_experiment(cfg)?);
            }
            emit_rows(&rows, out.as_deref().map(path_str).as_deref())
        }
        Command::UnstableDemo(args) => {
            let cfg = args.load()?;
            let report = instability_demo(&cfg)?;
            let csv = format!(
                "slope,half_width_95,horizon_slots,replications,ci_excludes_zero\n{},{},{},{},{}\n",
                report.slope,
                report.half_width,
                report.horizon_slots,
                report.per_rep_slopes.len(),
                report.ci_excludes_zero(),
            );
            for (i, s) in report.per_rep_slopes.iter().enumerate() {
                eprintln!("replication {i}: slope {s}");
            }
            emit_text(&csv, cfg.out.as_deref())
        }
    }
}

fn path_str(p: &std::path::Path) -> String {
    p.display().to_string()
}

fn emit_rows(rows: &[ExperimentResult], out: Option<&str>) -> Result<()> {
    for row in rows {
        if let Some(w) = &row.warning {
            eprintln!(
                "warning [{} n={} ε={}]: {w}",
                row.policy, row.n, row.epsilon
            );
        }
    }
    print!("{}", experiment_csv(rows));
    if let Some(path) = out {
        write_csv(rows, std::path::Path::new(path))?;
        eprintln!("wrote {path}");
    }
    Ok(())
}

fn emit_text(text: &str, out: Option<&str>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text).map_err(|e| Error::Io(format!("writing {path}: {e}")))?;
        eprintln!("wrote {path}");
    }
    Ok(())
}
