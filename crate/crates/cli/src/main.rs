//! `rbo`: trajectories, ρ–η sweeps, verification checks, MLP training and
//! offset dumps from one configuration file plus flag overrides.

// `!(x <= y)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Config, Format, OffsetMode, OptimizerId, Precision, Rows, SweepTask};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "rbo", version, about = "Rolling ball optimizer experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// θ-interval `A:B` for offset dumps and the smoothing check.
    #[arg(long, global = true, value_name = "A:B", allow_hyphen_values = true,
          value_parser = config::parse_interval)]
    interval: Option<(f64, f64)>,
    /// θ-grid step for offset dumps and the smoothing check.
    #[arg(long, global = true, value_name = "H")]
    grid_step: Option<f64>,
    /// Print the effective configuration as TOML instead of running.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerId>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    sam_rho: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one optimizer on an analytic landscape and write its trajectory.
    Trajectory {
        /// Landscape id (`riemann`) or inline table (`{ id = "riemann", n = 5 }`).
        #[arg(long)]
        landscape: Option<String>,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        steps: Option<usize>,
        /// Comma-separated starting point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta0: Option<Vec<f64>>,
    },
    /// Sweep RBO over a log-spaced ρ–η grid and write one row per cell.
    Sweep {
        #[arg(long, value_enum)]
        task: Option<SweepTask>,
        #[arg(long)]
        landscape: Option<String>,
        #[arg(long)]
        rho_min: Option<f64>,
        #[arg(long)]
        rho_max: Option<f64>,
        #[arg(long)]
        rho_count: Option<usize>,
        #[arg(long)]
        eta_count: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        parallelism: Option<usize>,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Run verification checks and write their reports as JSON.
    Verify {
        /// Checks to run; all of them when none are given.
        checks: Vec<String>,
        /// List the available checks and exit.
        #[arg(long)]
        list: bool,
    },
    /// Train the MLP on MNIST and write the per-epoch learning curve.
    Train {
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Dump samples of the offset function or reachability verdicts.
    Offset {
        #[arg(long)]
        landscape: Option<String>,
        /// Comma-separated radii.
        #[arg(long, value_delimiter = ',')]
        rho: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        mode: Option<OffsetMode>,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Directory holding the MNIST IDX files (default `$RBO_DATA_DIR`, then `data/mnist`).
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Rows of the IDX training file used for training, `A:B`.
    #[arg(long, value_name = "A:B")]
    train_rows: Option<Rows>,
    /// Rows of the IDX training file used for validation, `A:B`.
    #[arg(long, value_name = "A:B")]
    val_rows: Option<Rows>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
}

fn set<V>(slot: &mut V, flag: Option<V>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

impl OptimizerArgs {
    fn apply(
        self,
        id: &mut OptimizerId,
        rho: &mut Option<f64>,
        eta: &mut Option<f64>,
        sam_rho: &mut Option<f64>,
    ) {
        if let Some(o) = self.optimizer {
            // Hyperparameters from the file belong to the optimizer named there.
            if o != *id {
                (*rho, *eta, *sam_rho) = (None, None, None);
            }
            *id = o;
        }
        set(rho, self.rho.map(Some));
        set(eta, self.eta.map(Some));
        set(sam_rho, self.sam_rho.map(Some));
    }
}

impl DataArgs {
    fn apply(self, cfg: &mut Config) {
        set(&mut cfg.train.data_dir, self.data_dir.map(Some));
        set(&mut cfg.train.train_rows, self.train_rows);
        set(&mut cfg.train.val_rows, self.val_rows);
        set(&mut cfg.train.precision, self.precision);
    }
}

fn execute(cli: Cli) -> CliResult<u8> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    set(&mut cfg.seed, g.seed);
    set(&mut cfg.output.path, g.out.map(Some));
    set(&mut cfg.output.format, g.format);
    set(&mut cfg.offset.interval, g.interval);
    set(&mut cfg.verify.smoothing.interval, g.interval);
    set(&mut cfg.offset.grid_step, g.grid_step);
    set(&mut cfg.verify.smoothing.grid_step, g.grid_step);

    let command: fn(&Config) -> CliResult<u8> = match cli.command {
        Command::Trajectory {
            landscape,
            opt,
            steps,
            theta0,
        } => {
            let t = &mut cfg.trajectory;
            if let Some(l) = landscape {
                t.landscape = config::parse_landscape(&l)?;
            }
            opt.apply(&mut t.optimizer, &mut t.rho, &mut t.eta, &mut t.sam_rho);
            set(&mut t.steps, steps);
            set(&mut t.theta0, theta0.map(Some));
            commands::trajectory
        }
        Command::Sweep {
            task,
            landscape,
            rho_min,
            rho_max,
            rho_count,
            eta_count,
            steps,
            epochs,
            parallelism,
            data,
        } => {
            let s = &mut cfg.sweep;
            set(&mut s.task, task);
            if let Some(l) = landscape {
                s.landscape = config::parse_landscape(&l)?;
            }
            set(&mut s.rho.min, rho_min);
            set(&mut s.rho.max, rho_max);
            set(&mut s.rho.count, rho_count);
            set(&mut s.eta.count, eta_count);
            set(&mut s.steps, steps);
            set(&mut s.epochs, epochs);
            set(&mut s.parallelism, parallelism);
            data.apply(&mut cfg);
            commands::sweep
        }
        Command::Verify { checks, list } => {
            if list {
                for name in commands::CHECKS {
                    println!("{name}");
                }
                return Ok(0);
            }
            if !checks.is_empty() {
                cfg.verify.checks = checks;
            }
            commands::verify
        }
        Command::Train {
            opt,
            epochs,
            batch_size,
            data,
        } => {
            let t = &mut cfg.train;
            opt.apply(&mut t.optimizer, &mut t.rho, &mut t.eta, &mut t.sam_rho);
            set(&mut t.epochs, epochs);
            set(&mut t.batch_size, batch_size);
            data.apply(&mut cfg);
            commands::train
        }
        Command::Offset {
            landscape,
            rho,
            mode,
        } => {
            if let Some(l) = landscape {
                cfg.offset.landscape = config::parse_landscape(&l)?;
            }
            set(&mut cfg.offset.rhos, rho);
            set(&mut cfg.offset.mode, mode);
            commands::offset
        }
    };
    if g.print_config {
        print!("{}", cfg.to_toml());
        return Ok(0);
    }
    command(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
