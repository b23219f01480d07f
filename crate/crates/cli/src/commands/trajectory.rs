use rbo::landscape::FullBatch;
use rbo::linalg;
use rbo::optimizer::{self, Gd, Rbo, Sam, Trajectory};

use crate::config::{Config, Format, OptimizerChoice};
use crate::error::{CliError, CliResult};
use crate::output::Sink;

/// Runs the configured optimizer; the trajectory is always written, and an
/// aborted run then exits with the run-error code.
pub fn trajectory(cfg: &Config) -> CliResult<u8> {
    let t = &cfg.trajectory;
    let choice = t.choice()?;
    let theta0 = t.start()?;
    if t.steps == 0 {
        return Err(CliError::config("steps must be >= 1"));
    }
    t.projection.validate().map_err(CliError::config)?;
    let landscape = t.landscape.build::<f64>().map_err(CliError::config)?;

    let traj: Trajectory<f64> = match choice {
        OptimizerChoice::Rbo { rho, eta } => {
            let opt = Rbo::new(rho, eta, t.projection).map_err(CliError::config)?;
            optimizer::run(&opt, &landscape, &theta0, t.steps)
        }
        OptimizerChoice::Gd { eta } => optimizer::run(&Gd { eta }, &landscape, &theta0, t.steps),
        OptimizerChoice::Sgd { eta } => optimizer::run_stochastic(
            &Gd { eta },
            &FullBatch(&landscape),
            &theta0,
            t.steps,
            cfg.seed,
        ),
        OptimizerChoice::Sam { eta, sam_rho } => optimizer::run(
            &Sam {
                eta,
                radius: sam_rho,
            },
            &landscape,
            &theta0,
            t.steps,
        ),
    }
    .map_err(CliError::run)?;

    let sink = Sink::new(cfg.output.path.clone());
    sink.write_with(|w| match cfg.output.format {
        Format::Csv => traj.write_csv(w),
        Format::Json => crate::output::to_json(w, &traj),
    })?;

    let last = traj.last();
    sink.say(format!(
        "{} on {}: {} steps, final loss {}, |theta| {}",
        traj.header.optimizer,
        traj.header.landscape,
        last.t,
        last.loss,
        linalg::norm(&last.theta)
    ));
    match &traj.aborted {
        Some(why) => Err(CliError::Run(format!(
            "stopped after step {}: {why}",
            last.t
        ))),
        None => Ok(0),
    }
}
