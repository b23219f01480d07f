use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use rbo::landscape::Landscape;
use rbo::neural::{self, Dataset, TrainConfig, TrainOptimizer};
use rbo::optimizer::{self, Rbo};
use serde::Serialize;

use super::train::load_split;
use crate::config::{start_point, Config, Format, Precision, SweepTask};
use crate::error::{CliError, CliResult};
use crate::output::{csv_field, to_json, Sink};

/// One grid cell; failed runs carry a NaN metric and the reason.
#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub rho: f64,
    pub eta: f64,
    pub metric: f64,
    pub error: Option<String>,
}

impl Cell {
    fn ok(rho: f64, eta: f64, metric: f64) -> Self {
        Self {
            rho,
            eta,
            metric,
            error: None,
        }
    }

    fn failed(rho: f64, eta: f64, why: impl ToString) -> Self {
        Self {
            rho,
            eta,
            metric: f64::NAN,
            error: Some(why.to_string()),
        }
    }
}

pub const CSV_HEADER: &str = "rho,eta,metric,error";

fn landscape_cell(
    landscape: &dyn Landscape<f64>,
    cfg: &Config,
    theta0: &[f64],
    rho: f64,
    eta: f64,
) -> Cell {
    let s = &cfg.sweep;
    let run = Rbo::new(rho, eta, s.projection)
        .and_then(|opt| optimizer::run(&opt, &landscape, theta0, s.steps));
    match run {
        Err(e) => Cell::failed(rho, eta, e),
        Ok(t) => match t.aborted {
            Some(why) => Cell::failed(rho, eta, why),
            None => Cell::ok(rho, eta, t.last().loss),
        },
    }
}

fn mlp_cell(train_set: &Arc<Dataset>, val: &Dataset, cfg: &Config, rho: f64, eta: f64) -> Cell {
    let tc = TrainConfig {
        optimizer: TrainOptimizer::Rbo {
            rho,
            eta,
            projection: cfg.train.projection,
        },
        epochs: cfg.sweep.epochs,
        batch_size: cfg.train.batch_size,
        seed: cfg.seed,
    };
    let spec = &cfg.train.mlp;
    let report = match cfg.train.precision {
        Precision::F32 => neural::train::<f32>(spec, Arc::clone(train_set), val, &tc, |_| {}),
        Precision::F64 => neural::train::<f64>(spec, Arc::clone(train_set), val, &tc, |_| {}),
    };
    match report {
        Err(e) => Cell::failed(rho, eta, e),
        Ok(r) => match r.aborted {
            Some(why) => Cell::failed(rho, eta, why),
            None => Cell::ok(rho, eta, r.final_val_accuracy()),
        },
    }
}

/// Evaluates every cell on a pool of `parallelism` threads. Cells are
/// independent sequential runs sharing the global seed, and results keep the
/// grid order, so the output does not depend on the thread count.
pub fn run_cells(cfg: &Config) -> CliResult<Vec<Cell>> {
    let s = &cfg.sweep;
    let cells = s.cells()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.parallelism)
        .build()
        .map_err(CliError::run)?;
    match s.task {
        SweepTask::Landscape => {
            if s.steps == 0 {
                return Err(CliError::config("sweep steps must be >= 1"));
            }
            s.projection.validate().map_err(CliError::config)?;
            let theta0 = start_point(&s.landscape, s.theta0.as_deref())?;
            let landscape = s.landscape.build::<f64>().map_err(CliError::config)?;
            Ok(pool.install(|| {
                cells
                    .par_iter()
                    .map(|&(rho, eta)| landscape_cell(landscape.as_ref(), cfg, &theta0, rho, eta))
                    .collect()
            }))
        }
        SweepTask::Mlp => {
            cfg.train.projection.validate().map_err(CliError::config)?;
            let (train_set, val) = load_split(cfg)?;
            Ok(pool.install(|| {
                cells
                    .par_iter()
                    .map(|&(rho, eta)| mlp_cell(&train_set, &val, cfg, rho, eta))
                    .collect()
            }))
        }
    }
}

pub fn write_csv(w: &mut dyn Write, cells: &[Cell]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for c in cells {
        let error = c.error.as_deref().map(csv_field).unwrap_or_default();
        writeln!(w, "{},{},{},{}", c.rho, c.eta, c.metric, error)?;
    }
    Ok(())
}

pub fn sweep(cfg: &Config) -> CliResult<u8> {
    let cells = run_cells(cfg)?;
    let sink = Sink::new(cfg.output.path.clone());
    sink.write_with(|w| match cfg.output.format {
        Format::Csv => write_csv(w, &cells),
        Format::Json => to_json(w, &cells),
    })?;

    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let metric = match cfg.sweep.task {
        SweepTask::Landscape => "final loss",
        SweepTask::Mlp => "final validation accuracy",
    };
    sink.say(format!(
        "sweep: {} cells ({metric}), {failed} failed",
        cells.len()
    ));
    Ok(0)
}
