use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{evaluate, init_params, Dataset, MlpLandscape, MlpSpec};
use crate::error::{Error, Result};
use crate::landscape::{Landscape, StochasticLandscape};
use crate::linalg;
use crate::optimizer::{Gd, Optimizer, ProjectionConfig, Rbo, Sam, DIVERGENCE_GUARD};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "optimizer", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrainOptimizer {
    Sgd {
        eta: f64,
    },
    Sam {
        eta: f64,
        sam_rho: f64,
    },
    Rbo {
        rho: f64,
        eta: f64,
        #[serde(default)]
        projection: ProjectionConfig<f64>,
    },
}

impl TrainOptimizer {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sgd { .. } => "sgd",
            Self::Sam { .. } => "sam",
            Self::Rbo { .. } => "rbo",
        }
    }

    fn build<T: Scalar>(&self) -> Result<Box<dyn Optimizer<T>>> {
        Ok(match *self {
            Self::Sgd { eta } => Box::new(Gd { eta: T::lit(eta) }),
            Self::Sam { eta, sam_rho } => Box::new(Sam {
                eta: T::lit(eta),
                radius: T::lit(sam_rho),
            }),
            Self::Rbo {
                rho,
                eta,
                projection,
            } => Box::new(Rbo::new(T::lit(rho), T::lit(eta), projection.cast())?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: TrainOptimizer,
    pub epochs: usize,
    pub batch_size: usize,
    /// Initialization uses `seed`, minibatch shuffling `seed + 1`.
    pub seed: u64,
}

/// Metrics after one epoch; epoch 0 is the untrained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub mean_projection_iters: f64,
}

impl EpochRecord {
    pub const CSV_HEADER: &'static str =
        "epoch,train_loss,train_accuracy,val_loss,val_accuracy,mean_projection_iters";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.epoch,
            self.train_loss,
            self.train_accuracy,
            self.val_loss,
            self.val_accuracy,
            self.mean_projection_iters
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub spec: MlpSpec,
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    /// Set when training stopped early on a non-finite loss or divergence.
    pub aborted: Option<String>,
}

impl TrainReport {
    pub fn final_val_accuracy(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.val_accuracy)
    }
}

/// Trains for `cfg.epochs` passes over `train_set`, evaluating on both sets
/// after every epoch. With zero epochs a single evaluation-only row is produced.
pub fn train<T: Scalar>(
    spec: &MlpSpec,
    train_set: Arc<Dataset>,
    val_set: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    let landscape = MlpLandscape::<T>::new(spec.clone(), train_set, cfg.batch_size)?;
    let optimizer = cfg.optimizer.build::<T>()?;
    let mut theta: Vec<T> = init_params(spec, cfg.seed)?;
    let mut schedule = landscape.schedule(cfg.seed.wrapping_add(1));
    let mut report = TrainReport {
        spec: spec.clone(),
        config: cfg.clone(),
        epochs: Vec::new(),
        aborted: None,
    };

    let measure = |theta: &[T], epoch: usize, iters: f64| -> Result<EpochRecord> {
        let (train_loss, train_accuracy) = evaluate(spec, theta, landscape.data())?;
        let (val_loss, val_accuracy) = evaluate(spec, theta, val_set)?;
        Ok(EpochRecord {
            epoch,
            train_loss: train_loss.to_f64_lossy(),
            train_accuracy,
            val_loss: val_loss.to_f64_lossy(),
            val_accuracy,
            mean_projection_iters: iters,
        })
    };

    if cfg.epochs == 0 {
        let rec = measure(&theta, 0, 0.0)?;
        on_epoch(&rec);
        report.epochs.push(rec);
        return Ok(report);
    }

    let guard = T::lit(DIVERGENCE_GUARD);
    for epoch in 1..=cfg.epochs {
        let mut iters = 0usize;
        let steps = schedule.steps_per_epoch();
        for _ in 0..steps {
            let ctx = schedule.next().ok_or(Error::EmptySet)?;
            let view = landscape.with_context(&ctx);
            let (value, grad) = view.eval_grad(&theta);
            if !value.is_finite() {
                report.aborted = Some(format!("non-finite minibatch loss in epoch {epoch}"));
                return Ok(report);
            }
            let out = match optimizer.step(view.as_ref(), &theta, value, &grad) {
                Ok(out) => out,
                Err(e) => {
                    report.aborted = Some(format!("epoch {epoch}: {e}"));
                    return Ok(report);
                }
            };
            theta = out.theta;
            iters += out.projection_iters;
            if !(linalg::norm(&theta) <= guard) {
                report.aborted = Some(format!("parameters diverged in epoch {epoch}"));
                return Ok(report);
            }
        }
        let rec = measure(&theta, epoch, iters as f64 / steps as f64)?;
        on_epoch(&rec);
        report.epochs.push(rec);
    }
    Ok(report)
}
