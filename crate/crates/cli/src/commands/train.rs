use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rbo::neural::{self, load_idx, Dataset, EpochRecord, TrainConfig};

use crate::config::{Config, Format, Precision};
use crate::error::{CliError, CliResult};
use crate::output::{to_json, Sink};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";

/// Loads the IDX training file and cuts the training and validation rows out of it.
pub fn load_split(cfg: &Config) -> CliResult<(Arc<Dataset>, Dataset)> {
    let dir = cfg.train.data_dir();
    let all = load_idx(dir.join(TRAIN_IMAGES), dir.join(TRAIN_LABELS))
        .map_err(|e| CliError::Data(e.to_string()))?;
    let cut = |rows: &crate::config::Rows| {
        all.slice(rows.0.clone())
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.join(TRAIN_IMAGES).display())))
    };
    let train_set = cut(&cfg.train.train_rows)?;
    let val = cut(&cfg.train.val_rows)?;
    if train_set.features() != cfg.train.mlp.inputs() {
        return Err(CliError::Config(format!(
            "images have {} pixels but the network takes {} inputs",
            train_set.features(),
            cfg.train.mlp.inputs()
        )));
    }
    Ok((Arc::new(train_set), val))
}

pub fn train(cfg: &Config) -> CliResult<u8> {
    let t = &cfg.train;
    let tc = TrainConfig {
        optimizer: t.train_optimizer()?,
        epochs: t.epochs,
        batch_size: t.batch_size,
        seed: cfg.seed,
    };
    if t.batch_size == 0 {
        return Err(CliError::config("batch_size must be >= 1"));
    }
    t.mlp.validate().map_err(CliError::config)?;
    t.projection.validate().map_err(CliError::config)?;
    let (train_set, val) = load_split(cfg)?;
    eprintln!(
        "training {} on {} rows, validating on {} rows",
        tc.optimizer.name(),
        train_set.len(),
        val.len()
    );

    let sink = Sink::new(cfg.output.path.clone());
    let csv = cfg.output.format == Format::Csv;
    let mut w = sink.open()?;
    if csv {
        sink.wrap(writeln!(w, "{}", EpochRecord::CSV_HEADER))?;
    }
    // Rows are appended and flushed as epochs finish; wall-clock time goes
    // to stderr so the file stays reproducible.
    let clock = Instant::now();
    let mut write_err = None;
    let on_epoch = |r: &EpochRecord| {
        eprintln!(
            "epoch {}: train loss {:.4}, val accuracy {:.4} ({:.1} s)",
            r.epoch,
            r.train_loss,
            r.val_accuracy,
            clock.elapsed().as_secs_f64()
        );
        if csv && write_err.is_none() {
            if let Err(e) = writeln!(w, "{}", r.csv_row()).and_then(|_| w.flush()) {
                write_err = Some(e);
            }
        }
    };
    let report = match t.precision {
        Precision::F32 => neural::train::<f32>(&t.mlp, train_set, &val, &tc, on_epoch),
        Precision::F64 => neural::train::<f64>(&t.mlp, train_set, &val, &tc, on_epoch),
    }
    .map_err(CliError::run)?;
    if let Some(e) = write_err {
        return sink.wrap(Err(e));
    }
    if !csv {
        sink.wrap(to_json(&mut w, &report))?;
    }
    sink.wrap(w.flush())?;
    drop(w);

    let last = report
        .epochs
        .last()
        .expect("training always reports at least one row");
    sink.say(format!(
        "{} after {} epochs: val accuracy {}, val loss {}",
        tc.optimizer.name(),
        last.epoch,
        last.val_accuracy,
        last.val_loss
    ));
    match report.aborted {
        Some(why) => Err(CliError::Run(why)),
        None => Ok(0),
    }
}
