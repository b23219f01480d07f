use std::io::Write;

use rbo::geometry::{self, Reach, ThetaGrid};
use serde::Serialize;

use crate::config::{Config, Format, OffsetMode};
use crate::error::{CliError, CliResult};
use crate::output::{to_json, Sink};

pub const CSV_HEADER: &str = "theta,rho,value,grid_step";

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Value {
    Offset(f64),
    Reach(Reach),
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub theta: f64,
    pub rho: f64,
    pub value: Value,
    pub grid_step: f64,
}

fn reach_label(r: Reach) -> &'static str {
    match r {
        Reach::Reachable => "reachable",
        Reach::Unreachable => "unreachable",
        Reach::Indeterminate => "indeterminate",
    }
}

pub fn rows(cfg: &Config) -> CliResult<Vec<Row>> {
    let o = &cfg.offset;
    if o.rhos.is_empty() {
        return Err(CliError::config("offset needs at least one radius"));
    }
    let landscape = o.landscape.build::<f64>().map_err(CliError::config)?;
    let mut out = Vec::new();
    for &rho in &o.rhos {
        match o.mode {
            OffsetMode::Offset => {
                let samples = geometry::offset_profile(&landscape, rho, o.interval, o.grid_step)
                    .map_err(CliError::config)?;
                out.extend(samples.into_iter().map(|s| Row {
                    theta: s.theta,
                    rho,
                    value: Value::Offset(s.phi_rho),
                    grid_step: s.grid_step,
                }));
            }
            OffsetMode::Unreachable => {
                let nodes = ThetaGrid::interval(o.interval.0, o.interval.1, o.grid_step)
                    .nodes()
                    .map_err(CliError::config)?;
                for node in nodes {
                    let probe = geometry::is_unreachable(
                        &landscape,
                        node[0],
                        rho,
                        o.probe.angular_step,
                        o.probe.grid_step,
                    )
                    .map_err(CliError::config)?;
                    out.push(Row {
                        theta: node[0],
                        rho,
                        value: Value::Reach(probe.verdict),
                        grid_step: o.grid_step,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn write_csv(w: &mut dyn Write, rows: &[Row]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        match r.value {
            Value::Offset(v) => writeln!(w, "{},{},{},{}", r.theta, r.rho, v, r.grid_step)?,
            Value::Reach(v) => writeln!(
                w,
                "{},{},{},{}",
                r.theta,
                r.rho,
                reach_label(v),
                r.grid_step
            )?,
        }
    }
    Ok(())
}

pub fn offset(cfg: &Config) -> CliResult<u8> {
    let rows = rows(cfg)?;
    let sink = Sink::new(cfg.output.path.clone());
    sink.write_with(|w| match cfg.output.format {
        Format::Csv => write_csv(w, &rows),
        Format::Json => to_json(w, &rows),
    })?;
    sink.say(format!(
        "{} samples for {} radii on [{}, {}]",
        rows.len(),
        cfg.offset.rhos.len(),
        cfg.offset.interval.0,
        cfg.offset.interval.1
    ));
    Ok(0)
}
