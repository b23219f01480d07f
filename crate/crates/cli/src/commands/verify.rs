use rayon::prelude::*;
use rbo::landscape::LandscapeSpec;
use rbo::verify::{self, CheckReport};

use crate::config::{Config, VerifyConfig};
use crate::error::{CliError, CliResult, EXIT_CHECKS_FAILED};
use crate::output::{to_json, Sink};

pub const CHECKS: [&str; 6] = [
    "weak-ironing",
    "linear-ironing",
    "sharp-minima",
    "open-unreachables",
    "gd-limit",
    "smoothing",
];

fn quadratic(a: f64) -> LandscapeSpec {
    LandscapeSpec::Quadratic {
        matrix: vec![vec![a]],
        center: None,
    }
}

fn run_check(name: &str, v: &VerifyConfig) -> rbo::Result<CheckReport> {
    let pick = |spec: &Option<LandscapeSpec>, default: LandscapeSpec| {
        spec.clone().unwrap_or(default).build::<f64>()
    };
    match name {
        "weak-ironing" => {
            let l = pick(&v.weak_ironing.landscape, LandscapeSpec::Sinusoid)?;
            verify::check_weak_ironing(&l, &v.weak_ironing.check)
        }
        "linear-ironing" => verify::check_linear_ironing(&v.linear_ironing),
        "sharp-minima" => verify::check_sharp_minima(&v.sharp_minima),
        "open-unreachables" => {
            let l = pick(&v.open_unreachables.landscape, quadratic(4.0))?;
            verify::check_open_unreachables(&l, &v.open_unreachables.check)
        }
        "gd-limit" => {
            let l = pick(&v.gd_limit.landscape, quadratic(1.0))?;
            verify::check_gd_limit(&l, &v.gd_limit.check)
        }
        "smoothing" => verify::check_smoothing(&v.smoothing),
        _ => unreachable!("names are validated before running"),
    }
}

/// Runs the selected checks in parallel and returns their reports in
/// selection order. A check that errors becomes a failed report.
pub fn run_checks(v: &VerifyConfig) -> CliResult<Vec<CheckReport>> {
    let names: Vec<&str> = if v.checks.is_empty() {
        CHECKS.to_vec()
    } else {
        v.checks.iter().map(String::as_str).collect()
    };
    if let Some(bad) = names.iter().find(|n| !CHECKS.contains(n)) {
        return Err(CliError::Config(format!(
            "unknown check `{bad}` (available: {})",
            CHECKS.join(", ")
        )));
    }
    Ok(names
        .par_iter()
        .map(|&name| {
            run_check(name, v).unwrap_or_else(|e| CheckReport {
                name: name.to_string(),
                passed: false,
                observations: Vec::new(),
                notes: format!("error: {e}"),
            })
        })
        .collect())
}

pub fn verify(cfg: &Config) -> CliResult<u8> {
    let reports = run_checks(&cfg.verify)?;
    let sink = Sink::new(cfg.output.path.clone());
    sink.write_with(|w| to_json(w, &reports))?;
    for r in &reports {
        sink.say(r.to_string());
    }
    Ok(if reports.iter().all(|r| r.passed) {
        0
    } else {
        EXIT_CHECKS_FAILED
    })
}
