//! Executable checks of the ironing, unreachability and small-radius limit
//! properties, each producing a [`CheckReport`].

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    count_local_minima, hausdorff_distance, is_unreachable, offset_profile, offset_value, Reach,
};
use crate::landscape::{AffineBump, BumpProfile, Landscape, ProfileId, Quadratic, Riemann};
use crate::optimizer::{run_gd, run_rbo, trajectory_gap, ProjectionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    Below,
    Equal,
    /// Recorded for the reader, never fails.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub parameter: String,
    pub measured: f64,
    pub bound: f64,
    pub relation: Relation,
}

impl Observation {
    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.measured <= self.bound,
            Relation::Below => self.measured < self.bound,
            Relation::Equal => self.measured == self.bound,
            Relation::Informational => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub observations: Vec<Observation>,
    pub notes: String,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            observations: Vec::new(),
            notes: String::new(),
        }
    }

    fn observe(
        &mut self,
        parameter: impl Into<String>,
        measured: f64,
        bound: f64,
        relation: Relation,
    ) {
        let obs = Observation {
            parameter: parameter.into(),
            measured,
            bound,
            relation,
        };
        self.passed &= obs.holds();
        self.observations.push(obs);
    }

    fn note(&mut self, text: impl AsRef<str>) {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(text.as_ref());
    }

    fn fail(&mut self, text: impl AsRef<str>) {
        self.passed = false;
        self.note(text);
    }

    pub fn failed_observations(&self) -> impl Iterator<Item = &Observation> {
        self.observations.iter().filter(|o| !o.holds())
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name
        )?;
        if !self.notes.is_empty() {
            write!(f, " ({})", self.notes)?;
        }
        Ok(())
    }
}

fn require_increasing(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Precondition(format!("{what} list is empty")));
    }
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Precondition(format!(
            "{what} values must be finite and > 0"
        )));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(format!(
            "{what} must be strictly increasing"
        )));
    }
    Ok(())
}

fn fmt_param(name: &str, v: f64) -> String {
    format!("{name}={v}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakIroningConfig {
    pub radii: Vec<f64>,
    pub interval: (f64, f64),
    pub theta_step: f64,
    /// Offset s-grid step as a fraction of ρ.
    pub offset_step_ratio: f64,
    pub epsilon: f64,
}

impl Default for WeakIroningConfig {
    fn default() -> Self {
        Self {
            radii: vec![10.0, 100.0, 1000.0],
            interval: (-1.0, 1.0),
            theta_step: 0.01,
            offset_step_ratio: 1.0 / 2000.0,
            epsilon: 0.01,
        }
    }
}

/// Largest `|φ_ρ(θ) − ρ − sup f|` over the θ-grid, one entry per radius.
pub fn ironing_errors<L: Landscape<f64> + ?Sized>(
    landscape: &L,
    cfg: &WeakIroningConfig,
) -> Result<Vec<f64>> {
    let sup = landscape.sup().ok_or_else(|| {
        Error::Precondition(format!("landscape {} is not bounded above", landscape.id()))
    })?;
    require_increasing(&cfg.radii, "radii")?;
    let nodes =
        crate::geometry::ThetaGrid::interval(cfg.interval.0, cfg.interval.1, cfg.theta_step)
            .nodes()?;
    cfg.radii
        .iter()
        .map(|&rho| {
            nodes.iter().try_fold(0.0f64, |m, t| {
                let phi = offset_value(landscape, rho, t[0], rho * cfg.offset_step_ratio)?;
                Ok(m.max((phi - rho - sup).abs()))
            })
        })
        .collect()
}

/// `φ_ρ − ρ` approaches `sup f` uniformly on the interval as ρ grows.
pub fn check_weak_ironing<L: Landscape<f64> + ?Sized>(
    landscape: &L,
    cfg: &WeakIroningConfig,
) -> Result<CheckReport> {
    let errors = ironing_errors(landscape, cfg)?;
    let mut report = CheckReport::new("weak-ironing");
    for (i, (&rho, &e)) in cfg.radii.iter().zip(&errors).enumerate() {
        let bound = if i == 0 { f64::INFINITY } else { errors[i - 1] };
        report.observe(format!("e(rho={rho})"), e, bound, Relation::AtMost);
    }
    let last = *errors.last().expect("radii validated non-empty");
    report.observe("e(last) < epsilon", last, cfg.epsilon, Relation::Below);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearIroningConfig {
    pub slope: f64,
    pub offset: f64,
    pub profile: ProfileId,
    pub amplitude: f64,
    pub radii: Vec<f64>,
    pub interval: (f64, f64),
    pub grid_step: f64,
    pub epsilon: f64,
}

impl Default for LinearIroningConfig {
    fn default() -> Self {
        Self {
            slope: 1.0,
            offset: 0.0,
            profile: ProfileId::Sin,
            amplitude: 1.0,
            radii: vec![1.0, 10.0, 100.0],
            interval: (-1.0, 1.0),
            grid_step: 0.01,
            epsilon: 0.1,
        }
    }
}

impl LinearIroningConfig {
    pub fn landscape(&self) -> Result<AffineBump<f64>> {
        AffineBump::new(
            vec![self.slope],
            self.offset,
            BumpProfile::from(self.profile),
            self.amplitude,
        )
    }
}

/// Offset of the line `y = a θ + c` sampled on the same lattice as [`offset_profile`].
fn affine_offset_points(
    slope: f64,
    intercept: f64,
    rho: f64,
    interval: (f64, f64),
    h: f64,
) -> Result<Vec<[f64; 2]>> {
    let line = AffineBump::affine(vec![slope], intercept)?;
    Ok(offset_profile(&line, rho, interval, h)?
        .into_iter()
        .map(|s| [s.theta, s.phi_rho])
        .collect())
}

/// Hausdorff distances between the offsets of `a θ + b + amplitude·φ` and of
/// its supporting line `a θ + b + sup(amplitude·φ)` over the θ-interval.
///
/// The returned pair is `(shifted, unshifted)`; the second compares against
/// the offset of the bare affine part and stays bounded away from zero.
pub fn linear_ironing_distances(cfg: &LinearIroningConfig) -> Result<Vec<(f64, f64)>> {
    let bumped = cfg.landscape()?;
    let shift = bumped
        .bump_sup()
        .ok_or_else(|| Error::Precondition("bump supremum unknown".into()))?;
    if cfg.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Precondition("radii must be > 0".into()));
    }
    cfg.radii
        .iter()
        .map(|&rho| {
            let moved: Vec<[f64; 2]> = offset_profile(&bumped, rho, cfg.interval, cfg.grid_step)?
                .into_iter()
                .map(|s| [s.theta, s.phi_rho])
                .collect();
            let support = affine_offset_points(
                cfg.slope,
                cfg.offset + shift,
                rho,
                cfg.interval,
                cfg.grid_step,
            )?;
            let bare =
                affine_offset_points(cfg.slope, cfg.offset, rho, cfg.interval, cfg.grid_step)?;
            Ok((
                hausdorff_distance(&moved, &support)?,
                hausdorff_distance(&moved, &bare)?,
            ))
        })
        .collect()
}

/// The offset of an affine graph plus a bounded bump approaches the offset of
/// the parallel supporting line as ρ grows.
pub fn check_linear_ironing(cfg: &LinearIroningConfig) -> Result<CheckReport> {
    let distances = linear_ironing_distances(cfg)?;
    let mut report = CheckReport::new("linear-ironing");
    let mut prev = f64::INFINITY;
    for (&rho, &(shifted, bare)) in cfg.radii.iter().zip(&distances) {
        report.observe(
            format!("hausdorff(rho={rho})"),
            shifted,
            prev,
            Relation::AtMost,
        );
        report.observe(
            format!("hausdorff_unshifted(rho={rho})"),
            bare,
            f64::NAN,
            Relation::Informational,
        );
        prev = shifted;
    }
    report.observe(
        "hausdorff(last) < epsilon",
        prev,
        cfg.epsilon,
        Relation::Below,
    );
    report.note("reference offset is that of the affine part raised by sup of the bump");
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub angular_step: f64,
    pub grid_step: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            angular_step: 1e-3,
            grid_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpMinimaConfig {
    pub sigmas: Vec<f64>,
    pub rhos: Vec<f64>,
    /// Pairs with `|ρσ − 1| ≤ margin` are skipped.
    pub margin: f64,
    pub probe: ProbeConfig,
}

impl Default for SharpMinimaConfig {
    fn default() -> Self {
        Self {
            sigmas: vec![4.0],
            rhos: vec![0.2, 0.3],
            margin: 0.1,
            probe: ProbeConfig::default(),
        }
    }
}

fn verdict_value(reach: Reach) -> f64 {
    match reach {
        Reach::Unreachable => 1.0,
        Reach::Reachable => 0.0,
        Reach::Indeterminate => f64::NAN,
    }
}

/// The vertex of `σθ²/2` is ρ-unreachable exactly when `ρ > 1/σ`.
pub fn check_sharp_minima(cfg: &SharpMinimaConfig) -> Result<CheckReport> {
    if cfg.sigmas.iter().chain(&cfg.rhos).any(|v| !(*v > 0.0)) {
        return Err(Error::Precondition(
            "all sigma and rho values must be > 0".into(),
        ));
    }
    let mut report = CheckReport::new("sharp-minima");
    for &sigma in &cfg.sigmas {
        let parabola = Quadratic::parabola(sigma)?;
        for &rho in &cfg.rhos {
            let expect = if rho > (1.0 + cfg.margin) / sigma {
                1.0
            } else if rho < (1.0 - cfg.margin) / sigma {
                0.0
            } else {
                report.note(format!("skipped sigma={sigma} rho={rho} inside margin"));
                continue;
            };
            let probe = is_unreachable(
                &parabola,
                0.0,
                rho,
                cfg.probe.angular_step,
                cfg.probe.grid_step,
            )?;
            if probe.verdict == Reach::Indeterminate {
                report.note(format!(
                    "sigma={sigma} rho={rho} indeterminate: clearance {:.3e} within slack {:.3e}",
                    probe.min_clearance, probe.slack
                ));
            }
            report.observe(
                format!("unreachable(sigma={sigma},rho={rho})"),
                verdict_value(probe.verdict),
                expect,
                Relation::Equal,
            );
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpenUnreachablesConfig {
    pub theta0: f64,
    pub rho: f64,
    pub delta: f64,
    pub max_k: usize,
    pub probe: ProbeConfig,
}

impl Default for OpenUnreachablesConfig {
    fn default() -> Self {
        Self {
            theta0: 0.0,
            rho: 0.5,
            delta: 1e-3,
            max_k: 10,
            probe: ProbeConfig::default(),
        }
    }
}

/// Neighbours `θ₀ ± kδ` of an unreachable point whose graph points lie within
/// the measured clearance radius are unreachable too.
pub fn check_open_unreachables<L: Landscape<f64> + ?Sized>(
    landscape: &L,
    cfg: &OpenUnreachablesConfig,
) -> Result<CheckReport> {
    if !(cfg.delta > 0.0) {
        return Err(Error::Precondition("delta must be > 0".into()));
    }
    let probe_at = |t: f64| {
        is_unreachable(
            landscape,
            t,
            cfg.rho,
            cfg.probe.angular_step,
            cfg.probe.grid_step,
        )
    };
    let base = probe_at(cfg.theta0)?;
    let mut report = CheckReport::new("open-unreachables");
    match base.verdict {
        Reach::Reachable => {
            return Err(Error::Precondition(format!(
                "theta0={} is reachable at rho={}",
                cfg.theta0, cfg.rho
            )))
        }
        Reach::Unreachable if base.min_clearance > 2.0 * base.slack => {}
        _ => {
            report.fail(format!(
                "skipped: base clearance {:.3e} does not exceed twice the slack {:.3e}",
                base.min_clearance, base.slack
            ));
            return Ok(report);
        }
    }
    report.observe(
        "base clearance",
        base.min_clearance,
        2.0 * base.slack,
        Relation::Informational,
    );
    let radius = base.min_clearance - base.slack;
    let p0 = [cfg.theta0, landscape.eval(&[cfg.theta0])];
    let mut tested = 0;
    for k in 1..=cfg.max_k {
        for sign in [-1.0, 1.0] {
            let t = cfg.theta0 + sign * k as f64 * cfg.delta;
            let y = landscape.eval(&[t]);
            if (t - p0[0]).hypot(y - p0[1]) >= radius {
                continue;
            }
            tested += 1;
            let probe = probe_at(t)?;
            report.observe(
                fmt_param("unreachable(theta)", t),
                verdict_value(probe.verdict),
                1.0,
                Relation::Equal,
            );
        }
    }
    report.note(format!(
        "{tested} neighbours within clearance radius {radius:.3e}"
    ));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdLimitConfig {
    pub theta0: Vec<f64>,
    pub eta: f64,
    pub steps: usize,
    /// Visited from the largest to the smallest radius.
    pub rhos: Vec<f64>,
    /// Bound on the gap at the smallest radius; `None` reports it without judging.
    pub epsilon: Option<f64>,
    pub projection: ProjectionConfig<f64>,
}

impl Default for GdLimitConfig {
    fn default() -> Self {
        Self {
            theta0: vec![1.0],
            eta: 0.1,
            steps: 50,
            rhos: vec![1e-1, 1e-2, 1e-3, 1e-4],
            epsilon: Some(1e-2),
            projection: ProjectionConfig::default(),
        }
    }
}

/// `max_t ‖θ_t^RBO − θ_t^GD‖` for each radius, in the order given.
pub fn gd_limit_gaps<L: Landscape<f64>>(
    landscape: &L,
    cfg: &GdLimitConfig,
) -> Result<Vec<Result<f64>>> {
    let gd = run_gd(landscape, &cfg.theta0, cfg.eta, cfg.steps)?;
    if let Some(why) = &gd.aborted {
        return Err(Error::Precondition(format!(
            "gradient descent reference aborted: {why}"
        )));
    }
    Ok(cfg
        .rhos
        .iter()
        .map(|&rho| {
            let rbo = run_rbo(
                landscape,
                &cfg.theta0,
                rho,
                cfg.eta,
                cfg.steps,
                cfg.projection,
            )?;
            match rbo.aborted {
                Some(why) => Err(Error::Precondition(format!(
                    "rbo at rho={rho} aborted: {why}"
                ))),
                None => Ok(trajectory_gap(&rbo, &gd)),
            }
        })
        .collect())
}

/// RBO trajectories approach the GD trajectory as ρ shrinks.
pub fn check_gd_limit<L: Landscape<f64>>(
    landscape: &L,
    cfg: &GdLimitConfig,
) -> Result<CheckReport> {
    let mut rhos = cfg.rhos.clone();
    rhos.sort_by(|a, b| b.total_cmp(a));
    rhos.dedup();
    if rhos.is_empty() || rhos.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Precondition(
            "rho list must be non-empty with positive entries".into(),
        ));
    }
    let sorted = GdLimitConfig {
        rhos: rhos.clone(),
        ..cfg.clone()
    };
    let mut report = CheckReport::new("gd-limit");
    let mut prev = f64::INFINITY;
    for (&rho, gap) in rhos.iter().zip(gd_limit_gaps(landscape, &sorted)?) {
        match gap {
            Ok(g) => {
                report.observe(format!("gap(rho={rho})"), g, prev, Relation::AtMost);
                prev = g;
            }
            Err(e) => {
                report.fail(e.to_string());
                return Ok(report);
            }
        }
    }
    match cfg.epsilon {
        Some(eps) => report.observe("gap(smallest rho) < epsilon", prev, eps, Relation::Below),
        None => report.observe("gap(smallest rho)", prev, f64::NAN, Relation::Informational),
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub terms: usize,
    pub rhos: Vec<f64>,
    pub interval: (f64, f64),
    pub grid_step: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            terms: 100,
            rhos: vec![0.01, 0.1, 1.0, 10.0],
            interval: (0.0, TAU),
            grid_step: 1e-3,
        }
    }
}

/// Local minima of the sampled offset profile, one count per radius.
pub fn smoothing_counts(cfg: &SmoothingConfig) -> Result<Vec<usize>> {
    require_increasing(&cfg.rhos, "rho list")?;
    let riemann = Riemann::new(cfg.terms)?;
    cfg.rhos
        .iter()
        .map(|&rho| {
            let values: Vec<f64> = offset_profile(&riemann, rho, cfg.interval, cfg.grid_step)?
                .into_iter()
                .map(|s| s.phi_rho)
                .collect();
            count_local_minima(&values)
        })
        .collect()
}

/// Larger balls see fewer local minima of the Riemann function.
pub fn check_smoothing(cfg: &SmoothingConfig) -> Result<CheckReport> {
    let counts = smoothing_counts(cfg)?;
    let mut report = CheckReport::new("smoothing");
    let mut prev = f64::INFINITY;
    for (&rho, &c) in cfg.rhos.iter().zip(&counts) {
        report.observe(
            format!("local_minima(rho={rho})"),
            c as f64,
            prev,
            Relation::AtMost,
        );
        prev = c as f64;
    }
    Ok(report)
}
