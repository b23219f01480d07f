//! Rolling ball optimizer, its footpoint projection, and the GD/SGD/SAM
//! baselines, all driven through one trajectory recorder.

mod baselines;
mod projection;
mod rbo;

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub use baselines::{Gd, Sam};
pub use projection::{
    project_footpoint, Footpoint, ProjectionConfig, StepSize, WarmStart, DIVERGENCE_GUARD,
};
pub use rbo::{lift, rbo_step, BallState, Rbo};

use crate::error::{Error, Result};
use crate::geometry::AmbientPoint;
use crate::landscape::{Landscape, StochasticLandscape};
use crate::linalg;
use crate::scalar::Scalar;

/// What one optimizer update produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub theta: Vec<T>,
    /// Ball center after the step; `None` for point-like optimizers.
    pub center: Option<AmbientPoint<T>>,
    /// `(f, ∇f)` at the new θ if the step already computed them on the same landscape.
    pub evaluated: Option<(T, Vec<T>)>,
    pub projection_iters: usize,
    pub projection_residual: T,
}

impl<T: Scalar> StepOutcome<T> {
    pub fn plain(theta: Vec<T>) -> Self {
        Self {
            theta,
            center: None,
            evaluated: None,
            projection_iters: 0,
            projection_residual: T::zero(),
        }
    }
}

/// A first-order update rule.
pub trait Optimizer<T: Scalar> {
    fn name(&self) -> &'static str;

    fn hyperparameters(&self) -> BTreeMap<String, f64>;

    /// Center reported for a state; point-like optimizers report the contact.
    fn initial_center(&self, theta: &[T], value: T, _grad: &[T]) -> AmbientPoint<T> {
        AmbientPoint::new(theta.to_vec(), value)
    }

    /// Updates `theta` given `f(θ)` and `∇f(θ)` on `landscape`.
    fn step(
        &self,
        landscape: &dyn Landscape<T>,
        theta: &[T],
        value: T,
        grad: &[T],
    ) -> Result<StepOutcome<T>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct StepRecord<T> {
    pub t: usize,
    pub theta: Vec<T>,
    pub loss: T,
    pub center: AmbientPoint<T>,
    pub grad_norm: T,
    pub projection_iters: usize,
    pub projection_residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub optimizer: String,
    pub hyperparameters: BTreeMap<String, f64>,
    pub landscape: String,
    pub seed: Option<u64>,
}

/// Header plus `T + 1` records, the first being the initial state. A run cut
/// short by an error keeps the records produced so far and sets `aborted`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Trajectory<T> {
    pub header: TrajectoryHeader,
    pub records: Vec<StepRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn last(&self) -> &StepRecord<T> {
        self.records
            .last()
            .expect("trajectory always holds the initial record")
    }

    pub fn thetas(&self) -> impl Iterator<Item = &[T]> {
        self.records.iter().map(|r| r.theta.as_slice())
    }

    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn csv_header(&self) -> String {
        let d = self.records.first().map_or(0, |r| r.theta.len());
        let mut cols = vec!["t".to_string()];
        cols.extend((0..d).map(|i| format!("theta_{i}")));
        cols.push("loss".into());
        cols.extend((0..d).map(|i| format!("center_theta_{i}")));
        cols.extend(
            [
                "center_y",
                "grad_norm",
                "projection_iters",
                "projection_residual",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    /// One row per record, comma-separated, LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        for r in &self.records {
            let mut row = vec![r.t.to_string()];
            row.extend(r.theta.iter().map(|x| x.to_string()));
            row.push(r.loss.to_string());
            row.extend(r.center.theta.iter().map(|x| x.to_string()));
            row.push(r.center.y.to_string());
            row.push(r.grad_norm.to_string());
            row.push(r.projection_iters.to_string());
            row.push(r.projection_residual.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(io::Error::other)
    }
}

fn check_state<T: Scalar>(theta: &[T], value: T, grad: &[T], step: usize) -> Result<()> {
    let norm = linalg::norm(theta);
    if !(norm <= T::lit(DIVERGENCE_GUARD)) {
        return Err(Error::Diverged {
            step,
            norm: norm.to_f64_lossy(),
        });
    }
    if !value.is_finite() || !linalg::all_finite(grad) {
        return Err(Error::NonFinite(format!("landscape at step {step}")));
    }
    Ok(())
}

struct Recorder<T> {
    trajectory: Trajectory<T>,
}

impl<T: Scalar> Recorder<T> {
    fn new<O: Optimizer<T> + ?Sized>(opt: &O, landscape_id: String, seed: Option<u64>) -> Self {
        Self {
            trajectory: Trajectory {
                header: TrajectoryHeader {
                    optimizer: opt.name().to_string(),
                    hyperparameters: opt.hyperparameters(),
                    landscape: landscape_id,
                    seed,
                },
                records: Vec::new(),
                aborted: None,
            },
        }
    }

    fn push(
        &mut self,
        theta: &[T],
        value: T,
        grad: &[T],
        center: AmbientPoint<T>,
        iters: usize,
        residual: T,
    ) {
        self.trajectory.records.push(StepRecord {
            t: self.trajectory.records.len(),
            theta: theta.to_vec(),
            loss: value,
            center,
            grad_norm: linalg::norm(grad),
            projection_iters: iters,
            projection_residual: residual,
        });
    }

    fn abort(mut self, err: Error) -> Trajectory<T> {
        self.trajectory.aborted = Some(err.to_string());
        self.trajectory
    }
}

fn check_setup<T: Scalar>(landscape_dim: usize, theta0: &[T], steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "number of steps T must be >= 1".into(),
        ));
    }
    if theta0.len() != landscape_dim {
        return Err(Error::DimensionMismatch {
            expected: landscape_dim,
            found: theta0.len(),
        });
    }
    Ok(())
}

/// Runs `steps` updates on a deterministic landscape.
pub fn run<T, O, L>(opt: &O, landscape: &L, theta0: &[T], steps: usize) -> Result<Trajectory<T>>
where
    T: Scalar,
    O: Optimizer<T> + ?Sized,
    L: Landscape<T>,
{
    check_setup(landscape.dim(), theta0, steps)?;
    let mut rec = Recorder::new(opt, landscape.id(), None);
    let mut theta = theta0.to_vec();
    let (mut value, mut grad) = landscape.eval_grad(&theta);
    if let Err(e) = check_state(&theta, value, &grad, 0) {
        return Ok(rec.abort(e));
    }
    rec.push(
        &theta,
        value,
        &grad,
        opt.initial_center(&theta, value, &grad),
        0,
        T::zero(),
    );
    for t in 1..=steps {
        let out = match opt.step(landscape, &theta, value, &grad) {
            Ok(o) => o,
            Err(e) => return Ok(rec.abort(e)),
        };
        theta = out.theta;
        (value, grad) = match out.evaluated {
            Some(vg) => vg,
            None => landscape.eval_grad(&theta),
        };
        if let Err(e) = check_state(&theta, value, &grad, t) {
            return Ok(rec.abort(e));
        }
        let center = out
            .center
            .unwrap_or_else(|| AmbientPoint::new(theta.clone(), value));
        rec.push(
            &theta,
            value,
            &grad,
            center,
            out.projection_iters,
            out.projection_residual,
        );
    }
    Ok(rec.trajectory)
}

/// Runs `steps` updates, each on a fresh minibatch view drawn from `seed`.
/// Records report the full objective; one minibatch serves the whole update,
/// including every inner projection iteration.
pub fn run_stochastic<T, O, L>(
    opt: &O,
    landscape: &L,
    theta0: &[T],
    steps: usize,
    seed: u64,
) -> Result<Trajectory<T>>
where
    T: Scalar,
    O: Optimizer<T> + ?Sized,
    L: StochasticLandscape<T>,
{
    check_setup(landscape.dim(), theta0, steps)?;
    let mut rec = Recorder::new(opt, landscape.id(), Some(seed));
    let mut schedule = landscape.schedule(seed);
    let mut theta = theta0.to_vec();
    let (value, grad) = landscape.eval_grad(&theta);
    if let Err(e) = check_state(&theta, value, &grad, 0) {
        return Ok(rec.abort(e));
    }
    rec.push(
        &theta,
        value,
        &grad,
        opt.initial_center(&theta, value, &grad),
        0,
        T::zero(),
    );
    for t in 1..=steps {
        let ctx = schedule.next().ok_or(Error::EmptySet)?;
        let view = landscape.with_context(&ctx);
        let (bv, bg) = view.eval_grad(&theta);
        let out = match opt.step(view.as_ref(), &theta, bv, &bg) {
            Ok(o) => o,
            Err(e) => return Ok(rec.abort(e)),
        };
        theta = out.theta;
        let (value, grad) = landscape.eval_grad(&theta);
        if let Err(e) = check_state(&theta, value, &grad, t) {
            return Ok(rec.abort(e));
        }
        let center = out
            .center
            .unwrap_or_else(|| AmbientPoint::new(theta.clone(), value));
        rec.push(
            &theta,
            value,
            &grad,
            center,
            out.projection_iters,
            out.projection_residual,
        );
    }
    Ok(rec.trajectory)
}

pub fn run_rbo<T: Scalar, L: Landscape<T>>(
    landscape: &L,
    theta0: &[T],
    rho: T,
    eta: T,
    steps: usize,
    cfg: ProjectionConfig<T>,
) -> Result<Trajectory<T>> {
    run(&Rbo::new(rho, eta, cfg)?, landscape, theta0, steps)
}

pub fn run_gd<T: Scalar, L: Landscape<T>>(
    landscape: &L,
    theta0: &[T],
    eta: T,
    steps: usize,
) -> Result<Trajectory<T>> {
    run(&Gd { eta }, landscape, theta0, steps)
}

pub fn run_sam<T: Scalar, L: Landscape<T>>(
    landscape: &L,
    theta0: &[T],
    eta: T,
    sam_rho: T,
    steps: usize,
) -> Result<Trajectory<T>> {
    if !(sam_rho >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "sam_rho must be >= 0, got {sam_rho}"
        )));
    }
    run(
        &Sam {
            eta,
            radius: sam_rho,
        },
        landscape,
        theta0,
        steps,
    )
}

pub fn run_sgd<T: Scalar, L: StochasticLandscape<T>>(
    landscape: &L,
    theta0: &[T],
    eta: T,
    steps: usize,
    seed: u64,
) -> Result<Trajectory<T>> {
    run_stochastic(&Gd { eta }, landscape, theta0, steps, seed)
}

/// Sup-norm distance between the θ-iterates of two trajectories of equal length.
pub fn trajectory_gap<T: Scalar>(a: &Trajectory<T>, b: &Trajectory<T>) -> T {
    a.records
        .iter()
        .zip(&b.records)
        .fold(T::zero(), |m, (x, y)| {
            m.max(linalg::max_abs_diff(&x.theta, &y.theta))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{AffineBump, Quadratic, Riemann};

    fn half_square() -> Quadratic<f64> {
        Quadratic::parabola(1.0).unwrap()
    }

    #[test]
    fn gd_closed_form() {
        let tr = run_gd(&half_square(), &[1.0], 0.1, 3).unwrap();
        let thetas: Vec<f64> = tr.thetas().map(|t| t[0]).collect();
        let expected = [1.0, 0.9, 0.81, 0.729];
        for (a, b) in thetas.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(tr.records.len(), 4);
    }

    #[test]
    fn zero_learning_rate_freezes_everything() {
        let r = Riemann::new(10).unwrap();
        for tr in [
            run_gd::<f64, _>(&r, &[0.3], 0.0, 5).unwrap(),
            run_sam::<f64, _>(&r, &[0.3], 0.0, 0.05, 5).unwrap(),
            run_rbo::<f64, _>(&r, &[0.3], 0.5, 0.0, 5, ProjectionConfig::default()).unwrap(),
        ] {
            let first = &tr.records[0];
            for rec in &tr.records[1..] {
                assert_eq!(rec.theta, first.theta, "{}", tr.header.optimizer);
                assert_eq!(rec.loss, first.loss);
            }
        }
    }

    #[test]
    fn gd_diverges_above_two_over_l() {
        let tr = run_gd(&half_square(), &[1.0], 2.5, 20).unwrap();
        let mags: Vec<f64> = tr.thetas().map(|t| t[0].abs()).collect();
        assert!(mags.windows(2).all(|w| w[1] > w[0]));
        assert!((mags[20] - 1.5f64.powi(20)).abs() < 1e-6 * mags[20]);
    }

    #[test]
    fn sam_examples() {
        let f = half_square();
        let sam = run_sam(&f, &[1.0], 0.1, 0.0, 30).unwrap();
        let gd = run_gd(&f, &[1.0], 0.1, 30).unwrap();
        assert_eq!(sam.records, gd.records);
        let one = run_sam(&f, &[1.0], 0.1, 0.05, 1).unwrap();
        assert!((one.records[1].theta[0] - 0.895).abs() < 1e-15);
        assert!(run_sam(&f, &[1.0], 0.1, -1.0, 1).is_err());
    }

    #[test]
    fn sam_at_critical_point_uses_descent_gradient() {
        let tr = run_sam(&half_square(), &[0.0], 0.1, 0.05, 3).unwrap();
        assert!(tr.is_complete());
        assert!(tr.thetas().all(|t| t[0] == 0.0));
    }

    #[test]
    fn rbo_records_initial_state_and_steps() {
        let r = Riemann::new(5).unwrap();
        let tr = run_rbo::<f64, _>(&r, &[0.4], 0.5, 0.1, 7, ProjectionConfig::default()).unwrap();
        assert_eq!(tr.records.len(), 8);
        assert!(tr.records.windows(2).all(|w| w[1].t == w[0].t + 1));
        let s = lift::<f64, _>(&r, &[0.4], 0.5).unwrap();
        assert_eq!(tr.records[0].center, s.center);
    }

    #[test]
    fn affine_rbo_equals_gd() {
        let f = AffineBump::affine(vec![1.0, -0.5], 2.0).unwrap();
        let cfg = ProjectionConfig {
            gamma: StepSize::GradScaled(0.5),
            max_iters: 10_000,
            grad_tol: 1e-13,
            warm_start: WarmStart::PreviousContact,
        };
        for &rho in &[1e-3, 0.3, 5.0] {
            let rbo = run_rbo(&f, &[0.0, 0.0], rho, 0.2, 25, cfg).unwrap();
            let gd = run_gd(&f, &[0.0, 0.0], 0.2, 25).unwrap();
            assert!(trajectory_gap(&rbo, &gd) <= 1e-9, "rho = {rho}");
        }
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(run_gd(&half_square(), &[1.0], 0.1, 0).is_err());
        assert!(run_gd(&half_square(), &[1.0, 2.0], 0.1, 1).is_err());
    }

    #[test]
    fn csv_has_fixed_header_and_one_row_per_record() {
        let tr = run_gd(&half_square(), &[1.0], 0.1, 3).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "t,theta_0,loss,center_theta_0,center_y,grad_norm,projection_iters,projection_residual"
        );
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("1,0.9,0.405"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn json_round_trips() {
        let r = Riemann::new(3).unwrap();
        let tr = run_rbo::<f64, _>(&r, &[0.2], 0.3, 0.1, 4, ProjectionConfig::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_json(&mut buf).unwrap();
        let back: Trajectory<f64> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, tr);
    }
}
