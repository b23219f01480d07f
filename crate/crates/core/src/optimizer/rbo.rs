use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::projection::{project_with, ProjectionConfig, WarmStart};
use super::{Optimizer, StepOutcome, StepRecord};
use crate::error::{Error, Result};
use crate::geometry::{normal_from_grad, AmbientPoint, GraphPoint};
use crate::landscape::Landscape;
use crate::linalg;
use crate::scalar::Scalar;

/// Contact point, center and radius of the ball. `center = contact + ρ ν(contact)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct BallState<T> {
    pub t: usize,
    pub contact: GraphPoint<T>,
    pub center: AmbientPoint<T>,
    pub rho: T,
    /// `∇f` at the contact, kept so the next step need not re-evaluate it.
    pub contact_grad: Vec<T>,
}

/// `p + ρ ν(p)` from the contact value and gradient.
pub(crate) fn center_of<T: Scalar>(theta: &[T], value: T, grad: &[T], rho: T) -> AmbientPoint<T> {
    let n = normal_from_grad(grad);
    let d = theta.len();
    AmbientPoint::new(
        theta
            .iter()
            .zip(&n[..d])
            .map(|(&x, &nx)| x + rho * nx)
            .collect(),
        value + rho * n[d],
    )
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if rho > T::zero() && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "ball radius must be > 0, got {rho}"
        )))
    }
}

/// Places the ball on the graph above `θ₀`.
pub fn lift<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    theta0: &[T],
    rho: T,
) -> Result<BallState<T>> {
    check_rho(rho)?;
    let (value, grad) = landscape.eval_grad(theta0);
    if !value.is_finite() || !linalg::all_finite(&grad) {
        return Err(Error::NonFinite("landscape at θ₀".into()));
    }
    Ok(BallState {
        t: 0,
        center: center_of(theta0, value, &grad, rho),
        contact: GraphPoint {
            theta: theta0.to_vec(),
            y: value,
        },
        rho,
        contact_grad: grad,
    })
}

pub(crate) struct RboUpdate<T> {
    pub contact: GraphPoint<T>,
    pub grad: Vec<T>,
    pub center: AmbientPoint<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Descent step `c̃ = c − ητ(p)`, projection of `c̃` onto the graph, re-lift.
pub(crate) fn rbo_update<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    theta: &[T],
    value: T,
    grad: &[T],
    rho: T,
    eta: T,
    cfg: &ProjectionConfig<T>,
) -> Result<RboUpdate<T>> {
    let center = center_of(theta, value, grad, rho);
    let candidate = AmbientPoint::new(
        center
            .theta
            .iter()
            .zip(grad)
            .map(|(&c, &g)| c - eta * g)
            .collect(),
        center.y - eta * linalg::norm_sq(grad),
    );
    let gamma = cfg.gamma.resolve(grad);
    let (warm, start) = match cfg.warm_start {
        WarmStart::PreviousContact => (theta.to_vec(), (value, grad.to_vec())),
        WarmStart::CandidateTheta => {
            let w = candidate.theta.clone();
            let s = landscape.eval_grad(&w);
            (w, s)
        }
    };
    let fp = project_with(landscape, &candidate, warm, start, gamma, cfg)?;
    let center = center_of(&fp.point.theta, fp.point.y, &fp.grad, rho);
    Ok(RboUpdate {
        contact: fp.point,
        grad: fp.grad,
        center,
        iterations: fp.iterations,
        residual: fp.residual,
    })
}

/// One rolling-ball update from `state`.
pub fn rbo_step<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    state: &BallState<T>,
    eta: T,
    cfg: &ProjectionConfig<T>,
) -> Result<(BallState<T>, StepRecord<T>)> {
    cfg.validate()?;
    let up = rbo_update(
        landscape,
        &state.contact.theta,
        state.contact.y,
        &state.contact_grad,
        state.rho,
        eta,
        cfg,
    )?;
    let next = BallState {
        t: state.t + 1,
        contact: up.contact,
        center: up.center,
        rho: state.rho,
        contact_grad: up.grad,
    };
    let record = StepRecord {
        t: next.t,
        theta: next.contact.theta.clone(),
        loss: next.contact.y,
        center: next.center.clone(),
        grad_norm: linalg::norm(&next.contact_grad),
        projection_iters: up.iterations,
        projection_residual: up.residual,
    };
    Ok((next, record))
}

/// Rolling ball optimizer with radius `rho` and learning rate `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Rbo<T> {
    pub rho: T,
    pub eta: T,
    #[serde(default)]
    pub projection: ProjectionConfig<T>,
}

impl<T: Scalar> Rbo<T> {
    pub fn new(rho: T, eta: T, projection: ProjectionConfig<T>) -> Result<Self> {
        check_rho(rho)?;
        projection.validate()?;
        Ok(Self {
            rho,
            eta,
            projection,
        })
    }
}

impl<T: Scalar> Optimizer<T> for Rbo<T> {
    fn name(&self) -> &'static str {
        "rbo"
    }

    fn hyperparameters(&self) -> BTreeMap<String, f64> {
        let mut h = BTreeMap::from([
            ("rho".to_string(), self.rho.to_f64_lossy()),
            ("eta".to_string(), self.eta.to_f64_lossy()),
            (
                "projection_max_iters".to_string(),
                self.projection.max_iters as f64,
            ),
            (
                "projection_grad_tol".to_string(),
                self.projection.grad_tol.to_f64_lossy(),
            ),
        ]);
        let (key, gamma) = match self.projection.gamma {
            super::StepSize::Fixed(g) => ("projection_gamma", g),
            super::StepSize::GradScaled(g) => ("projection_gamma_scaled", g),
        };
        h.insert(key.to_string(), gamma.to_f64_lossy());
        h
    }

    fn initial_center(&self, theta: &[T], value: T, grad: &[T]) -> AmbientPoint<T> {
        center_of(theta, value, grad, self.rho)
    }

    fn step(
        &self,
        landscape: &dyn Landscape<T>,
        theta: &[T],
        value: T,
        grad: &[T],
    ) -> Result<StepOutcome<T>> {
        let up = rbo_update(
            landscape,
            theta,
            value,
            grad,
            self.rho,
            self.eta,
            &self.projection,
        )?;
        Ok(StepOutcome {
            theta: up.contact.theta,
            center: Some(up.center),
            evaluated: Some((up.contact.y, up.grad)),
            projection_iters: up.iterations,
            projection_residual: up.residual,
        })
    }
}
