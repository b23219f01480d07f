//! Footpoint projection: gradient descent on `g(θ) = ½‖θ − θ̃‖² + ½(f(θ) − ỹ)²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AmbientPoint, GraphPoint};
use crate::landscape::Landscape;
use crate::linalg;
use crate::scalar::Scalar;

/// Iterates whose norm exceeds this are reported as divergence.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// Inner step size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
#[serde(bound(deserialize = "T: Scalar"))]
pub enum StepSize<T> {
    Fixed(T),
    /// `c / (1 + ‖∇f‖²)` with the gradient taken at the warm start.
    GradScaled(T),
}

impl<T: Scalar> StepSize<T> {
    pub fn resolve(&self, grad_at_start: &[T]) -> T {
        match *self {
            Self::Fixed(g) => g,
            Self::GradScaled(c) => c / (T::one() + linalg::norm_sq(grad_at_start)),
        }
    }
}

/// Where the inner iteration starts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarmStart {
    /// The current contact `θ_t`; keeps the footpoint in the basin the ball came from.
    #[default]
    PreviousContact,
    /// The θ-part of the candidate center.
    CandidateTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct ProjectionConfig<T> {
    pub gamma: StepSize<T>,
    pub max_iters: usize,
    pub grad_tol: T,
    pub warm_start: WarmStart,
}

impl<T: Scalar> Default for ProjectionConfig<T> {
    fn default() -> Self {
        Self {
            gamma: StepSize::GradScaled(T::lit(0.1)),
            max_iters: 100,
            grad_tol: T::lit(1e-8),
            warm_start: WarmStart::PreviousContact,
        }
    }
}

impl ProjectionConfig<f64> {
    /// The same settings in another precision.
    pub fn cast<T: Scalar>(&self) -> ProjectionConfig<T> {
        ProjectionConfig {
            gamma: match self.gamma {
                StepSize::Fixed(g) => StepSize::Fixed(T::lit(g)),
                StepSize::GradScaled(g) => StepSize::GradScaled(T::lit(g)),
            },
            max_iters: self.max_iters,
            grad_tol: T::lit(self.grad_tol),
            warm_start: self.warm_start,
        }
    }
}

impl<T: Scalar> ProjectionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let gamma_ok = match self.gamma {
            StepSize::Fixed(g) | StepSize::GradScaled(g) => g > T::zero() && g.is_finite(),
        };
        if !gamma_ok {
            return Err(Error::InvalidParameter(
                "projection step size must be > 0".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "projection max_iters must be >= 1".into(),
            ));
        }
        if !(self.grad_tol >= T::zero()) {
            return Err(Error::InvalidParameter(
                "projection grad_tol must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a projection: the footpoint on `Γ` and the gradient there.
#[derive(Debug, Clone, PartialEq)]
pub struct Footpoint<T> {
    pub point: GraphPoint<T>,
    pub grad: Vec<T>,
    pub iterations: usize,
    /// Final `‖∇g‖`, reported whether or not the tolerance was met.
    pub residual: T,
}

/// Projects `candidate` onto the graph starting from `warm_start`.
pub fn project_footpoint<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    candidate: &AmbientPoint<T>,
    warm_start: &[T],
    cfg: &ProjectionConfig<T>,
) -> Result<Footpoint<T>> {
    cfg.validate()?;
    if !linalg::all_finite(warm_start) {
        return Err(Error::NonFinite("warm start".into()));
    }
    let start = landscape.eval_grad(warm_start);
    let gamma = cfg.gamma.resolve(&start.1);
    project_with(landscape, candidate, warm_start.to_vec(), start, gamma, cfg)
}

/// Inner loop with the warm-start evaluation already in hand.
pub(crate) fn project_with<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    candidate: &AmbientPoint<T>,
    mut theta: Vec<T>,
    (mut value, mut grad): (T, Vec<T>),
    gamma: T,
    cfg: &ProjectionConfig<T>,
) -> Result<Footpoint<T>> {
    let guard = T::lit(DIVERGENCE_GUARD);
    let mut step = vec![T::zero(); theta.len()];
    for k in 0..=cfg.max_iters {
        if !value.is_finite() || !linalg::all_finite(&grad) {
            return Err(Error::NonFinite(format!("projection iterate {k}")));
        }
        let lift = value - candidate.y;
        for ((s, (&t, &c)), &g) in step
            .iter_mut()
            .zip(theta.iter().zip(&candidate.theta))
            .zip(&grad)
        {
            *s = (t - c) + lift * g;
        }
        let residual = linalg::norm(&step);
        if residual <= cfg.grad_tol || k == cfg.max_iters {
            return Ok(Footpoint {
                point: GraphPoint { theta, y: value },
                grad,
                iterations: k,
                residual,
            });
        }
        linalg::axpy(-gamma, &step, &mut theta);
        let norm = linalg::norm(&theta);
        if !(norm <= guard) {
            return Err(Error::ProjectionDiverged {
                iterations: k + 1,
                norm: norm.to_f64_lossy(),
            });
        }
        (value, grad) = landscape.eval_grad(&theta);
    }
    unreachable!("loop returns at k == max_iters")
}
