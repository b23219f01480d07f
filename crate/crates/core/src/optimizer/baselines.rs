use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Optimizer, StepOutcome};
use crate::error::Result;
use crate::landscape::Landscape;
use crate::linalg;
use crate::scalar::Scalar;

/// Plain (stochastic) gradient descent `θ ← θ − η∇f(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Gd<T> {
    pub eta: T,
}

impl<T: Scalar> Optimizer<T> for Gd<T> {
    fn name(&self) -> &'static str {
        "gd"
    }

    fn hyperparameters(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("eta".to_string(), self.eta.to_f64_lossy())])
    }

    fn step(
        &self,
        _landscape: &dyn Landscape<T>,
        theta: &[T],
        _value: T,
        grad: &[T],
    ) -> Result<StepOutcome<T>> {
        let mut next = theta.to_vec();
        linalg::axpy(-self.eta, grad, &mut next);
        Ok(StepOutcome::plain(next))
    }
}

/// Sharpness-aware minimization with a single normalized ascent step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Sam<T> {
    pub eta: T,
    /// Ascent radius; zero reduces to gradient descent exactly.
    pub radius: T,
}

impl<T: Scalar> Optimizer<T> for Sam<T> {
    fn name(&self) -> &'static str {
        "sam"
    }

    fn hyperparameters(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("eta".to_string(), self.eta.to_f64_lossy()),
            ("sam_rho".to_string(), self.radius.to_f64_lossy()),
        ])
    }

    fn step(
        &self,
        landscape: &dyn Landscape<T>,
        theta: &[T],
        _value: T,
        grad: &[T],
    ) -> Result<StepOutcome<T>> {
        let gnorm = linalg::norm(grad);
        // zero gradient leaves no ascent direction: fall back to the descent gradient
        let ascent_grad = if self.radius == T::zero() || gnorm == T::zero() {
            grad.to_vec()
        } else {
            let mut probe = theta.to_vec();
            linalg::axpy(self.radius / gnorm, grad, &mut probe);
            landscape.grad(&probe)
        };
        let mut next = theta.to_vec();
        linalg::axpy(-self.eta, &ascent_grad, &mut next);
        Ok(StepOutcome::plain(next))
    }
}
