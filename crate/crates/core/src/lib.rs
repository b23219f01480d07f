//! Rolling ball optimization on loss graphs: landscapes, graph geometry,
//! the rolling ball optimizer with GD/SGD/SAM baselines, numerical checks,
//! and a small MLP landscape over MNIST.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

// `!(x <= y)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod landscape;
pub mod linalg;
pub mod neural;
pub mod optimizer;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Quadratic = landscape::Quadratic<f64>;
pub type AffineBump = landscape::AffineBump<f64>;
pub type BumpProfile = landscape::BumpProfile<f64>;
pub type SquareMatrix = linalg::SquareMatrix<f64>;
pub type GraphPoint = geometry::GraphPoint<f64>;
pub type AmbientPoint = geometry::AmbientPoint<f64>;
pub type OffsetSample = geometry::OffsetSample<f64>;
pub type BallState = optimizer::BallState<f64>;
pub type Rbo = optimizer::Rbo<f64>;
pub type Gd = optimizer::Gd<f64>;
pub type Sam = optimizer::Sam<f64>;
pub type ProjectionConfig = optimizer::ProjectionConfig<f64>;
pub type StepRecord = optimizer::StepRecord<f64>;
pub type Trajectory = optimizer::Trajectory<f64>;
pub type MlpLandscape = neural::MlpLandscape<f64>;
