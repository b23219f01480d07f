//! Loss landscapes: the [`Landscape`] abstraction, its stochastic extension and
//! a catalogue of analytic test functions with exact derivatives.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SquareMatrix};
use crate::scalar::Scalar;

/// A differentiable scalar function on parameter space.
///
/// Implementations are immutable after construction. Stochastic objectives
/// expose minibatch views through [`StochasticLandscape`] instead of mutating.
pub trait Landscape<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, theta: &[T]) -> T;

    fn grad(&self, theta: &[T]) -> Vec<T>;

    /// Value and gradient together; override when they share work.
    fn eval_grad(&self, theta: &[T]) -> (T, Vec<T>) {
        (self.eval(theta), self.grad(theta))
    }

    /// Exact Hessian, when the landscape knows it.
    fn hessian(&self, _theta: &[T]) -> Option<SquareMatrix<T>> {
        None
    }

    /// Exact supremum of `f` over all of parameter space, when bounded and known.
    fn sup(&self) -> Option<T> {
        None
    }

    fn id(&self) -> String;
}

impl<T: Scalar, L: Landscape<T> + ?Sized> Landscape<T> for &L {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, theta: &[T]) -> T {
        (**self).eval(theta)
    }
    fn grad(&self, theta: &[T]) -> Vec<T> {
        (**self).grad(theta)
    }
    fn eval_grad(&self, theta: &[T]) -> (T, Vec<T>) {
        (**self).eval_grad(theta)
    }
    fn hessian(&self, theta: &[T]) -> Option<SquareMatrix<T>> {
        (**self).hessian(theta)
    }
    fn sup(&self) -> Option<T> {
        (**self).sup()
    }
    fn id(&self) -> String {
        (**self).id()
    }
}

impl<T: Scalar, L: Landscape<T> + ?Sized> Landscape<T> for Box<L> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, theta: &[T]) -> T {
        (**self).eval(theta)
    }
    fn grad(&self, theta: &[T]) -> Vec<T> {
        (**self).grad(theta)
    }
    fn eval_grad(&self, theta: &[T]) -> (T, Vec<T>) {
        (**self).eval_grad(theta)
    }
    fn hessian(&self, theta: &[T]) -> Option<SquareMatrix<T>> {
        (**self).hessian(theta)
    }
    fn sup(&self) -> Option<T> {
        (**self).sup()
    }
    fn id(&self) -> String {
        (**self).id()
    }
}

/// Indices of the samples forming one minibatch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchContext(Arc<[usize]>);

impl BatchContext {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices.into())
    }

    /// Every sample, in storage order.
    pub fn full(n: usize) -> Self {
        Self::new((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A finite-sum objective whose minibatch views are themselves landscapes.
///
/// The landscape's own `eval`/`grad` are the full-data objective and must
/// agree bitwise with `with_context(&BatchContext::full(n))`.
pub trait StochasticLandscape<T: Scalar>: Landscape<T> {
    fn sample_count(&self) -> usize;

    fn batch_size(&self) -> usize;

    fn with_context(&self, ctx: &BatchContext) -> Box<dyn Landscape<T> + '_>;

    fn schedule(&self, seed: u64) -> BatchSchedule {
        BatchSchedule::new(self.sample_count(), self.batch_size(), seed)
    }
}

/// Epoch-wise shuffled minibatches drawn from a seeded generator.
///
/// When the batch covers the whole dataset every context is the identity
/// ordering, so full-batch stochastic runs reproduce deterministic ones.
#[derive(Debug, Clone)]
pub struct BatchSchedule {
    rng: ChaCha8Rng,
    n: usize,
    batch: usize,
    order: Vec<usize>,
    cursor: usize,
}

impl BatchSchedule {
    pub fn new(n: usize, batch: usize, seed: u64) -> Self {
        let batch = batch.clamp(1, n.max(1));
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            batch,
            order: (0..n).collect(),
            cursor: n,
        }
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.n.div_ceil(self.batch)
    }

    pub fn is_full_batch(&self) -> bool {
        self.batch >= self.n
    }
}

impl Iterator for BatchSchedule {
    type Item = BatchContext;

    fn next(&mut self) -> Option<BatchContext> {
        if self.n == 0 {
            return None;
        }
        if self.is_full_batch() {
            return Some(BatchContext::full(self.n));
        }
        if self.cursor >= self.n {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let end = (self.cursor + self.batch).min(self.n);
        let ctx = BatchContext::new(self.order[self.cursor..end].to_vec());
        self.cursor = end;
        Some(ctx)
    }
}

/// A deterministic landscape seen as a one-sample finite sum, so stochastic
/// drivers can run on it; every minibatch is the landscape itself.
#[derive(Debug, Clone)]
pub struct FullBatch<L>(pub L);

impl<T: Scalar, L: Landscape<T>> Landscape<T> for FullBatch<L> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, theta: &[T]) -> T {
        self.0.eval(theta)
    }
    fn grad(&self, theta: &[T]) -> Vec<T> {
        self.0.grad(theta)
    }
    fn eval_grad(&self, theta: &[T]) -> (T, Vec<T>) {
        self.0.eval_grad(theta)
    }
    fn hessian(&self, theta: &[T]) -> Option<SquareMatrix<T>> {
        self.0.hessian(theta)
    }
    fn sup(&self) -> Option<T> {
        self.0.sup()
    }
    fn id(&self) -> String {
        self.0.id()
    }
}

impl<T: Scalar, L: Landscape<T>> StochasticLandscape<T> for FullBatch<L> {
    fn sample_count(&self) -> usize {
        1
    }

    fn batch_size(&self) -> usize {
        1
    }

    fn with_context(&self, _ctx: &BatchContext) -> Box<dyn Landscape<T> + '_> {
        Box::new(&self.0)
    }
}

/// `f(θ) = ½ (θ − θ*)ᵀ A (θ − θ*)` with `A` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic<T: Scalar> {
    matrix: SquareMatrix<T>,
    center: Vec<T>,
}

impl<T: Scalar> Quadratic<T> {
    pub fn new(matrix: SquareMatrix<T>, center: Vec<T>) -> Result<Self> {
        if matrix.dim() == 0 {
            return Err(Error::InvalidParameter("quadratic needs d >= 1".into()));
        }
        if center.len() != matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: matrix.dim(),
                found: center.len(),
            });
        }
        let (gap, row, col) = matrix.asymmetry();
        let scale = matrix
            .rows()
            .iter()
            .flatten()
            .fold(T::one(), |acc, x| acc.max(x.abs()));
        if gap > T::lit(1e-12) * scale {
            return Err(Error::NotSymmetric {
                row,
                col,
                gap: gap.to_f64_lossy(),
            });
        }
        let min_eig = matrix.symmetric_eigenvalues()[0];
        if min_eig < -T::lit(1e-10) * scale {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min_eig.to_f64_lossy(),
            });
        }
        Ok(Self { matrix, center })
    }

    /// One-dimensional `f(θ) = σθ²/2`, curvature `σ` at its vertex.
    pub fn parabola(sigma: T) -> Result<Self> {
        Self::new(SquareMatrix::diagonal(&[sigma]), vec![T::zero()])
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.matrix
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    fn offset(&self, theta: &[T]) -> Vec<T> {
        linalg::sub(theta, &self.center)
    }
}

impl<T: Scalar> Landscape<T> for Quadratic<T> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, theta: &[T]) -> T {
        let x = self.offset(theta);
        T::lit(0.5) * linalg::dot(&x, &self.matrix.mul_vec(&x))
    }

    fn grad(&self, theta: &[T]) -> Vec<T> {
        self.matrix.mul_vec(&self.offset(theta))
    }

    fn eval_grad(&self, theta: &[T]) -> (T, Vec<T>) {
        let x = self.offset(theta);
        let g = self.matrix.mul_vec(&x);
        (T::lit(0.5) * linalg::dot(&x, &g), g)
    }

    fn hessian(&self, _theta: &[T]) -> Option<SquareMatrix<T>> {
        Some(self.matrix.clone())
    }

    fn id(&self) -> String {
        format!("quadratic(d={})", self.dim())
    }
}

/// Partial sum `Σ_{n=1}^{N} sin(n²θ)/n²` of the Riemann function, d = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Riemann {
    terms: usize,
}

impl Riemann {
    pub fn new(terms: usize) -> Result<Self> {
        if terms == 0 {
            return Err(Error::InvalidParameter(
                "riemann partial sum needs N >= 1".into(),
            ));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    fn freqs<T: Scalar>(&self) -> impl Iterator<Item = T> {
        (1..=self.terms).map(|n| T::from_count(n * n))
    }
}

impl<T: Scalar> Landscape<T> for Riemann {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, theta: &[T]) -> T {
        let x = theta[0];
        self.freqs::<T>().map(|k| (k * x).sin() / k).sum()
    }

    fn grad(&self, theta: &[T]) -> Vec<T> {
        let x = theta[0];
        vec![self.freqs::<T>().map(|k| (k * x).cos()).sum()]
    }

    fn eval_grad(&self, theta: &[T]) -> (T, Vec<T>) {
        let x = theta[0];
        let (mut f, mut g) = (T::zero(), T::zero());
        for k in self.freqs::<T>() {
            let (s, c) = (k * x).sin_cos();
            f += s / k;
            g += c;
        }
        (f, vec![g])
    }

    fn hessian(&self, theta: &[T]) -> Option<SquareMatrix<T>> {
        let x = theta[0];
        let h: T = self.freqs::<T>().map(|k| -k * (k * x).sin()).sum();
        Some(SquareMatrix::diagonal(&[h]))
    }

    fn id(&self) -> String {
        format!("riemann(N={})", self.terms)
    }
}

/// `f(θ) = sin(θ)`, d = 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sinusoid;

impl<T: Scalar> Landscape<T> for Sinusoid {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, theta: &[T]) -> T {
        theta[0].sin()
    }
    fn grad(&self, theta: &[T]) -> Vec<T> {
        vec![theta[0].cos()]
    }
    fn hessian(&self, theta: &[T]) -> Option<SquareMatrix<T>> {
        Some(SquareMatrix::diagonal(&[-theta[0].sin()]))
    }
    fn sup(&self) -> Option<T> {
        Some(T::one())
    }
    fn id(&self) -> String {
        "sinusoid".into()
    }
}

type ProfileFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// User-supplied bounded profile. The sup-norm is mandatory.
#[derive(Clone)]
pub struct CustomProfile<T> {
    pub value: ProfileFn<T>,
    pub derivative: ProfileFn<T>,
    pub second_derivative: Option<ProfileFn<T>>,
    pub sup_norm: Option<T>,
}

/// One-dimensional bounded perturbation applied to each coordinate.
#[derive(Clone)]
pub enum BumpProfile<T> {
    Sin,
    Cos,
    /// `exp(−x²)`
    Gaussian,
    Custom(CustomProfile<T>),
}

impl<T: fmt::Debug> fmt::Debug for BumpProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sin => f.write_str("Sin"),
            Self::Cos => f.write_str("Cos"),
            Self::Gaussian => f.write_str("Gaussian"),
            Self::Custom(c) => f
                .debug_struct("Custom")
                .field("sup_norm", &c.sup_norm)
                .finish_non_exhaustive(),
        }
    }
}

impl<T: Scalar> BumpProfile<T> {
    fn value(&self, x: T) -> T {
        match self {
            Self::Sin => x.sin(),
            Self::Cos => x.cos(),
            Self::Gaussian => (-x * x).exp(),
            Self::Custom(c) => (c.value)(x),
        }
    }

    fn derivative(&self, x: T) -> T {
        match self {
            Self::Sin => x.cos(),
            Self::Cos => -x.sin(),
            Self::Gaussian => T::lit(-2.0) * x * (-x * x).exp(),
            Self::Custom(c) => (c.derivative)(x),
        }
    }

    fn second_derivative(&self, x: T) -> Option<T> {
        Some(match self {
            Self::Sin => -x.sin(),
            Self::Cos => -x.cos(),
            Self::Gaussian => (T::lit(4.0) * x * x - T::lit(2.0)) * (-x * x).exp(),
            Self::Custom(c) => return c.second_derivative.as_ref().map(|h| h(x)),
        })
    }

    /// `sup |φ|`
    pub fn sup_norm(&self) -> Option<T> {
        match self {
            Self::Sin | Self::Cos | Self::Gaussian => Some(T::one()),
            Self::Custom(c) => c.sup_norm,
        }
    }

    /// Exact `(inf φ, sup φ)` for the built-in profiles.
    fn range(&self) -> Option<(T, T)> {
        match self {
            Self::Sin | Self::Cos => Some((-T::one(), T::one())),
            Self::Gaussian => Some((T::zero(), T::one())),
            Self::Custom(_) => None,
        }
    }
}

/// `f(θ) = ⟨a, θ⟩ + b + amplitude · Σᵢ φ(θᵢ)`.
#[derive(Debug, Clone)]
pub struct AffineBump<T: Scalar> {
    slope: Vec<T>,
    offset: T,
    profile: BumpProfile<T>,
    amplitude: T,
}

impl<T: Scalar> AffineBump<T> {
    pub fn new(slope: Vec<T>, offset: T, profile: BumpProfile<T>, amplitude: T) -> Result<Self> {
        if slope.is_empty() {
            return Err(Error::InvalidParameter(
                "affine slope must have d >= 1".into(),
            ));
        }
        match profile.sup_norm() {
            Some(s) if s.is_finite() => {}
            _ => return Err(Error::MissingSupNorm),
        }
        Ok(Self {
            slope,
            offset,
            profile,
            amplitude,
        })
    }

    pub fn affine(slope: Vec<T>, offset: T) -> Result<Self> {
        Self::new(slope, offset, BumpProfile::Sin, T::zero())
    }

    /// The same landscape with the bump removed.
    pub fn affine_part(&self) -> Self {
        Self {
            amplitude: T::zero(),
            ..self.clone()
        }
    }

    pub fn slope(&self) -> &[T] {
        &self.slope
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    /// `sup |amplitude · Σ φ|`
    pub fn bump_sup_norm(&self) -> T {
        self.amplitude.abs()
            * self.profile.sup_norm().unwrap_or(T::zero())
            * T::from_count(self.slope.len())
    }

    /// Supremum of the bump term alone (not its absolute value).
    pub fn bump_sup(&self) -> Option<T> {
        let (lo, hi) = self.profile.range()?;
        let d = T::from_count(self.slope.len());
        Some(if self.amplitude >= T::zero() {
            self.amplitude * hi * d
        } else {
            self.amplitude * lo * d
        })
    }
}

impl<T: Scalar> Landscape<T> for AffineBump<T> {
    fn dim(&self) -> usize {
        self.slope.len()
    }

    fn eval(&self, theta: &[T]) -> T {
        let bump: T = theta.iter().map(|&x| self.profile.value(x)).sum();
        linalg::dot(&self.slope, theta) + self.offset + self.amplitude * bump
    }

    fn grad(&self, theta: &[T]) -> Vec<T> {
        self.slope
            .iter()
            .zip(theta)
            .map(|(&a, &x)| a + self.amplitude * self.profile.derivative(x))
            .collect()
    }

    fn hessian(&self, theta: &[T]) -> Option<SquareMatrix<T>> {
        let diag: Option<Vec<T>> = theta
            .iter()
            .map(|&x| {
                self.profile
                    .second_derivative(x)
                    .map(|h| self.amplitude * h)
            })
            .collect();
        Some(SquareMatrix::diagonal(&diag?))
    }

    fn sup(&self) -> Option<T> {
        if self.slope.iter().any(|a| *a != T::zero()) {
            return None;
        }
        if self.amplitude == T::zero() {
            return Some(self.offset);
        }
        Some(self.offset + self.bump_sup()?)
    }

    fn id(&self) -> String {
        format!("affine-bump(d={})", self.dim())
    }
}

/// Central differences with a uniform step `h`.
pub fn finite_difference_grad<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    theta: &[T],
    h: T,
) -> Result<Vec<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "step h must be > 0, got {h}"
        )));
    }
    let mut probe = theta.to_vec();
    let two_h = h + h;
    Ok((0..theta.len())
        .map(|i| {
            let x = theta[i];
            probe[i] = x + h;
            let fp = landscape.eval(&probe);
            probe[i] = x - h;
            let fm = landscape.eval(&probe);
            probe[i] = x;
            (fp - fm) / two_h
        })
        .collect())
}

/// Named bump profiles accepted by the configuration layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileId {
    #[default]
    Sin,
    Cos,
    Gaussian,
}

impl<T: Scalar> From<ProfileId> for BumpProfile<T> {
    fn from(id: ProfileId) -> Self {
        match id {
            ProfileId::Sin => Self::Sin,
            ProfileId::Cos => Self::Cos,
            ProfileId::Gaussian => Self::Gaussian,
        }
    }
}

fn default_riemann_terms() -> usize {
    100
}

/// Catalogue entry addressed by string id plus parameters, as written in
/// configuration files:
///
/// ```toml
/// [landscape]
/// id = "riemann"
/// n = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum LandscapeSpec {
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Riemann {
        #[serde(default = "default_riemann_terms")]
        n: usize,
    },
    Sinusoid,
    AffineBump {
        slope: Vec<f64>,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        profile: ProfileId,
        #[serde(default)]
        amplitude: f64,
    },
}

impl LandscapeSpec {
    pub fn build<T: Scalar>(&self) -> Result<Box<dyn Landscape<T>>> {
        let cast = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        Ok(match self {
            Self::Quadratic { matrix, center } => {
                let rows: Vec<Vec<T>> = matrix.iter().map(|r| cast(r)).collect();
                let m = SquareMatrix::from_rows(&rows)?;
                let c = center
                    .as_deref()
                    .map(cast)
                    .unwrap_or_else(|| vec![T::zero(); m.dim()]);
                Box::new(Quadratic::new(m, c)?)
            }
            Self::Riemann { n } => Box::new(Riemann::new(*n)?),
            Self::Sinusoid => Box::new(Sinusoid),
            Self::AffineBump {
                slope,
                offset,
                profile,
                amplitude,
            } => Box::new(AffineBump::new(
                cast(slope),
                T::lit(*offset),
                (*profile).into(),
                T::lit(*amplitude),
            )?),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic { matrix, .. } => matrix.len(),
            Self::Riemann { .. } | Self::Sinusoid => 1,
            Self::AffineBump { slope, .. } => slope.len(),
        }
    }
}
