//! Differential geometry of the graph `Γ = {(θ, f(θ))}` and brute-force oracles
//! for distances, offsets and unreachability.
//!
//! The oracles are exhaustive grid searches and only run for d = 1 (offsets,
//! unreachability) or d ≤ 2 (graph distance). Every reduction walks its grid in
//! a fixed order so results are reproducible bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::linalg;
use crate::scalar::Scalar;

/// A point of `Γ`; `y` is always `f(theta)` as computed by the owning landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct GraphPoint<T> {
    pub theta: Vec<T>,
    pub y: T,
}

impl<T: Scalar> GraphPoint<T> {
    pub fn on<L: Landscape<T> + ?Sized>(landscape: &L, theta: Vec<T>) -> Self {
        let y = landscape.eval(&theta);
        Self { theta, y }
    }

    pub fn to_ambient(&self) -> AmbientPoint<T> {
        AmbientPoint {
            theta: self.theta.clone(),
            y: self.y,
        }
    }
}

/// A free point of `ℝ^{d+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct AmbientPoint<T> {
    pub theta: Vec<T>,
    pub y: T,
}

impl<T: Scalar> AmbientPoint<T> {
    pub fn new(theta: Vec<T>, y: T) -> Self {
        Self { theta, y }
    }

    pub fn coords(&self) -> Vec<T> {
        let mut v = self.theta.clone();
        v.push(self.y);
        v
    }

    pub fn distance(&self, other: &AmbientPoint<T>) -> T {
        let dy = self.y - other.y;
        (linalg::dist(&self.theta, &other.theta).powi(2) + dy * dy).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && linalg::all_finite(&self.theta)
    }
}

fn checked_grad<T: Scalar, L: Landscape<T> + ?Sized>(landscape: &L, theta: &[T]) -> Result<Vec<T>> {
    let g = landscape.grad(theta);
    if !linalg::all_finite(&g) {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok(g)
}

/// Upward unit normal `(−∇f, 1)/√(1+‖∇f‖²)` built from a gradient.
pub fn normal_from_grad<T: Scalar>(grad: &[T]) -> Vec<T> {
    let inv = T::one() / (T::one() + linalg::norm_sq(grad)).sqrt();
    let mut n: Vec<T> = grad.iter().map(|&g| -g * inv).collect();
    n.push(inv);
    n
}

/// Steepest-descent tangent `(∇f, ‖∇f‖²)` built from a gradient.
pub fn tangent_from_grad<T: Scalar>(grad: &[T]) -> Vec<T> {
    let mut t = grad.to_vec();
    t.push(linalg::norm_sq(grad));
    t
}

pub fn normal<T: Scalar, L: Landscape<T> + ?Sized>(landscape: &L, theta: &[T]) -> Result<Vec<T>> {
    Ok(normal_from_grad(&checked_grad(landscape, theta)?))
}

pub fn tangent<T: Scalar, L: Landscape<T> + ?Sized>(landscape: &L, theta: &[T]) -> Result<Vec<T>> {
    Ok(tangent_from_grad(&checked_grad(landscape, theta)?))
}

/// Axis-aligned θ-box sampled with a uniform step, d ∈ {1, 2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ThetaGrid<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    pub step: T,
}

impl<T: Scalar> ThetaGrid<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>, step: T) -> Self {
        Self { lo, hi, step }
    }

    pub fn interval(lo: T, hi: T, step: T) -> Self {
        Self::new(vec![lo], vec![hi], step)
    }

    fn axis(&self, i: usize) -> Result<Vec<T>> {
        let (lo, hi) = (self.lo[i], self.hi[i]);
        if !(self.step > T::zero()) || !(hi >= lo) {
            return Err(Error::EmptyGrid);
        }
        let count = ((hi - lo) / self.step + T::lit(1e-9))
            .floor()
            .to_usize()
            .unwrap_or(0)
            + 1;
        Ok((0..count)
            .map(|k| lo + T::from_count(k) * self.step)
            .collect())
    }

    /// All nodes in lexicographic order.
    pub fn nodes(&self) -> Result<Vec<Vec<T>>> {
        if self.lo.len() != self.hi.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lo.len(),
                found: self.hi.len(),
            });
        }
        match self.lo.len() {
            1 => Ok(self.axis(0)?.into_iter().map(|x| vec![x]).collect()),
            2 => {
                let (xs, ys) = (self.axis(0)?, self.axis(1)?);
                Ok(xs
                    .iter()
                    .flat_map(|&x| ys.iter().map(move |&y| vec![x, y]))
                    .collect())
            }
            d => Err(Error::UnsupportedDimension(d)),
        }
    }
}

/// `min` over the grid of `‖(θ, f(θ)) − point‖`.
pub fn distance_to_graph<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    point: &AmbientPoint<T>,
    grid: &ThetaGrid<T>,
) -> Result<T> {
    if point.theta.len() != landscape.dim() {
        return Err(Error::DimensionMismatch {
            expected: landscape.dim(),
            found: point.theta.len(),
        });
    }
    let nodes = grid.nodes()?;
    if nodes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let best = nodes.iter().fold(T::infinity(), |best, theta| {
        let dy = landscape.eval(theta) - point.y;
        best.min(linalg::dist(theta, &point.theta).powi(2) + dy * dy)
    });
    Ok(best.sqrt())
}

/// One sample of the upper offset function `φ_ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct OffsetSample<T> {
    pub theta: T,
    pub phi_rho: T,
    pub rho: T,
    pub grid_step: T,
}

/// Fraction of ρ kept away from the rim of the structuring hemisphere.
const RIM_CLAMP: f64 = 1e-12;

fn require_1d<T: Scalar, L: Landscape<T> + ?Sized>(landscape: &L) -> Result<()> {
    match landscape.dim() {
        1 => Ok(()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn golden_max<T: Scalar>(mut lo: T, mut hi: T, f: impl Fn(T) -> T) -> (T, T) {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo <= T::epsilon() * (T::one() + lo.abs().max(hi.abs())) {
            break;
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `φ_ρ(θ) = sup_{|s|<ρ} f(θ+s) + √(ρ² − s²)` for a one-dimensional landscape.
///
/// The sup is taken over a uniform s-grid of step at most `h` (endpoints
/// clamped to `|s| ≤ ρ(1−1e-12)`), then every discrete local maximum that could
/// beat the incumbent is refined by golden-section search inside its bracket.
pub fn offset_value<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    rho: T,
    theta: T,
    h: T,
) -> Result<T> {
    require_1d(landscape)?;
    if !(rho > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be > 0, got {rho}"
        )));
    }
    if !(h > T::zero()) || h > rho / T::lit(100.0) {
        return Err(Error::InvalidParameter(format!(
            "offset grid step must be in (0, rho/100], got {h} for rho = {rho}"
        )));
    }
    let s_max = rho * (T::one() - T::lit(RIM_CLAMP));
    let cells = (T::lit(2.0) * s_max / h)
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(2);
    let step = T::lit(2.0) * s_max / T::from_count(cells);
    let objective = |s: T| landscape.eval(&[theta + s]) + (rho * rho - s * s).max(T::zero()).sqrt();

    let s_at = |j: usize| -s_max + T::from_count(j) * step;
    let values: Vec<T> = (0..=cells).map(|j| objective(s_at(j))).collect();
    let mut best = values.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    if !best.is_finite() {
        return Err(Error::NonFinite("offset objective".into()));
    }
    let variation = values
        .windows(2)
        .fold(T::zero(), |m, w| m.max((w[1] - w[0]).abs()));
    for j in 0..=cells {
        let v = values[j];
        let left = if j > 0 {
            values[j - 1]
        } else {
            T::neg_infinity()
        };
        let right = if j < cells {
            values[j + 1]
        } else {
            T::neg_infinity()
        };
        if v < left || v < right || v + variation < best {
            continue;
        }
        let lo = s_at(j.saturating_sub(1));
        let hi = s_at((j + 1).min(cells));
        let (_, refined) = golden_max(lo, hi, objective);
        best = best.max(refined);
    }
    Ok(best)
}

/// Samples of `φ_ρ` on the lattice `a + i·h` covering `[a, b]`.
///
/// This is a grey-level dilation of the sampled function by the hemisphere
/// `√(ρ² − s²)` with `s` restricted to the same lattice, so neighbouring
/// samples share every evaluation of `f`. `ρ = 0` returns `f` itself.
pub fn offset_profile<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    rho: T,
    interval: (T, T),
    h: T,
) -> Result<Vec<OffsetSample<T>>> {
    require_1d(landscape)?;
    let (a, b) = interval;
    if !(rho >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be >= 0, got {rho}"
        )));
    }
    if !(h > T::zero()) || !(b >= a) {
        return Err(Error::EmptyGrid);
    }
    let n_out = ((b - a) / h + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    let reach = (rho * (T::one() - T::lit(RIM_CLAMP)) / h)
        .floor()
        .to_usize()
        .unwrap_or(0);
    let node = |k: usize| a + (T::from_count(k) - T::from_count(reach)) * h;
    let f: Vec<T> = (0..n_out + 2 * reach)
        .map(|k| landscape.eval(&[node(k)]))
        .collect();
    if !linalg::all_finite(&f) {
        return Err(Error::NonFinite("offset profile samples".into()));
    }
    let cap: Vec<T> = (0..=reach)
        .map(|j| {
            let s = T::from_count(j) * h;
            (rho * rho - s * s).max(T::zero()).sqrt()
        })
        .collect();
    let f_max = f.iter().fold(T::neg_infinity(), |m, &v| m.max(v));

    Ok((0..n_out)
        .map(|i| {
            let c = i + reach;
            let mut best = f[c] + cap[0];
            for j in 1..=reach {
                if f_max + cap[j] <= best {
                    break;
                }
                best = best.max(f[c + j] + cap[j]).max(f[c - j] + cap[j]);
            }
            OffsetSample {
                theta: node(c),
                phi_rho: best,
                rho,
                grid_step: h,
            }
        })
        .collect())
}

/// Sampled sphere `S(center, ρ)`; only circles (d = 1) are supported.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid<T> {
    pub center: AmbientPoint<T>,
    pub rho: T,
    pub samples: Vec<AmbientPoint<T>>,
    pub angular_step: T,
}

impl<T: Scalar> SphereGrid<T> {
    /// Circle samples at angles `phase + k·Δ`, with `Δ ≤ angular_step` dividing 2π.
    pub fn circle(center: AmbientPoint<T>, rho: T, angular_step: T, phase: T) -> Result<Self> {
        if center.theta.len() != 1 {
            return Err(Error::UnsupportedDimension(center.theta.len()));
        }
        if !(rho > T::zero()) || !(angular_step > T::zero()) {
            return Err(Error::InvalidParameter(
                "sphere radius and angular step must be > 0".into(),
            ));
        }
        let count = (T::TAU() / angular_step)
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(4);
        let delta = T::TAU() / T::from_count(count);
        let samples = (0..count)
            .map(|k| {
                let (s, c) = (phase + T::from_count(k) * delta).sin_cos();
                AmbientPoint::new(vec![center.theta[0] + rho * c], center.y + rho * s)
            })
            .collect();
        Ok(Self {
            center,
            rho,
            samples,
            angular_step: delta,
        })
    }
}

/// Outcome of the sphere-containment test for one graph point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reach {
    Reachable,
    Unreachable,
    /// Clearance lies inside the grid slack; the grid cannot decide.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct UnreachabilityProbe<T> {
    pub verdict: Reach,
    /// `min` over sphere samples of `ρ − d_Γ(sample)`.
    pub min_clearance: T,
    pub slack: T,
}

impl<T> UnreachabilityProbe<T> {
    /// `Some(true)` for unreachable, `Some(false)` for reachable, `None` when undecided.
    pub fn is_unreachable(&self) -> Option<bool> {
        match self.verdict {
            Reach::Unreachable => Some(true),
            Reach::Reachable => Some(false),
            Reach::Indeterminate => None,
        }
    }
}

/// Decides whether `p = (θ₀, f(θ₀))` is ρ-unreachable: every center `c` in
/// the epigraph with `‖c − p‖ = ρ` must have `d_Γ(c) < ρ`, i.e. the part of
/// `S(p, ρ)` on or above the graph lies inside `B(Γ, ρ)`.
///
/// The circle is sampled starting from the upward normal at `p`, the only
/// direction in which a tangent ball can sit on a differentiable graph. The
/// graph is sampled on `θ₀ + j·h`, `|j·h| ≤ 2ρ`. With `m` the smallest
/// clearance `ρ − d_Γ` over the samples and `slack = 2h(1 + Lip)`:
/// `m > slack` is unreachable, `m ≤ 0` (up to rounding) is reachable, anything
/// in between is indeterminate.
pub fn is_unreachable<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    theta0: T,
    rho: T,
    angular_step: T,
    grid_step: T,
) -> Result<UnreachabilityProbe<T>> {
    require_1d(landscape)?;
    if !(rho > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be > 0, got {rho}"
        )));
    }
    if !(grid_step > T::zero()) || !theta0.is_finite() {
        return Err(Error::InvalidParameter(
            "grid step must be > 0 and θ₀ finite".into(),
        ));
    }
    let (y0, g0) = landscape.eval_grad(&[theta0]);
    if !y0.is_finite() || !g0[0].is_finite() {
        return Err(Error::NonFinite("landscape at θ₀".into()));
    }
    let n = normal_from_grad(&g0);
    let sphere = SphereGrid::circle(
        AmbientPoint::new(vec![theta0], y0),
        rho,
        angular_step,
        n[1].atan2(n[0]),
    )?;

    let half = (T::lit(2.0) * rho / grid_step)
        .ceil()
        .to_usize()
        .unwrap_or(0)
        + 1;
    let graph: Vec<(T, T)> = (0..=2 * half)
        .map(|k| {
            let t = theta0 + (T::from_count(k) - T::from_count(half)) * grid_step;
            (t, landscape.eval(&[t]))
        })
        .collect();
    if graph.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::NonFinite("graph samples".into()));
    }
    let lipschitz = graph
        .windows(2)
        .fold(T::zero(), |m, w| m.max((w[1].1 - w[0].1).abs() / grid_step));
    let slack = T::lit(2.0) * grid_step * (T::one() + lipschitz);

    let index_of = |t: T| -> usize {
        ((t - theta0) / grid_step + T::from_count(half))
            .floor()
            .max(T::zero())
            .to_usize()
            .unwrap_or(0)
            .min(2 * half)
    };
    let mut min_clearance = T::infinity();
    for s in &sphere.samples {
        let (st, sy) = (s.theta[0], s.y);
        // only centers in the epigraph count; below-graph points have their own ball
        if sy < landscape.eval(&[st]) {
            continue;
        }
        let lo = index_of(st - rho);
        let hi = (index_of(st + rho) + 1).min(2 * half);
        let d2 = graph[lo..=hi].iter().fold(T::infinity(), |m, &(t, y)| {
            m.min((t - st) * (t - st) + (y - sy) * (y - sy))
        });
        min_clearance = min_clearance.min(rho - d2.sqrt());
    }

    let rounding = T::lit(1e-10) * (T::one() + rho);
    let verdict = if min_clearance > slack {
        Reach::Unreachable
    } else if min_clearance <= rounding {
        Reach::Reachable
    } else {
        Reach::Indeterminate
    };
    Ok(UnreachabilityProbe {
        verdict,
        min_clearance,
        slack,
    })
}

const POWER_MAX_ITERS: usize = 200;
const POWER_TOL: f64 = 1e-6;

/// Spectral norm of `∇²f(θ)`: exact from the Hessian oracle when present,
/// otherwise power iteration on finite-difference Hessian-vector products.
pub fn sharpness<T: Scalar, L: Landscape<T> + ?Sized>(landscape: &L, theta: &[T]) -> Result<T> {
    if let Some(h) = landscape.hessian(theta) {
        return Ok(h.symmetric_spectral_norm());
    }
    power_iteration_sharpness(landscape, theta)
}

pub(crate) fn power_iteration_sharpness<T: Scalar, L: Landscape<T> + ?Sized>(
    landscape: &L,
    theta: &[T],
) -> Result<T> {
    let d = theta.len();
    let h = T::lit(1e-5) * (T::one() + linalg::norm(theta));
    let hvp = |v: &[T]| -> Vec<T> {
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        linalg::axpy(h, v, &mut plus);
        linalg::axpy(-h, v, &mut minus);
        let (gp, gm) = (landscape.grad(&plus), landscape.grad(&minus));
        gp.iter()
            .zip(&gm)
            .map(|(&a, &b)| (a - b) / (h + h))
            .collect()
    };
    // deterministic start with all directions excited
    let mut v: Vec<T> = (0..d)
        .map(|i| T::one() + T::lit(0.1) * T::from_count(i % 7))
        .collect();
    let n0 = linalg::norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut lambda = T::zero();
    for _ in 0..POWER_MAX_ITERS {
        let w = hvp(&v);
        let next = linalg::norm(&w);
        if !next.is_finite() {
            return Err(Error::NonFinite("Hessian-vector product".into()));
        }
        if next == T::zero() {
            return Ok(T::zero());
        }
        v = w.into_iter().map(|x| x / next).collect();
        if (next - lambda).abs() <= T::lit(POWER_TOL) * next.max(T::one()) {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::PowerIterationStalled(POWER_MAX_ITERS))
}

fn directed_hausdorff<T: Scalar, P: AsRef<[T]>>(from: &[P], to: &[P]) -> T {
    // early-break: stop scanning `to` once a point closer than the running max is found
    let mut cmax = T::zero();
    for a in from {
        let mut cmin = T::infinity();
        for b in to {
            let d2 = a
                .as_ref()
                .iter()
                .zip(b.as_ref())
                .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
            if d2 < cmin {
                cmin = d2;
                if cmin < cmax {
                    break;
                }
            }
        }
        if cmin > cmax && cmin.is_finite() {
            cmax = cmin;
        }
    }
    cmax.sqrt()
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_distance<T: Scalar, P: AsRef<[T]>>(a: &[P], b: &[P]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// Strict interior local minima of uniformly spaced samples. A plateau flanked
/// by strictly higher values on both sides counts once.
pub fn count_local_minima<T: Scalar>(samples: &[T]) -> Result<usize> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            found: samples.len(),
        });
    }
    let mut runs: Vec<T> = Vec::with_capacity(samples.len());
    for &v in samples {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    Ok(runs
        .windows(3)
        .filter(|w| w[1] < w[0] && w[1] < w[2])
        .count())
}
