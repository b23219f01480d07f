//! A multilayer perceptron with hand-written backpropagation whose mean
//! cross-entropy over a dataset is exposed as a stochastic [`Landscape`].

mod idx;
mod train;

use std::marker::PhantomData;
use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use idx::{load_idx, Dataset, IMAGE_MAGIC, LABEL_MAGIC};
pub use train::{train, EpochRecord, TrainConfig, TrainOptimizer, TrainReport};

use crate::error::{Error, Result};
use crate::landscape::{BatchContext, Landscape, StochasticLandscape};
use crate::scalar::Scalar;

/// Rows processed per forward/backward block; bounds activation memory.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Self::Relu => z.max(T::zero()),
            Self::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn slope<T: Scalar>(self, a: T) -> T {
        match self {
            Self::Relu => {
                if a > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::Tanh => T::one() - a * a,
        }
    }
}

/// Layer widths from input to output, e.g. `[784, 256, 256, 10]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            sizes: vec![784, 256, 256, 10],
            activation: Activation::Relu,
        }
    }
}

/// Offsets of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub bias: usize,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 3 {
            return Err(Error::InvalidParameter(
                "an MLP needs input, output and at least one hidden layer".into(),
            ));
        }
        if self.sizes.contains(&0) {
            return Err(Error::InvalidParameter(
                "layer sizes must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.sizes.last().expect("validated spec")
    }

    /// Per layer: weights `[fan_in][fan_out]` row-major, then the bias.
    pub fn layers(&self) -> Vec<LayerShape> {
        let mut at = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let l = LayerShape {
                    fan_in: w[0],
                    fan_out: w[1],
                    weights: at,
                    bias: at + w[0] * w[1],
                };
                at = l.bias + w[1];
                l
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }
}

/// Structured view of one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

fn check_len<T>(spec: &MlpSpec, params: &[T]) -> Result<()> {
    spec.validate()?;
    if params.len() != spec.param_count() {
        return Err(Error::DimensionMismatch {
            expected: spec.param_count(),
            found: params.len(),
        });
    }
    Ok(())
}

pub fn unflatten<T: Scalar>(spec: &MlpSpec, params: &[T]) -> Result<Vec<Layer<T>>> {
    check_len(spec, params)?;
    Ok(spec
        .layers()
        .iter()
        .map(|l| Layer {
            weights: weight_view(params, l).to_owned(),
            bias: ArrayView1::from(&params[l.bias..l.bias + l.fan_out]).to_owned(),
        })
        .collect())
}

pub fn flatten<T: Scalar>(layers: &[Layer<T>]) -> Vec<T> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
        .collect()
}

fn weight_view<'a, T>(params: &'a [T], l: &LayerShape) -> ArrayView2<'a, T> {
    ArrayView2::from_shape((l.fan_in, l.fan_out), &params[l.weights..l.bias]).expect("layer layout")
}

/// Weights uniform in `±√(6/(fan_in + fan_out))`, biases zero.
pub fn init_params<T: Scalar>(spec: &MlpSpec, seed: u64) -> Result<Vec<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![T::zero(); spec.param_count()];
    for l in spec.layers() {
        let limit = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        for w in &mut params[l.weights..l.bias] {
            *w = T::lit(dist.sample(&mut rng));
        }
    }
    Ok(params)
}

fn gather<T: Scalar>(data: &Dataset, rows: &[usize]) -> Array2<T> {
    let f = data.features();
    let mut x = Array2::zeros((rows.len(), f));
    for (mut dst, &i) in x.axis_iter_mut(Axis(0)).zip(rows) {
        for (d, &s) in dst.iter_mut().zip(data.image(i)) {
            *d = T::lit(f64::from(s));
        }
    }
    x
}

/// Post-activation outputs of every layer; the last entry holds raw logits.
fn forward<T: Scalar>(spec: &MlpSpec, params: &[T], x: Array2<T>) -> Vec<Array2<T>> {
    let shapes = spec.layers();
    let mut acts = Vec::with_capacity(shapes.len() + 1);
    acts.push(x);
    for (k, l) in shapes.iter().enumerate() {
        let w = weight_view(params, l);
        let b = ArrayView1::from(&params[l.bias..l.bias + l.fan_out]);
        let mut z = acts[k].dot(&w);
        z += &b;
        if k + 1 < shapes.len() {
            z.mapv_inplace(|v| spec.activation.apply(v));
        }
        acts.push(z);
    }
    acts
}

/// Turns logits into `softmax − onehot` in place and returns the summed loss.
fn softmax_cross_entropy<T: Scalar>(logits: &mut Array2<T>, labels: &[u8]) -> T {
    let mut total = T::zero();
    for (mut row, &y) in logits.axis_iter_mut(Axis(0)).zip(labels) {
        let m = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        total += lse - row[y as usize];
        row.mapv_inplace(|v| (v - lse).exp());
        row[y as usize] -= T::one();
    }
    total
}

fn labels_of(data: &Dataset, rows: &[usize]) -> Vec<u8> {
    rows.iter().map(|&i| data.label(i)).collect()
}

/// Summed loss of one block; the gradient of the *mean* over `n_total`
/// samples is accumulated into `grad` when given.
fn block<T: Scalar>(
    spec: &MlpSpec,
    params: &[T],
    data: &Dataset,
    rows: &[usize],
    n_total: usize,
    grad: Option<&mut [T]>,
) -> T {
    let labels = labels_of(data, rows);
    let mut acts = forward(spec, params, gather(data, rows));
    let mut delta = acts.pop().expect("at least one layer");
    let loss = softmax_cross_entropy(&mut delta, &labels);
    let Some(grad) = grad else {
        return loss;
    };
    delta.mapv_inplace(|v| v / T::from_count(n_total));
    let shapes = spec.layers();
    for (k, l) in shapes.iter().enumerate().rev() {
        let a_prev = &acts[k];
        let (head, tail) = grad.split_at_mut(l.bias);
        let mut gw = ArrayViewMut2::from_shape((l.fan_in, l.fan_out), &mut head[l.weights..])
            .expect("layer layout");
        general_mat_mul(T::one(), &a_prev.t(), &delta, T::one(), &mut gw);
        let mut gb = ArrayViewMut1::from(&mut tail[..l.fan_out]);
        gb += &delta.sum_axis(Axis(0));
        if k > 0 {
            let mut back = delta.dot(&weight_view(params, l).t());
            back.zip_mut_with(a_prev, |d, &a| *d *= spec.activation.slope(a));
            delta = back;
        }
    }
    loss
}

/// Mean softmax cross-entropy over `rows` and its gradient.
pub fn loss_and_grad_rows<T: Scalar>(
    spec: &MlpSpec,
    params: &[T],
    data: &Dataset,
    rows: &[usize],
) -> Result<(T, Vec<T>)> {
    check_len(spec, params)?;
    if rows.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut grad = vec![T::zero(); params.len()];
    let mut total = T::zero();
    for chunk in rows.chunks(CHUNK) {
        total += block(spec, params, data, chunk, rows.len(), Some(&mut grad));
    }
    let loss = total / T::from_count(rows.len());
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("MLP activations".into()));
    }
    Ok((loss, grad))
}

/// Mean softmax cross-entropy over the whole dataset and its gradient.
pub fn loss_and_grad<T: Scalar>(
    spec: &MlpSpec,
    params: &[T],
    data: &Dataset,
) -> Result<(T, Vec<T>)> {
    let rows: Vec<usize> = (0..data.len()).collect();
    loss_and_grad_rows(spec, params, data, &rows)
}

fn loss_rows<T: Scalar>(spec: &MlpSpec, params: &[T], data: &Dataset, rows: &[usize]) -> T {
    let total = rows.chunks(CHUNK).fold(T::zero(), |acc, c| {
        acc + block(spec, params, data, c, rows.len(), None)
    });
    total / T::from_count(rows.len().max(1))
}

/// Mean loss and top-1 accuracy; argmax ties go to the lowest class index.
pub fn evaluate<T: Scalar>(spec: &MlpSpec, params: &[T], data: &Dataset) -> Result<(T, f64)> {
    check_len(spec, params)?;
    if data.is_empty() {
        return Err(Error::EmptySet);
    }
    let rows: Vec<usize> = (0..data.len()).collect();
    let mut total = T::zero();
    let mut correct = 0usize;
    for chunk in rows.chunks(CHUNK) {
        let labels = labels_of(data, chunk);
        let mut logits = forward(spec, params, gather(data, chunk))
            .pop()
            .expect("output layer");
        for (row, &y) in logits.axis_iter(Axis(0)).zip(&labels) {
            let best = row
                .iter()
                .enumerate()
                .fold(0, |b, (j, &v)| if v > row[b] { j } else { b });
            correct += usize::from(best == y as usize);
        }
        total += softmax_cross_entropy(&mut logits, &labels);
    }
    Ok((
        total / T::from_count(data.len()),
        correct as f64 / data.len() as f64,
    ))
}

/// Mean training loss of an MLP as a function of its flat parameters.
#[derive(Debug, Clone)]
pub struct MlpLandscape<T> {
    spec: MlpSpec,
    data: Arc<Dataset>,
    batch_size: usize,
    all_rows: Arc<[usize]>,
    _scalar: PhantomData<fn() -> T>,
}

impl<T: Scalar> MlpLandscape<T> {
    pub fn new(spec: MlpSpec, data: Arc<Dataset>, batch_size: usize) -> Result<Self> {
        spec.validate()?;
        if data.is_empty() {
            return Err(Error::EmptySet);
        }
        if data.features() != spec.inputs() {
            return Err(Error::DimensionMismatch {
                expected: spec.inputs(),
                found: data.features(),
            });
        }
        if let Some(&bad) = data
            .labels()
            .iter()
            .find(|&&y| y as usize >= spec.classes())
        {
            return Err(Error::InvalidParameter(format!(
                "label {bad} outside {} classes",
                spec.classes()
            )));
        }
        if batch_size == 0 || batch_size > data.len() {
            return Err(Error::InvalidParameter(format!(
                "batch size must be in 1..={}, got {batch_size}",
                data.len()
            )));
        }
        Ok(Self {
            all_rows: (0..data.len()).collect(),
            spec,
            data,
            batch_size,
            _scalar: PhantomData,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn eval_rows(&self, rows: &[usize], theta: &[T]) -> T {
        if check_len(&self.spec, theta).is_err() {
            return T::nan();
        }
        loss_rows(&self.spec, theta, &self.data, rows)
    }

    fn eval_grad_rows(&self, rows: &[usize], theta: &[T]) -> (T, Vec<T>) {
        match loss_and_grad_rows(&self.spec, theta, &self.data, rows) {
            Ok(vg) => vg,
            Err(_) => (T::nan(), vec![T::nan(); theta.len()]),
        }
    }
}

impl<T: Scalar> Landscape<T> for MlpLandscape<T> {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn eval(&self, theta: &[T]) -> T {
        self.eval_rows(&self.all_rows, theta)
    }

    fn grad(&self, theta: &[T]) -> Vec<T> {
        self.eval_grad(theta).1
    }

    fn eval_grad(&self, theta: &[T]) -> (T, Vec<T>) {
        self.eval_grad_rows(&self.all_rows, theta)
    }

    fn id(&self) -> String {
        let sizes: Vec<String> = self.spec.sizes.iter().map(|s| s.to_string()).collect();
        format!("mlp({})", sizes.join("-"))
    }
}

struct MlpBatch<'a, T> {
    parent: &'a MlpLandscape<T>,
    ctx: BatchContext,
}

impl<T: Scalar> Landscape<T> for MlpBatch<'_, T> {
    fn dim(&self) -> usize {
        self.parent.dim()
    }

    fn eval(&self, theta: &[T]) -> T {
        self.parent.eval_rows(self.ctx.indices(), theta)
    }

    fn grad(&self, theta: &[T]) -> Vec<T> {
        self.eval_grad(theta).1
    }

    fn eval_grad(&self, theta: &[T]) -> (T, Vec<T>) {
        self.parent.eval_grad_rows(self.ctx.indices(), theta)
    }

    fn id(&self) -> String {
        format!("{}[batch of {}]", self.parent.id(), self.ctx.len())
    }
}

impl<T: Scalar> StochasticLandscape<T> for MlpLandscape<T> {
    fn sample_count(&self) -> usize {
        self.data.len()
    }

    fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn with_context(&self, ctx: &BatchContext) -> Box<dyn Landscape<T> + '_> {
        Box::new(MlpBatch {
            parent: self,
            ctx: ctx.clone(),
        })
    }
}
