//! Dense MLP forward/backward engine with losses and accuracy metrics.
//!
//! All arithmetic is `f64`. Parameters live in a single flat [`ParamVector`]
//! (per layer: weights in row-major `(fan_in, fan_out)` order, then biases),
//! which makes the weight norm, scaling, and norm projection used by the
//! landscape machinery trivial to express.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

/// Loss applied to the network output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    CrossEntropy,
}

/// Architecture description: layer widths, activation, and loss kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub loss: LossKind,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation, loss: LossKind) -> Result<Self> {
        if layer_widths.len() < 2 {
            return Err(Error::domain(format!(
                "MLP spec needs at least input and output widths, got {:?}",
                layer_widths
            )));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::domain(format!(
                "all layer widths must be >= 1, got {:?}",
                layer_widths
            )));
        }
        Ok(Self {
            layer_widths,
            activation,
            loss,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    /// Per-layer `(fan_in, fan_out)` pairs.
    pub fn layer_shapes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.layer_widths.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    /// Total number of trainable scalars (weights + biases).
    pub fn param_count(&self) -> usize {
        self.layer_shapes().map(|(i, o)| i * o + o).sum()
    }
}

/// Flat vector of all trainable scalars of a network, with layout metadata.
///
/// Layout is layer-major and deterministic: for each layer, `fan_in * fan_out`
/// weights in row-major order followed by `fan_out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Vec<(usize, usize)>,
}

impl ParamVector {
    /// Zero-initialized parameters for `spec`.
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layout: Vec<(usize, usize)> = spec.layer_shapes().collect();
        let len = layout.iter().map(|&(i, o)| i * o + o).sum();
        Self {
            values: vec![0.0; len],
            layout,
        }
    }

    /// Wrap an existing flat vector; the length must match the layout.
    pub fn from_values(values: Vec<f64>, layout: Vec<(usize, usize)>) -> Result<Self> {
        let expect: usize = layout.iter().map(|&(i, o)| i * o + o).sum();
        if values.len() != expect {
            return Err(Error::domain(format!(
                "parameter vector length {} does not match layout ({} expected)",
                values.len(),
                expect
            )));
        }
        Ok(Self { values, layout })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &[(usize, usize)] {
        &self.layout
    }

    /// L2 norm over all entries (weights and biases).
    pub fn weight_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Offset of layer `l`'s weight block in the flat vector.
    fn layer_offset(&self, l: usize) -> usize {
        self.layout[..l].iter().map(|&(i, o)| i * o + o).sum()
    }

    /// Weight matrix of layer `l` as an `(fan_in, fan_out)` view.
    pub fn layer_weights(&self, l: usize) -> ArrayView2<'_, f64> {
        let (fi, fo) = self.layout[l];
        let off = self.layer_offset(l);
        ArrayView2::from_shape((fi, fo), &self.values[off..off + fi * fo]).unwrap()
    }

    /// Bias vector of layer `l`.
    pub fn layer_bias(&self, l: usize) -> ArrayView1<'_, f64> {
        let (fi, fo) = self.layout[l];
        let off = self.layer_offset(l) + fi * fo;
        ArrayView1::from_shape(fo, &self.values[off..off + fo]).unwrap()
    }

    fn set_layer(&mut self, l: usize, weights: &Array2<f64>, bias: &Array1<f64>) {
        let (fi, fo) = self.layout[l];
        let off = self.layer_offset(l);
        let w_flat = weights.as_slice().expect("row-major weights");
        self.values[off..off + fi * fo].copy_from_slice(w_flat);
        self.values[off + fi * fo..off + fi * fo + fo]
            .copy_from_slice(bias.as_slice().expect("contiguous bias"));
    }
}

const INIT_STREAM: u64 = 0x6b61_696d_696e_6721;

/// Kaiming-uniform initialization, deterministic in `seed`.
///
/// Weights of a layer with fan-in `f` are drawn uniformly from
/// `[-sqrt(6/f), +sqrt(6/f)]` for relu and `[-1/sqrt(f), +1/sqrt(f)]` for
/// tanh; biases always use the `1/sqrt(f)` range.
pub fn init_params(spec: &MlpSpec, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ INIT_STREAM);
    let mut p = ParamVector::zeros(spec);
    let mut off = 0usize;
    for (fi, fo) in spec.layer_shapes() {
        let f = fi as f64;
        let w_bound = match spec.activation {
            Activation::Relu => (6.0 / f).sqrt(),
            Activation::Tanh => 1.0 / f.sqrt(),
        };
        let b_bound = 1.0 / f.sqrt();
        for _ in 0..fi * fo {
            p.values[off] = rng.random_range(-w_bound..=w_bound);
            off += 1;
        }
        for _ in 0..fo {
            p.values[off] = rng.random_range(-b_bound..=b_bound);
            off += 1;
        }
    }
    p
}

/// Multiply every entry (weights and biases) by `alpha > 0`.
pub fn scale_params(p: &ParamVector, alpha: f64) -> Result<ParamVector> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!(
            "scale factor must be positive, got {alpha}"
        )));
    }
    let mut out = p.clone();
    for v in &mut out.values {
        *v *= alpha;
    }
    Ok(out)
}

/// One batch of data: inputs, targets, and optional integer class labels.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub labels: Option<Vec<usize>>,
}

impl Batch {
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(Error::domain(format!(
                "inputs have {} rows but targets have {}",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != inputs.nrows() {
                return Err(Error::domain(format!(
                    "inputs have {} rows but labels have {}",
                    inputs.nrows(),
                    l.len()
                )));
            }
        }
        Ok(Self {
            inputs,
            targets,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row subset of the batch, in the given index order.
    pub fn select(&self, indices: &[usize]) -> Batch {
        Batch {
            inputs: self.inputs.select(Axis(0), indices),
            targets: self.targets.select(Axis(0), indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }
}

fn check_input_shape(spec: &MlpSpec, x: &ArrayView2<f64>) -> Result<()> {
    if x.ncols() != spec.input_dim() {
        return Err(Error::domain(format!(
            "input has {} columns but spec expects {}",
            x.ncols(),
            spec.input_dim()
        )));
    }
    Ok(())
}

fn apply_activation(z: &mut Array2<f64>, act: Activation) {
    match act {
        Activation::Tanh => z.mapv_inplace(f64::tanh),
        Activation::Relu => z.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 }),
    }
}

/// Forward pass: affine layers with the spec activation in between; the last
/// layer is affine (no activation).
pub fn forward(spec: &MlpSpec, p: &ParamVector, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_input_shape(spec, &x)?;
    let n_layers = spec.num_layers();
    let mut a = x.to_owned();
    for l in 0..n_layers {
        let mut z = a.dot(&p.layer_weights(l));
        z += &p.layer_bias(l);
        if l + 1 < n_layers {
            apply_activation(&mut z, spec.activation);
        }
        a = z;
    }
    Ok(a)
}

/// Loss of predictions `y` against a batch.
///
/// `mse` averages squared error over samples and output dimensions;
/// `cross_entropy` averages `-log softmax(y)[label]` over samples, computed
/// with max-subtraction.
pub fn loss_value(y: &Array2<f64>, batch: &Batch, kind: LossKind) -> Result<f64> {
    if y.nrows() == 0 {
        return Err(Error::domain("loss of an empty batch is undefined"));
    }
    match kind {
        LossKind::Mse => {
            if y.shape() != batch.targets.shape() {
                return Err(Error::domain(format!(
                    "prediction shape {:?} does not match target shape {:?}",
                    y.shape(),
                    batch.targets.shape()
                )));
            }
            let n = (y.nrows() * y.ncols()) as f64;
            let sum: f64 = y
                .iter()
                .zip(batch.targets.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            Ok(sum / n)
        }
        LossKind::CrossEntropy => {
            let labels = batch
                .labels
                .as_ref()
                .ok_or_else(|| Error::domain("cross-entropy loss requires labels"))?;
            if labels.len() != y.nrows() {
                return Err(Error::domain("label count does not match predictions"));
            }
            let mut total = 0.0;
            for (row, &label) in y.rows().into_iter().zip(labels.iter()) {
                if label >= row.len() {
                    return Err(Error::domain(format!(
                        "label {} out of range for {} output dims",
                        label,
                        row.len()
                    )));
                }
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let log_sum: f64 = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                total += -(row[label] - max - log_sum);
            }
            Ok(total / y.nrows() as f64)
        }
    }
}

/// Gradient of the loss with respect to the predictions, including the 1/N
/// (and for mse 1/d_out) averaging factors.
fn output_grad(y: &Array2<f64>, batch: &Batch, kind: LossKind) -> Result<Array2<f64>> {
    match kind {
        LossKind::Mse => {
            let n = (y.nrows() * y.ncols()) as f64;
            Ok((y - &batch.targets) * (2.0 / n))
        }
        LossKind::CrossEntropy => {
            let labels = batch.labels.as_ref().unwrap();
            let n = y.nrows() as f64;
            let mut g = Array2::zeros(y.raw_dim());
            for (i, row) in y.rows().into_iter().enumerate() {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                for (j, e) in exps.iter().enumerate() {
                    g[[i, j]] = e / sum / n;
                }
                g[[i, labels[i]]] -= 1.0 / n;
            }
            Ok(g)
        }
    }
}

/// Result of a backward pass.
pub(crate) struct Backprop {
    pub loss: f64,
    pub grad: ParamVector,
    /// Gradient of the loss with respect to the batch inputs, if requested.
    pub input_grad: Option<Array2<f64>>,
}

/// Reverse-mode backprop through the full network.
pub(crate) fn backprop(
    spec: &MlpSpec,
    p: &ParamVector,
    batch: &Batch,
    kind: LossKind,
    want_input_grad: bool,
) -> Result<Backprop> {
    check_input_shape(spec, &batch.inputs.view())?;
    let n_layers = spec.num_layers();

    // Forward, keeping every post-activation output.
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(n_layers + 1);
    activations.push(batch.inputs.to_owned());
    for l in 0..n_layers {
        let mut z = activations[l].dot(&p.layer_weights(l));
        z += &p.layer_bias(l);
        if l + 1 < n_layers {
            apply_activation(&mut z, spec.activation);
        }
        activations.push(z);
    }
    let y = activations.last().unwrap();
    let loss = loss_value(y, batch, kind)?;

    let mut grad = ParamVector::zeros(spec);
    let mut delta = output_grad(y, batch, kind)?;
    let mut input_grad = None;
    for l in (0..n_layers).rev() {
        let a_prev = &activations[l];
        let gw = a_prev.t().dot(&delta);
        let gb = delta.sum_axis(Axis(0));
        grad.set_layer(l, &gw, &gb);
        if l > 0 {
            let mut da = delta.dot(&p.layer_weights(l).t());
            // Through the activation of the previous layer.
            match spec.activation {
                Activation::Tanh => da.zip_mut_with(a_prev, |d, &a| *d *= 1.0 - a * a),
                Activation::Relu => da.zip_mut_with(a_prev, |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }),
            }
            delta = da;
        } else if want_input_grad {
            input_grad = Some(delta.dot(&p.layer_weights(0).t()));
        }
    }

    Ok(Backprop {
        loss,
        grad,
        input_grad,
    })
}

/// Loss and analytic gradient with respect to every parameter.
pub fn loss_grad(
    spec: &MlpSpec,
    p: &ParamVector,
    batch: &Batch,
    kind: LossKind,
) -> Result<(f64, ParamVector)> {
    let bp = backprop(spec, p, batch, kind, false)?;
    Ok((bp.loss, bp.grad))
}

/// How to turn predictions into an accuracy in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// A sample counts as correct when the largest absolute prediction error
    /// over output dimensions is below the threshold.
    RegressionThreshold(f64),
    /// A sample counts as correct when the argmax of its prediction row
    /// equals its label; ties break toward the lowest index.
    Argmax,
}

/// Fraction of samples classified correctly under `mode`.
pub fn accuracy(y: &Array2<f64>, batch: &Batch, mode: AccuracyMode) -> Result<f64> {
    if y.nrows() == 0 {
        return Err(Error::domain("accuracy of an empty batch is undefined"));
    }
    match mode {
        AccuracyMode::RegressionThreshold(theta) => {
            if y.shape() != batch.targets.shape() {
                return Err(Error::domain(
                    "regression accuracy needs targets with the prediction shape",
                ));
            }
            let mut correct = 0usize;
            for (yr, tr) in y.rows().into_iter().zip(batch.targets.rows()) {
                let max_err = yr
                    .iter()
                    .zip(tr.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if max_err < theta {
                    correct += 1;
                }
            }
            Ok(correct as f64 / y.nrows() as f64)
        }
        AccuracyMode::Argmax => {
            let labels = batch
                .labels
                .as_ref()
                .ok_or_else(|| Error::domain("argmax accuracy requires labels"))?;
            let mut correct = 0usize;
            for (row, &label) in y.rows().into_iter().zip(labels.iter()) {
                let mut best = 0usize;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                if best == label {
                    correct += 1;
                }
            }
            Ok(correct as f64 / y.nrows() as f64)
        }
    }
}
