//! Minimal neural-network kernel with exact backpropagation: convolution
//! (valid padding, stride 1), dense, batch normalization, tanh, and a
//! softmax output, in double precision throughout. Just enough to express
//! the three classifiers, with finite-difference gradient checking to keep
//! the chain rule honest.

mod persist;
mod tensor;
mod train;

pub use persist::{load_model, save_model};
pub use tensor::{matmul, matmul_a_bt, matmul_at_b, Tensor};
pub use train::{train, Dataset, Hyper, TrainedModel};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training set has a single class; need at least two")]
    SingleClass,
    #[error("model file: {0}")]
    Persist(String),
}

/// One layer. Convolution slides along the column axis only: the filter
/// height always equals the input row count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        in_rows: usize,
        in_cols: usize,
        filters: usize,
        width: usize,
    },
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    BatchNorm {
        dim: usize,
    },
    Tanh {
        dim: usize,
    },
    SoftmaxOutput {
        classes: usize,
    },
}

impl LayerSpec {
    /// Flattened output width of this layer.
    pub fn out_dim(&self) -> usize {
        match *self {
            LayerSpec::Conv {
                in_cols,
                filters,
                width,
                ..
            } => filters * (in_cols - width + 1),
            LayerSpec::Dense { out_dim, .. } => out_dim,
            LayerSpec::BatchNorm { dim } | LayerSpec::Tanh { dim } => dim,
            LayerSpec::SoftmaxOutput { classes } => classes,
        }
    }
}

/// A full model: layer chain, the layer whose output is the extracted
/// feature, and the output class count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
    pub feature_layer: usize,
    pub classes: usize,
}

impl ModelSpec {
    /// Checks the layer chain: shapes line up, convolution only leads,
    /// softmax only closes, and the feature layer is in range.
    pub fn validate(&self) -> Result<(), NnError> {
        if self.layers.is_empty() {
            return Err(NnError::InvalidSpec("no layers".into()));
        }
        let mut dim = None;
        for (i, l) in self.layers.iter().enumerate() {
            match *l {
                LayerSpec::Conv { in_cols, width, .. } => {
                    if i != 0 {
                        return Err(NnError::InvalidSpec(
                            "convolution allowed only as the first layer".into(),
                        ));
                    }
                    if width > in_cols {
                        return Err(NnError::InvalidSpec(format!(
                            "filter width {width} exceeds input columns {in_cols}"
                        )));
                    }
                }
                LayerSpec::Dense { in_dim, .. } => {
                    if let Some(d) = dim {
                        if d != in_dim {
                            return Err(NnError::InvalidSpec(format!(
                                "layer {i}: expects {in_dim} inputs, gets {d}"
                            )));
                        }
                    }
                }
                LayerSpec::BatchNorm { dim: d } | LayerSpec::Tanh { dim: d } => {
                    if dim != Some(d) {
                        return Err(NnError::InvalidSpec(format!(
                            "layer {i}: width {d} does not match incoming {dim:?}"
                        )));
                    }
                }
                LayerSpec::SoftmaxOutput { classes } => {
                    if i + 1 != self.layers.len() {
                        return Err(NnError::InvalidSpec(
                            "softmax output must be the last layer".into(),
                        ));
                    }
                    if dim != Some(classes) || classes != self.classes {
                        return Err(NnError::InvalidSpec(format!(
                            "softmax classes {classes} vs incoming {dim:?}"
                        )));
                    }
                }
            }
            dim = Some(l.out_dim());
        }
        if !matches!(self.layers.last(), Some(LayerSpec::SoftmaxOutput { .. })) {
            return Err(NnError::InvalidSpec("model must end in softmax".into()));
        }
        if self.feature_layer >= self.layers.len() {
            return Err(NnError::InvalidSpec("feature layer out of range".into()));
        }
        Ok(())
    }

    /// Per-sample input shape: `[rows, cols]` for conv-led models,
    /// `[dim]` otherwise.
    pub fn input_shape(&self) -> Vec<usize> {
        match self.layers[0] {
            LayerSpec::Conv {
                in_rows, in_cols, ..
            } => vec![in_rows, in_cols],
            LayerSpec::Dense { in_dim, .. } => vec![in_dim],
            _ => unreachable!("validated models start with conv or dense"),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[self.feature_layer].out_dim()
    }
}

/// Parameters for one layer; mirrors `LayerSpec` positions.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    Conv {
        /// `[filters, in_rows, width]`
        w: Tensor,
        b: Vec<f64>,
    },
    Dense {
        /// `[in_dim, out_dim]`
        w: Tensor,
        b: Vec<f64>,
    },
    BatchNorm {
        gamma: Vec<f64>,
        beta: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
    },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<LayerParams>,
}

impl ModelParams {
    /// Scaled uniform fan-in initialization; batchnorm starts at identity
    /// with unit running variance.
    pub fn init(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> ModelParams {
        let layers = spec
            .layers
            .iter()
            .map(|l| match *l {
                LayerSpec::Conv {
                    in_rows,
                    filters,
                    width,
                    ..
                } => {
                    let fan_in = (in_rows * width) as f64;
                    let s = (1.0 / fan_in).sqrt();
                    let w = Tensor::from_vec(
                        &[filters, in_rows, width],
                        (0..filters * in_rows * width)
                            .map(|_| rng.gen_range(-s..s))
                            .collect(),
                    );
                    LayerParams::Conv {
                        w,
                        b: vec![0.0; filters],
                    }
                }
                LayerSpec::Dense { in_dim, out_dim } => {
                    let s = (1.0 / in_dim as f64).sqrt();
                    let w = Tensor::from_vec(
                        &[in_dim, out_dim],
                        (0..in_dim * out_dim).map(|_| rng.gen_range(-s..s)).collect(),
                    );
                    LayerParams::Dense {
                        w,
                        b: vec![0.0; out_dim],
                    }
                }
                LayerSpec::BatchNorm { dim } => LayerParams::BatchNorm {
                    gamma: vec![1.0; dim],
                    beta: vec![0.0; dim],
                    running_mean: vec![0.0; dim],
                    running_var: vec![1.0; dim],
                },
                LayerSpec::Tanh { .. } | LayerSpec::SoftmaxOutput { .. } => LayerParams::None,
            })
            .collect();
        ModelParams { layers }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batchnorm; caches kept for backprop.
    Train,
    /// Running statistics; per-sample output independent of the batch.
    Infer,
}

/// Per-layer cache from a train-mode forward, consumed by `backward`.
pub struct ForwardCache {
    /// Input and every layer output, flattened to `[batch, dim]`.
    activations: Vec<Tensor>,
    /// Batchnorm internals per layer index.
    bn: Vec<Option<BnCache>>,
    batch: usize,
}

struct BnCache {
    x_hat: Tensor,
    inv_std: Vec<f64>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
}

/// Everything a forward pass yields.
pub struct ForwardPass {
    pub logits: Tensor,
    pub probs: Tensor,
    /// Output of the designated feature layer, `[batch, feature_dim]`.
    pub features: Tensor,
    pub cache: ForwardCache,
}

/// Runs the model on a batch. Conv models take `[batch, rows, cols]`;
/// dense models take `[batch, dim]`.
pub fn forward(
    spec: &ModelSpec,
    params: &ModelParams,
    batch: &Tensor,
    mode: Mode,
) -> Result<ForwardPass, NnError> {
    let per_sample = spec.input_shape();
    let expected: Vec<usize> = std::iter::once(0).chain(per_sample.iter().copied()).collect();
    if batch.rank() != expected.len() || batch.shape()[1..] != expected[1..] {
        return Err(NnError::ShapeMismatch {
            expected: format!("[batch, {:?}]", per_sample),
            got: format!("{:?}", batch.shape()),
        });
    }
    let n = batch.shape()[0];
    let flat_in = batch
        .clone()
        .reshape(&[n, per_sample.iter().product::<usize>()]);

    let mut activations = vec![flat_in];
    let mut bn_caches: Vec<Option<BnCache>> = Vec::with_capacity(spec.layers.len());

    for (l, p) in spec.layers.iter().zip(&params.layers) {
        let x = activations.last().unwrap();
        let (y, bn) = match (l, p) {
            (LayerSpec::Conv { in_rows, in_cols, filters, width }, LayerParams::Conv { w, b }) => {
                (conv_forward(x, n, *in_rows, *in_cols, *filters, *width, w, b), None)
            }
            (LayerSpec::Dense { .. }, LayerParams::Dense { w, b }) => {
                let mut y = matmul(x, w);
                for r in 0..n {
                    for (v, bias) in y.row_mut(r).iter_mut().zip(b) {
                        *v += bias;
                    }
                }
                (y, None)
            }
            (LayerSpec::BatchNorm { dim }, LayerParams::BatchNorm { gamma, beta, running_mean, running_var }) => {
                bn_forward(x, n, *dim, gamma, beta, running_mean, running_var, mode)
            }
            (LayerSpec::Tanh { .. }, LayerParams::None) => {
                let mut y = x.clone();
                for v in y.data_mut() {
                    *v = v.tanh();
                }
                (y, None)
            }
            (LayerSpec::SoftmaxOutput { .. }, LayerParams::None) => {
                (softmax(x), None)
            }
            _ => return Err(NnError::InvalidSpec("params do not match spec".into())),
        };
        bn_caches.push(bn);
        activations.push(y);
    }

    let probs = activations.last().unwrap().clone();
    let logits = activations[activations.len() - 2].clone();
    let features = activations[spec.feature_layer + 1].clone();
    Ok(ForwardPass {
        logits,
        probs,
        features,
        cache: ForwardCache {
            activations,
            bn: bn_caches,
            batch: n,
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &Tensor,
    n: usize,
    in_rows: usize,
    in_cols: usize,
    filters: usize,
    width: usize,
    w: &Tensor,
    b: &[f64],
) -> Tensor {
    let positions = in_cols - width + 1;
    let mut y = Tensor::zeros(&[n, filters * positions]);
    let wd = w.data();
    for s in 0..n {
        let xs = &x.data()[s * in_rows * in_cols..(s + 1) * in_rows * in_cols];
        let ys = y.row_mut(s);
        for f in 0..filters {
            let wf = &wd[f * in_rows * width..(f + 1) * in_rows * width];
            for p in 0..positions {
                let mut acc = b[f];
                for r in 0..in_rows {
                    let xrow = &xs[r * in_cols + p..r * in_cols + p + width];
                    let wrow = &wf[r * width..(r + 1) * width];
                    for (xv, wv) in xrow.iter().zip(wrow) {
                        acc += xv * wv;
                    }
                }
                ys[f * positions + p] = acc;
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn bn_forward(
    x: &Tensor,
    n: usize,
    dim: usize,
    gamma: &[f64],
    beta: &[f64],
    running_mean: &[f64],
    running_var: &[f64],
    mode: Mode,
) -> (Tensor, Option<BnCache>) {
    let mut y = Tensor::zeros(&[n, dim]);
    match mode {
        Mode::Infer => {
            for s in 0..n {
                let xs = x.row(s);
                let ys = y.row_mut(s);
                for j in 0..dim {
                    let x_hat = (xs[j] - running_mean[j]) / (running_var[j] + BN_EPSILON).sqrt();
                    ys[j] = gamma[j] * x_hat + beta[j];
                }
            }
            (y, None)
        }
        Mode::Train => {
            let nf = n as f64;
            let mut mean = vec![0.0; dim];
            for s in 0..n {
                for (m, v) in mean.iter_mut().zip(x.row(s)) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= nf;
            }
            let mut var = vec![0.0; dim];
            for s in 0..n {
                for j in 0..dim {
                    let d = x.row(s)[j] - mean[j];
                    var[j] += d * d;
                }
            }
            for v in &mut var {
                *v /= nf;
            }
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPSILON).sqrt()).collect();
            let mut x_hat = Tensor::zeros(&[n, dim]);
            for s in 0..n {
                for j in 0..dim {
                    let xh = (x.row(s)[j] - mean[j]) * inv_std[j];
                    x_hat.row_mut(s)[j] = xh;
                    y.row_mut(s)[j] = gamma[j] * xh + beta[j];
                }
            }
            (
                y,
                Some(BnCache {
                    x_hat,
                    inv_std,
                    batch_mean: mean,
                    batch_var: var,
                }),
            )
        }
    }
}

fn softmax(logits: &Tensor) -> Tensor {
    let mut probs = logits.clone();
    let cols = probs.cols();
    for r in 0..probs.rows() {
        let row = probs.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
        debug_assert_eq!(row.len(), cols);
    }
    probs
}

/// Mean negative log-likelihood plus its gradient with respect to the
/// logits; probabilities are floored before the log.
pub fn cross_entropy(probs: &Tensor, labels: &[usize]) -> (f64, Tensor) {
    let n = probs.rows();
    assert_eq!(n, labels.len(), "one label per row");
    let k = probs.cols();
    let mut loss = 0.0;
    let mut grad = probs.clone();
    for (r, &y) in labels.iter().enumerate() {
        assert!(y < k, "label out of range");
        loss -= probs.row(r)[y].max(PROB_FLOOR).ln();
        grad.row_mut(r)[y] -= 1.0;
    }
    let nf = n as f64;
    for v in grad.data_mut() {
        *v /= nf;
    }
    (loss / nf, grad)
}

/// Gradients for every parameter tensor plus the running-stat updates a
/// training step should apply.
pub struct Gradients {
    pub layers: Vec<LayerParams>,
    /// `(layer index, new running mean, new running var)` from the batch.
    pub bn_updates: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

/// Exact chain rule from the loss gradient w.r.t. logits back to every
/// parameter. `cache` must come from a train-mode forward.
pub fn backward(
    spec: &ModelSpec,
    params: &ModelParams,
    cache: &ForwardCache,
    dlogits: &Tensor,
) -> Gradients {
    let n = cache.batch;
    let mut grads: Vec<LayerParams> = Vec::with_capacity(spec.layers.len());
    let mut bn_updates = Vec::new();
    // Start above softmax: dlogits already differentiates through it.
    let mut dy = dlogits.clone();

    for (i, (l, p)) in spec.layers.iter().zip(&params.layers).enumerate().rev() {
        let x = &cache.activations[i];
        match (l, p) {
            (LayerSpec::SoftmaxOutput { .. }, LayerParams::None) => {
                grads.push(LayerParams::None);
            }
            (LayerSpec::Tanh { .. }, LayerParams::None) => {
                let y = &cache.activations[i + 1];
                for (g, yv) in dy.data_mut().iter_mut().zip(y.data()) {
                    *g *= 1.0 - yv * yv;
                }
                grads.push(LayerParams::None);
            }
            (LayerSpec::Dense { .. }, LayerParams::Dense { w, b }) => {
                let dw = matmul_at_b(x, &dy);
                let mut db = vec![0.0; b.len()];
                for r in 0..n {
                    for (dbj, g) in db.iter_mut().zip(dy.row(r)) {
                        *dbj += g;
                    }
                }
                let dx = matmul_a_bt(&dy, w);
                grads.push(LayerParams::Dense { w: dw, b: db });
                dy = dx;
            }
            (LayerSpec::BatchNorm { dim }, LayerParams::BatchNorm { gamma, .. }) => {
                let bn = cache.bn[i].as_ref().expect("train-mode cache required");
                let dim = *dim;
                let nf = n as f64;
                let mut dgamma = vec![0.0; dim];
                let mut dbeta = vec![0.0; dim];
                for r in 0..n {
                    for j in 0..dim {
                        dgamma[j] += dy.row(r)[j] * bn.x_hat.row(r)[j];
                        dbeta[j] += dy.row(r)[j];
                    }
                }
                // dx = inv_std/n * (n*dxhat - Σdxhat - xhat*Σ(dxhat·xhat))
                let mut sum_dxhat = vec![0.0; dim];
                let mut sum_dxhat_xhat = vec![0.0; dim];
                for r in 0..n {
                    for j in 0..dim {
                        let dxhat = dy.row(r)[j] * gamma[j];
                        sum_dxhat[j] += dxhat;
                        sum_dxhat_xhat[j] += dxhat * bn.x_hat.row(r)[j];
                    }
                }
                let mut dx = Tensor::zeros(&[n, dim]);
                for r in 0..n {
                    for j in 0..dim {
                        let dxhat = dy.row(r)[j] * gamma[j];
                        dx.row_mut(r)[j] = bn.inv_std[j] / nf
                            * (nf * dxhat - sum_dxhat[j] - bn.x_hat.row(r)[j] * sum_dxhat_xhat[j]);
                    }
                }
                let new_mean: Vec<f64> = params_bn_update(p, &bn.batch_mean, true);
                let new_var: Vec<f64> = params_bn_update(p, &bn.batch_var, false);
                bn_updates.push((i, new_mean, new_var));
                grads.push(LayerParams::BatchNorm {
                    gamma: dgamma,
                    beta: dbeta,
                    running_mean: vec![0.0; dim],
                    running_var: vec![0.0; dim],
                });
                dy = dx;
            }
            (
                LayerSpec::Conv {
                    in_rows,
                    in_cols,
                    filters,
                    width,
                },
                LayerParams::Conv { w, b },
            ) => {
                let (in_rows, in_cols, filters, width) = (*in_rows, *in_cols, *filters, *width);
                let positions = in_cols - width + 1;
                let mut dw = Tensor::zeros(&[filters, in_rows, width]);
                let mut db = vec![0.0; b.len()];
                let mut dx = Tensor::zeros(&[n, in_rows * in_cols]);
                let wd = w.data();
                for s in 0..n {
                    let xs = &x.data()[s * in_rows * in_cols..(s + 1) * in_rows * in_cols];
                    let dys = dy.row(s);
                    let dxs = &mut dx.data_mut()[s * in_rows * in_cols..(s + 1) * in_rows * in_cols];
                    for f in 0..filters {
                        for p in 0..positions {
                            let g = dys[f * positions + p];
                            if g == 0.0 {
                                continue;
                            }
                            db[f] += g;
                            for r in 0..in_rows {
                                for t in 0..width {
                                    dw.data_mut()[(f * in_rows + r) * width + t] +=
                                        g * xs[r * in_cols + p + t];
                                    dxs[r * in_cols + p + t] += g * wd[(f * in_rows + r) * width + t];
                                }
                            }
                        }
                    }
                }
                grads.push(LayerParams::Conv { w: dw, b: db });
                dy = dx;
            }
            _ => unreachable!("params do not match spec"),
        }
    }
    grads.reverse();
    Gradients {
        layers: grads,
        bn_updates,
    }
}

fn params_bn_update(p: &LayerParams, batch_stat: &[f64], mean: bool) -> Vec<f64> {
    match p {
        LayerParams::BatchNorm {
            running_mean,
            running_var,
            ..
        } => {
            let running = if mean { running_mean } else { running_var };
            running
                .iter()
                .zip(batch_stat)
                .map(|(r, b)| BN_MOMENTUM * r + (1.0 - BN_MOMENTUM) * b)
                .collect()
        }
        _ => unreachable!(),
    }
}

/// Loss of a train-mode forward; pure in `params`.
pub fn loss_on(
    spec: &ModelSpec,
    params: &ModelParams,
    batch: &Tensor,
    labels: &[usize],
) -> Result<f64, NnError> {
    let pass = forward(spec, params, batch, Mode::Train)?;
    Ok(cross_entropy(&pass.probs, labels).0)
}

/// Central-finite-difference check of `backward` over every parameter
/// scalar (or a seeded subsample above `max_params`). Returns the largest
/// relative error, with the denominator floored at 1e-4: below that both
/// sides are under the cancellation noise of the difference quotient and
/// the ratio stops being informative.
pub fn gradient_check(
    spec: &ModelSpec,
    params: &ModelParams,
    batch: &Tensor,
    labels: &[usize],
    max_params: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64, NnError> {
    const H: f64 = 1e-5;
    let pass = forward(spec, params, batch, Mode::Train)?;
    let (_, dlogits) = cross_entropy(&pass.probs, labels);
    let grads = backward(spec, params, &pass.cache, &dlogits);

    // Enumerate checkable scalars: (layer, field, offset).
    let mut coords: Vec<(usize, usize, usize)> = Vec::new();
    for (li, p) in params.layers.iter().enumerate() {
        match p {
            LayerParams::Conv { w, b } | LayerParams::Dense { w, b } => {
                coords.extend((0..w.len()).map(|o| (li, 0, o)));
                coords.extend((0..b.len()).map(|o| (li, 1, o)));
            }
            LayerParams::BatchNorm { gamma, beta, .. } => {
                coords.extend((0..gamma.len()).map(|o| (li, 2, o)));
                coords.extend((0..beta.len()).map(|o| (li, 3, o)));
            }
            LayerParams::None => {}
        }
    }
    if coords.len() > max_params {
        // seeded subsample, order-preserving
        let mut keep = Vec::with_capacity(max_params);
        for _ in 0..max_params {
            keep.push(coords[rng.gen_range(0..coords.len())]);
        }
        coords = keep;
    }

    let read = |layers: &[LayerParams], (li, field, o): (usize, usize, usize)| -> f64 {
        match (&layers[li], field) {
            (LayerParams::Conv { w, .. }, 0) | (LayerParams::Dense { w, .. }, 0) => w.data()[o],
            (LayerParams::Conv { b, .. }, 1) | (LayerParams::Dense { b, .. }, 1) => b[o],
            (LayerParams::BatchNorm { gamma, .. }, 2) => gamma[o],
            (LayerParams::BatchNorm { beta, .. }, 3) => beta[o],
            _ => unreachable!(),
        }
    };
    let write = |layers: &mut [LayerParams], (li, field, o): (usize, usize, usize), v: f64| {
        match (&mut layers[li], field) {
            (LayerParams::Conv { w, .. }, 0) | (LayerParams::Dense { w, .. }, 0) => {
                w.data_mut()[o] = v
            }
            (LayerParams::Conv { b, .. }, 1) | (LayerParams::Dense { b, .. }, 1) => b[o] = v,
            (LayerParams::BatchNorm { gamma, .. }, 2) => gamma[o] = v,
            (LayerParams::BatchNorm { beta, .. }, 3) => beta[o] = v,
            _ => unreachable!(),
        }
    };

    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for &c in &coords {
        let orig = read(&probe.layers, c);
        write(&mut probe.layers, c, orig + H);
        let lp = loss_on(spec, &probe, batch, labels)?;
        write(&mut probe.layers, c, orig - H);
        let lm = loss_on(spec, &probe, batch, labels)?;
        write(&mut probe.layers, c, orig);
        let numeric = (lp - lm) / (2.0 * H);
        let analytic = read(&grads.layers, c);
        let err = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-4);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn dense_softmax_spec(input: usize, classes: usize) -> ModelSpec {
        ModelSpec {
            layers: vec![
                LayerSpec::Dense {
                    in_dim: input,
                    out_dim: classes,
                },
                LayerSpec::SoftmaxOutput { classes },
            ],
            feature_layer: 0,
            classes,
        }
    }

    #[test]
    fn zero_logits_give_uniform_probs() {
        let spec = dense_softmax_spec(3, 2);
        let params = ModelParams {
            layers: vec![
                LayerParams::Dense {
                    w: Tensor::zeros(&[3, 2]),
                    b: vec![0.0; 2],
                },
                LayerParams::None,
            ],
        };
        let x = Tensor::from_vec(&[1, 3], vec![0.3, -0.7, 2.0]);
        let pass = forward(&spec, &params, &x, Mode::Infer).unwrap();
        assert_eq!(pass.probs.data(), &[0.5, 0.5]);
    }

    #[test]
    fn identity_dense_passes_input_through() {
        let spec = ModelSpec {
            layers: vec![
                LayerSpec::Dense {
                    in_dim: 2,
                    out_dim: 2,
                },
                LayerSpec::SoftmaxOutput { classes: 2 },
            ],
            feature_layer: 0,
            classes: 2,
        };
        let params = ModelParams {
            layers: vec![
                LayerParams::Dense {
                    w: Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]),
                    b: vec![0.0; 2],
                },
                LayerParams::None,
            ],
        };
        let x = Tensor::from_vec(&[2, 2], vec![0.25, -1.5, 3.0, 0.5]);
        let pass = forward(&spec, &params, &x, Mode::Infer).unwrap();
        assert_eq!(pass.logits.data(), x.data());
    }

    #[test]
    fn conv_all_ones_window_sums_sixty() {
        let spec = ModelSpec {
            layers: vec![
                LayerSpec::Conv {
                    in_rows: 3,
                    in_cols: 20,
                    filters: 1,
                    width: 20,
                },
                LayerSpec::Dense {
                    in_dim: 1,
                    out_dim: 2,
                },
                LayerSpec::SoftmaxOutput { classes: 2 },
            ],
            feature_layer: 0,
            classes: 2,
        };
        let params = ModelParams {
            layers: vec![
                LayerParams::Conv {
                    w: Tensor::from_vec(&[1, 3, 20], vec![1.0; 60]),
                    b: vec![0.0],
                },
                LayerParams::Dense {
                    w: Tensor::zeros(&[1, 2]),
                    b: vec![0.0; 2],
                },
                LayerParams::None,
            ],
        };
        let x = Tensor::from_vec(&[1, 3, 20], vec![1.0; 60]);
        let pass = forward(&spec, &params, &x, Mode::Infer).unwrap();
        // feature layer is the conv output itself here
        assert_eq!(pass.features.data(), &[60.0]);
    }

    #[test]
    fn cross_entropy_reference_values() {
        let probs = Tensor::from_vec(&[1, 2], vec![0.5, 0.5]);
        let (loss, _) = cross_entropy(&probs, &[0]);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);

        let probs = Tensor::from_vec(&[1, 2], vec![0.0, 1.0]);
        let (loss, _) = cross_entropy(&probs, &[1]);
        assert_eq!(loss, 0.0);

        let probs = Tensor::from_vec(&[1, 2], vec![0.9, 0.1]);
        let (loss, _) = cross_entropy(&probs, &[1]);
        assert!((loss - 2.302585092994046).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_gradient_is_probs_minus_onehot_over_batch() {
        let probs = Tensor::from_vec(&[2, 2], vec![0.75, 0.25, 0.4, 0.6]);
        let (_, grad) = cross_entropy(&probs, &[0, 1]);
        let expect = [(0.75 - 1.0) / 2.0, 0.25 / 2.0, 0.4 / 2.0, (0.6 - 1.0) / 2.0];
        for (g, e) in grad.data().iter().zip(&expect) {
            assert!((g - e).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_softmax_backward_matches_hand_computation() {
        // Two samples, two features, two classes; W and b fixed by hand.
        let spec = dense_softmax_spec(2, 2);
        let w = [[0.5, -0.25], [0.1, 0.3]];
        let params = ModelParams {
            layers: vec![
                LayerParams::Dense {
                    w: Tensor::from_vec(&[2, 2], vec![w[0][0], w[0][1], w[1][0], w[1][1]]),
                    b: vec![0.05, -0.1],
                },
                LayerParams::None,
            ],
        };
        let xs = [[1.0, 2.0], [-0.5, 0.25]];
        let labels = [0usize, 1usize];
        let x = Tensor::from_vec(&[2, 2], vec![xs[0][0], xs[0][1], xs[1][0], xs[1][1]]);

        let pass = forward(&spec, &params, &x, Mode::Train).unwrap();
        let (_, dlogits) = cross_entropy(&pass.probs, &labels);
        let grads = backward(&spec, &params, &pass.cache, &dlogits);

        // Independent arithmetic: softmax, then dW = xᵀ (p - onehot)/n.
        let mut dw_hand = [[0.0f64; 2]; 2];
        let mut db_hand = [0.0f64; 2];
        for (s, xrow) in xs.iter().enumerate() {
            let z0 = xrow[0] * w[0][0] + xrow[1] * w[1][0] + 0.05;
            let z1 = xrow[0] * w[0][1] + xrow[1] * w[1][1] - 0.1;
            let m = z0.max(z1);
            let (e0, e1) = ((z0 - m).exp(), (z1 - m).exp());
            let p0 = e0 / (e0 + e1);
            let p1 = e1 / (e0 + e1);
            let mut d = [p0, p1];
            d[labels[s]] -= 1.0;
            for dj in &mut d {
                *dj /= 2.0;
            }
            for i in 0..2 {
                for j in 0..2 {
                    dw_hand[i][j] += xrow[i] * d[j];
                }
            }
            db_hand[0] += d[0];
            db_hand[1] += d[1];
        }
        match &grads.layers[0] {
            LayerParams::Dense { w: dw, b: db } => {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((dw.data()[i * 2 + j] - dw_hand[i][j]).abs() < 1e-12);
                    }
                }
                for j in 0..2 {
                    assert!((db[j] - db_hand[j]).abs() < 1e-12);
                }
            }
            _ => panic!("dense gradient missing"),
        }
    }

    #[test]
    fn zero_loss_grad_gives_zero_param_grads() {
        let spec = dense_softmax_spec(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = ModelParams::init(&spec, &mut rng);
        let x = Tensor::from_vec(&[2, 3], vec![0.1; 6]);
        let pass = forward(&spec, &params, &x, Mode::Train).unwrap();
        let zero = Tensor::zeros(&[2, 2]);
        let grads = backward(&spec, &params, &pass.cache, &zero);
        match &grads.layers[0] {
            LayerParams::Dense { w, b } => {
                assert!(w.data().iter().all(|&v| v == 0.0));
                assert!(b.iter().all(|&v| v == 0.0));
            }
            _ => panic!(),
        }
    }

    fn tiny_full_spec() -> ModelSpec {
        ModelSpec {
            layers: vec![
                LayerSpec::Conv {
                    in_rows: 3,
                    in_cols: 8,
                    filters: 2,
                    width: 4,
                },
                LayerSpec::BatchNorm { dim: 10 },
                LayerSpec::Tanh { dim: 10 },
                LayerSpec::Dense {
                    in_dim: 10,
                    out_dim: 5,
                },
                LayerSpec::BatchNorm { dim: 5 },
                LayerSpec::Tanh { dim: 5 },
                LayerSpec::Dense { in_dim: 5, out_dim: 2 },
                LayerSpec::SoftmaxOutput { classes: 2 },
            ],
            feature_layer: 5,
            classes: 2,
        }
    }

    #[test]
    fn gradient_check_every_layer_type_composed() {
        let spec = tiny_full_spec();
        spec.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = ModelParams::init(&spec, &mut rng);
        let x = Tensor::from_vec(
            &[4, 3, 8],
            (0..4 * 24).map(|i| ((i * 37 % 17) as f64 - 8.0) / 5.0).collect(),
        );
        let labels = [0usize, 1, 1, 0];
        let err = gradient_check(&spec, &params, &x, &labels, usize::MAX, &mut rng).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_check_per_layer_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // conv only
        let conv = ModelSpec {
            layers: vec![
                LayerSpec::Conv {
                    in_rows: 2,
                    in_cols: 6,
                    filters: 3,
                    width: 3,
                },
                LayerSpec::Dense {
                    in_dim: 12,
                    out_dim: 2,
                },
                LayerSpec::SoftmaxOutput { classes: 2 },
            ],
            feature_layer: 0,
            classes: 2,
        };
        let params = ModelParams::init(&conv, &mut rng);
        let x = Tensor::from_vec(&[3, 2, 6], (0..36).map(|i| (i as f64) / 10.0 - 1.5).collect());
        let err = gradient_check(&conv, &params, &x, &[0, 1, 0], usize::MAX, &mut rng).unwrap();
        assert!(err < 1e-4, "conv: {err}");

        // batchnorm + tanh around a dense
        let bn = ModelSpec {
            layers: vec![
                LayerSpec::Dense { in_dim: 4, out_dim: 6 },
                LayerSpec::BatchNorm { dim: 6 },
                LayerSpec::Tanh { dim: 6 },
                LayerSpec::Dense { in_dim: 6, out_dim: 2 },
                LayerSpec::SoftmaxOutput { classes: 2 },
            ],
            feature_layer: 2,
            classes: 2,
        };
        let params = ModelParams::init(&bn, &mut rng);
        let x = Tensor::from_vec(&[5, 4], (0..20).map(|i| ((i * 13 % 7) as f64) / 3.0).collect());
        let err = gradient_check(&bn, &params, &x, &[0, 1, 1, 0, 1], usize::MAX, &mut rng).unwrap();
        assert!(err < 1e-4, "bn/tanh: {err}");
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant() {
        let logits = Tensor::from_vec(&[3, 4], (0..12).map(|i| (i as f64) * 0.37 - 2.0).collect());
        let p1 = softmax(&logits);
        for r in 0..3 {
            let s: f64 = p1.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(p1.row(r).iter().all(|&v| v > 0.0 && v < 1.0));
        }
        let mut shifted = logits.clone();
        for v in shifted.data_mut() {
            *v += 123.456;
        }
        let p2 = softmax(&shifted);
        for (a, b) in p1.data().iter().zip(p2.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn batchnorm_train_mode_normalizes() {
        let spec = ModelSpec {
            layers: vec![
                LayerSpec::Dense { in_dim: 3, out_dim: 3 },
                LayerSpec::BatchNorm { dim: 3 },
                LayerSpec::Tanh { dim: 3 },
                LayerSpec::Dense { in_dim: 3, out_dim: 2 },
                LayerSpec::SoftmaxOutput { classes: 2 },
            ],
            feature_layer: 2,
            classes: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = ModelParams::init(&spec, &mut rng);
        let n = 32;
        let x = Tensor::from_vec(
            &[n, 3],
            (0..n * 3).map(|i| ((i * 31 % 23) as f64) - 11.0).collect(),
        );
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let pass = forward(&spec, &params, &x, Mode::Train).unwrap();
        let _ = cross_entropy(&pass.probs, &labels);
        let bn = pass.cache.bn[1].as_ref().unwrap();
        for j in 0..3 {
            let mut mean = 0.0;
            let mut var = 0.0;
            for r in 0..n {
                mean += bn.x_hat.row(r)[j];
            }
            mean /= n as f64;
            for r in 0..n {
                let d = bn.x_hat.row(r)[j] - mean;
                var += d * d;
            }
            var /= n as f64;
            assert!(mean.abs() < 1e-9, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-6, "var {var}");
        }
    }

    #[test]
    fn infer_mode_is_batch_independent() {
        let spec = tiny_full_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = ModelParams::init(&spec, &mut rng);
        let data: Vec<f64> = (0..6 * 24).map(|i| ((i * 7 % 13) as f64) / 6.0).collect();
        let batch = Tensor::from_vec(&[6, 3, 8], data.clone());
        let full = forward(&spec, &params, &batch, Mode::Infer).unwrap();
        for s in 0..6 {
            let one = Tensor::from_vec(&[1, 3, 8], data[s * 24..(s + 1) * 24].to_vec());
            let single = forward(&spec, &params, &one, Mode::Infer).unwrap();
            assert_eq!(single.probs.data(), full.probs.row(s));
            assert_eq!(single.features.data(), full.features.row(s));
        }
    }

    #[test]
    fn forward_rejects_wrong_shape() {
        let spec = dense_softmax_spec(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = ModelParams::init(&spec, &mut rng);
        let x = Tensor::from_vec(&[1, 4], vec![0.0; 4]);
        assert!(matches!(
            forward(&spec, &params, &x, Mode::Infer),
            Err(NnError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn spec_validation_catches_bad_chains() {
        let bad = ModelSpec {
            layers: vec![
                LayerSpec::Dense { in_dim: 3, out_dim: 4 },
                LayerSpec::Dense { in_dim: 5, out_dim: 2 },
                LayerSpec::SoftmaxOutput { classes: 2 },
            ],
            feature_layer: 0,
            classes: 2,
        };
        assert!(bad.validate().is_err());

        let conv_mid = ModelSpec {
            layers: vec![
                LayerSpec::Dense { in_dim: 3, out_dim: 60 },
                LayerSpec::Conv {
                    in_rows: 3,
                    in_cols: 20,
                    filters: 1,
                    width: 20,
                },
                LayerSpec::SoftmaxOutput { classes: 2 },
            ],
            feature_layer: 0,
            classes: 2,
        };
        assert!(conv_mid.validate().is_err());
    }
}
