//! SGD-with-momentum training loop: seeded initialization, per-epoch
//! shuffling, batchnorm running-stat updates, and a per-epoch loss curve.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    backward, cross_entropy, forward, LayerParams, Mode, ModelParams, ModelSpec, NnError, Tensor,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for Hyper {
    fn default() -> Hyper {
        Hyper {
            batch_size: 128,
            epochs: 10,
            learning_rate: 0.01,
            momentum: 0.9,
        }
    }
}

/// Labeled training data; `inputs` is `[n, ...]` with one leading sample
/// axis, labels in `0..classes`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: Tensor, labels: Vec<usize>) -> Dataset {
        assert_eq!(inputs.shape()[0], labels.len(), "one label per sample");
        Dataset { inputs, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn sample_width(&self) -> usize {
        self.inputs.len() / self.inputs.shape()[0].max(1)
    }

    /// Copies the rows at `indices` into a fresh batch tensor.
    fn gather(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let w = self.sample_width();
        let mut shape = self.inputs.shape().to_vec();
        shape[0] = indices.len();
        let mut data = Vec::with_capacity(indices.len() * w);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(&self.inputs.data()[i * w..(i + 1) * w]);
            labels.push(self.labels[i]);
        }
        (Tensor::from_vec(&shape, data), labels)
    }
}

/// A trained model: spec, parameters, the seed that produced them, and the
/// per-epoch mean training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub seed: u64,
    pub loss_curve: Vec<f64>,
}

/// Trains from scratch; fully deterministic in `seed`.
pub fn train(
    spec: &ModelSpec,
    dataset: &Dataset,
    hyper: &Hyper,
    seed: u64,
) -> Result<TrainedModel, NnError> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let first = dataset.labels[0];
    if dataset.labels.iter().all(|&l| l == first) {
        return Err(NnError::SingleClass);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(spec, &mut rng);
    let mut velocity = zeros_like(&params);
    let n = dataset.len();
    let mut loss_curve = Vec::with_capacity(hyper.epochs);

    for _ in 0..hyper.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(hyper.batch_size.max(1)) {
            let (bx, by) = dataset.gather(chunk);
            let pass = forward(spec, &params, &bx, Mode::Train)?;
            let (loss, dlogits) = cross_entropy(&pass.probs, &by);
            let grads = backward(spec, &params, &pass.cache, &dlogits);
            step(&mut params, &mut velocity, &grads.layers, hyper);
            for (li, mean, var) in grads.bn_updates {
                if let LayerParams::BatchNorm {
                    running_mean,
                    running_var,
                    ..
                } = &mut params.layers[li]
                {
                    *running_mean = mean;
                    *running_var = var;
                }
            }
            epoch_loss += loss * chunk.len() as f64;
        }
        loss_curve.push(epoch_loss / n as f64);
    }
    Ok(TrainedModel {
        spec: spec.clone(),
        params,
        seed,
        loss_curve,
    })
}

fn zeros_like(params: &ModelParams) -> ModelParams {
    ModelParams {
        layers: params
            .layers
            .iter()
            .map(|p| match p {
                LayerParams::Conv { w, b } => LayerParams::Conv {
                    w: Tensor::zeros(w.shape()),
                    b: vec![0.0; b.len()],
                },
                LayerParams::Dense { w, b } => LayerParams::Dense {
                    w: Tensor::zeros(w.shape()),
                    b: vec![0.0; b.len()],
                },
                LayerParams::BatchNorm { gamma, .. } => LayerParams::BatchNorm {
                    gamma: vec![0.0; gamma.len()],
                    beta: vec![0.0; gamma.len()],
                    running_mean: vec![0.0; gamma.len()],
                    running_var: vec![0.0; gamma.len()],
                },
                LayerParams::None => LayerParams::None,
            })
            .collect(),
    }
}

/// v <- momentum v - lr g;  w <- w + v (gamma/beta included, running stats
/// untouched).
fn step(params: &mut ModelParams, velocity: &mut ModelParams, grads: &[LayerParams], hyper: &Hyper) {
    let upd = |w: &mut [f64], v: &mut [f64], g: &[f64]| {
        for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(g) {
            *vi = hyper.momentum * *vi - hyper.learning_rate * gi;
            *wi += *vi;
        }
    };
    for ((p, v), g) in params
        .layers
        .iter_mut()
        .zip(velocity.layers.iter_mut())
        .zip(grads)
    {
        match (p, v, g) {
            (
                LayerParams::Conv { w, b },
                LayerParams::Conv { w: vw, b: vb },
                LayerParams::Conv { w: gw, b: gb },
            )
            | (
                LayerParams::Dense { w, b },
                LayerParams::Dense { w: vw, b: vb },
                LayerParams::Dense { w: gw, b: gb },
            ) => {
                upd(w.data_mut(), vw.data_mut(), gw.data());
                upd(b, vb, gb);
            }
            (
                LayerParams::BatchNorm { gamma, beta, .. },
                LayerParams::BatchNorm {
                    gamma: vg,
                    beta: vbt,
                    ..
                },
                LayerParams::BatchNorm {
                    gamma: gg,
                    beta: gbt,
                    ..
                },
            ) => {
                upd(gamma, vg, gg);
                upd(beta, vbt, gbt);
            }
            (LayerParams::None, LayerParams::None, LayerParams::None) => {}
            _ => unreachable!("parameter structures diverged"),
        }
    }
}
