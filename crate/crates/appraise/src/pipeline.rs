//! The three-stage learning pipeline: pre-train one convolutional model
//! per channel, extract the 50-dim feature-layer activations, train the
//! fusion classifier on the concatenated features, and evaluate with a
//! repeated k-fold protocol. The bag-of-words and single-channel baselines
//! are configurations of the same machinery.

use rayon::prelude::*;
use thiserror::Error;

use crate::nn::{
    forward, train, Dataset, Hyper, LayerSpec, Mode, ModelSpec, NnError, Tensor, TrainedModel,
};
use crate::records::{AppRecord, Label};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("feature dimension mismatch: exec {exec} + ui {ui} != fusion input {fusion}")]
    FusionDims { exec: usize, ui: usize, fusion: usize },
    #[error("need at least {k} records for {k}-fold evaluation, got {n}")]
    NotEnoughRecords { n: usize, k: usize },
    #[error("records disagree on vector length: {a} vs {b}")]
    VectorLength { a: usize, b: usize },
}

/// Filter width of every convolutional layer; inputs narrower than this
/// are zero-padded on the type axis.
pub const CONV_WIDTH: usize = 20;
pub const CONV_FILTERS: usize = 10;
pub const FEATURE_DIM: usize = 50;
const EXEC_HIDDEN: [usize; 2] = [1000, 1000];

fn padded_cols(n: usize) -> usize {
    n.max(CONV_WIDTH)
}

fn push_dense_block(layers: &mut Vec<LayerSpec>, in_dim: usize, out_dim: usize) {
    layers.push(LayerSpec::Dense { in_dim, out_dim });
    layers.push(LayerSpec::BatchNorm { dim: out_dim });
    layers.push(LayerSpec::Tanh { dim: out_dim });
}

fn finish_with_head(mut layers: Vec<LayerSpec>, dim: usize, classes: usize) -> Vec<LayerSpec> {
    layers.push(LayerSpec::Dense {
        in_dim: dim,
        out_dim: classes,
    });
    layers.push(LayerSpec::SoftmaxOutput { classes });
    layers
}

/// Executable-channel model: conv (3-row filters) into two wide dense
/// blocks and the 50-node feature block, softmax on top.
pub fn exec_model_spec(n_types: usize, classes: usize) -> ModelSpec {
    conv_model_spec(3, n_types, &EXEC_HIDDEN, classes)
}

/// UI-channel model: conv (2-row filters) straight into the 50-node
/// feature block.
pub fn ui_model_spec(n_slots: usize, classes: usize) -> ModelSpec {
    conv_model_spec(2, n_slots, &[], classes)
}

/// Shared conv-model shape with configurable hidden widths (the K-class
/// variant uses the same structure with different sizes).
pub fn conv_model_spec(
    in_rows: usize,
    n_cols: usize,
    hidden: &[usize],
    classes: usize,
) -> ModelSpec {
    let in_cols = padded_cols(n_cols);
    let mut layers = vec![LayerSpec::Conv {
        in_rows,
        in_cols,
        filters: CONV_FILTERS,
        width: CONV_WIDTH,
    }];
    let mut dim = CONV_FILTERS * (in_cols - CONV_WIDTH + 1);
    layers.push(LayerSpec::BatchNorm { dim });
    layers.push(LayerSpec::Tanh { dim });
    for &h in hidden {
        push_dense_block(&mut layers, dim, h);
        dim = h;
    }
    push_dense_block(&mut layers, dim, FEATURE_DIM);
    let feature_layer = layers.len() - 1;
    let layers = finish_with_head(layers, FEATURE_DIM, classes);
    ModelSpec {
        layers,
        feature_layer,
        classes,
    }
}

/// Fusion classifier over the concatenated 100-dim feature.
pub fn fusion_model_spec() -> ModelSpec {
    let input = 2 * FEATURE_DIM;
    let mut layers = Vec::new();
    push_dense_block(&mut layers, input, 100);
    push_dense_block(&mut layers, 100, 20);
    let feature_layer = layers.len() - 1;
    let layers = finish_with_head(layers, 20, 2);
    ModelSpec {
        layers,
        feature_layer,
        classes: 2,
    }
}

/// Frequency-only baseline with the leading convolution swapped for a
/// 1000-node dense layer.
pub fn bow_dense_spec(n_types: usize, classes: usize) -> ModelSpec {
    let mut layers = Vec::new();
    push_dense_block(&mut layers, n_types, 1000);
    for &h in &EXEC_HIDDEN {
        let prev = match layers[layers.len() - 3] {
            LayerSpec::Dense { out_dim, .. } => out_dim,
            _ => unreachable!(),
        };
        push_dense_block(&mut layers, prev, h);
    }
    push_dense_block(&mut layers, EXEC_HIDDEN[1], FEATURE_DIM);
    let feature_layer = layers.len() - 1;
    let layers = finish_with_head(layers, FEATURE_DIM, classes);
    ModelSpec {
        layers,
        feature_layer,
        classes,
    }
}

/// Frequency-only baseline keeping a convolution, with 1-row filters.
pub fn bow_conv_spec(n_types: usize, classes: usize) -> ModelSpec {
    conv_model_spec(1, n_types, &EXEC_HIDDEN, classes)
}

/// Which input a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// 3 x N matrix of (f, l, b) rows.
    Exec,
    /// 2 x (M+2) matrix of (n, d) rows.
    Ui,
    /// 1 x N frequency row for the convolutional bag-of-words baseline.
    BowConv,
    /// Flat N frequency vector for the dense bag-of-words baseline.
    BowDense,
}

fn sem_len(records: &[&AppRecord]) -> Result<usize, PipelineError> {
    let n = records.first().map(|r| r.sem.len()).unwrap_or(0);
    for r in records {
        if r.sem.len() != n {
            return Err(PipelineError::VectorLength {
                a: n,
                b: r.sem.len(),
            });
        }
    }
    Ok(n)
}

fn lay_len(records: &[&AppRecord]) -> Result<usize, PipelineError> {
    let n = records.first().map(|r| r.lay.len()).unwrap_or(0);
    for r in records {
        if r.lay.len() != n {
            return Err(PipelineError::VectorLength {
                a: n,
                b: r.lay.len(),
            });
        }
    }
    Ok(n)
}

/// Model inputs for a record set, remembering which app ids went in —
/// the audit trail the no-leakage check inspects.
pub struct LabeledInputs {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
    pub ids: Vec<String>,
}

pub fn build_inputs(records: &[&AppRecord], channel: Channel) -> Result<LabeledInputs, PipelineError> {
    let n = records.len();
    let (shape, width): (Vec<usize>, usize) = match channel {
        Channel::Exec => {
            let cols = padded_cols(sem_len(records)?);
            (vec![n, 3, cols], 3 * cols)
        }
        Channel::Ui => {
            let cols = padded_cols(lay_len(records)?);
            (vec![n, 2, cols], 2 * cols)
        }
        Channel::BowConv => {
            let cols = padded_cols(sem_len(records)?);
            (vec![n, 1, cols], cols)
        }
        Channel::BowDense => {
            let cols = sem_len(records)?;
            (vec![n, cols], cols)
        }
    };
    let mut data = vec![0.0; n * width];
    for (i, r) in records.iter().enumerate() {
        let row = &mut data[i * width..(i + 1) * width];
        match channel {
            Channel::Exec => {
                let cols = width / 3;
                for (j, s) in r.sem.slots().iter().enumerate() {
                    row[j] = s.f as f64;
                    row[cols + j] = s.l;
                    row[2 * cols + j] = s.b;
                }
            }
            Channel::Ui => {
                let cols = width / 2;
                for (j, &(count, d)) in r.lay.slots().iter().enumerate() {
                    row[j] = count as f64;
                    row[cols + j] = d;
                }
            }
            Channel::BowConv | Channel::BowDense => {
                for (j, s) in r.sem.slots().iter().enumerate() {
                    row[j] = s.f as f64;
                }
            }
        }
    }
    Ok(LabeledInputs {
        inputs: Tensor::from_vec(&shape, data),
        labels: records.iter().map(|r| r.label.class_index()).collect(),
        ids: records.iter().map(|r| r.id.clone()).collect(),
    })
}

/// A pre-trained channel model plus the ids it was trained on.
pub struct Pretrained {
    pub model: TrainedModel,
    pub trained_ids: Vec<String>,
}

/// Pre-trains one channel classifier on the given records.
pub fn pretrain(
    channel: Channel,
    records: &[&AppRecord],
    hyper: &Hyper,
    seed: u64,
) -> Result<Pretrained, PipelineError> {
    let built = build_inputs(records, channel)?;
    let n_types = sem_len(records)?;
    let spec = match channel {
        Channel::Exec => exec_model_spec(n_types, 2),
        Channel::Ui => ui_model_spec(lay_len(records)?, 2),
        Channel::BowConv => bow_conv_spec(n_types, 2),
        Channel::BowDense => bow_dense_spec(n_types, 2),
    };
    let model = train(&spec, &Dataset::new(built.inputs, built.labels), hyper, seed)?;
    Ok(Pretrained {
        model,
        trained_ids: built.ids,
    })
}

/// Feature-layer activations for a batch of records, in infer mode.
pub fn extract_features(
    model: &TrainedModel,
    records: &[&AppRecord],
    channel: Channel,
) -> Result<Tensor, PipelineError> {
    let built = build_inputs(records, channel)?;
    let pass = forward(&model.spec, &model.params, &built.inputs, Mode::Infer)?;
    Ok(pass.features)
}

/// Trains the fusion classifier on concatenated per-record features.
pub fn train_fusion(
    exec_feats: &Tensor,
    ui_feats: &Tensor,
    labels: &[usize],
    hyper: &Hyper,
    seed: u64,
) -> Result<TrainedModel, PipelineError> {
    let spec = fusion_model_spec();
    let fused = concat_features(exec_feats, ui_feats, &spec)?;
    let model = train(&spec, &Dataset::new(fused, labels.to_vec()), hyper, seed)?;
    Ok(model)
}

fn concat_features(
    exec_feats: &Tensor,
    ui_feats: &Tensor,
    fusion_spec: &ModelSpec,
) -> Result<Tensor, PipelineError> {
    let n = exec_feats.rows();
    let (de, du) = (exec_feats.cols(), ui_feats.cols());
    let input = fusion_spec.input_shape()[0];
    if ui_feats.rows() != n || de + du != input {
        return Err(PipelineError::FusionDims {
            exec: de,
            ui: du,
            fusion: input,
        });
    }
    let mut data = Vec::with_capacity(n * input);
    for r in 0..n {
        data.extend_from_slice(exec_feats.row(r));
        data.extend_from_slice(ui_feats.row(r));
    }
    Ok(Tensor::from_vec(&[n, input], data))
}

/// The three trained models of the full pipeline.
pub struct ModelBundle {
    pub exec: TrainedModel,
    pub ui: TrainedModel,
    pub fusion: TrainedModel,
}

impl ModelBundle {
    /// Checks the 50 + 50 = 100 feature wiring.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let de = self.exec.spec.feature_dim();
        let du = self.ui.spec.feature_dim();
        let fin = self.fusion.spec.input_shape()[0];
        if de + du != fin {
            return Err(PipelineError::FusionDims {
                exec: de,
                ui: du,
                fusion: fin,
            });
        }
        Ok(())
    }
}

/// End-to-end classification of analyzed apps through the full bundle.
/// Returns `(label, probabilities)` per record.
pub fn predict(
    bundle: &ModelBundle,
    records: &[&AppRecord],
) -> Result<Vec<(Label, Vec<f64>)>, PipelineError> {
    bundle.validate()?;
    let exec_feats = extract_features(&bundle.exec, records, Channel::Exec)?;
    let ui_feats = extract_features(&bundle.ui, records, Channel::Ui)?;
    let fused = concat_features(&exec_feats, &ui_feats, &bundle.fusion.spec)?;
    let pass = forward(&bundle.fusion.spec, &bundle.fusion.params, &fused, Mode::Infer)?;
    Ok(collect_predictions(&pass.probs))
}

fn collect_predictions(probs: &Tensor) -> Vec<(Label, Vec<f64>)> {
    (0..probs.rows())
        .map(|r| {
            let row = probs.row(r);
            let mut best = 0;
            for (i, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = i;
                }
            }
            (Label::from_class_index(best), row.to_vec())
        })
        .collect()
}

/// Evaluation configuration: the full fused pipeline, the single-channel
/// ablations, or the frequency-only baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalConfig {
    Full,
    ExecOnly,
    UiOnly,
    BowDense,
    BowConv,
}

impl EvalConfig {
    pub fn name(self) -> &'static str {
        match self {
            EvalConfig::Full => "full",
            EvalConfig::ExecOnly => "exec-only",
            EvalConfig::UiOnly => "ui-only",
            EvalConfig::BowDense => "bow-dense",
            EvalConfig::BowConv => "bow-conv",
        }
    }

    pub fn parse(s: &str) -> Option<EvalConfig> {
        Some(match s {
            "full" => EvalConfig::Full,
            "exec-only" => EvalConfig::ExecOnly,
            "ui-only" => EvalConfig::UiOnly,
            "bow-dense" => EvalConfig::BowDense,
            "bow-conv" => EvalConfig::BowConv,
            _ => return None,
        })
    }
}

/// Low-rating is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn count(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Low, Label::Low) => self.tp += 1,
            (Label::NotLow, Label::Low) => self.fp += 1,
            (Label::Low, Label::NotLow) => self.fn_ += 1,
            (Label::NotLow, Label::NotLow) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone)]
pub struct RoundResult {
    pub repeat: usize,
    pub fold: usize,
    pub confusion: Confusion,
}

/// Per-round id bookkeeping proving what the training stage saw.
#[derive(Debug, Clone)]
pub struct RoundAudit {
    pub repeat: usize,
    pub fold: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Ids that actually entered a training set (pre-training or fusion).
    pub trained_ids: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub seed: u64,
    pub k: usize,
    pub repeats: usize,
    pub records: usize,
    pub rounds: Vec<RoundResult>,
}

impl EvalReport {
    pub fn mean_std<F: Fn(&Confusion) -> f64>(&self, f: F) -> (f64, f64) {
        let vals: Vec<f64> = self.rounds.iter().map(|r| f(&r.confusion)).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    /// Structured-text report: header, one line per round, then the flat
    /// `metric mean stddev` table. Byte-stable for a fixed seed.
    pub fn render(&self) -> String {
        let mut out = String::from("report v1\n");
        out.push_str(&format!(
            "config {} seed {} k {} repeats {} records {}\n",
            self.config.name(),
            self.seed,
            self.k,
            self.repeats,
            self.records
        ));
        for r in &self.rounds {
            let c = &r.confusion;
            out.push_str(&format!(
                "round {} {} tp {} fp {} fn {} tn {} accuracy {:.9} precision {:.9} recall {:.9}\n",
                r.repeat,
                r.fold,
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                c.accuracy(),
                c.precision(),
                c.recall()
            ));
        }
        for (name, f) in [
            ("accuracy", Confusion::accuracy as fn(&Confusion) -> f64),
            ("precision", Confusion::precision),
            ("recall", Confusion::recall),
        ] {
            let (mean, std) = self.mean_std(f);
            out.push_str(&format!("metric {name} mean {mean:.9} stddev {std:.9}\n"));
        }
        out
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the (repeat, fold) round, independent across rounds.
fn round_seed(seed: u64, repeat: usize, fold: usize) -> u64 {
    splitmix64(seed ^ splitmix64((repeat as u64) << 20 | fold as u64))
}

/// Shuffled fold partition for one repeat: disjoint folds covering all
/// indices, sizes differing by at most one.
fn partition(n: usize, k: usize, seed: u64, repeat: usize) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng =
        rand_chacha::ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(repeat as u64 | 1 << 48)));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(idx[at..at + size].to_vec());
        at += size;
    }
    folds
}

/// One train/test round of the protocol. Returns the confusion on the
/// test fold plus the audit of every id the training stage consumed.
fn run_round(
    records: &[AppRecord],
    train_idx: &[usize],
    test_idx: &[usize],
    config: EvalConfig,
    hyper: &Hyper,
    seed: u64,
) -> Result<(Confusion, Vec<String>), PipelineError> {
    let train_recs: Vec<&AppRecord> = train_idx.iter().map(|&i| &records[i]).collect();
    let test_recs: Vec<&AppRecord> = test_idx.iter().map(|&i| &records[i]).collect();
    let mut trained_ids: Vec<String> = Vec::new();

    let probs = match config {
        EvalConfig::Full => {
            let exec = pretrain(Channel::Exec, &train_recs, hyper, splitmix64(seed ^ 1))?;
            let ui = pretrain(Channel::Ui, &train_recs, hyper, splitmix64(seed ^ 2))?;
            trained_ids.extend(exec.trained_ids.iter().cloned());
            trained_ids.extend(ui.trained_ids.iter().cloned());

            let train_exec_feats = extract_features(&exec.model, &train_recs, Channel::Exec)?;
            let train_ui_feats = extract_features(&ui.model, &train_recs, Channel::Ui)?;
            let labels: Vec<usize> = train_recs.iter().map(|r| r.label.class_index()).collect();
            trained_ids.extend(train_recs.iter().map(|r| r.id.clone()));
            let fusion = train_fusion(
                &train_exec_feats,
                &train_ui_feats,
                &labels,
                hyper,
                splitmix64(seed ^ 3),
            )?;

            let bundle = ModelBundle {
                exec: exec.model,
                ui: ui.model,
                fusion,
            };
            let test_exec = extract_features(&bundle.exec, &test_recs, Channel::Exec)?;
            let test_ui = extract_features(&bundle.ui, &test_recs, Channel::Ui)?;
            let fused = concat_features(&test_exec, &test_ui, &bundle.fusion.spec)?;
            forward(&bundle.fusion.spec, &bundle.fusion.params, &fused, Mode::Infer)?.probs
        }
        EvalConfig::ExecOnly | EvalConfig::UiOnly | EvalConfig::BowDense | EvalConfig::BowConv => {
            let channel = match config {
                EvalConfig::ExecOnly => Channel::Exec,
                EvalConfig::UiOnly => Channel::Ui,
                EvalConfig::BowDense => Channel::BowDense,
                EvalConfig::BowConv => Channel::BowConv,
                EvalConfig::Full => unreachable!(),
            };
            let pre = pretrain(channel, &train_recs, hyper, splitmix64(seed ^ 1))?;
            trained_ids.extend(pre.trained_ids.iter().cloned());
            let built = build_inputs(&test_recs, channel)?;
            forward(&pre.model.spec, &pre.model.params, &built.inputs, Mode::Infer)?.probs
        }
    };

    let mut confusion = Confusion::default();
    for (rec, (pred, _)) in test_recs.iter().zip(collect_predictions(&probs)) {
        confusion.count(rec.label, pred);
    }
    Ok((confusion, trained_ids))
}

/// Repeated k-fold evaluation: each repeat draws a fresh partition from
/// the run seed, every fold serves as the test set once, and rounds run
/// in parallel with per-round derived seeds, so the report is identical
/// regardless of scheduling.
pub fn kfold_evaluate(
    records: &[AppRecord],
    k: usize,
    repeats: usize,
    config: EvalConfig,
    hyper: &Hyper,
    seed: u64,
) -> Result<(EvalReport, Vec<RoundAudit>), PipelineError> {
    if records.len() < k || k < 2 {
        return Err(PipelineError::NotEnoughRecords {
            n: records.len(),
            k,
        });
    }
    let mut jobs = Vec::with_capacity(k * repeats);
    for repeat in 0..repeats {
        let folds = partition(records.len(), k, seed, repeat);
        for fold in 0..k {
            let test_idx = folds[fold].clone();
            let train_idx: Vec<usize> = (0..k)
                .filter(|&f| f != fold)
                .flat_map(|f| folds[f].iter().copied())
                .collect();
            jobs.push((repeat, fold, train_idx, test_idx));
        }
    }

    let outcomes: Result<Vec<(RoundResult, RoundAudit)>, PipelineError> = jobs
        .par_iter()
        .map(|(repeat, fold, train_idx, test_idx)| {
            let (confusion, trained_ids) = run_round(
                records,
                train_idx,
                test_idx,
                config,
                hyper,
                round_seed(seed, *repeat, *fold),
            )?;
            Ok((
                RoundResult {
                    repeat: *repeat,
                    fold: *fold,
                    confusion,
                },
                RoundAudit {
                    repeat: *repeat,
                    fold: *fold,
                    train_ids: train_idx.iter().map(|&i| records[i].id.clone()).collect(),
                    test_ids: test_idx.iter().map(|&i| records[i].id.clone()).collect(),
                    trained_ids,
                },
            ))
        })
        .collect();
    let mut outcomes = outcomes?;
    outcomes.sort_by_key(|(r, _)| (r.repeat, r.fold));
    let (rounds, audits): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok((
        EvalReport {
            config,
            seed,
            k,
            repeats,
            records: records.len(),
            rounds,
        },
        audits,
    ))
}
