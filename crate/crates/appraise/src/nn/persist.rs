//! Versioned structured-text model files. Floats are rendered in Rust's
//! shortest round-trip decimal form, so save/load is bit-exact.

use super::{LayerParams, LayerSpec, ModelParams, ModelSpec, NnError, Tensor, TrainedModel};

const VERSION: &str = "model v1";

pub fn save_model(model: &TrainedModel) -> String {
    let mut out = String::new();
    out.push_str(VERSION);
    out.push('\n');
    out.push_str(&format!("seed {}\n", model.seed));
    out.push_str(&format!("classes {}\n", model.spec.classes));
    out.push_str(&format!("feature_layer {}\n", model.spec.feature_layer));
    out.push_str(&format!("layers {}\n", model.spec.layers.len()));
    for l in &model.spec.layers {
        match *l {
            LayerSpec::Conv {
                in_rows,
                in_cols,
                filters,
                width,
            } => out.push_str(&format!("layer conv {in_rows} {in_cols} {filters} {width}\n")),
            LayerSpec::Dense { in_dim, out_dim } => {
                out.push_str(&format!("layer dense {in_dim} {out_dim}\n"))
            }
            LayerSpec::BatchNorm { dim } => out.push_str(&format!("layer batchnorm {dim}\n")),
            LayerSpec::Tanh { dim } => out.push_str(&format!("layer tanh {dim}\n")),
            LayerSpec::SoftmaxOutput { classes } => {
                out.push_str(&format!("layer softmax {classes}\n"))
            }
        }
    }
    for (i, p) in model.params.layers.iter().enumerate() {
        match p {
            LayerParams::Conv { w, b } | LayerParams::Dense { w, b } => {
                push_values(&mut out, i, "w", w.data());
                push_values(&mut out, i, "b", b);
            }
            LayerParams::BatchNorm {
                gamma,
                beta,
                running_mean,
                running_var,
            } => {
                push_values(&mut out, i, "gamma", gamma);
                push_values(&mut out, i, "beta", beta);
                push_values(&mut out, i, "running_mean", running_mean);
                push_values(&mut out, i, "running_var", running_var);
            }
            LayerParams::None => {}
        }
    }
    push_curve(&mut out, &model.loss_curve);
    out.push_str("end\n");
    out
}

fn push_values(out: &mut String, layer: usize, field: &str, values: &[f64]) {
    out.push_str(&format!("param {layer} {field} {}", values.len()));
    for v in values {
        out.push_str(&format!(" {v}"));
    }
    out.push('\n');
}

fn push_curve(out: &mut String, curve: &[f64]) {
    out.push_str(&format!("loss_curve {}", curve.len()));
    for v in curve {
        out.push_str(&format!(" {v}"));
    }
    out.push('\n');
}

pub fn load_model(text: &str) -> Result<TrainedModel, NnError> {
    let err = |msg: &str| NnError::Persist(msg.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(VERSION) {
        return Err(err("unsupported version line"));
    }
    let seed: u64 = parse_kv(lines.next(), "seed")?;
    let classes: usize = parse_kv(lines.next(), "classes")?;
    let feature_layer: usize = parse_kv(lines.next(), "feature_layer")?;
    let n_layers: usize = parse_kv(lines.next(), "layers")?;

    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let line = lines.next().ok_or_else(|| err("missing layer line"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let usize_at = |i: usize| -> Result<usize, NnError> {
            toks.get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err("bad layer line"))
        };
        if toks.first() != Some(&"layer") {
            return Err(err("expected layer line"));
        }
        let spec = match toks.get(1) {
            Some(&"conv") => LayerSpec::Conv {
                in_rows: usize_at(2)?,
                in_cols: usize_at(3)?,
                filters: usize_at(4)?,
                width: usize_at(5)?,
            },
            Some(&"dense") => LayerSpec::Dense {
                in_dim: usize_at(2)?,
                out_dim: usize_at(3)?,
            },
            Some(&"batchnorm") => LayerSpec::BatchNorm { dim: usize_at(2)? },
            Some(&"tanh") => LayerSpec::Tanh { dim: usize_at(2)? },
            Some(&"softmax") => LayerSpec::SoftmaxOutput {
                classes: usize_at(2)?,
            },
            _ => return Err(err("unknown layer kind")),
        };
        layers.push(spec);
    }
    let spec = ModelSpec {
        layers,
        feature_layer,
        classes,
    };
    spec.validate()?;

    // Empty parameter skeleton with correct shapes, filled from param lines.
    let mut params = ModelParams {
        layers: spec
            .layers
            .iter()
            .map(|l| match *l {
                LayerSpec::Conv {
                    in_rows,
                    filters,
                    width,
                    ..
                } => LayerParams::Conv {
                    w: Tensor::zeros(&[filters, in_rows, width]),
                    b: vec![0.0; filters],
                },
                LayerSpec::Dense { in_dim, out_dim } => LayerParams::Dense {
                    w: Tensor::zeros(&[in_dim, out_dim]),
                    b: vec![0.0; out_dim],
                },
                LayerSpec::BatchNorm { dim } => LayerParams::BatchNorm {
                    gamma: vec![0.0; dim],
                    beta: vec![0.0; dim],
                    running_mean: vec![0.0; dim],
                    running_var: vec![0.0; dim],
                },
                _ => LayerParams::None,
            })
            .collect(),
    };

    let mut loss_curve = Vec::new();
    let mut saw_end = false;
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first() {
            Some(&"param") => {
                let li: usize = toks
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("bad param layer index"))?;
                let field = *toks.get(2).ok_or_else(|| err("missing param field"))?;
                let count: usize = toks
                    .get(3)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("bad param count"))?;
                if toks.len() != 4 + count {
                    return Err(err("param value count mismatch"));
                }
                let values: Vec<f64> = toks[4..]
                    .iter()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("bad float"))?;
                let p = params
                    .layers
                    .get_mut(li)
                    .ok_or_else(|| err("param layer out of range"))?;
                let dst: &mut [f64] = match (p, field) {
                    (LayerParams::Conv { w, .. }, "w") | (LayerParams::Dense { w, .. }, "w") => {
                        w.data_mut()
                    }
                    (LayerParams::Conv { b, .. }, "b") | (LayerParams::Dense { b, .. }, "b") => b,
                    (LayerParams::BatchNorm { gamma, .. }, "gamma") => gamma,
                    (LayerParams::BatchNorm { beta, .. }, "beta") => beta,
                    (LayerParams::BatchNorm { running_mean, .. }, "running_mean") => running_mean,
                    (LayerParams::BatchNorm { running_var, .. }, "running_var") => running_var,
                    _ => return Err(err("param field does not match layer")),
                };
                if dst.len() != values.len() {
                    return Err(err("param length does not match layer shape"));
                }
                dst.copy_from_slice(&values);
            }
            Some(&"loss_curve") => {
                let count: usize = toks
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("bad loss_curve count"))?;
                if toks.len() != 2 + count {
                    return Err(err("loss_curve count mismatch"));
                }
                loss_curve = toks[2..]
                    .iter()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("bad float"))?;
            }
            Some(&"end") => {
                saw_end = true;
                break;
            }
            Some(_) => return Err(err("unexpected line")),
            None => {}
        }
    }
    if !saw_end {
        return Err(err("truncated file (missing end)"));
    }
    Ok(TrainedModel {
        spec,
        params,
        seed,
        loss_curve,
    })
}

fn parse_kv<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<T, NnError> {
    let line = line.ok_or_else(|| NnError::Persist(format!("missing {key}")))?;
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| NnError::Persist(format!("expected `{key} ...`")))?;
    rest.trim()
        .parse()
        .map_err(|_| NnError::Persist(format!("bad {key} value")))
}
