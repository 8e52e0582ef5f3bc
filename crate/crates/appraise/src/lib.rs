//! Static prediction of app store ratings from code and UI structure alone.
//!
//! The library ingests an app bundle (a textual executable IR plus layout
//! markup), summarizes the executable as per-instruction-type
//! `(frequency, loop depth, branch count)` triples and the UI as
//! per-element-type `(count, tree depth)` pairs, pre-trains one small
//! convolutional network per channel, and fuses both 50-dimensional
//! features in a dense classifier. A seeded synthetic-corpus generator and
//! brute-force analysis oracles back the whole pipeline with exact checks.
//!
//! Every stage is deterministic under a fixed seed: corpus generation,
//! training, evaluation, and every serialized artifact.
//!
//! Start with the runnable examples, one per capability:
//!
//! ```text
//! cargo run --release --example semantic_vector    # executable summary on a worked program
//! cargo run --release --example layout_vector      # UI summary with legacy/custom buckets
//! cargo run --release --example cfg_analysis       # dominators, loops, branch regions
//! cargo run --release --example call_graph_summaries  # interprocedural propagation
//! cargo run --release --example gradient_check     # backprop vs finite differences
//! cargo run --release --example generate_corpus    # seeded corpus with planted signal
//! cargo run --release --example train_models       # pre-train + fusion end to end
//! cargo run --release --example evaluate_kfold     # repeated k-fold with metrics
//! cargo run --release --example predict_app        # classify one bundle
//! ```
//!
//! The thin `appraise` binary exposes the same operations as subcommands
//! (`analyze`, `gen-corpus`, `pretrain-exec`, `pretrain-ui`, `train-fusion`,
//! `predict`, `evaluate`, `oracle-check`).

pub mod callgraph;
pub mod cfg;
pub mod corpus;
pub mod ir;
pub mod layout;
pub mod nn;
pub mod oracle;
pub mod pipeline;
pub mod records;
pub mod semvec;

#[cfg(test)]
pub(crate) mod testutil;
