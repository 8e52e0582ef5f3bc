//! Semantic vectors: per-instruction-type `(frequency, average loop depth,
//! average branch count)` triples summarizing an executable, built per
//! method and propagated over the call graph callees-first.
//!
//! Summaries are kept in an un-averaged accumulator form `(f, Σdepth,
//! Σbranch)` with integer sums. Folding a callee summary into a call site
//! at depth `d` and branch count `c` adds `d·f + Σdepth` — integer
//! arithmetic, so interprocedural propagation is exact and agrees with
//! full call-site inlining to the last bit. The averaged form divides the
//! sums by `f` only when a vector leaves the analysis.

use crate::callgraph::CallGraph;
use crate::cfg::{analyze_method, CfgError, MethodAnalysis};
use crate::ir::{InstrKind, Method, Program, TypeId, Vocabulary};

/// Accumulator form: one `(f, Σdepth, Σbranch)` triple per instruction type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticAcc {
    slots: Vec<AccSlot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AccSlot {
    pub f: u64,
    pub sum_depth: u64,
    pub sum_branch: u64,
}

/// Averaged form: `(f, l, b)` with `l = Σdepth/f` and `b = Σbranch/f`;
/// slots with `f == 0` are exactly `(0, 0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticVector {
    slots: Vec<VecSlot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VecSlot {
    pub f: u64,
    pub l: f64,
    pub b: f64,
}

impl SemanticAcc {
    pub fn zero(n_types: usize) -> SemanticAcc {
        SemanticAcc {
            slots: vec![AccSlot::default(); n_types],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, id: TypeId) -> AccSlot {
        self.slots[id.slot()]
    }

    pub fn slots(&self) -> &[AccSlot] {
        &self.slots
    }

    /// Records one instruction instance of type `id`.
    pub fn record(&mut self, id: TypeId, depth: u32, branches: u32) {
        let s = &mut self.slots[id.slot()];
        s.f += 1;
        s.sum_depth += depth as u64;
        s.sum_branch += branches as u64;
    }

    /// Adds another accumulator slot-wise (used to merge entry points).
    pub fn merge(&mut self, other: &SemanticAcc) {
        assert_eq!(self.slots.len(), other.slots.len(), "type count mismatch");
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            a.f += b.f;
            a.sum_depth += b.sum_depth;
            a.sum_branch += b.sum_branch;
        }
    }

    /// Averaged view; total instances stay recoverable via `f`.
    pub fn averaged(&self) -> SemanticVector {
        SemanticVector {
            slots: self
                .slots
                .iter()
                .map(|s| {
                    if s.f == 0 {
                        VecSlot::default()
                    } else {
                        VecSlot {
                            f: s.f,
                            l: s.sum_depth as f64 / s.f as f64,
                            b: s.sum_branch as f64 / s.f as f64,
                        }
                    }
                })
                .collect(),
        }
    }

    /// Total recorded instruction instances.
    pub fn total_instances(&self) -> u64 {
        self.slots.iter().map(|s| s.f).sum()
    }
}

impl SemanticVector {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, id: TypeId) -> VecSlot {
        self.slots[id.slot()]
    }

    pub fn slots(&self) -> &[VecSlot] {
        &self.slots
    }
}

/// Folds a callee summary into `v` at a call site sitting at loop depth
/// `depth` with branch count `branches`: every callee instance lands at
/// its own depth shifted by the call site's, so the sums grow by
/// `depth·f + Σdepth` (and likewise for branches).
pub fn apply_summary(v: &mut SemanticAcc, depth: u32, branches: u32, callee: &SemanticAcc) {
    assert_eq!(v.slots.len(), callee.slots.len(), "type count mismatch");
    for (a, c) in v.slots.iter_mut().zip(&callee.slots) {
        if c.f == 0 {
            continue;
        }
        a.f += c.f;
        a.sum_depth += depth as u64 * c.f + c.sum_depth;
        a.sum_branch += branches as u64 * c.f + c.sum_branch;
    }
}

/// How a call target resolves while accumulating one method.
enum CallKind<'a> {
    /// Counted as a plain instruction of this type.
    Api(TypeId),
    /// Callee summary folded in at the call site.
    Summary(&'a SemanticAcc),
}

/// Core of the per-method accumulation: walks live instructions, counting
/// plain and conditional instructions under their type and dispatching
/// calls through `resolve`. Unconditional jumps, labels, and returns do
/// not count.
fn accumulate_method<'a>(
    m: &Method,
    vocab: &Vocabulary,
    analysis: &MethodAnalysis,
    mut resolve: impl FnMut(&str) -> CallKind<'a>,
) -> SemanticAcc {
    let mut acc = SemanticAcc::zero(vocab.len());
    for ins in &m.instructions {
        if !analysis.instr_live(ins.index) {
            continue;
        }
        let depth = analysis.loop_depth[ins.index];
        let branches = analysis.branch_count[ins.index];
        match &ins.kind {
            InstrKind::Plain(t) => acc.record(*t, depth, branches),
            InstrKind::CondJump { type_id, .. } => acc.record(*type_id, depth, branches),
            InstrKind::Call { callee } => match resolve(callee) {
                CallKind::Api(t) => acc.record(t, depth, branches),
                CallKind::Summary(s) => apply_summary(&mut acc, depth, branches, s),
            },
            InstrKind::Jump { .. } | InstrKind::Ret => {}
        }
    }
    acc
}

/// Intra-procedural semantic vector of one method. Every call is counted
/// as a plain instruction under its vocabulary type (or the unknown-API
/// type); use [`inter_vector`] when callees have summaries.
pub fn intra_vector(m: &Method, vocab: &Vocabulary, analysis: &MethodAnalysis) -> SemanticAcc {
    accumulate_method(m, vocab, analysis, |callee| {
        CallKind::Api(vocab.id(callee).unwrap_or_else(|| vocab.unknown_api()))
    })
}

/// Result of the interprocedural pass.
#[derive(Debug, Clone)]
pub struct InterVectors {
    /// Per-method summaries, indexed like `Program::methods`.
    pub summaries: Vec<SemanticAcc>,
    /// Accumulated app vector (sum over entry-point summaries).
    pub app_acc: SemanticAcc,
    /// Averaged app vector.
    pub app: SemanticVector,
}

/// Builds every method summary callees-first along the call graph's SCC
/// order, then merges the entry points' summaries into the app vector.
///
/// Call sites resolve as: defined method in an earlier SCC -> its summary;
/// defined method in the same SCC (recursion) -> the reserved
/// recursive-call type; vocabulary name -> that type; anything else -> the
/// unknown-API type.
pub fn inter_vector(
    p: &Program,
    cg: &CallGraph,
    vocab: &Vocabulary,
) -> Result<InterVectors, CfgError> {
    let mut summaries: Vec<Option<SemanticAcc>> = vec![None; p.methods().len()];
    for comp in cg.scc_order() {
        for &mi in comp {
            let m = &p.methods()[mi];
            let analysis = analyze_method(m)?;
            let acc = accumulate_method(m, vocab, &analysis, |callee| {
                match p.method_index(callee) {
                    Some(ci) if cg.same_scc(mi, ci) => CallKind::Api(vocab.recursive_call()),
                    Some(ci) => CallKind::Summary(
                        summaries[ci]
                            .as_ref()
                            .expect("callee summary missing despite earlier SCC position"),
                    ),
                    None => CallKind::Api(
                        vocab.id(callee).unwrap_or_else(|| vocab.unknown_api()),
                    ),
                }
            });
            summaries[mi] = Some(acc);
        }
    }
    let summaries: Vec<SemanticAcc> = summaries.into_iter().map(Option::unwrap).collect();

    let mut app_acc = SemanticAcc::zero(vocab.len());
    let mut seen = vec![false; p.methods().len()];
    for name in p.entry_points() {
        let mi = p.method_index(name).expect("entry points are validated");
        if !seen[mi] {
            seen[mi] = true;
            app_acc.merge(&summaries[mi]);
        }
    }
    let app = app_acc.averaged();
    Ok(InterVectors {
        summaries,
        app_acc,
        app,
    })
}
