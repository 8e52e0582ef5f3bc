//! Brute-force oracles: the semantic vector by full textual inlining of
//! every internal call into each entry point, and the layout vector by
//! full reference expansion. Both recount from scratch on the flattened
//! artifact, independently of the summary-propagation path they check.

use std::collections::HashMap;

use thiserror::Error;

use crate::callgraph::build_call_graph;
use crate::cfg::{analyze_method, CfgError};
use crate::ir::{InstrKind, IrError, Method, Program, Vocabulary};
use crate::layout::{doc_vector_no_refs, LayoutAcc, LayoutDoc, LayoutError, LayoutNode, UiVocabulary};
use crate::semvec::{intra_vector, SemanticAcc};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("program is recursive (SCC containing `{method}`); the inlining oracle refuses it")]
    Recursive { method: String },
    #[error("inlined method exceeds {limit} instructions; refusing to expand further")]
    TooLarge { limit: usize },
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

const INLINE_LIMIT: usize = 2_000_000;

/// Semantic vector by inlining: expands every internal call site into a
/// single flat method per entry point, runs the intra-procedural analysis
/// on it, and merges the entry points. Exact integer accumulators, so the
/// result is comparable slot-for-slot with the summary-based pass.
pub fn oracle_semantic_vector(
    p: &Program,
    vocab: &Vocabulary,
) -> Result<SemanticAcc, OracleError> {
    let cg = build_call_graph(p);
    // Any SCC with an internal edge means recursion.
    for comp in cg.scc_order() {
        if comp.len() > 1 {
            return Err(OracleError::Recursive {
                method: cg.name(comp[0]).to_string(),
            });
        }
        let m = comp[0];
        if cg.callees(m).any(|c| c == m) {
            return Err(OracleError::Recursive {
                method: cg.name(m).to_string(),
            });
        }
    }

    // Fully inlined bodies, callees first; internal calls disappear.
    let mut flat: Vec<Option<Vec<InstrKind>>> = vec![None; p.methods().len()];
    for comp in cg.scc_order() {
        let mi = comp[0];
        let body = inline_one(&p.methods()[mi], p, &flat)?;
        flat[mi] = Some(body);
    }

    let mut app = SemanticAcc::zero(vocab.len());
    let mut seen = vec![false; p.methods().len()];
    for name in p.entry_points() {
        let mi = p.method_index(name).expect("entry points are validated");
        if seen[mi] {
            continue;
        }
        seen[mi] = true;
        let kinds = flat[mi].clone().expect("all methods inlined");
        let method = Method::new(format!("<inlined {name}>"), kinds);
        let analysis = analyze_method(&method)?;
        app.merge(&intra_vector(&method, vocab, &analysis));
    }
    Ok(app)
}

/// Splices the (already flattened) bodies of internal callees into `m`.
///
/// Every internal call expands to an uncounted pass-through `jump`
/// followed by the callee body. The placeholder keeps the call site's own
/// node in the graph, so a caller loop headed at the call site and a
/// callee loop headed at the callee's entry stay distinct loops instead of
/// merging — the nesting the summary arithmetic assumes. A callee `ret`
/// becomes a jump to the instruction after the call site, or stays a
/// `ret` when the call site was the method's last instruction.
fn inline_one(
    m: &Method,
    p: &Program,
    flat: &[Option<Vec<InstrKind>>],
) -> Result<Vec<InstrKind>, OracleError> {
    let n = m.instructions.len();
    // New index of each original instruction.
    let mut start_new = Vec::with_capacity(n + 1);
    let mut len = 0usize;
    for ins in &m.instructions {
        start_new.push(len);
        len += match &ins.kind {
            InstrKind::Call { callee } => match p.method_index(callee) {
                Some(ci) => 1 + flat[ci].as_ref().expect("callees inlined first").len(),
                None => 1,
            },
            _ => 1,
        };
        if len > INLINE_LIMIT {
            return Err(OracleError::TooLarge {
                limit: INLINE_LIMIT,
            });
        }
    }
    start_new.push(len);

    let mut out = Vec::with_capacity(len);
    for (i, ins) in m.instructions.iter().enumerate() {
        match &ins.kind {
            InstrKind::Plain(t) => out.push(InstrKind::Plain(*t)),
            InstrKind::Ret => out.push(InstrKind::Ret),
            InstrKind::Jump { target } => out.push(InstrKind::Jump {
                target: start_new[*target],
            }),
            InstrKind::CondJump { type_id, target } => out.push(InstrKind::CondJump {
                type_id: *type_id,
                target: start_new[*target],
            }),
            InstrKind::Call { callee } => match p.method_index(callee) {
                None => out.push(InstrKind::Call {
                    callee: callee.clone(),
                }),
                Some(ci) => {
                    let body = flat[ci].as_ref().unwrap();
                    let cont = if i + 1 < n { Some(start_new[i + 1]) } else { None };
                    // The call-site placeholder: falls into the body, or
                    // acts as the whole call when the callee is empty.
                    if body.is_empty() {
                        out.push(match cont {
                            Some(c) => InstrKind::Jump { target: c },
                            None => InstrKind::Ret,
                        });
                        continue;
                    }
                    out.push(InstrKind::Jump {
                        target: start_new[i] + 1,
                    });
                    let offset = start_new[i] + 1;
                    for b in body {
                        out.push(match b {
                            InstrKind::Plain(t) => InstrKind::Plain(*t),
                            InstrKind::Call { callee } => InstrKind::Call {
                                callee: callee.clone(),
                            },
                            InstrKind::Jump { target } => InstrKind::Jump {
                                target: target + offset,
                            },
                            InstrKind::CondJump { type_id, target } => InstrKind::CondJump {
                                type_id: *type_id,
                                target: target + offset,
                            },
                            InstrKind::Ret => match cont {
                                Some(c) => InstrKind::Jump { target: c },
                                None => InstrKind::Ret,
                            },
                        });
                    }
                }
            },
        }
    }
    debug_assert_eq!(out.len(), len);
    Ok(out)
}

/// Layout vector by expansion: substitutes every reference by a clone of
/// the target document's tree, then recounts the root documents directly.
pub fn oracle_layout_vector(
    docs: &[LayoutDoc],
    vocab: &UiVocabulary,
) -> Result<LayoutAcc, OracleError> {
    let index: HashMap<&str, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.name.as_str(), i))
        .collect();

    fn expand(
        node: &LayoutNode,
        docs: &[LayoutDoc],
        index: &HashMap<&str, usize>,
        active: &mut Vec<usize>,
    ) -> Result<LayoutNode, OracleError> {
        match node {
            LayoutNode::Element { tag, children } => Ok(LayoutNode::Element {
                tag: tag.clone(),
                children: children
                    .iter()
                    .map(|c| expand(c, docs, index, active))
                    .collect::<Result<_, _>>()?,
            }),
            LayoutNode::Reference { target } => {
                let &j = index.get(target.as_str()).ok_or_else(|| {
                    OracleError::Layout(LayoutError::UnresolvedRef {
                        doc: "<expansion>".into(),
                        target: target.clone(),
                    })
                })?;
                if active.contains(&j) {
                    return Err(OracleError::Layout(LayoutError::ReferenceCycle {
                        doc: docs[j].name.clone(),
                    }));
                }
                active.push(j);
                let expanded = expand(&docs[j].root, docs, index, active)?;
                active.pop();
                Ok(expanded)
            }
        }
    }

    let mut referenced = vec![false; docs.len()];
    for doc in docs {
        collect(&doc.root, &mut |t| {
            if let Some(&j) = index.get(t) {
                referenced[j] = true;
            }
        });
    }

    let mut app = LayoutAcc::zero(vocab.slot_count());
    for (i, doc) in docs.iter().enumerate() {
        if referenced[i] {
            continue;
        }
        let mut active = vec![i];
        let root = expand(&doc.root, docs, &index, &mut active)?;
        let flat = LayoutDoc {
            name: doc.name.clone(),
            root,
        };
        app.merge(&doc_vector_no_refs(&flat, vocab)?);
    }
    Ok(app)
}

fn collect(node: &LayoutNode, f: &mut impl FnMut(&str)) {
    match node {
        LayoutNode::Element { children, .. } => {
            for c in children {
                collect(c, f);
            }
        }
        LayoutNode::Reference { target } => f(target),
    }
}
