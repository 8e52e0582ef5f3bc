//! Call graph over a program's methods with strongly connected components
//! in reverse topological order, so interprocedural passes can process
//! callees before callers.

use std::collections::BTreeSet;

use crate::ir::{InstrKind, Program};

/// Direct-call graph. Edges exist only for callees defined in the program;
/// calls to anything else are API calls, not graph edges.
#[derive(Debug, Clone)]
pub struct CallGraph {
    names: Vec<String>,
    edges: Vec<BTreeSet<usize>>,
    /// SCCs in reverse topological order of the condensation: every callee
    /// of a component member outside the component sits at an earlier
    /// position. Members are sorted by method index.
    scc_order: Vec<Vec<usize>>,
    /// Method index -> position of its SCC in `scc_order`.
    scc_of: Vec<usize>,
}

pub fn build_call_graph(p: &Program) -> CallGraph {
    let n = p.methods().len();
    let mut edges = vec![BTreeSet::new(); n];
    for (i, m) in p.methods().iter().enumerate() {
        for ins in &m.instructions {
            if let InstrKind::Call { callee } = &ins.kind {
                if let Some(j) = p.method_index(callee) {
                    edges[i].insert(j);
                }
            }
        }
    }
    let mut scc_order = tarjan(&edges);
    for comp in &mut scc_order {
        comp.sort_unstable();
    }
    let mut scc_of = vec![0; n];
    for (pos, comp) in scc_order.iter().enumerate() {
        for &m in comp {
            scc_of[m] = pos;
        }
    }
    CallGraph {
        names: p.methods().iter().map(|m| m.name.clone()).collect(),
        edges,
        scc_order,
        scc_of,
    }
}

impl CallGraph {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn callees(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[idx].iter().copied()
    }

    pub fn scc_order(&self) -> &[Vec<usize>] {
        &self.scc_order
    }

    /// Position of the method's SCC within [`CallGraph::scc_order`].
    pub fn scc_position(&self, method_idx: usize) -> usize {
        self.scc_of[method_idx]
    }

    pub fn same_scc(&self, a: usize, b: usize) -> bool {
        self.scc_of[a] == self.scc_of[b]
    }
}

/// Iterative Tarjan; components come out with callees before callers,
/// which is exactly the reverse topological order of the condensation.
fn tarjan(edges: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    let n = edges.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0usize;

    // Explicit DFS frames: (node, iterator position over its callees).
    let mut frames: Vec<(usize, std::collections::btree_set::Iter<usize>)> = Vec::new();

    for start in 0..n {
        if index[start] != usize::MAX {
            continue;
        }
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;
        frames.push((start, edges[start].iter()));

        while !frames.is_empty() {
            let (v, next) = {
                let (v, it) = frames.last_mut().unwrap();
                (*v, it.next().copied())
            };
            match next {
                Some(w) if index[w] == usize::MAX => {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, edges[w].iter()));
                }
                Some(w) => {
                    if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                }
                None => {
                    frames.pop();
                    if let Some(last) = frames.last() {
                        let parent = last.0;
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack underflow");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comps.push(comp);
                    }
                }
            }
        }
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, Vocabulary};

    fn graph(src: &str) -> (Program, CallGraph) {
        let v = Vocabulary::load("add\n").unwrap();
        let p = parse_program(src, &v).unwrap();
        let cg = build_call_graph(&p);
        (p, cg)
    }

    #[test]
    fn chain_reverse_topological() {
        let (p, cg) = graph(
            "method a {\n call b\n ret\n}\nmethod b {\n call c\n ret\n}\nmethod c {\n ret\n}\n",
        );
        let order: Vec<Vec<&str>> = cg
            .scc_order()
            .iter()
            .map(|c| c.iter().map(|&i| p.methods()[i].name.as_str()).collect())
            .collect();
        assert_eq!(order, vec![vec!["c"], vec!["b"], vec!["a"]]);
    }

    #[test]
    fn mutual_recursion_one_scc() {
        let (_, cg) = graph(
            "entry a\nmethod a {\n call b\n ret\n}\nmethod b {\n call a\n ret\n}\n",
        );
        assert_eq!(cg.scc_order().len(), 1);
        assert_eq!(cg.scc_order()[0], vec![0, 1]);
    }

    #[test]
    fn calls_to_absent_methods_are_not_edges() {
        let (_, cg) = graph("method a {\n call api.net.open\n ret\n}\n");
        assert_eq!(cg.callees(0).count(), 0);
    }

    #[test]
    fn cross_scc_edges_point_to_earlier_positions() {
        // 50-method random-ish DAG built deterministically: i calls some j > i.
        let mut src = String::from("entry m0\n");
        for i in 0..50u64 {
            src.push_str(&format!("method m{i} {{\n"));
            let mut state = i.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            for _ in 0..3 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let j = i + 1 + (state >> 33) % 49;
                if j < 50 {
                    src.push_str(&format!(" call m{j}\n"));
                }
            }
            src.push_str(" ret\n}\n");
        }
        let (_, cg) = graph(&src);
        for u in 0..cg.len() {
            for v in cg.callees(u) {
                if !cg.same_scc(u, v) {
                    assert!(cg.scc_position(v) < cg.scc_position(u));
                }
            }
        }
        // Independent acyclicity check of the condensation by DFS.
        let ncomp = cg.scc_order().len();
        let mut cond = vec![BTreeSet::new(); ncomp];
        for u in 0..cg.len() {
            for v in cg.callees(u) {
                let (cu, cv) = (cg.scc_position(u), cg.scc_position(v));
                if cu != cv {
                    cond[cu].insert(cv);
                }
            }
        }
        assert!(!has_cycle(&cond));
    }

    fn has_cycle(adj: &[BTreeSet<usize>]) -> bool {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        fn visit(u: usize, adj: &[BTreeSet<usize>], marks: &mut [Mark]) -> bool {
            marks[u] = Mark::Grey;
            for &v in &adj[u] {
                match marks[v] {
                    Mark::Grey => return true,
                    Mark::White => {
                        if visit(v, adj, marks) {
                            return true;
                        }
                    }
                    Mark::Black => {}
                }
            }
            marks[u] = Mark::Black;
            false
        }
        let mut marks = vec![Mark::White; adj.len()];
        (0..adj.len()).any(|u| marks[u] == Mark::White && visit(u, adj, &mut marks))
    }
}
