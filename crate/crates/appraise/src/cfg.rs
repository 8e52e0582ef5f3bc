//! Per-method control-flow analyses on an instruction-level CFG: dominators,
//! post-dominators, back edges, natural-loop nesting depth, and branch
//! regions with per-instruction branch counts.
//!
//! The CFG has virtual ENTRY and EXIT nodes. Post-dominators and branch
//! regions are computed on the back-edge-removed graph, with every node
//! left successor-less by the removal given an edge to EXIT so EXIT
//! post-dominates everything.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ir::{InstrKind, Method};

#[derive(Debug, Error)]
pub enum CfgError {
    #[error("method `{method}`: irreducible control flow (cycle survives back-edge removal through instruction {node})")]
    Irreducible { method: String, node: usize },
}

/// Instruction-level CFG. Node ids: `ENTRY` is 0, instruction `i` is
/// `i + 1`, EXIT is `len + 1`. Unreachable instructions keep their node id
/// but are stripped of edges and excluded from every analysis.
#[derive(Debug, Clone)]
pub struct Cfg {
    succs: Vec<Vec<usize>>,
    preds: Vec<Vec<usize>>,
    n_instrs: usize,
    reachable: Vec<bool>,
    warnings: Vec<String>,
}

pub const ENTRY: usize = 0;

impl Cfg {
    pub fn exit(&self) -> usize {
        self.n_instrs + 1
    }

    pub fn node_count(&self) -> usize {
        self.n_instrs + 2
    }

    pub fn instr_count(&self) -> usize {
        self.n_instrs
    }

    /// Node id of instruction `i`.
    pub fn node_of(i: usize) -> usize {
        i + 1
    }

    /// Instruction index of a node, if it is an instruction node.
    pub fn instr_of(&self, node: usize) -> Option<usize> {
        if node >= 1 && node <= self.n_instrs {
            Some(node - 1)
        } else {
            None
        }
    }

    pub fn succs(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    pub fn preds(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    pub fn is_reachable(&self, node: usize) -> bool {
        self.reachable[node]
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn from_succs(succs: Vec<Vec<usize>>, n_instrs: usize, warnings: Vec<String>) -> Cfg {
        let mut preds = vec![Vec::new(); succs.len()];
        for (u, ss) in succs.iter().enumerate() {
            for &v in ss {
                preds[v].push(u);
            }
        }
        let mut cfg = Cfg {
            succs,
            preds,
            n_instrs,
            reachable: Vec::new(),
            warnings,
        };
        cfg.apply_reachability();
        cfg
    }

    /// Marks nodes reachable from ENTRY and drops edges of the rest.
    fn apply_reachability(&mut self) {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![ENTRY];
        seen[ENTRY] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.succs[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        for node in 1..n - 1 {
            if !seen[node] {
                self.warnings
                    .push(format!("instruction {} unreachable, dropped", node - 1));
                self.succs[node].clear();
            }
        }
        // EXIT stays a node even when nothing reaches it (infinite loop).
        let mut preds = vec![Vec::new(); n];
        for (u, ss) in self.succs.iter().enumerate() {
            if seen[u] {
                for &v in ss {
                    preds[v].push(u);
                }
            }
        }
        self.preds = preds;
        self.reachable = seen;
    }

    /// Line-oriented debug rendering: one `node: succ succ ...` line each.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let name = |n: usize| -> String {
            if n == ENTRY {
                "ENTRY".to_string()
            } else if n == self.exit() {
                "EXIT".to_string()
            } else {
                (n - 1).to_string()
            }
        };
        for u in 0..self.node_count() {
            if !self.reachable[u] {
                continue;
            }
            out.push_str(&name(u));
            out.push(':');
            for &v in &self.succs[u] {
                out.push(' ');
                out.push_str(&name(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the CFG of a method. Successor rules: plain/call fall through,
/// `ret` goes to EXIT, a trailing non-jump instruction falls to EXIT,
/// ENTRY goes to the first instruction (EXIT when the method is empty).
pub fn build_cfg(m: &Method) -> Cfg {
    let n = m.instructions.len();
    let exit = n + 1;
    let mut succs = vec![Vec::new(); n + 2];
    succs[ENTRY].push(if n == 0 { exit } else { Cfg::node_of(0) });
    for ins in &m.instructions {
        let i = ins.index;
        let node = Cfg::node_of(i);
        let next = if i + 1 < n { Cfg::node_of(i + 1) } else { exit };
        match &ins.kind {
            InstrKind::Plain(_) | InstrKind::Call { .. } => succs[node].push(next),
            InstrKind::CondJump { target, .. } => {
                succs[node].push(Cfg::node_of(*target));
                succs[node].push(next);
            }
            InstrKind::Jump { target } => succs[node].push(Cfg::node_of(*target)),
            InstrKind::Ret => succs[node].push(exit),
        }
    }
    Cfg::from_succs(succs, n, Vec::new())
}

/// Immediate-dominator map. `idom[root] == root`; nodes unreachable from
/// the root have no entry.
#[derive(Debug, Clone)]
pub struct DomTree {
    idom: Vec<Option<usize>>,
    root: usize,
}

impl DomTree {
    pub fn idom(&self, node: usize) -> Option<usize> {
        if node == self.root {
            None
        } else {
            self.idom[node]
        }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn is_computed(&self, node: usize) -> bool {
        self.idom[node].is_some()
    }

    /// Whether `a` dominates `b` (reflexively) under this tree.
    pub fn dominates(&self, a: usize, b: usize) -> bool {
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.idom[cur] {
                Some(p) if p != cur => cur = p,
                _ => return cur == a,
            }
        }
    }
}

/// Cooper–Harvey–Kennedy iterative dominators. `preds`/`succs` are the
/// adjacency of the graph being dominated; passing them swapped with the
/// EXIT root yields post-dominators.
fn dominators_over(n_nodes: usize, root: usize, preds: &[Vec<usize>], succs: &[Vec<usize>]) -> DomTree {
    // Reverse postorder from the root.
    let mut rpo = Vec::with_capacity(n_nodes);
    let mut seen = vec![false; n_nodes];
    let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
    seen[root] = true;
    while !stack.is_empty() {
        let (u, next) = {
            let (u, ei) = stack.last_mut().unwrap();
            let u = *u;
            if *ei < succs[u].len() {
                let v = succs[u][*ei];
                *ei += 1;
                (u, Some(v))
            } else {
                (u, None)
            }
        };
        match next {
            Some(v) => {
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            }
            None => {
                stack.pop();
                rpo.push(u);
            }
        }
    }
    rpo.reverse();
    let mut rpo_num = vec![usize::MAX; n_nodes];
    for (i, &u) in rpo.iter().enumerate() {
        rpo_num[u] = i;
    }

    let mut idom: Vec<Option<usize>> = vec![None; n_nodes];
    idom[root] = Some(root);
    let intersect = |idom: &[Option<usize>], a: usize, b: usize| -> usize {
        let (mut x, mut y) = (a, b);
        while x != y {
            while rpo_num[x] > rpo_num[y] {
                x = idom[x].unwrap();
            }
            while rpo_num[y] > rpo_num[x] {
                y = idom[y].unwrap();
            }
        }
        x
    };

    let mut changed = true;
    while changed {
        changed = false;
        for &u in rpo.iter().skip(1) {
            let mut new_idom = None;
            for &p in &preds[u] {
                if rpo_num[p] == usize::MAX || idom[p].is_none() {
                    continue;
                }
                new_idom = Some(match new_idom {
                    None => p,
                    Some(cur) => intersect(&idom, cur, p),
                });
            }
            if new_idom.is_some() && idom[u] != new_idom {
                idom[u] = new_idom;
                changed = true;
            }
        }
    }
    DomTree { idom, root }
}

/// Dominators of a CFG rooted at ENTRY.
pub fn dominators(g: &Cfg) -> DomTree {
    dominators_over(g.node_count(), ENTRY, &g.preds, &g.succs)
}

/// Post-dominators: dominators of the reversed graph rooted at EXIT.
/// Expects the back-edge-removed, EXIT-augmented graph (see
/// [`remove_back_edges`]); on that graph every reachable node reaches EXIT.
pub fn post_dominators(g: &Cfg) -> DomTree {
    dominators_over(g.node_count(), g.exit(), &g.succs, &g.preds)
}

/// Edges `(u, v)` whose target `v` dominates their source `u`.
pub fn back_edges(g: &Cfg, dom: &DomTree) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for u in 0..g.node_count() {
        if !g.is_reachable(u) || !dom.is_computed(u) {
            continue;
        }
        for &v in g.succs(u) {
            if dom.is_computed(v) && dom.dominates(v, u) {
                out.insert((u, v));
            }
        }
    }
    out
}

/// Removes the given back edges, then gives every node stripped of all its
/// successors an edge to EXIT so post-dominance stays rooted.
///
/// Fails when a cycle survives: by the dominance definition of back edges
/// that means the control flow is irreducible.
pub fn remove_back_edges(
    g: &Cfg,
    backedges: &BTreeSet<(usize, usize)>,
    method_name: &str,
) -> Result<Cfg, CfgError> {
    let n = g.node_count();
    let exit = g.exit();
    let mut succs = vec![Vec::new(); n];
    for u in 0..n {
        if !g.is_reachable(u) {
            continue;
        }
        for &v in g.succs(u) {
            if !backedges.contains(&(u, v)) {
                succs[u].push(v);
            }
        }
        if u != exit && succs[u].is_empty() {
            succs[u].push(exit);
        }
    }
    if let Some(node) = find_cycle(&succs, g) {
        return Err(CfgError::Irreducible {
            method: method_name.to_string(),
            node: node.saturating_sub(1),
        });
    }
    Ok(Cfg::from_succs(succs, g.instr_count(), g.warnings().to_vec()))
}

/// Returns a node on a cycle, if any (iterative three-color DFS).
fn find_cycle(succs: &[Vec<usize>], g: &Cfg) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let n = succs.len();
    let mut marks = vec![Mark::White; n];
    for start in 0..n {
        if marks[start] != Mark::White || !g.is_reachable(start) {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        marks[start] = Mark::Grey;
        while !stack.is_empty() {
            let (u, next) = {
                let (u, ei) = stack.last_mut().unwrap();
                let u = *u;
                if *ei < succs[u].len() {
                    let v = succs[u][*ei];
                    *ei += 1;
                    (u, Some(v))
                } else {
                    (u, None)
                }
            };
            match next {
                Some(v) => match marks[v] {
                    Mark::Grey => return Some(v),
                    Mark::White => {
                        marks[v] = Mark::Grey;
                        stack.push((v, 0));
                    }
                    Mark::Black => {}
                },
                None => {
                    marks[u] = Mark::Black;
                    stack.pop();
                }
            }
        }
    }
    None
}

/// Natural-loop nesting depth per instruction. Loops sharing a header are
/// merged before counting, so a multi-latch loop counts once.
pub fn loop_depths(g: &Cfg, backedges: &BTreeSet<(usize, usize)>) -> Vec<u32> {
    // header -> union of loop bodies (node ids)
    let mut loops: Vec<(usize, BTreeSet<usize>)> = Vec::new();
    for &(u, v) in backedges {
        let body = natural_loop(g, u, v);
        match loops.iter_mut().find(|(h, _)| *h == v) {
            Some((_, b)) => b.extend(body),
            None => loops.push((v, body)),
        }
    }
    let mut depth = vec![0u32; g.instr_count()];
    for (_, body) in &loops {
        for &node in body {
            if let Some(i) = g.instr_of(node) {
                depth[i] += 1;
            }
        }
    }
    depth
}

/// Body of the natural loop of back edge `(u, v)`: `v` plus every node
/// reaching `u` against the flow without passing through `v`.
fn natural_loop(g: &Cfg, u: usize, v: usize) -> BTreeSet<usize> {
    let mut body: BTreeSet<usize> = BTreeSet::new();
    body.insert(v);
    let mut stack = Vec::new();
    if u != v {
        body.insert(u);
        stack.push(u);
    }
    while let Some(n) = stack.pop() {
        for &p in g.preds(n) {
            if g.is_reachable(p) && body.insert(p) {
                stack.push(p);
            }
        }
    }
    body
}

/// A branch: conditional `s`, its immediate post-dominator `e`, and the
/// instructions strictly between them on some `s -> e` path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchRegion {
    /// Branch instruction index.
    pub start: usize,
    /// Join node (instruction index, or `None` for EXIT).
    pub join: Option<usize>,
    /// Instruction indices inside the region; excludes `start` and `join`.
    pub body: BTreeSet<usize>,
}

/// Finds all branch regions and the per-instruction branch counts.
///
/// Eligible starts are conditional jumps that are not back-edge sources.
/// `acyclic` must be the back-edge-removed EXIT-augmented graph and
/// `ipdom` its post-dominator tree.
pub fn branch_counts(
    m: &Method,
    acyclic: &Cfg,
    backedges: &BTreeSet<(usize, usize)>,
    ipdom: &DomTree,
) -> (Vec<u32>, Vec<BranchRegion>) {
    let mut counts = vec![0u32; acyclic.instr_count()];
    let mut regions = Vec::new();
    let back_sources: BTreeSet<usize> = backedges.iter().map(|&(u, _)| u).collect();

    for ins in &m.instructions {
        if !matches!(ins.kind, InstrKind::CondJump { .. }) {
            continue;
        }
        let s = Cfg::node_of(ins.index);
        if !acyclic.is_reachable(s) || back_sources.contains(&s) {
            continue;
        }
        let Some(e) = ipdom.idom(s) else { continue };

        // Region body: reachable from s, co-reachable to e, minus {s, e}.
        let fwd = reach(acyclic, s, false);
        let bwd = reach(acyclic, e, true);
        let mut body = BTreeSet::new();
        for node in 0..acyclic.node_count() {
            if node != s && node != e && fwd[node] && bwd[node] {
                if let Some(i) = acyclic.instr_of(node) {
                    body.insert(i);
                    counts[i] += 1;
                }
            }
        }
        regions.push(BranchRegion {
            start: ins.index,
            join: acyclic.instr_of(e),
            body,
        });
    }
    (counts, regions)
}

fn reach(g: &Cfg, from: usize, backwards: bool) -> Vec<bool> {
    let mut seen = vec![false; g.node_count()];
    seen[from] = true;
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        let next = if backwards { g.preds(u) } else { g.succs(u) };
        for &v in next {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Everything the per-method feature extraction needs, computed once.
#[derive(Debug, Clone)]
pub struct MethodAnalysis {
    pub cfg: Cfg,
    pub dom: DomTree,
    pub back_edges: BTreeSet<(usize, usize)>,
    pub acyclic: Cfg,
    pub ipdom: DomTree,
    pub loop_depth: Vec<u32>,
    pub branch_count: Vec<u32>,
    pub regions: Vec<BranchRegion>,
}

impl MethodAnalysis {
    /// Whether the instruction survived reachability pruning.
    pub fn instr_live(&self, index: usize) -> bool {
        self.cfg.is_reachable(Cfg::node_of(index))
    }
}

pub fn analyze_method(m: &Method) -> Result<MethodAnalysis, CfgError> {
    let cfg = build_cfg(m);
    let dom = dominators(&cfg);
    let back = back_edges(&cfg, &dom);
    let acyclic = remove_back_edges(&cfg, &back, &m.name)?;
    let ipdom = post_dominators(&acyclic);
    let loop_depth = loop_depths(&cfg, &back);
    let (branch_count, regions) = branch_counts(m, &acyclic, &back, &ipdom);
    Ok(MethodAnalysis {
        cfg,
        dom,
        back_edges: back,
        acyclic,
        ipdom,
        loop_depth,
        branch_count,
        regions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, parse_source, Method, Program, Vocabulary};
    use crate::testutil::example_loops_src;

    fn method(src: &str) -> (Program, Method) {
        let v = Vocabulary::load("add\ncmp\nstore\n").unwrap();
        let p = parse_program(src, &v).unwrap();
        let m = p.methods()[0].clone();
        (p, m)
    }

    #[test]
    fn straight_line_path() {
        let (_, m) = method("method m {\n add\n add\n add\n}\n");
        let g = build_cfg(&m);
        assert_eq!(g.succs(ENTRY), &[1]);
        assert_eq!(g.succs(1), &[2]);
        assert_eq!(g.succs(2), &[3]);
        assert_eq!(g.succs(3), &[g.exit()]);
    }

    #[test]
    fn cond_jump_out_degree_two() {
        let (_, m) = method("method m {\n if cmp L\n add\nL: ret\n}\n");
        let g = build_cfg(&m);
        assert_eq!(g.succs(Cfg::node_of(0)).len(), 2);
    }

    #[test]
    fn diamond_post_dominator_is_join() {
        // 0: if -> 2 else 1; both reach 3.
        let (_, m) = method("method m {\n if cmp L\n add\nL: add\n ret\n}\n");
        let g = build_cfg(&m);
        let dom = dominators(&g);
        let back = back_edges(&g, &dom);
        assert!(back.is_empty());
        let acyc = remove_back_edges(&g, &back, "m").unwrap();
        let ipdom = post_dominators(&acyc);
        // wait: 0 -> {L(2), 1}; 1 -> 2; ipdom(node 1) is node 3 (= instr 2)
        assert_eq!(ipdom.idom(Cfg::node_of(0)), Some(Cfg::node_of(2)));
    }

    #[test]
    fn linear_chain_idoms() {
        let (_, m) = method("method m {\n add\n add\n add\n}\n");
        let g = build_cfg(&m);
        let dom = dominators(&g);
        for i in 1..3 {
            assert_eq!(dom.idom(Cfg::node_of(i)), Some(Cfg::node_of(i - 1)));
        }
        assert_eq!(dom.idom(Cfg::node_of(0)), Some(ENTRY));
    }

    #[test]
    fn true_self_loop_back_edge_on_itself() {
        let (_, m) = method("method m {\nL: jump L\n}\n");
        let g = build_cfg(&m);
        let dom = dominators(&g);
        let back = back_edges(&g, &dom);
        let n = Cfg::node_of(0);
        assert_eq!(back.into_iter().collect::<Vec<_>>(), vec![(n, n)]);
        let depths = loop_depths(&g, &back_edges(&g, &dom));
        assert_eq!(depths, vec![1]);
    }

    #[test]
    fn self_loop_is_back_edge() {
        let (_, m) = method("method m {\n add\nL: if cmp L2\n jump L\nL2: ret\n}\n");
        let g = build_cfg(&m);
        let dom = dominators(&g);
        let back = back_edges(&g, &dom);
        // jump at 2 targets the if at 1 which dominates it
        assert_eq!(back.len(), 1);
        assert!(back.contains(&(Cfg::node_of(2), Cfg::node_of(1))));
    }

    #[test]
    fn acyclic_method_no_back_edges_all_depth_zero() {
        let (_, m) = method("method m {\n add\n if cmp L\n add\nL: add\n ret\n}\n");
        let an = analyze_method(&m).unwrap();
        assert!(an.back_edges.is_empty());
        assert!(an.loop_depth.iter().all(|&d| d == 0));
    }

    #[test]
    fn example_program_two_back_edges() {
        let parsed = parse_source(example_loops_src()).unwrap();
        let m = &parsed.program.methods()[0];
        let an = analyze_method(m).unwrap();
        assert_eq!(an.back_edges.len(), 2);
        // Both sources are the loop-closing conditional jumps (10 and 12).
        assert!(an.back_edges.contains(&(Cfg::node_of(10), Cfg::node_of(6))));
        assert!(an.back_edges.contains(&(Cfg::node_of(12), Cfg::node_of(3))));
    }

    #[test]
    fn example_program_loop_depths() {
        let parsed = parse_source(example_loops_src()).unwrap();
        let m = &parsed.program.methods()[0];
        let an = analyze_method(m).unwrap();
        // adds at 3 (outer), 7 (inner), 9 (inner), 11 (outer)
        assert_eq!(an.loop_depth[3], 1);
        assert_eq!(an.loop_depth[7], 2);
        assert_eq!(an.loop_depth[9], 2);
        assert_eq!(an.loop_depth[11], 1);
        assert_eq!(an.loop_depth[0], 0);
        assert_eq!(an.loop_depth[13], 0);
    }

    #[test]
    fn example_program_branch_counts() {
        let parsed = parse_source(example_loops_src()).unwrap();
        let m = &parsed.program.methods()[0];
        let an = analyze_method(m).unwrap();
        // Only the if at 6 forms a region; its body is {7, 8}.
        assert_eq!(an.regions.len(), 1);
        assert_eq!(an.regions[0].start, 6);
        assert_eq!(an.regions[0].join, Some(9));
        let expect: BTreeSet<usize> = [7, 8].into_iter().collect();
        assert_eq!(an.regions[0].body, expect);
        let mut want = vec![0u32; m.len()];
        want[7] = 1;
        want[8] = 1;
        assert_eq!(an.branch_count, want);
    }

    #[test]
    fn triple_nested_loop_depth_three() {
        let src = "method m {\n\
            store\n\
          l1: store\n\
          l2: store\n\
          l3: add\n\
            if cmp l3\n\
            if cmp l2\n\
            if cmp l1\n\
            ret\n\
          }\n";
        let (_, m) = method(src);
        let an = analyze_method(&m).unwrap();
        assert_eq!(an.loop_depth[3], 3);
        assert_eq!(an.loop_depth[2], 2);
        assert_eq!(an.loop_depth[1], 1);
        assert_eq!(an.loop_depth[0], 0);
    }

    #[test]
    fn nested_if_inner_body_counts_two() {
        // if cmp over an if cmp; inner body sits in both regions.
        let src = "method m {\n\
            if cmp join\n\
            if cmp inner_join\n\
            add\n\
          inner_join: add\n\
          join: add\n\
            ret\n\
          }\n";
        let (_, m) = method(src);
        let an = analyze_method(&m).unwrap();
        assert_eq!(an.branch_count[2], 2);
        assert_eq!(an.branch_count[3], 1);
        assert_eq!(an.branch_count[4], 0);
    }

    #[test]
    fn branch_free_method_zero_counts() {
        let (_, m) = method("method m {\n add\n add\n ret\n}\n");
        let an = analyze_method(&m).unwrap();
        assert!(an.branch_count.iter().all(|&c| c == 0));
        assert!(an.regions.is_empty());
    }

    #[test]
    fn unreachable_code_dropped_with_warning() {
        let (_, m) = method("method m {\n jump L\n add\nL: ret\n}\n");
        let an = analyze_method(&m).unwrap();
        assert!(!an.instr_live(1));
        assert!(an.cfg.warnings().iter().any(|w| w.contains("unreachable")));
    }

    #[test]
    fn irreducible_cfg_rejected() {
        // Two mutually-jumping instructions entered at both points:
        // neither dominates the other, so the cycle has no back edge.
        let src = "method m {\n\
            if cmp b\n\
          a: if cmp b2\n\
            ret\n\
          b: jump a2\n\
            ret\n\
          a2: jump a\n\
          b2: jump b\n\
          }\n";
        // 0 -> {3(b), 1(a)}; a(1) -> {6(b2), 2}; b(3) -> 5(a2); a2(5) -> 1(a); b2(6) -> 3(b)
        // cycle a(1) -> b2(6) -> b(3) -> a2(5) -> a(1); entered at 1 and 3.
        let (_, m) = method(src);
        let err = analyze_method(&m).unwrap_err();
        assert!(matches!(err, CfgError::Irreducible { .. }));
    }

    #[test]
    fn back_edge_removal_yields_acyclic_graph() {
        let parsed = parse_source(example_loops_src()).unwrap();
        let m = &parsed.program.methods()[0];
        let an = analyze_method(m).unwrap();
        let succs: Vec<Vec<usize>> = (0..an.acyclic.node_count())
            .map(|u| an.acyclic.succs(u).to_vec())
            .collect();
        assert!(find_cycle(&succs, &an.acyclic).is_none());
    }

    #[test]
    fn analyses_deterministic() {
        let parsed = parse_source(example_loops_src()).unwrap();
        let m = &parsed.program.methods()[0];
        let a1 = analyze_method(m).unwrap();
        let a2 = analyze_method(m).unwrap();
        assert_eq!(a1.loop_depth, a2.loop_depth);
        assert_eq!(a1.branch_count, a2.branch_count);
        assert_eq!(a1.back_edges, a2.back_edges);
    }
}
