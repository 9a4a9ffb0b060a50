//! Exact s-t max-flow / min-cut on sparse graphs.
//!
//! The solver is the dual-tree augmenting algorithm of Boykov and Kolmogorov:
//! two search trees grown from the source and the sink meet to form
//! augmenting paths, and nodes cut off by saturated edges are re-attached by
//! an orphan-adoption pass instead of rebuilding the trees. On 2-D grid
//! graphs this is the strongest known serial method, and keeping the solve
//! single-threaded makes results exactly reproducible.
//!
//! Terminals are implicit: every node carries a pair of terminal capacities,
//! and construction cancels the common part of `c(s,v)` and `c(v,t)` into the
//! flow value up front. All other edges are explicit directed pairs.

use crate::error::{CoreError, Result};
use crate::mask::LabelField;
use std::collections::VecDeque;
use std::io::Write;

/// Residual capacities at or below this are treated as saturated. Capacities
/// come from log-domain energies and are inherently non-integral.
pub const RESIDUAL_EPS: f64 = 1e-12;

/// Which side of the minimum cut a vertex lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Sink,
}

/// A capacitated directed graph with implicit source/sink terminals.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    n: usize,
    cap_source: Vec<f64>,
    cap_sink: Vec<f64>,
    // Directed edges in insertion order; `add_edge` pushes a forward/reverse
    // pair at indices (2k, 2k+1).
    from: Vec<u32>,
    to: Vec<u32>,
    cap: Vec<f64>,
}

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        FlowGraph::with_edge_capacity(n, 0)
    }

    /// Pre-size the edge arrays for `pairs` calls to `add_edge`.
    pub fn with_edge_capacity(n: usize, pairs: usize) -> Self {
        FlowGraph {
            n,
            cap_source: vec![0.0; n],
            cap_sink: vec![0.0; n],
            from: Vec::with_capacity(2 * pairs),
            to: Vec::with_capacity(2 * pairs),
            cap: Vec::with_capacity(2 * pairs),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.from.len()
    }

    /// Add terminal capacities for vertex `v` (accumulating).
    pub fn add_tlink(&mut self, v: usize, cap_from_source: f64, cap_to_sink: f64) {
        assert!(v < self.n);
        assert!(
            cap_from_source >= 0.0 && cap_to_sink >= 0.0,
            "negative terminal capacity"
        );
        assert!(cap_from_source.is_finite() && cap_to_sink.is_finite());
        self.cap_source[v] += cap_from_source;
        self.cap_sink[v] += cap_to_sink;
    }

    /// Add the directed pair `u -> v` with `cap` and `v -> u` with `rev_cap`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) {
        assert!(u < self.n && v < self.n && u != v, "bad edge endpoints");
        assert!(cap >= 0.0 && rev_cap >= 0.0, "negative edge capacity");
        assert!(cap.is_finite() && rev_cap.is_finite());
        self.from.push(u as u32);
        self.to.push(v as u32);
        self.cap.push(cap);
        self.from.push(v as u32);
        self.to.push(u as u32);
        self.cap.push(rev_cap);
    }

    pub fn cap_source(&self, v: usize) -> f64 {
        self.cap_source[v]
    }

    pub fn cap_sink(&self, v: usize) -> f64 {
        self.cap_sink[v]
    }

    /// Capacity of the cut induced by a side assignment, under the original
    /// capacities.
    pub fn cut_capacity(&self, side: &[Side]) -> f64 {
        assert_eq!(side.len(), self.n);
        let mut total = 0.0;
        for v in 0..self.n {
            match side[v] {
                Side::Sink => total += self.cap_source[v],
                Side::Source => total += self.cap_sink[v],
            }
        }
        for e in 0..self.from.len() {
            if side[self.from[e] as usize] == Side::Source
                && side[self.to[e] as usize] == Side::Sink
            {
                total += self.cap[e];
            }
        }
        total
    }

    /// Dump in DIMACS max-flow text format for cross-checking with external
    /// solvers. Node ids: source 1, sink 2, vertex `v` becomes `v + 3`.
    /// Zero-capacity arcs are omitted.
    pub fn write_dimacs<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let arcs: usize = self.cap_source.iter().filter(|&&c| c > 0.0).count()
            + self.cap_sink.iter().filter(|&&c| c > 0.0).count()
            + self.cap.iter().filter(|&&c| c > 0.0).count();
        writeln!(w, "p max {} {}", self.n + 2, arcs)?;
        writeln!(w, "n 1 s")?;
        writeln!(w, "n 2 t")?;
        for v in 0..self.n {
            if self.cap_source[v] > 0.0 {
                writeln!(w, "a 1 {} {}", v + 3, self.cap_source[v])?;
            }
        }
        for v in 0..self.n {
            if self.cap_sink[v] > 0.0 {
                writeln!(w, "a {} 2 {}", v + 3, self.cap_sink[v])?;
            }
        }
        for e in 0..self.from.len() {
            if self.cap[e] > 0.0 {
                writeln!(
                    w,
                    "a {} {} {}",
                    self.from[e] + 3,
                    self.to[e] + 3,
                    self.cap[e]
                )?;
            }
        }
        Ok(())
    }
}

/// Max-flow value and the induced minimum cut.
#[derive(Debug, Clone)]
pub struct CutResult {
    pub flow_value: f64,
    pub side_of: Vec<Side>,
}

impl CutResult {
    pub fn source_side(&self, v: usize) -> bool {
        self.side_of[v] == Side::Source
    }
}

const PARENT_NONE: u32 = u32::MAX;
const PARENT_TERMINAL: u32 = u32::MAX - 1;
const PARENT_ORPHAN: u32 = u32::MAX - 2;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

struct Solver {
    n: usize,
    // CSR adjacency over directed edges.
    adj_start: Vec<u32>,
    e_to: Vec<u32>,
    e_rev: Vec<u32>,
    res: Vec<f64>,
    tr_cap: Vec<f64>, // >0: residual from source; <0: residual to sink (negated)
    tree: Vec<Tree>,
    parent: Vec<u32>, // edge id oriented parent->child (source tree) or child->parent (sink tree)
    ts: Vec<u64>,
    dist: Vec<u64>,
    active: VecDeque<u32>,
    orphans: VecDeque<u32>,
    time: u64,
    flow: f64,
}

impl Solver {
    fn build(g: &FlowGraph) -> Solver {
        let n = g.n;
        let m = g.from.len();

        let mut degree = vec![0u32; n + 1];
        for &f in &g.from {
            degree[f as usize + 1] += 1;
        }
        let mut adj_start = degree;
        for i in 1..=n {
            adj_start[i] += adj_start[i - 1];
        }
        let mut cursor = adj_start.clone();
        let mut pos = vec![0u32; m];
        let mut e_to = vec![0u32; m];
        let mut res = vec![0.0; m];
        for e in 0..m {
            let p = cursor[g.from[e] as usize];
            cursor[g.from[e] as usize] += 1;
            pos[e] = p;
            e_to[p as usize] = g.to[e];
            res[p as usize] = g.cap[e];
        }
        let mut e_rev = vec![0u32; m];
        for e in (0..m).step_by(2) {
            e_rev[pos[e] as usize] = pos[e + 1];
            e_rev[pos[e + 1] as usize] = pos[e];
        }

        let mut flow = 0.0;
        let mut tr_cap = vec![0.0; n];
        for v in 0..n {
            flow += g.cap_source[v].min(g.cap_sink[v]);
            tr_cap[v] = g.cap_source[v] - g.cap_sink[v];
        }

        let mut solver = Solver {
            n,
            adj_start,
            e_to,
            e_rev,
            res,
            tr_cap,
            tree: vec![Tree::Free; n],
            parent: vec![PARENT_NONE; n],
            ts: vec![0; n],
            dist: vec![0; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            flow,
        };
        for v in 0..n {
            if solver.tr_cap[v] > RESIDUAL_EPS {
                solver.tree[v] = Tree::Source;
                solver.parent[v] = PARENT_TERMINAL;
                solver.dist[v] = 1;
                solver.ts[v] = 0;
                solver.active.push_back(v as u32);
            } else if solver.tr_cap[v] < -RESIDUAL_EPS {
                solver.tree[v] = Tree::Sink;
                solver.parent[v] = PARENT_TERMINAL;
                solver.dist[v] = 1;
                solver.ts[v] = 0;
                solver.active.push_back(v as u32);
            }
        }
        solver
    }

    #[inline]
    fn edges(&self, v: u32) -> std::ops::Range<usize> {
        self.adj_start[v as usize] as usize..self.adj_start[v as usize + 1] as usize
    }

    /// Grow the trees until they touch; returns the connecting edge oriented
    /// source-tree -> sink-tree.
    fn grow(&mut self) -> Option<u32> {
        while let Some(p) = self.active.pop_front() {
            if self.tree[p as usize] == Tree::Free {
                continue; // stale entry
            }
            let p_tree = self.tree[p as usize];
            for e in self.edges(p) {
                // Usable tree edge: outgoing residual for the source tree,
                // incoming residual for the sink tree.
                let usable = match p_tree {
                    Tree::Source => self.res[e] > RESIDUAL_EPS,
                    Tree::Sink => self.res[self.e_rev[e] as usize] > RESIDUAL_EPS,
                    Tree::Free => unreachable!(),
                };
                if !usable {
                    continue;
                }
                let q = self.e_to[e];
                match self.tree[q as usize] {
                    Tree::Free => {
                        self.tree[q as usize] = p_tree;
                        self.parent[q as usize] = match p_tree {
                            Tree::Source => e as u32, // p -> q, parent to child
                            Tree::Sink => self.e_rev[e], // q -> p, child to parent
                            Tree::Free => unreachable!(),
                        };
                        self.ts[q as usize] = self.ts[p as usize];
                        self.dist[q as usize] = self.dist[p as usize] + 1;
                        self.active.push_back(q);
                    }
                    t if t != p_tree => {
                        // Trees touch; re-queue p so growth resumes here.
                        self.active.push_front(p);
                        return Some(match p_tree {
                            Tree::Source => e as u32,
                            Tree::Sink => self.e_rev[e],
                            Tree::Free => unreachable!(),
                        });
                    }
                    _ => {}
                }
            }
        }
        None
    }

    /// Source-tree endpoint of a directed edge.
    #[inline]
    fn edge_from(&self, e: u32) -> u32 {
        self.e_to[self.e_rev[e as usize] as usize]
    }

    fn augment(&mut self, connector: u32) {
        // Bottleneck over: source-tree path, the connector, sink-tree path.
        let u = self.edge_from(connector);
        let v = self.e_to[connector as usize];
        let mut delta = self.res[connector as usize];

        let mut x = u;
        loop {
            match self.parent[x as usize] {
                PARENT_TERMINAL => {
                    delta = delta.min(self.tr_cap[x as usize]);
                    break;
                }
                pe => {
                    delta = delta.min(self.res[pe as usize]);
                    x = self.edge_from(pe);
                }
            }
        }
        let mut x = v;
        loop {
            match self.parent[x as usize] {
                PARENT_TERMINAL => {
                    delta = delta.min(-self.tr_cap[x as usize]);
                    break;
                }
                pe => {
                    delta = delta.min(self.res[pe as usize]);
                    x = self.e_to[pe as usize];
                }
            }
        }

        self.res[connector as usize] -= delta;
        self.res[self.e_rev[connector as usize] as usize] += delta;

        let mut x = u;
        loop {
            match self.parent[x as usize] {
                PARENT_TERMINAL => {
                    self.tr_cap[x as usize] -= delta;
                    if self.tr_cap[x as usize] <= RESIDUAL_EPS {
                        self.parent[x as usize] = PARENT_ORPHAN;
                        self.orphans.push_back(x);
                    }
                    break;
                }
                pe => {
                    self.res[pe as usize] -= delta;
                    self.res[self.e_rev[pe as usize] as usize] += delta;
                    let next = self.edge_from(pe);
                    if self.res[pe as usize] <= RESIDUAL_EPS {
                        self.parent[x as usize] = PARENT_ORPHAN;
                        self.orphans.push_back(x);
                    }
                    x = next;
                }
            }
        }
        let mut x = v;
        loop {
            match self.parent[x as usize] {
                PARENT_TERMINAL => {
                    self.tr_cap[x as usize] += delta;
                    if -self.tr_cap[x as usize] <= RESIDUAL_EPS {
                        self.parent[x as usize] = PARENT_ORPHAN;
                        self.orphans.push_back(x);
                    }
                    break;
                }
                pe => {
                    self.res[pe as usize] -= delta;
                    self.res[self.e_rev[pe as usize] as usize] += delta;
                    let next = self.e_to[pe as usize];
                    if self.res[pe as usize] <= RESIDUAL_EPS {
                        self.parent[x as usize] = PARENT_ORPHAN;
                        self.orphans.push_back(x);
                    }
                    x = next;
                }
            }
        }

        self.flow += delta;
    }

    /// Distance to the terminal if `q`'s parent chain reaches one;
    /// validates and caches distances with the current timestamp.
    fn rooted_distance(&mut self, q: u32) -> Option<u64> {
        let mut path = Vec::new();
        let mut x = q;
        let base = loop {
            if self.ts[x as usize] == self.time {
                break self.dist[x as usize];
            }
            match self.parent[x as usize] {
                PARENT_TERMINAL => {
                    path.push(x);
                    break 0;
                }
                PARENT_NONE | PARENT_ORPHAN => return None,
                pe => {
                    path.push(x);
                    x = match self.tree[x as usize] {
                        Tree::Source => self.edge_from(pe),
                        Tree::Sink => self.e_to[pe as usize],
                        Tree::Free => return None,
                    };
                }
            }
        };
        // Walk back down, marking validated distances.
        let mut d = base + path.len() as u64;
        let total = d;
        for &node in &path {
            self.ts[node as usize] = self.time;
            self.dist[node as usize] = d;
            d -= 1;
        }
        if path.is_empty() {
            Some(base)
        } else {
            Some(total)
        }
    }

    fn adopt(&mut self) {
        while let Some(x) = self.orphans.pop_front() {
            let x_tree = self.tree[x as usize];
            debug_assert!(x_tree != Tree::Free);

            // Look for a new parent: same tree, unsaturated edge in the
            // correct direction, and a path that still reaches the terminal.
            let mut best: Option<(u32, u64)> = None;
            for e in self.edges(x) {
                let q = self.e_to[e];
                if self.tree[q as usize] != x_tree {
                    continue;
                }
                let usable = match x_tree {
                    Tree::Source => self.res[self.e_rev[e] as usize] > RESIDUAL_EPS,
                    Tree::Sink => self.res[e] > RESIDUAL_EPS,
                    Tree::Free => unreachable!(),
                };
                if !usable {
                    continue;
                }
                if let Some(d) = self.rooted_distance(q) {
                    let parent_edge = match x_tree {
                        Tree::Source => self.e_rev[e], // q -> x
                        Tree::Sink => e as u32,        // x -> q
                        Tree::Free => unreachable!(),
                    };
                    if best.map_or(true, |(_, bd)| d < bd) {
                        best = Some((parent_edge, d));
                    }
                }
            }

            if let Some((pe, d)) = best {
                self.parent[x as usize] = pe;
                self.ts[x as usize] = self.time;
                self.dist[x as usize] = d + 1;
                continue;
            }

            // No parent found: x leaves its tree. Former neighbors that could
            // reach x become active; children of x become orphans.
            for e in self.edges(x) {
                let q = self.e_to[e];
                if self.tree[q as usize] != x_tree {
                    continue;
                }
                let toward_x = match x_tree {
                    Tree::Source => self.res[self.e_rev[e] as usize] > RESIDUAL_EPS,
                    Tree::Sink => self.res[e] > RESIDUAL_EPS,
                    Tree::Free => unreachable!(),
                };
                if toward_x {
                    self.active.push_back(q);
                }
                let q_parent = self.parent[q as usize];
                if q_parent != PARENT_NONE
                    && q_parent != PARENT_TERMINAL
                    && q_parent != PARENT_ORPHAN
                {
                    let q_parent_node = match self.tree[q as usize] {
                        Tree::Source => self.edge_from(q_parent),
                        Tree::Sink => self.e_to[q_parent as usize],
                        Tree::Free => unreachable!(),
                    };
                    if q_parent_node == x {
                        self.parent[q as usize] = PARENT_ORPHAN;
                        self.orphans.push_back(q);
                    }
                }
            }
            self.tree[x as usize] = Tree::Free;
            self.parent[x as usize] = PARENT_NONE;
        }
    }

    fn run(mut self) -> CutResult {
        while let Some(connector) = self.grow() {
            self.time += 1;
            self.augment(connector);
            self.adopt();
        }

        // Side assignment by residual reachability from the source; free
        // nodes land on the sink side.
        let mut side = vec![Side::Sink; self.n];
        let mut queue = VecDeque::new();
        for v in 0..self.n {
            if self.tr_cap[v] > RESIDUAL_EPS {
                side[v] = Side::Source;
                queue.push_back(v as u32);
            }
        }
        while let Some(p) = queue.pop_front() {
            for e in self.edges(p) {
                let q = self.e_to[e];
                if side[q as usize] == Side::Sink && self.res[e] > RESIDUAL_EPS {
                    side[q as usize] = Side::Source;
                    queue.push_back(q);
                }
            }
        }

        CutResult {
            flow_value: self.flow,
            side_of: side,
        }
    }
}

/// Compute the maximum flow and minimum cut of `g`.
///
/// The graph itself is not modified; residual state lives in the solver, so
/// a graph can be solved repeatedly.
pub fn max_flow(g: &FlowGraph) -> CutResult {
    Solver::build(g).run()
}

/// Interpret a cut over a `width x height` pixel grid as a labeling:
/// source side = object (label 1).
pub fn labels_from_cut(cut: &CutResult, width: usize, height: usize) -> Result<LabelField> {
    if cut.side_of.len() != width * height {
        return Err(CoreError::BadBufferLength {
            width,
            height,
            channels: 1,
            got: cut.side_of.len(),
        });
    }
    let labels = cut
        .side_of
        .iter()
        .map(|&s| (s == Side::Source) as u8)
        .collect();
    LabelField::from_labels(width, height, 0, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottleneck_chain() {
        // s -> v (3) -> t (2): flow 2, v ends on the source side.
        let mut g = FlowGraph::new(1);
        g.add_tlink(0, 3.0, 2.0);
        let cut = max_flow(&g);
        assert!((cut.flow_value - 2.0).abs() < 1e-12);
        assert_eq!(cut.side_of[0], Side::Source);
    }

    #[test]
    fn disconnected_terminals() {
        let mut g = FlowGraph::new(3);
        g.add_edge(0, 1, 5.0, 5.0);
        g.add_edge(1, 2, 5.0, 5.0);
        let cut = max_flow(&g);
        assert_eq!(cut.flow_value, 0.0);
        assert!(cut.side_of.iter().all(|&s| s == Side::Sink));
    }

    #[test]
    fn two_node_path_through_edge() {
        // s -> a (4), a -> b (1), b -> t (4): flow limited by the inner edge.
        let mut g = FlowGraph::new(2);
        g.add_tlink(0, 4.0, 0.0);
        g.add_tlink(1, 0.0, 4.0);
        g.add_edge(0, 1, 1.0, 0.0);
        let cut = max_flow(&g);
        assert!((cut.flow_value - 1.0).abs() < 1e-12);
        assert_eq!(cut.side_of[0], Side::Source);
        assert_eq!(cut.side_of[1], Side::Sink);
        assert!((cut.flow_value - g.cut_capacity(&cut.side_of)).abs() < 1e-9);
    }

    #[test]
    fn diamond_graph() {
        // Two disjoint 2-hop paths with different bottlenecks.
        let mut g = FlowGraph::new(2);
        g.add_tlink(0, 3.0, 0.0);
        g.add_tlink(1, 2.5, 0.0);
        g.add_tlink(0, 0.0, 1.0);
        g.add_tlink(1, 0.0, 4.0);
        g.add_edge(0, 1, 1.5, 0.0);
        let cut = max_flow(&g);
        // s->0 carries min(3, 1 + 1.5->via 1) , brute force: maxflow = 1 + min(2.5+1.5, 4) resolved below
        // paths: s->0->t: 1 ; s->0->1->t bounded by 1.5; s->1->t: 2.5 => total 1 + 1.5 + 2.5 = 5? capped by caps.
        let expected = 1.0 + 1.5 + 2.5;
        assert!((cut.flow_value - expected).abs() < 1e-9);
        assert!((cut.flow_value - g.cut_capacity(&cut.side_of)).abs() < 1e-9);
    }

    #[test]
    fn dimacs_dump_shape() {
        let mut g = FlowGraph::new(2);
        g.add_tlink(0, 1.0, 0.0);
        g.add_tlink(1, 0.0, 2.0);
        g.add_edge(0, 1, 0.5, 0.0);
        let mut buf = Vec::new();
        g.write_dimacs(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("p max 4 3"));
        assert_eq!(lines.next(), Some("n 1 s"));
        assert_eq!(lines.next(), Some("n 2 t"));
        assert!(text.contains("a 1 3 1"));
        assert!(text.contains("a 4 2 2"));
        assert!(text.contains("a 3 4 0.5"));
    }

    #[test]
    fn labels_follow_sides() {
        let cut = CutResult {
            flow_value: 0.0,
            side_of: vec![Side::Source, Side::Sink, Side::Sink, Side::Source],
        };
        let lf = labels_from_cut(&cut, 2, 2).unwrap();
        assert_eq!(lf.labels(), &[1, 0, 0, 1]);
        assert!(labels_from_cut(&cut, 3, 2).is_err());
    }
}
