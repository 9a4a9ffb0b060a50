//! Reference max-flow solvers: Edmonds-Karp augmenting paths and, for tiny
//! graphs, exhaustive enumeration of every s/t partition.

use std::collections::VecDeque;

/// Adjacency-matrix flow network with explicit source and sink rows.
/// Vertex 0 is the source, vertex 1 the sink, internal vertices follow.
#[derive(Debug, Clone)]
pub struct RefGraph {
    pub n: usize,
    pub cap: Vec<Vec<f64>>,
}

impl RefGraph {
    pub const SOURCE: usize = 0;
    pub const SINK: usize = 1;

    pub fn new(internal: usize) -> Self {
        let n = internal + 2;
        RefGraph {
            n,
            cap: vec![vec![0.0; n]; n],
        }
    }

    pub fn internal(&self) -> usize {
        self.n - 2
    }

    /// Internal vertex id -> matrix row.
    pub fn vertex(i: usize) -> usize {
        i + 2
    }

    pub fn add_cap(&mut self, u: usize, v: usize, c: f64) {
        assert!(c >= 0.0);
        self.cap[u][v] += c;
    }
}

/// Edmonds-Karp: BFS augmenting paths on the residual matrix.
pub fn edmonds_karp(g: &RefGraph) -> f64 {
    let n = g.n;
    let mut res = g.cap.clone();
    let mut flow = 0.0;
    loop {
        // Shortest augmenting path by BFS.
        let mut prev = vec![usize::MAX; n];
        prev[RefGraph::SOURCE] = RefGraph::SOURCE;
        let mut queue = VecDeque::from([RefGraph::SOURCE]);
        while let Some(u) = queue.pop_front() {
            if u == RefGraph::SINK {
                break;
            }
            for v in 0..n {
                if prev[v] == usize::MAX && res[u][v] > 1e-12 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[RefGraph::SINK] == usize::MAX {
            return flow;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = RefGraph::SINK;
        while v != RefGraph::SOURCE {
            let u = prev[v];
            bottleneck = bottleneck.min(res[u][v]);
            v = u;
        }
        let mut v = RefGraph::SINK;
        while v != RefGraph::SOURCE {
            let u = prev[v];
            res[u][v] -= bottleneck;
            res[v][u] += bottleneck;
            v = u;
        }
        flow += bottleneck;
    }
}

/// Minimum cut by enumerating all 2^k side assignments of the internal
/// vertices. Only sensible for k <= ~16.
pub fn brute_force_min_cut(g: &RefGraph) -> f64 {
    let k = g.internal();
    assert!(k <= 20, "brute force cut limited to small graphs");
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << k) {
        // side[v]: true = source side.
        let side = |v: usize| -> bool {
            if v == RefGraph::SOURCE {
                true
            } else if v == RefGraph::SINK {
                false
            } else {
                mask >> (v - 2) & 1 == 1
            }
        };
        let mut cut = 0.0;
        for u in 0..g.n {
            for v in 0..g.n {
                if g.cap[u][v] > 0.0 && side(u) && !side(v) {
                    cut += g.cap[u][v];
                }
            }
        }
        best = best.min(cut);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agree_on_tiny_graph() {
        let mut g = RefGraph::new(2);
        g.add_cap(RefGraph::SOURCE, RefGraph::vertex(0), 3.0);
        g.add_cap(RefGraph::vertex(0), RefGraph::vertex(1), 2.0);
        g.add_cap(RefGraph::vertex(1), RefGraph::SINK, 4.0);
        g.add_cap(RefGraph::vertex(0), RefGraph::SINK, 0.5);
        let f = edmonds_karp(&g);
        assert!((f - 2.5).abs() < 1e-12);
        assert!((brute_force_min_cut(&g) - f).abs() < 1e-12);
    }
}
