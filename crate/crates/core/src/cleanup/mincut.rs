//! Global minimum edge cut by repeated unit-capacity max-flow from node 0.

use std::collections::VecDeque;

use super::CleanupError;

struct FlowNet<'a> {
    edges: &'a [(usize, usize)],
    /// `(neighbor, edge index)` per node.
    inc: Vec<Vec<(usize, usize)>>,
    flow: Vec<i8>,
}

impl<'a> FlowNet<'a> {
    fn new(n: usize, edges: &'a [(usize, usize)]) -> Self {
        let mut inc = vec![Vec::new(); n];
        for (i, &(a, b)) in edges.iter().enumerate() {
            inc[a].push((b, i));
            inc[b].push((a, i));
        }
        FlowNet { edges, inc, flow: vec![0; edges.len()] }
    }

    fn residual(&self, from: usize, e: usize) -> bool {
        if self.edges[e].0 == from {
            self.flow[e] < 1
        } else {
            self.flow[e] > -1
        }
    }

    /// BFS in the residual network; returns predecessor edges.
    fn search(&self, s: usize) -> Vec<Option<(usize, usize)>> {
        let mut pred = vec![None; self.inc.len()];
        let mut seen = vec![false; self.inc.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &self.inc[u] {
                if !seen[v] && self.residual(u, e) {
                    seen[v] = true;
                    pred[v] = Some((u, e));
                    queue.push_back(v);
                }
            }
        }
        pred
    }

    fn augment(&mut self, pred: &[Option<(usize, usize)>], t: usize) {
        let mut v = t;
        while let Some((u, e)) = pred[v] {
            self.flow[e] += if self.edges[e].0 == u { 1 } else { -1 };
            v = u;
        }
    }
}

/// A minimum-cardinality edge set whose removal disconnects the graph.
///
/// Runs a max-flow from node 0 to every other node; the first sink that
/// attains the minimum wins and the cut is read off the source side of its
/// residual network. Returns edges as sorted `(lo, hi)` pairs.
pub fn min_edge_cut(adj: &[Vec<usize>]) -> Result<Vec<(usize, usize)>, CleanupError> {
    let n = adj.len();
    if n < 2 {
        return Err(CleanupError::SingletonComponent);
    }
    let (edges, _) = super::betweenness::index_edges(adj);
    let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
    for t in 1..n {
        let mut net = FlowNet::new(n, &edges);
        let mut value = 0;
        let source_side = loop {
            let pred = net.search(0);
            if pred[t].is_none() {
                let mut side = vec![false; n];
                side[0] = true;
                for (v, p) in pred.iter().enumerate() {
                    side[v] |= p.is_some();
                }
                break Some(side);
            }
            net.augment(&pred, t);
            value += 1;
            if best.as_ref().is_some_and(|(b, _)| value >= *b) {
                break None;
            }
        };
        if let Some(side) = source_side {
            let cut: Vec<_> = edges.iter().copied().filter(|&(a, b)| side[a] != side[b]).collect();
            let done = value <= 1;
            best = Some((value, cut));
            if done {
                break;
            }
        }
    }
    Ok(best.map(|(_, cut)| cut).unwrap_or_default())
}
