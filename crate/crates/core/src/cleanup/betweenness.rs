//! Edge betweenness centrality on small undirected graphs given as
//! adjacency lists over local indices.

use std::collections::VecDeque;

/// Relative tolerance when comparing centrality values for the maximum.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Edges as `(lo, hi)` sorted lexicographically, plus for every node the
/// edge index of each adjacency entry.
pub(crate) fn index_edges(adj: &[Vec<usize>]) -> (Vec<(usize, usize)>, Vec<Vec<usize>>) {
    let mut edges = Vec::new();
    for (u, nbrs) in adj.iter().enumerate() {
        for &v in nbrs {
            if u < v {
                edges.push((u, v));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let eid = adj
        .iter()
        .enumerate()
        .map(|(u, nbrs)| nbrs.iter().map(|&v| edges.binary_search(&(u.min(v), u.max(v))).unwrap()).collect())
        .collect();
    (edges, eid)
}

/// Sum over unordered node pairs {s, t} of the fraction of shortest s-t
/// paths that use each edge. Brandes accumulation, one BFS per source.
pub fn edge_betweenness(adj: &[Vec<usize>]) -> Vec<((usize, usize), f64)> {
    let n = adj.len();
    let (edges, eid) = index_edges(adj);
    let mut score = vec![0.0f64; edges.len()];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        sigma.fill(0.0);
        dist.fill(usize::MAX);
        delta.fill(0.0);
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        for &w in order.iter().rev() {
            for (k, &v) in adj[w].iter().enumerate() {
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    let c = sigma[v] / sigma[w] * (1.0 + delta[w]);
                    score[eid[w][k]] += c;
                    delta[v] += c;
                }
            }
        }
    }
    edges.into_iter().zip(score).map(|(e, s)| (e, s / 2.0)).collect()
}

/// The edge of maximum centrality; near-ties go to the smallest pair.
pub fn max_betweenness_edge(adj: &[Vec<usize>]) -> Option<(usize, usize)> {
    let scores = edge_betweenness(adj);
    let max = scores.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * max.abs().max(1.0);
    scores.into_iter().find(|(_, s)| *s >= max - tol).map(|(e, _)| e)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn adj_of(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    fn values(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
        edge_betweenness(&adj_of(n, edges)).into_iter().map(|(_, s)| s).collect()
    }

    #[test]
    fn single_edge() {
        assert_eq!(values(2, &[(0, 1)]), [1.0]);
    }

    #[test]
    fn path_of_three() {
        assert_eq!(values(3, &[(0, 1), (1, 2)]), [2.0, 2.0]);
    }

    #[test]
    fn triangle() {
        assert_eq!(values(3, &[(0, 1), (1, 2), (0, 2)]), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn square_splits_paths() {
        // Opposite corners have two shortest paths each: 1 + 2 * 0.5 per edge.
        assert_eq!(values(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]), [2.0; 4]);
    }

    #[test]
    fn barbell_bridge_carries_cross_pairs() {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((3, 4));
        let adj = adj_of(8, &edges);
        let scores = edge_betweenness(&adj);
        let bridge = scores.iter().find(|(e, _)| *e == (3, 4)).unwrap().1;
        assert_eq!(bridge, 16.0);
        assert_eq!(max_betweenness_edge(&adj), Some((3, 4)));
    }

    #[test]
    fn ties_go_to_smallest_pair() {
        assert_eq!(max_betweenness_edge(&adj_of(4, &[(2, 3), (0, 1), (1, 2), (0, 3)])), Some((0, 1)));
        assert_eq!(max_betweenness_edge(&adj_of(1, &[])), None);
    }
}
