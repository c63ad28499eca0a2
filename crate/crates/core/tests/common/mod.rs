#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use grouplink::blocking::{BlockingKind, Provenance};
use grouplink::cleanup::{EdgeInfo, MatchGraph};
use grouplink::{RecordId, RecordPair};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Edges = Vec<(usize, usize)>;

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Random connected simple graph with `n` nodes and up to `max_edges` edges.
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, max_edges: usize) -> Edges {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut set = BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (order[i], order[j]);
        set.insert((a.min(b), a.max(b)));
    }
    let cap = max_edges.min(n * (n - 1) / 2).max(n - 1);
    let target = rng.random_range(n - 1..=cap);
    while set.len() < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    set.into_iter().collect()
}

pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let adj = adjacency(n, edges);
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Node sets reachable from each node, deduplicated and sorted.
pub fn reachability_classes(n: usize, edges: &[(usize, usize)]) -> BTreeSet<BTreeSet<usize>> {
    let adj = adjacency(n, edges);
    (0..n)
        .map(|s| {
            let mut seen = BTreeSet::from([s]);
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if seen.insert(v) {
                        stack.push(v);
                    }
                }
            }
            seen
        })
        .collect()
}

/// Betweenness by enumerating every simple s-t path and keeping the
/// shortest ones, over all unordered pairs.
pub fn brute_betweenness(n: usize, edges: &[(usize, usize)]) -> Vec<((usize, usize), f64)> {
    let adj = adjacency(n, edges);
    let mut score: std::collections::BTreeMap<(usize, usize), f64> = edges.iter().map(|&e| (e, 0.0)).collect();
    for s in 0..n {
        for t in s + 1..n {
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut path = vec![s];
            let mut on = vec![false; n];
            on[s] = true;
            fn dfs(
                u: usize,
                t: usize,
                adj: &[Vec<usize>],
                path: &mut Vec<usize>,
                on: &mut [bool],
                out: &mut Vec<Vec<usize>>,
            ) {
                if u == t {
                    out.push(path.clone());
                    return;
                }
                for &v in &adj[u] {
                    if !on[v] {
                        on[v] = true;
                        path.push(v);
                        dfs(v, t, adj, path, on, out);
                        path.pop();
                        on[v] = false;
                    }
                }
            }
            dfs(s, t, &adj, &mut path, &mut on, &mut paths);
            let Some(best) = paths.iter().map(Vec::len).min() else { continue };
            let shortest: Vec<_> = paths.into_iter().filter(|p| p.len() == best).collect();
            let share = 1.0 / shortest.len() as f64;
            for p in &shortest {
                for w in p.windows(2) {
                    *score.get_mut(&(w[0].min(w[1]), w[0].max(w[1]))).unwrap() += share;
                }
            }
        }
    }
    score.into_iter().collect()
}

/// Smallest number of edges whose removal disconnects the graph, searching
/// subsets of size up to `max_k`.
pub fn brute_edge_connectivity(n: usize, edges: &[(usize, usize)], max_k: usize) -> Option<usize> {
    fn search(n: usize, edges: &[(usize, usize)], k: usize, start: usize, removed: &mut Vec<usize>) -> bool {
        if removed.len() == k {
            let kept: Vec<_> =
                edges.iter().enumerate().filter(|(i, _)| !removed.contains(i)).map(|(_, e)| *e).collect();
            return !is_connected(n, &kept);
        }
        for i in start..edges.len() {
            removed.push(i);
            if search(n, edges, k, i + 1, removed) {
                return true;
            }
            removed.pop();
        }
        false
    }
    (1..=max_k.min(edges.len())).find(|&k| search(n, edges, k, 0, &mut Vec::new()))
}

pub fn node_name(i: usize) -> String {
    format!("n{i:04}")
}

pub fn match_graph(n: usize, edges: &[(usize, usize)]) -> MatchGraph {
    let mut g = MatchGraph::new((0..n).map(|i| RecordId::new(node_name(i))));
    for &(a, b) in edges {
        let pair = RecordPair::new(node_name(a).into(), node_name(b).into()).unwrap();
        g.add_edge(&pair, EdgeInfo { score: 1.0, provenance: Provenance::of(BlockingKind::IdOverlap) }).unwrap();
    }
    g
}

/// Communities of random size with dense internal edges and a few random
/// links between them; some communities exceed `mu`.
pub fn planted_communities(rng: &mut ChaCha8Rng, mu: usize) -> (usize, Edges) {
    let k = rng.random_range(2..=8);
    let mut sizes = Vec::new();
    for _ in 0..k {
        sizes.push(rng.random_range(1..=mu + 3));
    }
    let n: usize = sizes.iter().sum();
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let mut set = BTreeSet::new();
    let mut start = 0;
    let mut blocks = Vec::new();
    for &s in &sizes {
        let block = &nodes[start..start + s];
        for i in 0..s {
            for j in i + 1..s {
                if rng.random_bool(0.7) {
                    set.insert((block[i].min(block[j]), block[i].max(block[j])));
                }
            }
        }
        blocks.push(block.to_vec());
        start += s;
    }
    for _ in 0..rng.random_range(0..=k) {
        let a = *nodes.choose(rng).unwrap();
        let b = *nodes.choose(rng).unwrap();
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    (n, set.into_iter().collect())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
