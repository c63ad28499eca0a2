//! Match graph construction and graph cleanup: pre-cleanup of token-only
//! edges, minimum edge cuts above `gamma`, betweenness removal above `mu`,
//! and transitive completion of the resulting components.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocking::{BlockingKind, Provenance};
use crate::matcher::Prediction;
use crate::model::{RecordId, RecordPair};

mod betweenness;
mod mincut;

pub use betweenness::{edge_betweenness, max_betweenness_edge, TIE_TOLERANCE};
pub use mincut::min_edge_cut;

pub const DEFAULT_PRE_CLEANUP_LIMIT: usize = 50;
pub const DEFAULT_GAMMA_FACTOR: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum CleanupError {
    #[error("prediction references unknown record {0}")]
    UnknownRecord(RecordId),
    #[error("minimum edge cut needs at least two nodes")]
    SingletonComponent,
    #[error("invalid cleanup parameters: {0}")]
    InvalidParams(String),
}

/// Size above which components are split by minimum edge cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gamma {
    Bounded(usize),
    Unbounded,
}

impl Gamma {
    pub fn exceeded_by(self, size: usize) -> bool {
        match self {
            Gamma::Bounded(g) => size > g,
            Gamma::Unbounded => false,
        }
    }

    pub fn halved(self) -> Gamma {
        match self {
            Gamma::Bounded(g) => Gamma::Bounded(g / 2),
            Gamma::Unbounded => Gamma::Unbounded,
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Bounded(g) => write!(f, "{g}"),
            Gamma::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "\u{221e}" => Ok(Gamma::Unbounded),
            other => {
                other.parse().map(Gamma::Bounded).map_err(|_| format!("expected a positive integer or inf, got {s:?}"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CleanupParams {
    pub gamma: Gamma,
    pub mu: usize,
    pub pre_cleanup_limit: usize,
}

impl CleanupParams {
    pub fn new(gamma: Gamma, mu: usize) -> Result<Self, CleanupError> {
        let p = CleanupParams { gamma, mu, pre_cleanup_limit: DEFAULT_PRE_CLEANUP_LIMIT };
        p.validate()?;
        Ok(p)
    }

    /// `mu` = number of sources, `gamma` = five times that.
    pub fn for_sources(num_sources: usize) -> Result<Self, CleanupError> {
        Self::new(Gamma::Bounded(DEFAULT_GAMMA_FACTOR * num_sources), num_sources)
    }

    pub fn validate(&self) -> Result<(), CleanupError> {
        if self.mu == 0 {
            return Err(CleanupError::InvalidParams("mu must be at least 1".into()));
        }
        if let Gamma::Bounded(g) = self.gamma {
            if g < self.mu {
                return Err(CleanupError::InvalidParams(format!("gamma {g} is below mu {}", self.mu)));
            }
        }
        if self.pre_cleanup_limit == 0 {
            return Err(CleanupError::InvalidParams("pre-cleanup limit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CleanupPhase {
    PreCleanup,
    MinCut,
    Betweenness,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RemovedEdge {
    pub pair: RecordPair,
    pub phase: CleanupPhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeInfo {
    pub score: f64,
    pub provenance: Provenance,
}

/// Undirected simple graph over every record of a dataset. Nodes are kept
/// in id order so node indices order the same way as record ids.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchGraph {
    nodes: Vec<RecordId>,
    index: HashMap<RecordId, u32>,
    edges: BTreeMap<(u32, u32), EdgeInfo>,
}

impl MatchGraph {
    pub fn new(ids: impl IntoIterator<Item = RecordId>) -> Self {
        let nodes: Vec<RecordId> = ids.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = nodes.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect();
        MatchGraph { nodes, index, edges: BTreeMap::new() }
    }

    fn key(&self, pair: &RecordPair) -> Result<(u32, u32), CleanupError> {
        let idx = |id: &RecordId| self.index.get(id).copied().ok_or_else(|| CleanupError::UnknownRecord(id.clone()));
        Ok((idx(pair.first())?, idx(pair.second())?))
    }

    fn pair_of(&self, (a, b): (u32, u32)) -> RecordPair {
        RecordPair::new(self.nodes[a as usize].clone(), self.nodes[b as usize].clone()).expect("distinct nodes")
    }

    /// Adds or merges an edge: the higher score is kept, provenance unioned.
    pub fn add_edge(&mut self, pair: &RecordPair, info: EdgeInfo) -> Result<(), CleanupError> {
        let key = self.key(pair)?;
        self.edges
            .entry(key)
            .and_modify(|e| {
                e.score = e.score.max(info.score);
                e.provenance = e.provenance.union(info.provenance);
            })
            .or_insert(info);
        Ok(())
    }

    pub fn remove_edge(&mut self, pair: &RecordPair) -> Option<EdgeInfo> {
        let key = self.key(pair).ok()?;
        self.edges.remove(&key)
    }

    pub fn edge(&self, pair: &RecordPair) -> Option<&EdgeInfo> {
        self.key(pair).ok().and_then(|k| self.edges.get(&k))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[RecordId] {
        &self.nodes
    }

    /// Edges in canonical pair order.
    pub fn edges(&self) -> impl Iterator<Item = (RecordPair, &EdgeInfo)> + '_ {
        self.edges.iter().map(|(k, info)| (self.pair_of(*k), info))
    }

    pub fn edge_set(&self) -> BTreeSet<RecordPair> {
        self.edges.keys().map(|k| self.pair_of(*k)).collect()
    }

    fn component_indices(&self) -> Vec<Vec<u32>> {
        let mut parent: Vec<u32> = (0..self.nodes.len() as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        for &(a, b) in self.edges.keys() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb) as usize] = ra.min(rb);
            }
        }
        // Roots are the smallest members, so bucketing in node order gives
        // components ordered by smallest member with sorted members.
        let mut slot: HashMap<u32, usize> = HashMap::new();
        let mut out: Vec<Vec<u32>> = Vec::new();
        for v in 0..self.nodes.len() as u32 {
            let r = find(&mut parent, v);
            let i = *slot.entry(r).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[i].push(v);
        }
        out
    }

    /// Connected components with sorted members, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<RecordId>> {
        self.component_indices()
            .into_iter()
            .map(|c| c.into_iter().map(|v| self.nodes[v as usize].clone()).collect())
            .collect()
    }

    fn local_adjacency(&self, members: &[u32]) -> Vec<Vec<usize>> {
        let local: HashMap<u32, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); members.len()];
        for &(a, b) in self.edges.keys() {
            if let (Some(&x), Some(&y)) = (local.get(&a), local.get(&b)) {
                adj[x].push(y);
                adj[y].push(x);
            }
        }
        adj
    }
}

/// Graph over `all_ids` with one edge per predicted match. Duplicate pairs
/// keep the maximum score and the union of provenance.
pub fn build_graph(
    predictions: &[Prediction],
    all_ids: impl IntoIterator<Item = RecordId>,
) -> Result<MatchGraph, CleanupError> {
    let mut g = MatchGraph::new(all_ids);
    for p in predictions {
        let key = g.key(&p.pair)?;
        if p.label.is_match() {
            let info = EdgeInfo { score: p.score, provenance: p.provenance };
            g.edges
                .entry(key)
                .and_modify(|e| {
                    e.score = e.score.max(info.score);
                    e.provenance = e.provenance.union(info.provenance);
                })
                .or_insert(info);
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PreCleanupReport {
    pub removed: Vec<RemovedEdge>,
    /// Passes that removed at least one edge.
    pub passes: usize,
}

/// Repeatedly deletes edges found only by token overlap from components
/// larger than `limit`, until no oversized component has such edges left.
pub fn pre_cleanup(g: &mut MatchGraph, limit: usize) -> PreCleanupReport {
    let mut report = PreCleanupReport::default();
    loop {
        let mut oversized = vec![false; g.nodes.len()];
        let mut any = false;
        for c in g.component_indices() {
            if c.len() > limit {
                any = true;
                for v in c {
                    oversized[v as usize] = true;
                }
            }
        }
        if !any {
            break;
        }
        let doomed: Vec<(u32, u32)> = g
            .edges
            .iter()
            .filter(|((a, _), info)| oversized[*a as usize] && info.provenance.is_only(BlockingKind::TokenOverlap))
            .map(|(k, _)| *k)
            .collect();
        if doomed.is_empty() {
            break;
        }
        report.passes += 1;
        log::info!("pre-cleanup pass {}: removing {} token-overlap edges", report.passes, doomed.len());
        for k in doomed {
            g.edges.remove(&k);
            report.removed.push(RemovedEdge { pair: g.pair_of(k), phase: CleanupPhase::PreCleanup });
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanupOutcome {
    pub graph: MatchGraph,
    /// Components ordered by smallest member, members sorted.
    pub components: Vec<Vec<RecordId>>,
    /// Removed edges, grouped by input component in component order.
    pub removed: Vec<RemovedEdge>,
}

struct Piece {
    nodes: Vec<u32>,
    adj: Vec<Vec<usize>>,
}

impl Piece {
    /// Drops `cut` and returns the connected pieces in smallest-member order.
    fn split(self, cut: &[(usize, usize)]) -> Vec<Piece> {
        let mut adj = self.adj;
        for &(a, b) in cut {
            adj[a].retain(|&x| x != b);
            adj[b].retain(|&x| x != a);
        }
        let n = self.nodes.len();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        let mut local = vec![0usize; n];
        let mut pieces: Vec<Piece> = (0..count).map(|_| Piece { nodes: Vec::new(), adj: Vec::new() }).collect();
        for u in 0..n {
            let p = &mut pieces[comp[u]];
            local[u] = p.nodes.len();
            p.nodes.push(self.nodes[u]);
        }
        for (u, nbrs) in adj.into_iter().enumerate() {
            pieces[comp[u]].adj.push(nbrs.into_iter().map(|v| local[v]).collect());
        }
        pieces
    }
}

type Removal = (u32, u32, CleanupPhase);

fn clean_component(piece: Piece, params: &CleanupParams) -> (Vec<Vec<u32>>, Vec<Removal>) {
    let mut done = Vec::new();
    let mut removed = Vec::new();
    let mut work = vec![piece];
    while let Some(p) = work.pop() {
        let n = p.nodes.len();
        let (cut, phase) = if params.gamma.exceeded_by(n) {
            (min_edge_cut(&p.adj).expect("oversized piece has at least two nodes"), CleanupPhase::MinCut)
        } else if n > params.mu {
            (max_betweenness_edge(&p.adj).into_iter().collect(), CleanupPhase::Betweenness)
        } else {
            done.push(p.nodes);
            continue;
        };
        debug_assert!(!cut.is_empty());
        removed.extend(cut.iter().map(|&(a, b)| (p.nodes[a], p.nodes[b], phase)));
        let mut parts = p.split(&cut);
        parts.reverse();
        work.extend(parts);
    }
    done.sort_unstable_by_key(|c| c[0]);
    (done, removed)
}

fn run_cleanup(g: &MatchGraph, params: &CleanupParams, parallel: bool) -> CleanupOutcome {
    let comps = g.component_indices();
    let job = |members: Vec<u32>| {
        if members.len() <= params.mu && !params.gamma.exceeded_by(members.len()) {
            return (vec![members], Vec::new());
        }
        let adj = g.local_adjacency(&members);
        clean_component(Piece { nodes: members, adj }, params)
    };
    let results: Vec<(Vec<Vec<u32>>, Vec<Removal>)> =
        if parallel { comps.into_par_iter().map(job).collect() } else { comps.into_iter().map(job).collect() };

    let mut graph = g.clone();
    let mut components = Vec::new();
    let mut removed = Vec::new();
    for (parts, cuts) in results {
        for (a, b, phase) in cuts {
            graph.edges.remove(&(a, b));
            removed.push(RemovedEdge { pair: g.pair_of((a, b)), phase });
        }
        components.extend(parts);
    }
    components.sort_unstable_by_key(|c| c[0]);
    let components =
        components.into_iter().map(|c| c.into_iter().map(|v| g.nodes[v as usize].clone()).collect()).collect();
    CleanupOutcome { graph, components, removed }
}

/// Splits every component larger than `gamma` by minimum edge cuts, then
/// every component larger than `mu` by removing its highest-betweenness
/// edge, one at a time. Components are processed in parallel.
pub fn graph_cleanup(g: &MatchGraph, params: &CleanupParams) -> CleanupOutcome {
    run_cleanup(g, params, true)
}

/// Single-threaded [`graph_cleanup`]; produces identical output.
pub fn graph_cleanup_sequential(g: &MatchGraph, params: &CleanupParams) -> CleanupOutcome {
    run_cleanup(g, params, false)
}

/// Every within-component pair.
pub fn transitive_completion(components: &[Vec<RecordId>]) -> BTreeSet<RecordPair> {
    let mut out = BTreeSet::new();
    for c in components {
        for (i, a) in c.iter().enumerate() {
            for b in &c[i + 1..] {
                if let Ok(p) = RecordPair::new(a.clone(), b.clone()) {
                    out.insert(p);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MatchLabel;

    fn pair(a: &str, b: &str) -> RecordPair {
        RecordPair::new(a.into(), b.into()).unwrap()
    }

    fn graph(nodes: &[&str], edges: &[(&str, &str)], kind: BlockingKind) -> MatchGraph {
        let mut g = MatchGraph::new(nodes.iter().map(|n| RecordId::from(*n)));
        for (a, b) in edges {
            g.add_edge(&pair(a, b), EdgeInfo { score: 1.0, provenance: Provenance::of(kind) }).unwrap();
        }
        g
    }

    fn ids(c: &[Vec<RecordId>]) -> Vec<Vec<&str>> {
        c.iter().map(|m| m.iter().map(|r| r.as_str()).collect()).collect()
    }

    fn pred(a: &str, b: &str, label: MatchLabel, score: f64, kind: BlockingKind) -> Prediction {
        Prediction { pair: pair(a, b), label, score, provenance: Provenance::of(kind) }
    }

    #[test]
    fn gamma_parsing() {
        assert_eq!("inf".parse::<Gamma>().unwrap(), Gamma::Unbounded);
        assert_eq!("25".parse::<Gamma>().unwrap(), Gamma::Bounded(25));
        assert!("-3".parse::<Gamma>().is_err());
        assert_eq!(Gamma::Bounded(25).halved(), Gamma::Bounded(12));
        assert_eq!(Gamma::Unbounded.to_string(), "inf");
    }

    #[test]
    fn params_validation() {
        assert!(CleanupParams::new(Gamma::Bounded(4), 5).is_err());
        assert!(CleanupParams::new(Gamma::Bounded(5), 0).is_err());
        assert!(CleanupParams::new(Gamma::Unbounded, 5).is_ok());
        let p = CleanupParams::for_sources(5).unwrap();
        assert_eq!((p.gamma, p.mu, p.pre_cleanup_limit), (Gamma::Bounded(25), 5, 50));
    }

    #[test]
    fn build_graph_keeps_matches_only() {
        let preds = vec![
            pred("a", "b", MatchLabel::Match, 0.6, BlockingKind::IdOverlap),
            pred("b", "a", MatchLabel::Match, 0.9, BlockingKind::TokenOverlap),
            pred("b", "c", MatchLabel::NoMatch, 0.1, BlockingKind::TokenOverlap),
        ];
        let g = build_graph(&preds, ["a", "b", "c", "d"].map(RecordId::from)).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 1));
        let e = g.edge(&pair("a", "b")).unwrap();
        assert_eq!(e.score, 0.9);
        assert_eq!(e.provenance.to_string(), "IdOverlap+TokenOverlap");
        assert_eq!(ids(&g.connected_components()), [vec!["a", "b"], vec!["c"], vec!["d"]]);
    }

    #[test]
    fn build_graph_rejects_unknown() {
        let preds = vec![pred("a", "zz", MatchLabel::Match, 1.0, BlockingKind::IdOverlap)];
        assert_eq!(build_graph(&preds, [RecordId::from("a")]).unwrap_err(), CleanupError::UnknownRecord("zz".into()));
    }

    #[test]
    fn chain_forms_one_component() {
        let g = graph(
            &["#11", "#21", "#33", "#41"],
            &[("#11", "#21"), ("#21", "#33"), ("#33", "#41")],
            BlockingKind::IdOverlap,
        );
        let comps = g.connected_components();
        assert_eq!(comps.len(), 1);
        let pairs = transitive_completion(&comps);
        assert_eq!(pairs.len(), 6);
        for (a, b) in [("#11", "#33"), ("#11", "#41"), ("#21", "#41")] {
            assert!(pairs.contains(&pair(a, b)));
        }
    }

    #[test]
    fn two_triangles_two_components() {
        let g = graph(
            &["a", "b", "c", "x", "y", "z"],
            &[("a", "b"), ("b", "c"), ("a", "c"), ("x", "y"), ("y", "z"), ("x", "z")],
            BlockingKind::IdOverlap,
        );
        assert_eq!(ids(&g.connected_components()), [vec!["a", "b", "c"], vec!["x", "y", "z"]]);
    }

    fn star(n: usize, kind: BlockingKind) -> MatchGraph {
        let names: Vec<String> = (0..n).map(|i| format!("n{i:03}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let edges: Vec<(&str, &str)> = refs[1..].iter().map(|leaf| (refs[0], *leaf)).collect();
        graph(&refs, &edges, kind)
    }

    #[test]
    fn pre_cleanup_shatters_token_star() {
        let mut g = star(51, BlockingKind::TokenOverlap);
        let report = pre_cleanup(&mut g, 50);
        assert_eq!(g.edge_count(), 0);
        assert_eq!((report.removed.len(), report.passes), (50, 1));
        assert!(report.removed.iter().all(|r| r.phase == CleanupPhase::PreCleanup));
    }

    #[test]
    fn pre_cleanup_boundary_and_guard() {
        let mut g = star(50, BlockingKind::TokenOverlap);
        assert!(pre_cleanup(&mut g, 50).removed.is_empty());
        let mut g = star(60, BlockingKind::IdOverlap);
        assert!(pre_cleanup(&mut g, 50).removed.is_empty());
        assert_eq!(g.edge_count(), 59);
    }

    #[test]
    fn small_components_untouched() {
        let g = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c")], BlockingKind::IdOverlap);
        let out = graph_cleanup(&g, &CleanupParams::new(Gamma::Bounded(25), 5).unwrap());
        assert!(out.removed.is_empty());
        assert_eq!(out.graph, g);
    }

    #[test]
    fn barbell_loses_its_bridge() {
        let names = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let mut edges = Vec::new();
        for block in [&names[..4], &names[4..]] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((block[i], block[j]));
                }
            }
        }
        edges.push(("d", "e"));
        let g = graph(&names, &edges, BlockingKind::IdOverlap);
        let out = graph_cleanup(&g, &CleanupParams::new(Gamma::Bounded(25), 5).unwrap());
        assert_eq!(out.removed, [RemovedEdge { pair: pair("d", "e"), phase: CleanupPhase::Betweenness }]);
        assert_eq!(ids(&out.components), [vec!["a", "b", "c", "d"], vec!["e", "f", "g", "h"]]);
    }

    #[test]
    fn mincut_phase_runs_above_gamma() {
        // Two triangles joined by a bridge, gamma = mu = 3.
        let g = graph(
            &["a", "b", "c", "x", "y", "z"],
            &[("a", "b"), ("b", "c"), ("a", "c"), ("c", "x"), ("x", "y"), ("y", "z"), ("x", "z")],
            BlockingKind::IdOverlap,
        );
        let out = graph_cleanup(&g, &CleanupParams::new(Gamma::Bounded(3), 3).unwrap());
        assert_eq!(out.removed, [RemovedEdge { pair: pair("c", "x"), phase: CleanupPhase::MinCut }]);
        assert_eq!(out.components.len(), 2);
    }

    #[test]
    fn completion_sizes() {
        for k in 0..=6usize {
            let c: Vec<RecordId> = (0..k).map(|i| RecordId::new(format!("r{i}"))).collect();
            assert_eq!(transitive_completion(&[c]).len(), k * k.saturating_sub(1) / 2);
        }
    }

    #[test]
    fn phase_serializes_lowercase() {
        assert_eq!(serde_json::to_string(&CleanupPhase::MinCut).unwrap(), "\"mincut\"");
        assert_eq!(serde_json::to_string(&CleanupPhase::PreCleanup).unwrap(), "\"precleanup\"");
    }
}
