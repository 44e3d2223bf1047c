//! Simple undirected graphs, a total vertex order, BFS distances and the
//! path-based sparsity measures (maximal path density, maximum average
//! path degree, maximum average degree).
//!
//! Path enumeration in [`Graph::maximal_path_density`] is exhaustive and
//! therefore exponential in the length budget. Callers keep budgets small
//! (logarithmic in the vertex count).

use std::cmp::Ordering;
use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vertex = usize;
pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("parallel edge ({0}, {1})")]
    ParallelEdge(Vertex, Vertex),
    #[error("vertex order is not a permutation of 0..{0}")]
    BadOrder(usize),
    #[error("path-length budget must be at least 1")]
    ZeroRadius,
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

/// A simple undirected graph on vertices `0..n`.
///
/// Edges are stored once with endpoints `(lo, hi)`, `lo < hi`, sorted
/// lexicographically; the edge id is the position in that list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    incident: Vec<Vec<EdgeId>>,
    edges: Vec<(Vertex, Vertex)>,
    rank: Vec<usize>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            incident: vec![Vec::new(); n],
            edges: Vec::new(),
            rank: (0..n).collect(),
        }
    }

    /// Builds a graph from an edge list. Endpoint order within a pair is
    /// irrelevant; duplicates and self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::ParallelEdge(w[0].0, w[0].1));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
        }
        let incident = adjacency
            .iter()
            .enumerate()
            .map(|(u, list)| {
                list.iter().map(|&v| normalized.binary_search(&(u.min(v), u.max(v))).expect("edge present")).collect()
            })
            .collect();
        Ok(Self { adjacency, incident, edges: normalized, rank: (0..n).collect() })
    }

    /// Replaces the default label order. `order[k]` is the `k`-th vertex.
    pub fn with_vertex_order(mut self, order: &[Vertex]) -> Result<Self, GraphError> {
        let n = self.vertex_count();
        if order.len() != n {
            return Err(GraphError::BadOrder(n));
        }
        let mut rank = vec![usize::MAX; n];
        for (k, &v) in order.iter().enumerate() {
            if v >= n || rank[v] != usize::MAX {
                return Err(GraphError::BadOrder(n));
            }
            rank[v] = k;
        }
        self.rank = rank;
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    /// Edge ids parallel to [`Graph::neighbors`].
    pub fn incident_edges(&self, v: Vertex) -> &[EdgeId] {
        &self.incident[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_between(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        self.adjacency[u].binary_search(&v).ok().map(|k| self.incident[u][k])
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v < self.vertex_count()
    }

    /// Position of `v` in the vertex order.
    pub fn rank(&self, v: Vertex) -> usize {
        self.rank[v]
    }

    /// Vertices listed in the vertex order.
    pub fn vertex_order(&self) -> Vec<Vertex> {
        let mut order: Vec<Vertex> = (0..self.vertex_count()).collect();
        order.sort_by_key(|&v| self.rank[v]);
        order
    }

    /// Total order on edges induced by the vertex order: compare the sum of
    /// endpoint ranks, then the sorted rank pair lexicographically. For two
    /// edges sharing a vertex this is exactly the comparison of their other
    /// endpoints.
    pub fn compare_edges(&self, e: (Vertex, Vertex), f: (Vertex, Vertex)) -> Ordering {
        let key = |(u, v): (Vertex, Vertex)| {
            let (a, b) = (self.rank[u], self.rank[v]);
            (a + b, a.min(b), a.max(b))
        };
        key(e).cmp(&key(f))
    }

    fn check(&self, v: Vertex) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange { vertex: v, n: self.vertex_count() })
        }
    }

    /// BFS distances from `source`; `None` marks unreachable vertices.
    pub fn distances_from(&self, source: Vertex) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Shortest-path length, or `None` when `v` is unreachable from `u`.
    pub fn distance(&self, u: Vertex, v: Vertex) -> Result<Option<usize>, GraphError> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.distances_from(u)[v])
    }

    /// Vertices within distance `l` of `v`, sorted.
    pub fn ball(&self, v: Vertex, l: usize) -> Result<Vec<Vertex>, GraphError> {
        self.check(v)?;
        Ok(self
            .distances_from(v)
            .iter()
            .enumerate()
            .filter(|(_, d)| matches!(d, Some(d) if *d <= l))
            .map(|(u, _)| u)
            .collect())
    }

    /// Vertices at distance exactly `l` from `v`, sorted.
    pub fn sphere(&self, v: Vertex, l: usize) -> Result<Vec<Vertex>, GraphError> {
        self.check(v)?;
        Ok(self.distances_from(v).iter().enumerate().filter(|(_, d)| **d == Some(l)).map(|(u, _)| u).collect())
    }

    /// Maximum, over self-avoiding paths starting at `v` with at most `l`
    /// edges, of the sum of vertex degrees along the path. The single-vertex
    /// path counts, so the result is at least `deg(v)`.
    pub fn maximal_path_density(&self, v: Vertex, l: usize) -> Result<usize, GraphError> {
        self.check(v)?;
        let mut on_path = vec![false; self.vertex_count()];
        on_path[v] = true;
        Ok(self.path_density_dfs(v, l, self.degree(v), &mut on_path))
    }

    fn path_density_dfs(&self, u: Vertex, budget: usize, acc: usize, on_path: &mut [bool]) -> usize {
        let mut best = acc;
        if budget == 0 {
            return best;
        }
        for &w in &self.adjacency[u] {
            if on_path[w] {
                continue;
            }
            on_path[w] = true;
            best = best.max(self.path_density_dfs(w, budget - 1, acc + self.degree(w), on_path));
            on_path[w] = false;
        }
        best
    }

    /// `(m(G, v, l) - deg(v)) / l`.
    pub fn avg_path_degree(&self, v: Vertex, l: usize) -> Result<f64, GraphError> {
        if l == 0 {
            return Err(GraphError::ZeroRadius);
        }
        let m = self.maximal_path_density(v, l)?;
        Ok((m - self.degree(v)) as f64 / l as f64)
    }

    /// Maximum average degree at radius `l`; `0` for the empty graph.
    pub fn max_avg_degree(&self, l: usize) -> Result<f64, GraphError> {
        if l == 0 {
            return Err(GraphError::ZeroRadius);
        }
        let mut best = 0.0f64;
        for v in 0..self.vertex_count() {
            best = best.max(self.avg_path_degree(v, l)?);
        }
        Ok(best)
    }

    pub fn sparsity_report(&self, v: Vertex, l: usize) -> Result<SparsityReport, GraphError> {
        Ok(SparsityReport {
            vertex: v,
            radius: l,
            path_density: self.maximal_path_density(v, l)?,
            avg_path_degree: self.avg_path_degree(v, l)?,
            max_avg_degree: self.max_avg_degree(l)?,
        })
    }

    /// Same graph with vertices renamed by `perm` (`v -> perm[v]`).
    pub fn relabeled(&self, perm: &[Vertex]) -> Result<Graph, GraphError> {
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Graph::from_edges(self.vertex_count(), &edges)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub vertex: Vertex,
    pub radius: usize,
    /// `m(G, v, l)`.
    pub path_density: usize,
    /// `δ(G, v, l)`.
    pub avg_path_degree: f64,
    /// `Δ(G, l)`.
    pub max_avg_degree: f64,
}

/// Graph families available to [`generate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Path {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Complete {
        n: usize,
    },
    RandomRegular {
        n: usize,
        d: usize,
    },
    ErdosRenyi {
        n: usize,
        p: f64,
    },
    CompleteBinaryTree {
        depth: usize,
    },
    /// Root of degree `degree`, every internal vertex of degree `degree`.
    RegularTree {
        degree: usize,
        depth: usize,
    },
}

const RANDOM_REGULAR_ATTEMPTS: usize = 10_000;

/// Deterministic given `(kind, seed)`.
pub fn generate(kind: &GraphKind, seed: u64) -> Result<Graph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *kind {
        GraphKind::Path { n } => {
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Cycle { n } => {
            if n < 3 {
                return Err(GraphError::Infeasible(format!("cycle needs n >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Complete { n } => {
            let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::RandomRegular { n, d } => random_regular(n, d, &mut rng),
        GraphKind::ErdosRenyi { n, p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphError::Infeasible(format!("edge probability {p} not in [0, 1]")));
            }
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, &edges)
        }
        GraphKind::CompleteBinaryTree { depth } => regular_tree(2, 3, depth),
        GraphKind::RegularTree { degree, depth } => {
            if degree < 1 {
                return Err(GraphError::Infeasible("tree degree must be >= 1".into()));
            }
            regular_tree(degree, degree, depth)
        }
    }
}

/// Tree whose root has `root_children` children and every other internal
/// vertex has `degree - 1` children; leaves sit at `depth`.
fn regular_tree(root_children: usize, degree: usize, depth: usize) -> Result<Graph, GraphError> {
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let mut next_id = 1usize;
    for level in 0..depth {
        let fanout = if level == 0 { root_children } else { degree - 1 };
        let mut next = Vec::with_capacity(frontier.len() * fanout);
        for &parent in &frontier {
            for _ in 0..fanout {
                edges.push((parent, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    Graph::from_edges(next_id, &edges)
}

/// Configuration model with rejection of self-loops and parallel edges.
fn random_regular(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Graph, GraphError> {
    if !(n * d).is_multiple_of(2) {
        return Err(GraphError::Infeasible(format!("n*d must be even (n={n}, d={d})")));
    }
    if d >= n && !(d == 0 && n == 0) {
        return Err(GraphError::Infeasible(format!("degree {d} requires more than {n} vertices")));
    }
    let mut stubs: Vec<Vertex> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..RANDOM_REGULAR_ATTEMPTS {
        stubs.shuffle(rng);
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        return Graph::from_edges(n, &edges);
    }
    Err(GraphError::Infeasible(format!(
        "no simple {d}-regular pairing on {n} vertices after {RANDOM_REGULAR_ATTEMPTS} attempts"
    )))
}
