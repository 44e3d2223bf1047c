//! Self-avoiding-walk trees.
//!
//! Nodes live in an arena in breadth-first order, so the children of every
//! node form a contiguous index range and every parent precedes its
//! children. A reverse scan of the arena is therefore a valid post-order.

use std::fmt::Write as _;
use std::ops::Range;

use thiserror::Error;

use crate::graph::{GraphError, Vertex};
use crate::spin::{Boundary, EdgePotential, Spin, SpinSystem, VertexField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Free,
    Fixed(Spin),
    /// Free node cut off by the depth limit before its children were built.
    Truncated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SawNode {
    pub origin: Vertex,
    pub status: NodeStatus,
    pub parent: Option<usize>,
    pub depth: usize,
    pub children: Range<usize>,
    pub field: VertexField,
    /// Potential of the edge to the parent, read as `β(σ_parent, σ_self)`.
    pub parent_potential: Option<EdgePotential>,
    /// True for the fixed leaf that repeats a vertex of its root path.
    pub closes_cycle: bool,
}

impl SawNode {
    pub fn is_fixed(&self) -> bool {
        matches!(self.status, NodeStatus::Fixed(_))
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SawError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("node {0} is not in the tree")]
    NoSuchNode(usize),
    #[error("node {child} is not a child of node {parent}")]
    NotAnEdge { parent: usize, child: usize },
    #[error("subtree below node {0} is truncated and cannot be summed exactly")]
    TruncatedSubtree(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SawTree {
    root_vertex: Vertex,
    boundary: Boundary,
    depth_limit: Option<usize>,
    source_vertices: usize,
    nodes: Vec<SawNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TreeStats {
    pub node_count: usize,
    /// Number of nodes at each depth, starting with the root.
    pub sphere_sizes: Vec<usize>,
    pub max_depth: usize,
}

/// Builds the self-avoiding-walk tree of `system` rooted at `root`.
///
/// A walk that reaches a vertex `w` already on it ends in a leaf fixed to
/// `+` when the closing edge exceeds the edge that left `w` on the walk
/// (see [`crate::graph::Graph::compare_edges`]), and to `-` otherwise.
/// Vertices in `boundary` become fixed leaves. With a `depth_limit`, free
/// nodes at that depth that would have children are marked
/// [`NodeStatus::Truncated`] and nothing deeper is built.
pub fn build_saw_tree(
    system: &SpinSystem,
    root: Vertex,
    boundary: &Boundary,
    depth_limit: Option<usize>,
) -> Result<SawTree, SawError> {
    let g = system.graph();
    let n = g.vertex_count();
    for v in std::iter::once(root).chain(boundary.iter().map(|(v, _)| v)) {
        if v >= n {
            return Err(GraphError::VertexOutOfRange { vertex: v, n }.into());
        }
    }
    let fixed = boundary.to_dense(n);
    let mut nodes = vec![SawNode {
        origin: root,
        status: fixed[root].map_or(NodeStatus::Free, NodeStatus::Fixed),
        parent: None,
        depth: 0,
        children: 0..0,
        field: system.field(root),
        parent_potential: None,
        closes_cycle: false,
    }];
    let mut walk = Vec::new();
    let mut cycle_leaves = Vec::new();
    let mut i = 0;
    while i < nodes.len() {
        let (u, depth, parent) = (nodes[i].origin, nodes[i].depth, nodes[i].parent);
        if nodes[i].status != NodeStatus::Free {
            i += 1;
            continue;
        }
        let parent_vertex = parent.map(|p| nodes[p].origin);
        if depth_limit.is_some_and(|limit| depth >= limit) {
            if g.neighbors(u).iter().any(|&w| Some(w) != parent_vertex) {
                nodes[i].status = NodeStatus::Truncated;
            }
            i += 1;
            continue;
        }
        // Root path, from this node back to the root.
        walk.clear();
        let mut cursor = Some(i);
        while let Some(c) = cursor {
            walk.push(nodes[c].origin);
            cursor = nodes[c].parent;
        }
        let start = nodes.len();
        cycle_leaves.clear();
        for (&w, &edge) in g.neighbors(u).iter().zip(g.incident_edges(u)) {
            if Some(w) == parent_vertex {
                continue;
            }
            let potential = system.oriented(edge, u);
            let status = match walk.iter().position(|&x| x == w) {
                Some(pos) => {
                    // walk[pos - 1] is the vertex the walk moved to after w.
                    let next = walk[pos - 1];
                    let spin = if g.compare_edges((u, w), (w, next)).is_gt() { Spin::Plus } else { Spin::Minus };
                    cycle_leaves.push((w, potential, spin));
                    continue;
                }
                None => fixed[w].map_or(NodeStatus::Free, NodeStatus::Fixed),
            };
            nodes.push(SawNode {
                origin: w,
                status,
                parent: Some(i),
                depth: depth + 1,
                children: 0..0,
                field: system.field(w),
                parent_potential: Some(potential),
                closes_cycle: false,
            });
        }
        for &(w, potential, spin) in &cycle_leaves {
            nodes.push(SawNode {
                origin: w,
                status: NodeStatus::Fixed(spin),
                parent: Some(i),
                depth: depth + 1,
                children: 0..0,
                field: system.field(w),
                parent_potential: Some(potential),
                closes_cycle: true,
            });
        }
        nodes[i].children = start..nodes.len();
        i += 1;
    }
    Ok(SawTree { root_vertex: root, boundary: boundary.clone(), depth_limit, source_vertices: n, nodes })
}

impl SawTree {
    /// Assembles a tree from an arena that already satisfies the layout
    /// invariants (breadth-first, contiguous children).
    pub(crate) fn from_nodes(
        root_vertex: Vertex,
        boundary: Boundary,
        depth_limit: Option<usize>,
        source_vertices: usize,
        nodes: Vec<SawNode>,
    ) -> Self {
        Self { root_vertex, boundary, depth_limit, source_vertices, nodes }
    }

    pub fn root_vertex(&self) -> Vertex {
        self.root_vertex
    }

    pub fn root(&self) -> &SawNode {
        &self.nodes[0]
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn depth_limit(&self) -> Option<usize> {
        self.depth_limit
    }

    /// Vertex count of the graph the tree was built from.
    pub fn source_vertex_count(&self) -> usize {
        self.source_vertices
    }

    pub fn nodes(&self) -> &[SawNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Option<&SawNode> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn height(&self) -> usize {
        self.nodes.last().map_or(0, |n| n.depth)
    }

    pub fn children(&self, id: usize) -> &[SawNode] {
        &self.nodes[self.nodes[id].children.clone()]
    }

    /// Node ids from the root down to `id`.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut cursor = self.nodes[id].parent;
        while let Some(p) = cursor {
            path.push(p);
            cursor = self.nodes[p].parent;
        }
        path.reverse();
        path
    }

    pub fn has_truncation(&self) -> bool {
        self.nodes.iter().any(|n| n.status == NodeStatus::Truncated)
    }

    /// Node ids at exactly `depth`. Contiguous because of the layout.
    pub fn level(&self, depth: usize) -> Range<usize> {
        let start = self.nodes.partition_point(|n| n.depth < depth);
        let end = self.nodes.partition_point(|n| n.depth <= depth);
        start..end
    }

    pub fn stats(&self) -> TreeStats {
        tree_stats(self)
    }

    /// Indented text outline, one node per line.
    pub fn to_outline(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let _ = writeln!(out, "{}{}", "  ".repeat(node.depth), node_label(node));
            stack.extend(node.children.clone().rev());
        }
        out
    }

    /// Graphviz description; node labels carry the origin vertex and status.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph saw {\n");
        for (id, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "  n{id} [label=\"{}\"];", node_label(node));
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                let _ = writeln!(out, "  n{p} -> n{id};");
            }
        }
        out.push_str("}\n");
        out
    }
}

fn node_label(node: &SawNode) -> String {
    match node.status {
        NodeStatus::Free => format!("{}", node.origin),
        NodeStatus::Fixed(s) => format!("{} {s}", node.origin),
        NodeStatus::Truncated => format!("{} ...", node.origin),
    }
}

pub fn tree_stats(tree: &SawTree) -> TreeStats {
    let max_depth = tree.height();
    let mut sphere_sizes = vec![0; max_depth + 1];
    for node in &tree.nodes {
        sphere_sizes[node.depth] += 1;
    }
    TreeStats { node_count: tree.nodes.len(), sphere_sizes, max_depth }
}
