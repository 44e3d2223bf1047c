//! Root marginals of tree systems.
//!
//! The log-ratio `r = ln(p / (1 - p))` is propagated upward. A child with
//! log-ratio `r` adds `ln((a e^r + b) / (c e^r + d))` to its parent, where
//! `(a, b, c, d)` are the weights of the parent-to-child edge; fixed
//! children (`r = ±inf`) reduce to `ln(a/c)` and `ln(b/d)`.
//!
//! The probability form `g = 1 / (1 + λ ∏ f(x_j))` with
//! `f(x) = (Mx + d) / (Nx + b)` lives in [`EdgeMaps`] and [`vertex_g`].

use serde::{Deserialize, Serialize};

use crate::numeric::{ln_add_exp, logistic, logit};
use crate::saw::{NodeStatus, SawError, SawNode, SawTree};
use crate::spin::{EdgePotential, Spin, VertexField};

/// Value assigned to cut-off nodes by [`truncated_root_marginal`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitRule {
    Zero,
    #[default]
    Half,
    One,
    /// Caller-supplied probability in `[0, 1]`.
    Value(f64),
}

impl InitRule {
    pub const STANDARD: [InitRule; 3] = [InitRule::Zero, InitRule::Half, InitRule::One];

    pub fn probability(self) -> f64 {
        match self {
            InitRule::Zero => 0.0,
            InitRule::Half => 0.5,
            InitRule::One => 1.0,
            InitRule::Value(x) => x.clamp(0.0, 1.0),
        }
    }

    pub fn log_ratio(self) -> f64 {
        logit(self.probability())
    }
}

impl std::str::FromStr for InitRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" | "zero" => Ok(InitRule::Zero),
            "0.5" | "1/2" | "half" => Ok(InitRule::Half),
            "1" | "one" => Ok(InitRule::One),
            other => match other.parse::<f64>() {
                Ok(x) if (0.0..=1.0).contains(&x) => Ok(InitRule::Value(x)),
                _ => Err(format!("init must be 0, 1/2, 1 or a probability, got {other:?}")),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalResult {
    pub p_plus: f64,
    pub log_ratio: f64,
    /// `None` for an exact evaluation.
    pub depth_used: Option<usize>,
    pub error_bound: Option<f64>,
}

impl MarginalResult {
    pub fn from_log_ratio(log_ratio: f64, depth_used: Option<usize>) -> Self {
        Self { p_plus: logistic(log_ratio), log_ratio, depth_used, error_bound: None }
    }

    pub fn with_error_bound(mut self, bound: f64) -> Self {
        self.error_bound = Some(bound);
        self
    }

    /// `ln p_plus`, accurate for tiny probabilities.
    pub fn ln_p_plus(&self) -> f64 {
        -crate::numeric::softplus(-self.log_ratio)
    }
}

/// Contribution of a child with log-ratio `r` to its parent's log-ratio.
#[inline]
pub fn edge_message(p: &EdgePotential, r: f64) -> f64 {
    if r == f64::INFINITY {
        p.beta_pp - p.beta_mp
    } else if r == f64::NEG_INFINITY {
        p.beta_pm - p.beta_mm
    } else {
        ln_add_exp(p.beta_pp + r, p.beta_pm) - ln_add_exp(p.beta_mp + r, p.beta_mm)
    }
}

fn fixed_log_ratio(s: Spin) -> f64 {
    match s {
        Spin::Plus => f64::INFINITY,
        Spin::Minus => f64::NEG_INFINITY,
    }
}

/// Log-ratios of every node at depth `<= cutoff`, bottom-up.
///
/// Non-fixed nodes at the cutoff depth take `cut(id, node)` when it returns
/// a value; otherwise they must be childless free leaves.
pub(crate) fn log_ratios(
    tree: &SawTree,
    cutoff: usize,
    cut: &dyn Fn(usize, &SawNode) -> Option<f64>,
) -> Result<Vec<f64>, SawError> {
    let nodes = tree.nodes();
    let end = tree.level(cutoff).end;
    let mut r = vec![0.0; end];
    for id in (0..end).rev() {
        let node = &nodes[id];
        r[id] = match node.status {
            NodeStatus::Fixed(s) => fixed_log_ratio(s),
            _ if node.depth == cutoff && cut(id, node).is_some() => cut(id, node).unwrap(),
            NodeStatus::Truncated => return Err(SawError::TruncatedSubtree(id)),
            _ if node.depth == cutoff && !node.is_leaf() => return Err(SawError::TruncatedSubtree(id)),
            _ => {
                let mut acc = node.field.h_plus - node.field.h_minus;
                for c in node.children.clone() {
                    let p = nodes[c].parent_potential.as_ref().expect("child edge");
                    acc += edge_message(p, r[c]);
                }
                acc
            }
        };
    }
    Ok(r)
}

/// Exact root marginal. Fails if the tree contains truncated nodes.
pub fn exact_root_marginal(tree: &SawTree) -> Result<MarginalResult, SawError> {
    let r = log_ratios(tree, tree.height(), &|_, _| None)?;
    Ok(MarginalResult::from_log_ratio(r[0], None))
}

/// Root marginal with every non-fixed node at depth `t` that has (or would
/// have) children replaced by `init`. For `t >= height` on an untruncated
/// tree this is the exact computation.
pub fn truncated_root_marginal(tree: &SawTree, t: usize, init: InitRule) -> Result<MarginalResult, SawError> {
    let value = init.log_ratio();
    let cutoff = t.min(tree.height());
    let r = log_ratios(tree, cutoff, &|_, node| {
        (node.status == NodeStatus::Truncated || !node.is_leaf()).then_some(value)
    })?;
    Ok(MarginalResult::from_log_ratio(r[0], Some(t)))
}

/// Root log-ratio with nodes at depth `t` pinned individually by `pin`.
/// Nodes at depth `t` for which `pin` returns `None` keep their own value.
pub fn pinned_root_log_ratio(
    tree: &SawTree,
    t: usize,
    pin: &dyn Fn(usize, &SawNode) -> Option<f64>,
) -> Result<f64, SawError> {
    Ok(log_ratios(tree, t.min(tree.height()), pin)?[0])
}

/// Ids of the nodes at depth `t` whose value a truncation at `t` replaces.
pub fn cut_nodes(tree: &SawTree, t: usize) -> Vec<usize> {
    tree.level(t)
        .filter(|&id| {
            let n = &tree.nodes()[id];
            n.status == NodeStatus::Truncated || (n.status == NodeStatus::Free && !n.is_leaf())
        })
        .collect()
}

/// Per-node log partition functions `(ln Z(+), ln Z(-))` of the subtree
/// below `top`. Fixed nodes carry no field.
fn subtree_log_partition(tree: &SawTree, top: usize) -> Result<[f64; 2], SawError> {
    let nodes = tree.nodes();
    let mut order = vec![top];
    let mut k = 0;
    while k < order.len() {
        order.extend(nodes[order[k]].children.clone());
        k += 1;
    }
    let mut z = std::collections::HashMap::with_capacity(order.len());
    for &id in order.iter().rev() {
        let node = &nodes[id];
        let value = match node.status {
            NodeStatus::Fixed(Spin::Plus) => [0.0, f64::NEG_INFINITY],
            NodeStatus::Fixed(Spin::Minus) => [f64::NEG_INFINITY, 0.0],
            NodeStatus::Truncated => return Err(SawError::TruncatedSubtree(id)),
            NodeStatus::Free => {
                let mut acc = [node.field.h_plus, node.field.h_minus];
                for c in node.children.clone() {
                    let zc: [f64; 2] = z[&c];
                    let p = nodes[c].parent_potential.as_ref().expect("child edge");
                    for (slot, s) in Spin::BOTH.into_iter().enumerate() {
                        acc[slot] += ln_add_exp(p.get(s, Spin::Plus) + zc[0], p.get(s, Spin::Minus) + zc[1]);
                    }
                }
                acc
            }
        };
        z.insert(id, value);
    }
    Ok(z[&top])
}

/// Removes the subtree below `child` and folds its exact contribution into
/// the field of `parent`: `h'(σ) = h(σ) + ln Σ_τ exp(β(σ, τ)) Z_child(τ)`.
pub fn collapse_subtree(tree: &SawTree, parent: usize, child: usize) -> Result<SawTree, SawError> {
    let nodes = tree.nodes();
    if parent >= nodes.len() {
        return Err(SawError::NoSuchNode(parent));
    }
    if child >= nodes.len() {
        return Err(SawError::NoSuchNode(child));
    }
    if nodes[child].parent != Some(parent) {
        return Err(SawError::NotAnEdge { parent, child });
    }
    let zc = subtree_log_partition(tree, child)?;
    let p = nodes[child].parent_potential.as_ref().expect("child edge");
    let old = nodes[parent].field;
    let shift = |s: Spin| ln_add_exp(p.get(s, Spin::Plus) + zc[0], p.get(s, Spin::Minus) + zc[1]);
    let new_field = VertexField::new(old.h_plus + shift(Spin::Plus), old.h_minus + shift(Spin::Minus));

    // Breadth-first copy that skips the removed subtree.
    let mut out: Vec<SawNode> = Vec::with_capacity(nodes.len());
    let mut source: Vec<usize> = vec![0];
    let mut root = nodes[0].clone();
    root.parent = None;
    out.push(root);
    let mut k = 0;
    while k < out.len() {
        let old_id = source[k];
        let start = out.len();
        for c in nodes[old_id].children.clone() {
            if c == child {
                continue;
            }
            let mut node = nodes[c].clone();
            node.parent = Some(k);
            out.push(node);
            source.push(c);
        }
        out[k].children = start..out.len();
        if old_id == parent {
            out[k].field = new_field;
        }
        k += 1;
    }
    Ok(SawTree::from_nodes(
        tree.root_vertex(),
        tree.boundary().clone(),
        tree.depth_limit(),
        tree.source_vertex_count(),
        out,
    ))
}

/// Bound on `|p^ζ - p^η|` at the root for two conditions that differ only
/// on non-fixed nodes at depth `t`: the sum over those nodes of
/// `∏ γ_e · sup g(1-g)` along the root path, with each supremum taken over
/// the range the node's children can reach. Never larger than
/// `γ^t · s / 4^t`.
pub fn marginal_difference_bound(tree: &SawTree, t: usize) -> f64 {
    marginal_difference_bound_over(
        tree,
        t,
        &tree.level(t).filter(|&id| !tree.nodes()[id].is_fixed()).collect::<Vec<_>>(),
    )
}

/// [`marginal_difference_bound`] restricted to the given depth-`t` nodes.
pub fn marginal_difference_bound_over(tree: &SawTree, t: usize, targets: &[usize]) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    let nodes = tree.nodes();
    let end = tree.level(t).end;
    let mut weight = vec![0.0; end];
    weight[0] = 1.0;
    for id in 0..tree.level(t).start {
        let node = &nodes[id];
        if node.is_fixed() || weight[id] == 0.0 {
            continue;
        }
        let sup = sup_g_one_minus_g(tree, node);
        for c in node.children.clone() {
            let p = nodes[c].parent_potential.as_ref().expect("child edge");
            weight[c] = weight[id] * sup * p.gamma();
        }
    }
    targets.iter().map(|&k| weight[k]).sum()
}

/// Path-wise bound on `|ln R^ζ - ln R^η|` for conditions differing only at
/// the given depth-`t` nodes: `Σ 4|J_k| ∏ tanh|J_e|`. Valid on any tree.
pub fn log_ratio_difference_bound(tree: &SawTree, t: usize, targets: &[usize]) -> f64 {
    if t == 0 {
        return if targets.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let nodes = tree.nodes();
    let end = tree.level(t).end;
    let mut weight = vec![0.0; end];
    weight[0] = 1.0;
    for id in 0..end {
        let Some(parent) = nodes[id].parent else { continue };
        let j = nodes[id].parent_potential.as_ref().expect("child edge").coupling().abs();
        weight[id] = weight[parent] * if nodes[id].depth == t { 4.0 * j } else { j.tanh() };
    }
    targets.iter().map(|&k| weight[k]).sum()
}

/// `sup r / (1 + r)^2` over `r = λ ∏ f_j(x_j)` with free children ranging
/// over `x_j ∈ [0, 1]` and fixed children pinned.
fn sup_g_one_minus_g(tree: &SawTree, node: &SawNode) -> f64 {
    let mut lo = node.field.h_minus - node.field.h_plus;
    let mut hi = lo;
    for child in tree.children_of(node) {
        let p = child.parent_potential.as_ref().expect("child edge");
        let at_plus = p.beta_mp - p.beta_pp;
        let at_minus = p.beta_mm - p.beta_pm;
        let (l, h) = match child.status {
            NodeStatus::Fixed(Spin::Plus) => (at_plus, at_plus),
            NodeStatus::Fixed(Spin::Minus) => (at_minus, at_minus),
            _ => (at_plus.min(at_minus), at_plus.max(at_minus)),
        };
        lo += l;
        hi += h;
    }
    if lo <= 0.0 && 0.0 <= hi {
        0.25
    } else {
        let x = if hi < 0.0 { hi } else { lo };
        logistic(x) * logistic(-x)
    }
}

/// Edge maps `f`, `h` of the probability-form recursion for one oriented
/// edge (parent to child).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeMaps {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl EdgeMaps {
    pub fn new(p: &EdgePotential) -> Self {
        let (a, b, c, d) = p.weights();
        Self { a, b, c, d }
    }

    /// `f(x) = (Mx + d) / (Nx + b)`, `M = c - d`, `N = a - b`.
    pub fn f(&self, x: f64) -> f64 {
        ((self.c - self.d) * x + self.d) / ((self.a - self.b) * x + self.b)
    }

    /// `h(x) = (ad - bc) / ((Mx + d)(Nx + b))`.
    pub fn h(&self, x: f64) -> f64 {
        (self.a * self.d - self.b * self.c) / (((self.c - self.d) * x + self.d) * ((self.a - self.b) * x + self.b))
    }

    /// `max(|bc - ad| / (ac), |bc - ad| / (bd))`.
    pub fn gamma(&self) -> f64 {
        let delta = (self.b * self.c - self.a * self.d).abs();
        (delta / (self.a * self.c)).max(delta / (self.b * self.d))
    }
}

/// `g(x) = 1 / (1 + λ ∏ f_j(x_j))`.
pub fn vertex_g(lambda: f64, maps: &[EdgeMaps], xs: &[f64]) -> f64 {
    let prod: f64 = maps.iter().zip(xs).map(|(m, &x)| m.f(x)).product();
    1.0 / (1.0 + lambda * prod)
}

/// `∂g/∂x_i = g (1 - g) h_i(x_i)`.
pub fn vertex_g_partial(lambda: f64, maps: &[EdgeMaps], xs: &[f64], i: usize) -> f64 {
    let g = vertex_g(lambda, maps, xs);
    g * (1.0 - g) * maps[i].h(xs[i])
}

impl SawTree {
    pub(crate) fn children_of<'a>(&'a self, node: &SawNode) -> &'a [SawNode] {
        &self.nodes()[node.children.clone()]
    }
}
