//! Partition-function estimate by sequential conditioning.
//!
//! Vertices are visited in the graph's vertex order. Vertex `j` is
//! estimated under the condition that every earlier vertex holds its
//! conditioning spin, using a truncated self-avoiding-walk tree, and
//! `ln Ẑ = ln w(σ) - Σ_j ln p̂_j(σ_j)` where `σ` is the all-conditioned
//! configuration. Each `p̂_j` depends only on its own condition, so the
//! vertices run in parallel and are summed afterwards in order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Vertex;
use crate::marginal::{
    cut_nodes, log_ratio_difference_bound, marginal_difference_bound_over, truncated_root_marginal, InitRule,
};
use crate::mixing::{classify_mixing, classify_mixing_relaxed, DecayBound, Regime};
use crate::numeric::{logistic, softplus};
use crate::saw::{build_saw_tree, SawError};
use crate::spin::{derive_parameters, Boundary, Spin, SpinSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FptasError {
    #[error("no mixing regime applies at d = {0}; supply a depth override")]
    NoRegime(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("estimated marginal at vertex {0} is zero")]
    ZeroMarginal(Vertex),
    #[error(transparent)]
    Tree(#[from] SawError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthChoice {
    /// Depth from the decay function of the applicable regime.
    #[default]
    Auto,
    Fixed(usize),
    /// Untruncated trees; exact but exponential on graphs with cycles.
    Full,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    /// Prefactor scaled by each vertex's own degree.
    #[default]
    PerVertex,
    /// Prefactor scaled by the maximum degree for every vertex.
    Global,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Every earlier vertex fixed to `+`.
    #[default]
    Plus,
    /// Earlier vertices fixed to the sign of their own field (`+` on ties).
    FieldSign,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FptasConfig {
    pub epsilon: f64,
    pub depth: DepthChoice,
    /// Degree parameter for the mixing conditions.
    pub d_parameter: f64,
    pub init: InitRule,
    pub depth_mode: DepthMode,
    pub conditioning: Conditioning,
    /// Use the per-vertex field condition for bounded-degree graphs.
    pub relaxed: bool,
}

impl FptasConfig {
    pub fn new(epsilon: f64, d_parameter: f64) -> Self {
        Self {
            epsilon,
            depth: DepthChoice::Auto,
            d_parameter,
            init: InitRule::Half,
            depth_mode: DepthMode::PerVertex,
            conditioning: Conditioning::Plus,
            relaxed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexReport {
    pub vertex: Vertex,
    pub spin: Spin,
    /// Estimate of `P(X_j = spin | earlier vertices conditioned)`.
    pub p_hat: f64,
    pub ln_p_hat: f64,
    /// `None` for an untruncated tree.
    pub depth: Option<usize>,
    /// Certified bound on `|ln p_j - ln p̂_j|`.
    pub error_bound: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FptasResult {
    pub log_z_hat: f64,
    pub epsilon: f64,
    pub base_log_weight: f64,
    pub regime: Regime,
    pub bound: DecayBound,
    /// `Σ_j` of the per-vertex certified bounds; bounds `|ln Ẑ - ln Z|`.
    pub certified_error: f64,
    pub guarantee_met: bool,
    pub total_nodes: usize,
    pub max_nodes: usize,
    pub per_vertex: Vec<VertexReport>,
}

/// `Σ_e β_e(+,+) + Σ_v h_v(+)`.
pub fn base_log_weight(system: &SpinSystem) -> f64 {
    system.log_weight(&vec![Spin::Plus; system.vertex_count()])
}

/// Smallest `t >= 1` with `prefactor · rate^(t-1) <= ε / (4n)`:
/// `t = ⌈1 + ln(prefactor · 4n / ε) / (-ln rate)⌉`.
pub fn choose_depth(bound: &DecayBound, epsilon: f64, n: usize) -> Result<usize, FptasError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(FptasError::BadEpsilon(epsilon));
    }
    if bound.regime == Regime::None {
        return Err(FptasError::NoRegime(f64::NAN));
    }
    let budget = epsilon / (4.0 * n.max(1) as f64);
    if bound.prefactor <= budget || bound.rate <= 0.0 {
        return Ok(1);
    }
    let t = 1.0 + (bound.prefactor / budget).ln() / -bound.rate.ln();
    Ok((t.ceil() as usize).max(1))
}

/// Lower bound on `P(X_v = spin)` given the fixed vertices in `fixed`,
/// from the root map with every free neighbor ranging over `[0, 1]`.
fn probability_floor(system: &SpinSystem, v: Vertex, fixed: &[Option<Spin>], spin: Spin) -> f64 {
    let g = system.graph();
    let h = system.field(v);
    // ln(λ ∏ f) = -(ln R).
    let mut lo = h.h_minus - h.h_plus;
    let mut hi = lo;
    for (&w, &e) in g.neighbors(v).iter().zip(g.incident_edges(v)) {
        let p = system.oriented(e, v);
        let at_plus = p.beta_mp - p.beta_pp;
        let at_minus = p.beta_mm - p.beta_pm;
        let (l, u) = match fixed[w] {
            Some(Spin::Plus) => (at_plus, at_plus),
            Some(Spin::Minus) => (at_minus, at_minus),
            None => (at_plus.min(at_minus), at_plus.max(at_minus)),
        };
        lo += l;
        hi += u;
    }
    match spin {
        Spin::Plus => logistic(-hi),
        Spin::Minus => logistic(lo),
    }
}

fn conditioning_spins(system: &SpinSystem, rule: Conditioning) -> Vec<Spin> {
    system
        .fields()
        .iter()
        .map(|h| match rule {
            Conditioning::Plus => Spin::Plus,
            Conditioning::FieldSign if h.external_field() < 0.0 => Spin::Minus,
            Conditioning::FieldSign => Spin::Plus,
        })
        .collect()
}

/// Estimates `ln Z`; see the module documentation.
pub fn approx_log_partition(system: &SpinSystem, config: &FptasConfig) -> Result<FptasResult, FptasError> {
    if !(config.epsilon > 0.0) || !config.epsilon.is_finite() {
        return Err(FptasError::BadEpsilon(config.epsilon));
    }
    let g = system.graph();
    let n = g.vertex_count();
    let params = derive_parameters(system);
    let bound = if config.relaxed {
        classify_mixing_relaxed(system, &params, config.d_parameter)
    } else {
        classify_mixing(&params, config.d_parameter)
    };
    if config.depth == DepthChoice::Auto && bound.regime == Regime::None {
        return Err(FptasError::NoRegime(config.d_parameter));
    }
    let spins = conditioning_spins(system, config.conditioning);
    let order = g.vertex_order();
    let max_degree = g.max_degree();

    let reports: Vec<Result<VertexReport, FptasError>> = order
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut fixed = vec![None; n];
            for &u in &order[..k] {
                fixed[u] = Some(spins[u]);
            }
            let spin = spins[v];
            let depth = match config.depth {
                DepthChoice::Full => None,
                DepthChoice::Fixed(t) => Some(t.max(1)),
                DepthChoice::Auto => {
                    let degree = match config.depth_mode {
                        DepthMode::PerVertex => g.degree(v),
                        DepthMode::Global => max_degree,
                    };
                    let mut eps = config.epsilon;
                    if !bound.log_form {
                        // Probability-form decay: convert to a log bound through
                        // the floor of the estimated probability.
                        eps *= (2.0 * probability_floor(system, v, &fixed, spin)).min(1.0);
                    }
                    Some(choose_depth(&bound.with_root_degree(degree), eps, n)?)
                }
            };
            let boundary: Boundary = order[..k].iter().map(|&u| (u, spins[u])).collect();
            let tree = build_saw_tree(system, v, &boundary, depth)?;
            let t = depth.unwrap_or(tree.height());
            let m = truncated_root_marginal(&tree, t, config.init)?;
            let ln_p_hat = match spin {
                Spin::Plus => -softplus(-m.log_ratio),
                Spin::Minus => -softplus(m.log_ratio),
            };
            if ln_p_hat == f64::NEG_INFINITY {
                return Err(FptasError::ZeroMarginal(v));
            }
            let targets = cut_nodes(&tree, t);
            let error_bound = if targets.is_empty() {
                0.0
            } else {
                let log_bound = log_ratio_difference_bound(&tree, t, &targets);
                let floor = probability_floor(system, v, &fixed, spin);
                let prob_bound = marginal_difference_bound_over(&tree, t, &targets) / floor;
                log_bound.min(prob_bound)
            };
            Ok(VertexReport { vertex: v, spin, p_hat: ln_p_hat.exp(), ln_p_hat, depth, error_bound, nodes: tree.len() })
        })
        .collect();
    let per_vertex = reports.into_iter().collect::<Result<Vec<_>, _>>()?;

    let base = system.log_weight(&spins);
    let log_z_hat = base - per_vertex.iter().map(|r| r.ln_p_hat).sum::<f64>();
    let certified_error: f64 = per_vertex.iter().map(|r| r.error_bound).sum();
    let guarantee_met =
        certified_error <= config.epsilon && (bound.regime != Regime::None || config.depth == DepthChoice::Full);
    Ok(FptasResult {
        log_z_hat,
        epsilon: config.epsilon,
        base_log_weight: base,
        regime: bound.regime,
        bound,
        certified_error,
        guarantee_met,
        total_nodes: per_vertex.iter().map(|r| r.nodes).sum(),
        max_nodes: per_vertex.iter().map(|r| r.nodes).max().unwrap_or(0),
        per_vertex,
    })
}
