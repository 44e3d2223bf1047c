//! Two-state spin systems without hard constraints.
//!
//! A system is a graph with one log-weight table per edge and one per
//! vertex. All weights are kept as logarithms; exponentials are only taken
//! of differences inside ratio computations.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeId, Graph, GraphError, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Plus, Spin::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Spin::Plus => 1.0,
            Spin::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Spin::Plus => '+',
            Spin::Minus => '-',
        }
    }
}

impl Neg for Spin {
    type Output = Spin;

    fn neg(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Spin {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+" | "+1" | "1" | "plus" => Ok(Spin::Plus),
            "-" | "-1" | "minus" => Ok(Spin::Minus),
            other => Err(ModelError::Parse(format!("not a spin: {other:?}"))),
        }
    }
}

/// Log-weights `β(σ_u, σ_v)` of one edge read in the orientation `u -> v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgePotential {
    pub beta_pp: f64,
    pub beta_pm: f64,
    pub beta_mp: f64,
    pub beta_mm: f64,
}

impl EdgePotential {
    pub const ZERO: EdgePotential = EdgePotential { beta_pp: 0.0, beta_pm: 0.0, beta_mp: 0.0, beta_mm: 0.0 };

    pub fn new(beta_pp: f64, beta_pm: f64, beta_mp: f64, beta_mm: f64) -> Self {
        Self { beta_pp, beta_pm, beta_mp, beta_mm }
    }

    /// `β(s, s') = J s s'`.
    pub fn ising(coupling: f64) -> Self {
        Self::new(coupling, -coupling, -coupling, coupling)
    }

    pub fn get(&self, s: Spin, t: Spin) -> f64 {
        match (s, t) {
            (Spin::Plus, Spin::Plus) => self.beta_pp,
            (Spin::Plus, Spin::Minus) => self.beta_pm,
            (Spin::Minus, Spin::Plus) => self.beta_mp,
            (Spin::Minus, Spin::Minus) => self.beta_mm,
        }
    }

    /// Same edge read in the opposite orientation.
    pub fn transposed(&self) -> Self {
        Self::new(self.beta_pp, self.beta_mp, self.beta_pm, self.beta_mm)
    }

    pub fn is_finite(&self) -> bool {
        [self.beta_pp, self.beta_pm, self.beta_mp, self.beta_mm].iter().all(|x| x.is_finite())
    }

    /// Inverse temperature `J = (β++ + β-- - β-+ - β+-) / 4`.
    pub fn coupling(&self) -> f64 {
        ((self.beta_pp + self.beta_mm) - (self.beta_mp + self.beta_pm)) / 4.0
    }

    /// `(a, b, c, d) = exp(β++, β+-, β-+, β--)`. Only for bounded inputs.
    pub fn weights(&self) -> (f64, f64, f64, f64) {
        (self.beta_pp.exp(), self.beta_pm.exp(), self.beta_mp.exp(), self.beta_mm.exp())
    }

    /// The two differences `β-- - β+-` and `β-+ - β++` whose extrema give
    /// `α_max` and `α_min`.
    pub fn alphas(&self) -> [f64; 2] {
        [self.beta_mm - self.beta_pm, self.beta_mp - self.beta_pp]
    }

    /// `γ_e = max(|bc - ad| / (ac), |bc - ad| / (bd))`, evaluated as
    /// `|b/a - d/c|` and `|c/d - a/b|` to stay in range.
    pub fn gamma(&self) -> f64 {
        let first = ((self.beta_pm - self.beta_pp).exp() - (self.beta_mm - self.beta_mp).exp()).abs();
        let second = ((self.beta_mp - self.beta_mm).exp() - (self.beta_pp - self.beta_pm).exp()).abs();
        first.max(second)
    }
}

/// Log-weights `h(+)`, `h(-)` of one vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexField {
    pub h_plus: f64,
    pub h_minus: f64,
}

impl VertexField {
    pub const ZERO: VertexField = VertexField { h_plus: 0.0, h_minus: 0.0 };

    pub fn new(h_plus: f64, h_minus: f64) -> Self {
        Self { h_plus, h_minus }
    }

    /// `h(s) = B s`.
    pub fn ising(field: f64) -> Self {
        Self::new(field, -field)
    }

    pub fn get(&self, s: Spin) -> f64 {
        match s {
            Spin::Plus => self.h_plus,
            Spin::Minus => self.h_minus,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.h_plus.is_finite() && self.h_minus.is_finite()
    }

    /// External field `B = (h(+) - h(-)) / 2`.
    pub fn external_field(&self) -> f64 {
        (self.h_plus - self.h_minus) / 2.0
    }

    /// `λ = exp(-2B)`.
    pub fn lambda(&self) -> f64 {
        (self.h_minus - self.h_plus).exp()
    }
}

/// A partial spin assignment on graph vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary(BTreeMap<Vertex, Spin>);

impl Boundary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: Vertex, s: Spin) -> Self {
        self.0.insert(v, s);
        self
    }

    pub fn insert(&mut self, v: Vertex, s: Spin) -> Option<Spin> {
        self.0.insert(v, s)
    }

    pub fn get(&self, v: Vertex) -> Option<Spin> {
        self.0.get(&v).copied()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, Spin)> + '_ {
        self.0.iter().map(|(&v, &s)| (v, s))
    }

    /// Dense lookup table for `n` vertices.
    pub fn to_dense(&self, n: usize) -> Vec<Option<Spin>> {
        let mut dense = vec![None; n];
        for (v, s) in self.iter() {
            if v < n {
                dense[v] = Some(s);
            }
        }
        dense
    }
}

impl FromIterator<(Vertex, Spin)> for Boundary {
    fn from_iter<I: IntoIterator<Item = (Vertex, Spin)>>(iter: I) -> Self {
        Boundary(iter.into_iter().collect())
    }
}

/// Parses `"0=+,3=-"`. The empty string is the empty boundary.
impl FromStr for Boundary {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut boundary = Boundary::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (v, spin) =
                item.split_once('=').ok_or_else(|| ModelError::Parse(format!("expected vertex=spin, got {item:?}")))?;
            let v: Vertex = v.trim().parse().map_err(|_| ModelError::Parse(format!("bad vertex in {item:?}")))?;
            if boundary.insert(v, spin.parse()?).is_some() {
                return Err(ModelError::Parse(format!("vertex {v} conditioned twice")));
            }
        }
        Ok(boundary)
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|(v, s)| format!("{v}={s}")).collect();
        write!(f, "{}", items.join(","))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid spin system: {0}")]
    Invalid(ValidationReport),
    #[error("expected {expected} {what}, got {got}")]
    Length { what: &'static str, expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    MissingEdgePotential { edge: (Vertex, Vertex) },
    MissingVertexField { vertex: Vertex },
    HardConstraintEdge { edge: (Vertex, Vertex) },
    HardConstraintVertex { vertex: Vertex },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingEdgePotential { edge: (u, v) } => {
                write!(f, "missing potential at edge ({u},{v})")
            }
            Violation::MissingVertexField { vertex } => write!(f, "missing field at vertex {vertex}"),
            Violation::HardConstraintEdge { edge: (u, v) } => write!(f, "hard constraint at edge ({u},{v})"),
            Violation::HardConstraintVertex { vertex } => write!(f, "hard constraint at vertex {vertex}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let items: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", items.join("; "))
    }
}

/// Graph plus one [`EdgePotential`] per edge (oriented `lo -> hi`, see
/// [`Graph::edges`]) and one [`VertexField`] per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    graph: Graph,
    potentials: Vec<EdgePotential>,
    fields: Vec<VertexField>,
}

impl SpinSystem {
    /// Assembles a system without checking it; see [`validate_system`].
    pub fn from_parts_unchecked(graph: Graph, potentials: Vec<EdgePotential>, fields: Vec<VertexField>) -> Self {
        Self { graph, potentials, fields }
    }

    pub fn new(graph: Graph, potentials: Vec<EdgePotential>, fields: Vec<VertexField>) -> Result<Self, ModelError> {
        let system = Self::from_parts_unchecked(graph, potentials, fields);
        let report = validate_system(&system);
        if report.is_valid() {
            Ok(system)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    /// All potentials and fields zero (independent uniform spins).
    pub fn zero(graph: Graph) -> Self {
        let (m, n) = (graph.edge_count(), graph.vertex_count());
        Self::from_parts_unchecked(graph, vec![EdgePotential::ZERO; m], vec![VertexField::ZERO; n])
    }

    /// Ising model: `couplings` in edge-id order, `fields` per vertex.
    pub fn ising(graph: Graph, couplings: &[f64], fields: &[f64]) -> Result<Self, ModelError> {
        if couplings.len() != graph.edge_count() {
            return Err(ModelError::Length { what: "couplings", expected: graph.edge_count(), got: couplings.len() });
        }
        if fields.len() != graph.vertex_count() {
            return Err(ModelError::Length { what: "fields", expected: graph.vertex_count(), got: fields.len() });
        }
        let potentials = couplings.iter().map(|&j| EdgePotential::ising(j)).collect();
        let fields = fields.iter().map(|&b| VertexField::ising(b)).collect();
        Self::new(graph, potentials, fields)
    }

    /// Ising model with one coupling and one field everywhere.
    pub fn ising_uniform(graph: Graph, coupling: f64, field: f64) -> Result<Self, ModelError> {
        let couplings = vec![coupling; graph.edge_count()];
        let fields = vec![field; graph.vertex_count()];
        Self::ising(graph, &couplings, &fields)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn field(&self, v: Vertex) -> VertexField {
        self.fields[v]
    }

    pub fn fields(&self) -> &[VertexField] {
        &self.fields
    }

    /// Potential of edge `id` oriented `lo -> hi`.
    pub fn edge_potential(&self, id: EdgeId) -> EdgePotential {
        self.potentials[id]
    }

    pub fn potentials(&self) -> &[EdgePotential] {
        &self.potentials
    }

    /// Potential read as `β_uv(σ_u, σ_v)`; `None` if `(u, v)` is not an edge.
    pub fn potential(&self, u: Vertex, v: Vertex) -> Option<EdgePotential> {
        let id = self.graph.edge_between(u, v)?;
        Some(self.oriented(id, u))
    }

    /// Potential of edge `id` read from endpoint `from`.
    pub fn oriented(&self, id: EdgeId, from: Vertex) -> EdgePotential {
        let p = self.potentials[id];
        if self.graph.edges()[id].0 == from {
            p
        } else {
            p.transposed()
        }
    }

    /// Exponent `Σ β + Σ h` of a full configuration.
    pub fn log_weight(&self, config: &[Spin]) -> f64 {
        let edges: f64 =
            self.graph.edges().iter().zip(&self.potentials).map(|(&(u, v), p)| p.get(config[u], config[v])).sum();
        let fields: f64 = self.fields.iter().zip(config).map(|(h, &s)| h.get(s)).sum();
        edges + fields
    }

    /// Same system with vertex `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[Vertex]) -> Result<SpinSystem, ModelError> {
        let graph = self.graph.relabeled(perm)?;
        let mut potentials = vec![EdgePotential::ZERO; graph.edge_count()];
        for (id, &(u, v)) in self.graph.edges().iter().enumerate() {
            let (pu, pv) = (perm[u], perm[v]);
            let new_id = graph.edge_between(pu, pv).expect("relabeled edge");
            potentials[new_id] = if pu < pv { self.potentials[id] } else { self.potentials[id].transposed() };
        }
        let mut fields = vec![VertexField::ZERO; self.vertex_count()];
        for (v, h) in self.fields.iter().enumerate() {
            fields[perm[v]] = *h;
        }
        SpinSystem::new(graph, potentials, fields)
    }
}

/// Lists every missing or non-finite entry.
pub fn validate_system(system: &SpinSystem) -> ValidationReport {
    let g = &system.graph;
    let mut violations = Vec::new();
    for (id, &edge) in g.edges().iter().enumerate() {
        match system.potentials.get(id) {
            None => violations.push(Violation::MissingEdgePotential { edge }),
            Some(p) if !p.is_finite() => violations.push(Violation::HardConstraintEdge { edge }),
            Some(_) => {}
        }
    }
    for v in 0..g.vertex_count() {
        match system.fields.get(v) {
            None => violations.push(Violation::MissingVertexField { vertex: v }),
            Some(h) if !h.is_finite() => violations.push(Violation::HardConstraintVertex { vertex: v }),
            Some(_) => {}
        }
    }
    ValidationReport { violations }
}

/// Scalars governing the mixing conditions. `None` marks an aggregate over
/// an empty set (no edges, or no vertices).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParameters {
    /// `J = max |J_e|`.
    pub max_coupling: Option<f64>,
    pub min_field: Option<f64>,
    pub max_field: Option<f64>,
    pub min_alpha: Option<f64>,
    pub max_alpha: Option<f64>,
    pub gamma: Option<f64>,
}

impl SystemParameters {
    pub fn coupling_or_zero(&self) -> f64 {
        self.max_coupling.unwrap_or(0.0)
    }

    pub fn gamma_or_zero(&self) -> f64 {
        self.gamma.unwrap_or(0.0)
    }
}

fn fold_opt(acc: Option<f64>, x: f64, pick: fn(f64, f64) -> f64) -> Option<f64> {
    Some(acc.map_or(x, |a| pick(a, x)))
}

pub fn derive_parameters(system: &SpinSystem) -> SystemParameters {
    let mut params = SystemParameters {
        max_coupling: None,
        min_field: None,
        max_field: None,
        min_alpha: None,
        max_alpha: None,
        gamma: None,
    };
    for p in &system.potentials {
        params.max_coupling = fold_opt(params.max_coupling, p.coupling().abs(), f64::max);
        // Trees read each edge in both orientations, so both enter the extrema.
        params.gamma = fold_opt(params.gamma, p.gamma().max(p.transposed().gamma()), f64::max);
        for a in p.alphas().into_iter().chain(p.transposed().alphas()) {
            params.min_alpha = fold_opt(params.min_alpha, a, f64::min);
            params.max_alpha = fold_opt(params.max_alpha, a, f64::max);
        }
    }
    for h in &system.fields {
        let b = h.external_field();
        params.min_field = fold_opt(params.min_field, b, f64::min);
        params.max_field = fold_opt(params.max_field, b, f64::max);
    }
    params
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};
    use proptest::prelude::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn spin_negation_is_involution() {
        for s in Spin::BOTH {
            assert_eq!(-(-s), s);
            assert_ne!(-s, s);
        }
        assert_eq!("+".parse::<Spin>().unwrap(), Spin::Plus);
        assert!("x".parse::<Spin>().is_err());
    }

    #[test]
    fn validation_examples() {
        let single = SpinSystem::zero(Graph::empty(1));
        assert!(validate_system(&single).is_valid());

        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let bad = SpinSystem::from_parts_unchecked(
            g.clone(),
            vec![EdgePotential::new(0.0, f64::INFINITY, 0.0, 0.0)],
            vec![VertexField::ZERO; 2],
        );
        let report = validate_system(&bad);
        assert!(!report.is_valid());
        assert_eq!(report.to_string(), "hard constraint at edge (0,1)");

        let missing = SpinSystem::from_parts_unchecked(g, vec![], vec![VertexField::ZERO]);
        let report = validate_system(&missing);
        assert_eq!(report.violations.len(), 2);

        assert!(SpinSystem::ising_uniform(triangle(), 0.3, 0.1).is_ok());
    }

    #[test]
    fn ising_substitution() {
        assert_eq!(EdgePotential::ising(0.5), EdgePotential::new(0.5, -0.5, -0.5, 0.5));
        assert_eq!(EdgePotential::ising(0.5).coupling(), 0.5);
        let h = VertexField::ising(0.0);
        assert_eq!(h, VertexField::ZERO);
        assert_eq!(h.lambda(), 1.0);
    }

    #[test]
    fn gamma_of_ising_edge() {
        // a = d = e^{1/2}, b = c = e^{-1/2}: |bc - ad| = e - e^{-1}, ac = bd = 1.
        let e = std::f64::consts::E;
        let expected = e - 1.0 / e;
        let g = EdgePotential::ising(0.5).gamma();
        assert!((g - expected).abs() < 1e-14);
        assert!((g - 2.3504023872876028).abs() < 1e-12);
        assert!(4.0 * 0.5f64.tanh() <= g);
        // against the literal weight formula
        let (a, b, c, d) = EdgePotential::ising(0.5).weights();
        let literal = ((b * c - a * d).abs() / (a * c)).max((b * c - a * d).abs() / (b * d));
        assert!((g - literal).abs() < 1e-14);
    }

    #[test]
    fn parameter_examples() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let sys = SpinSystem::ising(g.clone(), &[0.2, -0.7], &[0.0, 0.1, -0.3]).unwrap();
        let p = derive_parameters(&sys);
        assert_eq!(p.max_coupling, Some(0.7));
        assert_eq!(p.min_field, Some(-0.3));
        assert_eq!(p.max_field, Some(0.1));
        assert!((p.max_alpha.unwrap() - 1.4).abs() < 1e-15);
        assert!((p.min_alpha.unwrap() + 1.4).abs() < 1e-15);

        let zero = derive_parameters(&SpinSystem::zero(g));
        assert_eq!(zero.max_coupling, Some(0.0));
        assert_eq!(zero.gamma, Some(0.0));
        assert_eq!(zero.min_alpha, Some(0.0));
        assert_eq!(zero.max_alpha, Some(0.0));

        let empty = derive_parameters(&SpinSystem::zero(Graph::empty(0)));
        assert_eq!(empty.max_coupling, None);
        assert_eq!(empty.min_field, None);
        let isolated = derive_parameters(&SpinSystem::zero(Graph::empty(2)));
        assert_eq!(isolated.gamma, None);
        assert_eq!(isolated.min_field, Some(0.0));
    }

    #[test]
    fn reverse_reads_transpose() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let p = EdgePotential::new(1.0, 2.0, 3.0, 4.0);
        let sys = SpinSystem::new(g, vec![p], vec![VertexField::ZERO; 2]).unwrap();
        assert_eq!(sys.potential(0, 1), Some(p));
        let back = sys.potential(1, 0).unwrap();
        assert_eq!(back.get(Spin::Plus, Spin::Minus), p.get(Spin::Minus, Spin::Plus));
        assert_eq!(sys.potential(0, 0), None);
    }

    #[test]
    fn boundary_parsing() {
        let b: Boundary = "0=+, 3=-".parse().unwrap();
        assert_eq!(b.get(0), Some(Spin::Plus));
        assert_eq!(b.get(3), Some(Spin::Minus));
        assert_eq!(b.to_string(), "0=+,3=-");
        assert!("".parse::<Boundary>().unwrap().is_empty());
        assert!("0=+,0=-".parse::<Boundary>().is_err());
        assert!("0+".parse::<Boundary>().is_err());
    }

    fn potential() -> impl Strategy<Value = EdgePotential> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c, d)| EdgePotential::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn gamma_dominates_four_tanh_coupling(p in potential()) {
            prop_assert!(p.gamma() >= 4.0 * p.coupling().abs().tanh() * (1.0 - 1e-12));
        }

        #[test]
        fn ising_round_trip(js in prop::collection::vec(-2.0..2.0f64, 5), bs in prop::collection::vec(-2.0..2.0f64, 5)) {
            let g = generate(&GraphKind::Cycle { n: 5 }, 0).unwrap();
            let sys = SpinSystem::ising(g, &js, &bs).unwrap();
            for (p, j) in sys.potentials().iter().zip(&js) {
                prop_assert!((p.coupling() - j).abs() < 1e-12);
            }
            for (h, b) in sys.fields().iter().zip(&bs) {
                prop_assert!((h.external_field() - b).abs() < 1e-12);
            }
        }

        #[test]
        fn parameters_invariant_under_relabeling(
            pots in prop::collection::vec(potential(), 7),
            hs in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 6),
            seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap();
            let fields = hs.iter().map(|&(a, b)| VertexField::new(a, b)).collect();
            let sys = SpinSystem::new(g, pots, fields).unwrap();
            let mut perm: Vec<usize> = (0..6).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let moved = sys.relabeled(&perm).unwrap();
            prop_assert_eq!(derive_parameters(&sys), derive_parameters(&moved));
        }
    }
}
