//! JSON model files.
//!
//! ```json
//! {"n": 3,
//!  "edges": [[0, 1, 0.5, -0.5, -0.5, 0.5]],
//!  "fields": [[0, 0.1, -0.1]]}
//! ```
//!
//! or the Ising shorthand `{"n": 3, "ising": {"edges": [[0, 1, 0.5]], "B": [0, 0, 0.1]}}`.
//! Vertices missing from `fields` get `h = (0, 0)`. Any weight may be the
//! string `"inf"` or `"-inf"`; such files parse but fail validation as hard
//! constraints. An optional `"order"` lists the vertices in processing order.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::graph::{Graph, GraphError, Vertex};
use crate::spin::{validate_system, EdgePotential, ModelError, SpinSystem, VertexField};

/// A log-weight that also accepts the strings `"inf"`, `"-inf"`, `"nan"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight(pub f64);

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0.is_nan() {
            s.serialize_str("nan")
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct WeightVisitor;

        impl Visitor<'_> for WeightVisitor {
            type Value = Weight;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Weight, E> {
                Ok(Weight(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Weight, E> {
                Ok(Weight(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Weight, E> {
                Ok(Weight(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Weight, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" => Ok(Weight(f64::INFINITY)),
                    "-inf" | "-infinity" => Ok(Weight(f64::NEG_INFINITY)),
                    "nan" => Ok(Weight(f64::NAN)),
                    other => other.parse().map(Weight).map_err(|_| E::custom(format!("bad weight {v:?}"))),
                }
            }
        }

        d.deserialize_any(WeightVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSection {
    #[serde(default)]
    pub edges: Vec<(Vertex, Vertex, Weight)>,
    #[serde(rename = "B", default)]
    pub fields: Vec<Weight>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<(Vertex, Vertex, Weight, Weight, Weight, Weight)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<(Vertex, Weight, Weight)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ising: Option<IsingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<Vertex>>,
}

fn check_vertex(v: Vertex, n: usize) -> Result<(), ModelError> {
    if v < n {
        Ok(())
    } else {
        Err(GraphError::VertexOutOfRange { vertex: v, n }.into())
    }
}

impl ModelFile {
    /// Builds and validates the system.
    pub fn to_system(&self) -> Result<SpinSystem, ModelError> {
        let n = self.n;
        let system = match &self.ising {
            Some(ising) => {
                if !self.edges.is_empty() || !self.fields.is_empty() {
                    return Err(ModelError::Parse("use either \"ising\" or \"edges\"/\"fields\", not both".into()));
                }
                if !ising.fields.is_empty() && ising.fields.len() != n {
                    return Err(ModelError::Length { what: "ising fields", expected: n, got: ising.fields.len() });
                }
                let pairs: Vec<_> = ising.edges.iter().map(|&(u, v, _)| (u, v)).collect();
                let graph = self.graph(&pairs)?;
                let mut potentials = vec![EdgePotential::ZERO; graph.edge_count()];
                for &(u, v, j) in &ising.edges {
                    let id = graph.edge_between(u, v).expect("edge present");
                    potentials[id] = EdgePotential::ising(j.0);
                }
                let mut fields = vec![VertexField::ZERO; n];
                for (v, b) in ising.fields.iter().enumerate() {
                    fields[v] = VertexField::ising(b.0);
                }
                SpinSystem::from_parts_unchecked(graph, potentials, fields)
            }
            None => {
                let pairs: Vec<_> = self.edges.iter().map(|e| (e.0, e.1)).collect();
                let graph = self.graph(&pairs)?;
                let mut potentials = vec![EdgePotential::ZERO; graph.edge_count()];
                for &(u, v, pp, pm, mp, mm) in &self.edges {
                    let id = graph.edge_between(u, v).expect("edge present");
                    let p = EdgePotential::new(pp.0, pm.0, mp.0, mm.0);
                    potentials[id] = if u < v { p } else { p.transposed() };
                }
                let mut fields = vec![VertexField::ZERO; n];
                let mut seen = vec![false; n];
                for &(v, hp, hm) in &self.fields {
                    check_vertex(v, n)?;
                    if std::mem::replace(&mut seen[v], true) {
                        return Err(ModelError::Parse(format!("vertex {v} has two field entries")));
                    }
                    fields[v] = VertexField::new(hp.0, hm.0);
                }
                SpinSystem::from_parts_unchecked(graph, potentials, fields)
            }
        };
        let report = validate_system(&system);
        if report.is_valid() {
            Ok(system)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    fn graph(&self, pairs: &[(Vertex, Vertex)]) -> Result<Graph, ModelError> {
        let graph = Graph::from_edges(self.n, pairs)?;
        Ok(match &self.order {
            Some(order) => graph.with_vertex_order(order)?,
            None => graph,
        })
    }

    /// General (non-shorthand) form of `system`.
    pub fn from_system(system: &SpinSystem) -> Self {
        let g = system.graph();
        let edges = g
            .edges()
            .iter()
            .zip(system.potentials())
            .map(|(&(u, v), p)| (u, v, Weight(p.beta_pp), Weight(p.beta_pm), Weight(p.beta_mp), Weight(p.beta_mm)))
            .collect();
        let fields = system
            .fields()
            .iter()
            .enumerate()
            .filter(|(_, h)| **h != VertexField::ZERO)
            .map(|(v, h)| (v, Weight(h.h_plus), Weight(h.h_minus)))
            .collect();
        let order = g.vertex_order();
        let identity = order.iter().enumerate().all(|(k, &v)| k == v);
        Self { n: g.vertex_count(), edges, fields, ising: None, order: (!identity).then_some(order) }
    }
}

pub fn parse_model(text: &str) -> Result<SpinSystem, ModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    file.to_system()
}

pub fn write_model(system: &SpinSystem) -> String {
    serde_json::to_string_pretty(&ModelFile::from_system(system)).expect("model serializes")
}
