//! Exhaustive enumeration of partition functions and marginals.
//!
//! Free vertices are stepped in Gray-code order so each configuration costs
//! one single-spin energy update. The configuration space is cut into
//! chunks by the high-order free bits; every chunk restarts from an exactly
//! recomputed energy and accumulates its own log-sum-exp, and the chunk
//! results are merged in index order so the output does not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, Vertex};
use crate::numeric::LogSumExp;
use crate::spin::{Boundary, EdgePotential, Spin, SpinSystem};

pub const DEFAULT_FREE_CAP: usize = 24;

/// Free bits enumerated sequentially inside one chunk.
const CHUNK_BITS: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{free} free vertices exceed the enumeration cap of {cap}")]
    CapExceeded { free: usize, cap: usize },
    #[error("vertex {0} is already conditioned")]
    AlreadyConditioned(Vertex),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub log_z: f64,
    /// `P(X_v = + | condition)` for every vertex, when requested.
    pub marginals: Option<Vec<f64>>,
    pub condition: Boundary,
}

/// Per-free-vertex incident edges: (other endpoint, potential read from the
/// free vertex).
struct Plan<'a> {
    system: &'a SpinSystem,
    free: Vec<Vertex>,
    incident: Vec<Vec<(Vertex, EdgePotential)>>,
    base: Vec<Spin>,
}

impl<'a> Plan<'a> {
    fn new(system: &'a SpinSystem, condition: &Boundary, cap: usize) -> Result<Self, OracleError> {
        let g = system.graph();
        let n = g.vertex_count();
        for (v, _) in condition.iter() {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n }.into());
            }
        }
        let fixed = condition.to_dense(n);
        let free: Vec<Vertex> = (0..n).filter(|&v| fixed[v].is_none()).collect();
        if free.len() > cap {
            return Err(OracleError::CapExceeded { free: free.len(), cap });
        }
        let incident = free
            .iter()
            .map(|&v| {
                g.neighbors(v).iter().zip(g.incident_edges(v)).map(|(&w, &e)| (w, system.oriented(e, v))).collect()
            })
            .collect();
        let base = (0..n).map(|v| fixed[v].unwrap_or(Spin::Minus)).collect();
        Ok(Self { system, free, incident, base })
    }

    /// Enumerates chunk `chunk` (its high free bits are the Gray code of
    /// `chunk`, low bits range over everything). `visit` sees the spins and
    /// the log-weight of each configuration.
    fn run_chunk(&self, chunk: usize, low_bits: usize, visit: &mut dyn FnMut(&[Spin], f64)) {
        let mut spins = self.base.clone();
        let high = chunk ^ (chunk >> 1);
        for (k, &v) in self.free.iter().enumerate().skip(low_bits) {
            if high >> (k - low_bits) & 1 == 1 {
                spins[v] = Spin::Plus;
            }
        }
        let mut energy = self.system.log_weight(&spins);
        visit(&spins, energy);
        for step in 1usize..(1 << low_bits) {
            let k = step.trailing_zeros() as usize;
            let v = self.free[k];
            let old = spins[v];
            let new = -old;
            let h = self.system.field(v);
            let mut delta = h.get(new) - h.get(old);
            for &(w, p) in &self.incident[k] {
                delta += p.get(new, spins[w]) - p.get(old, spins[w]);
            }
            spins[v] = new;
            energy += delta;
            visit(&spins, energy);
        }
    }

    fn chunks(&self) -> (usize, usize) {
        let low = self.free.len().min(CHUNK_BITS);
        (1usize << (self.free.len() - low), low)
    }

    fn log_partition(&self) -> f64 {
        let (count, low) = self.chunks();
        let parts: Vec<LogSumExp> = (0..count)
            .into_par_iter()
            .map(|c| {
                let mut acc = LogSumExp::new();
                self.run_chunk(c, low, &mut |_, e| acc.push(e));
                acc
            })
            .collect();
        parts.into_iter().fold(LogSumExp::new(), LogSumExp::merge).value()
    }

    /// Total plus one accumulator per vertex over configurations where it
    /// is `+`.
    fn log_partition_with_marginals(&self) -> (f64, Vec<f64>) {
        let n = self.base.len();
        let (count, low) = self.chunks();
        let parts: Vec<(LogSumExp, Vec<LogSumExp>)> = (0..count)
            .into_par_iter()
            .map(|c| {
                let mut total = LogSumExp::new();
                let mut plus = vec![LogSumExp::new(); n];
                self.run_chunk(c, low, &mut |spins, e| {
                    total.push(e);
                    for (v, &s) in spins.iter().enumerate() {
                        if s == Spin::Plus {
                            plus[v].push(e);
                        }
                    }
                });
                (total, plus)
            })
            .collect();
        let mut total = LogSumExp::new();
        let mut plus = vec![LogSumExp::new(); n];
        for (t, p) in parts {
            total = total.merge(t);
            for (acc, x) in plus.iter_mut().zip(p) {
                *acc = acc.merge(x);
            }
        }
        let log_z = total.value();
        let marginals = plus.iter().map(|acc| (acc.value() - log_z).exp().min(1.0)).collect();
        (log_z, marginals)
    }
}

/// `ln Z(G, condition)` with the default cap.
pub fn exact_log_partition(system: &SpinSystem, condition: &Boundary) -> Result<f64, OracleError> {
    exact_log_partition_capped(system, condition, DEFAULT_FREE_CAP)
}

pub fn exact_log_partition_capped(system: &SpinSystem, condition: &Boundary, cap: usize) -> Result<f64, OracleError> {
    Ok(Plan::new(system, condition, cap)?.log_partition())
}

/// `P(X_v = + | condition)` as a ratio of conditioned partition functions.
pub fn exact_marginal(system: &SpinSystem, v: Vertex, condition: &Boundary) -> Result<f64, OracleError> {
    exact_marginal_capped(system, v, condition, DEFAULT_FREE_CAP)
}

pub fn exact_marginal_capped(
    system: &SpinSystem,
    v: Vertex,
    condition: &Boundary,
    cap: usize,
) -> Result<f64, OracleError> {
    let n = system.vertex_count();
    if v >= n {
        return Err(GraphError::VertexOutOfRange { vertex: v, n }.into());
    }
    if condition.contains(v) {
        return Err(OracleError::AlreadyConditioned(v));
    }
    let all = exact_log_partition_capped(system, condition, cap)?;
    let plus = exact_log_partition_capped(system, &condition.clone().with(v, Spin::Plus), cap)?;
    Ok((plus - all).exp().min(1.0))
}

/// Log partition function and, optionally, every vertex marginal from one
/// enumeration.
pub fn exact_summary(
    system: &SpinSystem,
    condition: &Boundary,
    with_marginals: bool,
    cap: usize,
) -> Result<OracleResult, OracleError> {
    let plan = Plan::new(system, condition, cap)?;
    let (log_z, marginals) = if with_marginals {
        let (z, m) = plan.log_partition_with_marginals();
        (z, Some(m))
    } else {
        (plan.log_partition(), None)
    };
    Ok(OracleResult { log_z, marginals, condition: condition.clone() })
}
