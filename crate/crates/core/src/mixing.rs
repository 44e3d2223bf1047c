//! Mixing conditions, decay functions and empirical decay measurement.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Vertex;
use crate::marginal::{log_ratio_difference_bound, marginal_difference_bound, pinned_root_log_ratio, EdgeMaps};
use crate::numeric::logistic;
use crate::saw::{build_saw_tree, SawError};
use crate::spin::{Boundary, EdgePotential, SpinSystem, SystemParameters};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixingError {
    #[error("degree parameter must be positive, got {0}")]
    BadDegree(f64),
    #[error("field threshold needs gamma*(d-1) >= 4, which holds whenever (d-1)tanh J >= 1; got {0}")]
    Domain(f64),
    #[error("inequality oracle needs strictly positive inputs")]
    NonPositive,
    #[error(transparent)]
    Tree(#[from] SawError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `(d - 1) tanh J < 1`.
    InverseTemperature,
    /// Fields beyond the threshold `B(d, α, γ)`.
    FieldDominated,
    None,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::InverseTemperature => "inverse_temperature",
            Regime::FieldDominated => "field_dominated",
            Regime::None => "none",
        };
        f.write_str(s)
    }
}

/// `f(t) = prefactor · rate^(t-1)`.
///
/// [`classify_mixing`] returns the prefactor per unit of root degree; use
/// [`DecayBound::with_root_degree`] before evaluating at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub regime: Regime,
    pub prefactor: f64,
    pub rate: f64,
    /// True when `f` bounds log-ratio differences rather than probability
    /// differences.
    pub log_form: bool,
}

impl DecayBound {
    pub fn none() -> Self {
        Self { regime: Regime::None, prefactor: f64::INFINITY, rate: 1.0, log_form: false }
    }

    pub fn with_root_degree(mut self, degree: usize) -> Self {
        if self.regime != Regime::None {
            self.prefactor *= degree as f64;
        }
        self
    }

    /// `f(t)` evaluated in log space; `t = 0` is treated as `t = 1`.
    pub fn value(&self, t: usize) -> f64 {
        if self.regime == Regime::None {
            return f64::INFINITY;
        }
        if self.prefactor == 0.0 {
            return 0.0;
        }
        let steps = t.saturating_sub(1) as f64;
        if steps == 0.0 {
            return self.prefactor;
        }
        if self.rate == 0.0 {
            return 0.0;
        }
        (self.prefactor.ln() + steps * self.rate.ln()).exp()
    }
}

/// `J_d = ½ ln(d / (d - 2))`; `+inf` for `d <= 2`.
pub fn critical_coupling(d: f64) -> Result<f64, MixingError> {
    if !(d > 0.0) {
        return Err(MixingError::BadDegree(d));
    }
    if d <= 2.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 * (d / (d - 2.0)).ln())
}

/// `B(d, α, γ) = (d-1)α/2 + ln((√(γ(d-1)) + √(γ(d-1) - 4)) / 2)`.
pub fn field_threshold(d: f64, alpha: f64, gamma: f64) -> Result<f64, MixingError> {
    let k = gamma * (d - 1.0);
    if !(k >= 4.0) {
        return Err(MixingError::Domain(k));
    }
    Ok((d - 1.0) * alpha / 2.0 + ((k.sqrt() + (k - 4.0).sqrt()) / 2.0).ln())
}

/// `(d-1) γ x / (1 + x)^2` with `x = e^y`, evaluated stably.
fn field_rate(d: f64, gamma: f64, y: f64) -> f64 {
    (d - 1.0) * gamma * logistic(y) * logistic(-y)
}

/// Picks the applicable decay function for degree parameter `d`.
///
/// The field branch additionally requires `α_max >= 0` (positive branch)
/// or `α_min <= 0` (negative branch); without it a vertex with fewer than
/// `d - 1` children is not covered by the supremum bound.
pub fn classify_mixing(params: &SystemParameters, d: f64) -> DecayBound {
    let j = params.coupling_or_zero();
    let branching = (d - 1.0).max(0.0);
    let temp_rate = branching * j.tanh();
    if temp_rate < 1.0 {
        return DecayBound { regime: Regime::InverseTemperature, prefactor: 4.0 * j, rate: temp_rate, log_form: true };
    }
    let gamma = params.gamma_or_zero();
    let (Some(b_min), Some(b_max), Some(a_min), Some(a_max)) =
        (params.min_field, params.max_field, params.min_alpha, params.max_alpha)
    else {
        return DecayBound::none();
    };
    let mut best: Option<f64> = None;
    if a_max >= 0.0 {
        if let Ok(threshold) = field_threshold(d, a_max, gamma) {
            if b_min > threshold {
                best = Some(field_rate(d, gamma, 2.0 * b_min - branching * a_max));
            }
        }
    }
    if a_min <= 0.0 {
        if let Ok(threshold) = field_threshold(d, -a_min, gamma) {
            if b_max < -threshold {
                let rate = field_rate(d, gamma, 2.0 * b_max - branching * a_min);
                best = Some(best.map_or(rate, |r| r.min(rate)));
            }
        }
    }
    match best {
        Some(rate) if rate < 1.0 => {
            DecayBound { regime: Regime::FieldDominated, prefactor: gamma / 4.0, rate, log_form: false }
        }
        _ => DecayBound::none(),
    }
}

/// Bounded-degree relaxation: every vertex field individually clears one
/// of the two thresholds. The rate is the worst per-vertex rate.
pub fn classify_mixing_relaxed(system: &SpinSystem, params: &SystemParameters, d: f64) -> DecayBound {
    let strict = classify_mixing(params, d);
    if strict.regime == Regime::InverseTemperature {
        return strict;
    }
    let gamma = params.gamma_or_zero();
    let branching = (d - 1.0).max(0.0);
    let (Some(a_min), Some(a_max)) = (params.min_alpha, params.max_alpha) else {
        return strict;
    };
    let up = if a_max >= 0.0 { field_threshold(d, a_max, gamma).ok() } else { None };
    let down = if a_min <= 0.0 { field_threshold(d, -a_min, gamma).ok() } else { None };
    let mut worst = 0.0f64;
    for h in system.fields() {
        let b = h.external_field();
        let mut rate = f64::INFINITY;
        if up.is_some_and(|th| b > th) {
            rate = rate.min(field_rate(d, gamma, 2.0 * b - branching * a_max));
        }
        if down.is_some_and(|th| b < -th) {
            rate = rate.min(field_rate(d, gamma, 2.0 * b - branching * a_min));
        }
        worst = worst.max(rate);
    }
    if worst < 1.0 && !system.fields().is_empty() {
        DecayBound { regime: Regime::FieldDominated, prefactor: gamma / 4.0, rate: worst, log_form: false }
    } else {
        strict
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryStrategy {
    /// All-plus against all-minus on the sphere.
    Extremal,
    /// Every boundary on the sphere when it has at most
    /// [`EXHAUSTIVE_LIMIT`] nodes, otherwise extremal.
    Exhaustive,
}

pub const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: usize,
    /// Number of non-fixed tree nodes at depth `t`.
    pub sphere: usize,
    /// Largest `|p^ζ - p^η|` seen.
    pub observed: f64,
    /// Largest `|ln R^ζ - ln R^η|` seen.
    pub observed_log: f64,
    /// Regime decay function at `t` for this root.
    pub bound: f64,
    /// Path-wise tree bounds for the same quantity pair.
    pub tree_bound: f64,
    pub tree_log_bound: f64,
    pub regime: Regime,
    pub exhaustive: bool,
}

impl DecayRow {
    /// Whether the observation respects the regime decay function.
    pub fn within_bound(&self) -> bool {
        let observed = if self.regime == Regime::InverseTemperature { self.observed_log } else { self.observed };
        observed <= self.bound
    }
}

/// Measures strong spatial mixing at `v` directly: for each `t` the sphere
/// of the full self-avoiding-walk tree at depth `t` is pinned to different
/// boundaries and the spread of the exact root marginal is recorded.
pub fn empirical_decay(
    system: &SpinSystem,
    v: Vertex,
    t_values: &[usize],
    strategy: BoundaryStrategy,
    d: f64,
) -> Result<Vec<DecayRow>, MixingError> {
    let tree = build_saw_tree(system, v, &Boundary::new(), None)?;
    let params = crate::spin::derive_parameters(system);
    let bound = classify_mixing(&params, d).with_root_degree(system.graph().degree(v));
    t_values
        .par_iter()
        .map(|&t| {
            let targets: Vec<usize> = if t > tree.height() {
                Vec::new()
            } else {
                tree.level(t).filter(|&id| !tree.nodes()[id].is_fixed()).collect()
            };
            let s = targets.len();
            let exhaustive = strategy == BoundaryStrategy::Exhaustive && s <= EXHAUSTIVE_LIMIT;
            let (lo, hi) = if s == 0 || t == 0 {
                (0.0, 0.0)
            } else if exhaustive {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for mask in 0u32..(1 << s) {
                    let r = pinned_root_log_ratio(&tree, t, &|id, _| {
                        let k = targets.binary_search(&id).ok()?;
                        Some(if mask >> k & 1 == 1 { f64::INFINITY } else { f64::NEG_INFINITY })
                    })?;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                (lo, hi)
            } else {
                let pin = |value: f64| {
                    pinned_root_log_ratio(&tree, t, &|id, _| targets.binary_search(&id).ok().map(|_| value))
                };
                let (a, b) = (pin(f64::INFINITY)?, pin(f64::NEG_INFINITY)?);
                (a.min(b), a.max(b))
            };
            Ok(DecayRow {
                t,
                sphere: s,
                observed: (logistic(hi) - logistic(lo)).abs(),
                observed_log: hi - lo,
                bound: bound.value(t),
                tree_bound: if t == 0 { 0.0 } else { marginal_difference_bound(&tree, t) },
                tree_log_bound: log_ratio_difference_bound(&tree, t, &targets),
                regime: bound.regime,
                exhaustive,
            })
        })
        .collect()
}

/// CSV with columns `t,observed,bound,regime`, full precision.
pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("t,observed,bound,regime\n");
    for r in rows {
        out.push_str(&format!("{},{:e},{:e},{}\n", r.t, r.observed, r.bound, r.regime));
    }
    out
}

const RELATIVE_TOLERANCE: f64 = 1e-12;

fn leq(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + RELATIVE_TOLERANCE * rhs.abs().max(lhs.abs())
}

/// Contraction of `g(x) = (ax + b) / (cx + d)`:
/// `max(g(x)/g(y), g(y)/g(x)) <= max(x/y, y/x)^τ` with
/// `τ = |√(ad) - √(bc)| / (√(ad) + √(bc))`. Compared in log space.
pub fn contraction_holds(a: f64, b: f64, c: f64, d: f64, x: f64, y: f64) -> Result<bool, MixingError> {
    if [a, b, c, d, x, y].iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(MixingError::NonPositive);
    }
    let g = |z: f64| ((a * z + b) / (c * z + d)).ln();
    let (sad, sbc) = ((a * d).sqrt(), (b * c).sqrt());
    let tau = ((sad - sbc) / (sad + sbc)).abs();
    let lhs = (g(x) - g(y)).abs();
    let rhs = tau * (x.ln() - y.ln()).abs();
    Ok(leq(lhs, rhs))
}

/// `max_{x ∈ [0,1]} |h(x)| <= γ` for one oriented edge, checked on a grid
/// of `grid` points plus the endpoints and the stationary point of the
/// denominator when it lies inside `[0, 1]`.
pub fn derivative_bound_holds(potential: &EdgePotential, grid: usize) -> bool {
    let maps = EdgeMaps::new(potential);
    let gamma = maps.gamma();
    let m = maps.c - maps.d;
    let n = maps.a - maps.b;
    let mut points: Vec<f64> = (0..=grid.max(1)).map(|k| k as f64 / grid.max(1) as f64).collect();
    if m != 0.0 && n != 0.0 {
        let xl = -(maps.d * n + maps.b * m) / (2.0 * m * n);
        if (0.0..=1.0).contains(&xl) {
            points.push(xl);
        }
    }
    points.iter().all(|&x| leq(maps.h(x).abs(), gamma))
}

/// `∏(1 + λ_i) >= (1 + (∏ λ_i)^(1/n))^n`, compared in log space.
pub fn product_bound_holds(lambdas: &[f64]) -> Result<bool, MixingError> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(MixingError::NonPositive);
    }
    let n = lambdas.len() as f64;
    let lhs: f64 = lambdas.iter().map(|l| l.ln_1p()).sum();
    let mean_log = lambdas.iter().map(|l| l.ln()).sum::<f64>() / n;
    let rhs = n * crate::numeric::softplus(mean_log);
    Ok(leq(rhs, lhs))
}
