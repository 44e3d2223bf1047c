//! Deterministic approximation of partition functions and marginals of
//! two-state spin systems on finite graphs, via self-avoiding-walk trees
//! and truncated tree recursions, with an exhaustive oracle for checking.

pub mod fptas;
pub mod graph;
pub mod io;
pub mod marginal;
pub mod mixing;
pub mod numeric;
pub mod oracle;
pub mod saw;
pub mod spin;

pub use fptas::{approx_log_partition, base_log_weight, choose_depth, FptasConfig, FptasError, FptasResult};
pub use graph::{generate, Graph, GraphError, GraphKind, SparsityReport, Vertex};
pub use marginal::{
    collapse_subtree, exact_root_marginal, marginal_difference_bound, truncated_root_marginal, InitRule, MarginalResult,
};
pub use mixing::{classify_mixing, critical_coupling, field_threshold, DecayBound, MixingError, Regime};
pub use oracle::{exact_log_partition, exact_marginal, OracleError, DEFAULT_FREE_CAP};
pub use saw::{build_saw_tree, NodeStatus, SawError, SawNode, SawTree, TreeStats};
pub use spin::{
    derive_parameters, validate_system, Boundary, EdgePotential, ModelError, Spin, SpinSystem, SystemParameters,
    VertexField,
};
