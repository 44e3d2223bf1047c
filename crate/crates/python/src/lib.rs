use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use spinsaw::fptas::DepthChoice;
use spinsaw::mixing::{empirical_decay as decay_rows, BoundaryStrategy};
use spinsaw::oracle::{exact_log_partition_capped, exact_marginal_capped};
use spinsaw::{
    approx_log_partition as approx, build_saw_tree as build_tree, classify_mixing as classify, critical_coupling as jd,
    derive_parameters, exact_root_marginal, field_threshold as threshold, generate, io, truncated_root_marginal,
    Boundary, EdgePotential, FptasConfig, GraphKind, InitRule, Spin, VertexField, DEFAULT_FREE_CAP,
};

pyo3::create_exception!(spinsaw, CapExceeded, PyRuntimeError, "Exact enumeration would exceed the free-vertex cap.");
pyo3::create_exception!(spinsaw, NoRegime, PyRuntimeError, "No mixing regime applies; supply a fixed depth.");

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn oracle_error(e: spinsaw::OracleError) -> PyErr {
    match e {
        spinsaw::OracleError::CapExceeded { .. } => CapExceeded::new_err(e.to_string()),
        other => value_error(other),
    }
}

/// Accepts `None`, a string like `"0=+,2=-"`, or a dict `{vertex: "+"|"-"}`.
fn boundary(obj: Option<&Bound<'_, PyAny>>) -> PyResult<Boundary> {
    let Some(obj) = obj else { return Ok(Boundary::new()) };
    if obj.is_none() {
        return Ok(Boundary::new());
    }
    if let Ok(text) = obj.extract::<String>() {
        return text.parse().map_err(value_error);
    }
    let dict = obj.cast::<PyDict>().map_err(|_| PyValueError::new_err("condition must be a str or dict"))?;
    let mut b = Boundary::new();
    for (k, v) in dict.iter() {
        let spin: Spin = v.extract::<String>()?.parse().map_err(value_error)?;
        b.insert(k.extract()?, spin);
    }
    Ok(b)
}

fn init_rule(init: &Bound<'_, PyAny>) -> PyResult<InitRule> {
    if let Ok(text) = init.extract::<String>() {
        return text.parse().map_err(value_error);
    }
    let x: f64 = init.extract()?;
    if (0.0..=1.0).contains(&x) {
        Ok(InitRule::Value(x))
    } else {
        Err(PyValueError::new_err(format!("init must lie in [0, 1], got {x}")))
    }
}

/// Simple undirected graph on vertices `0..n`.
#[pyclass(module = "spinsaw", frozen)]
struct Graph {
    inner: spinsaw::Graph,
}

#[pymethods]
impl Graph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self { inner: spinsaw::Graph::from_edges(n, &edges).map_err(value_error)? })
    }

    /// `kind` is one of path, cycle, complete, random_regular, erdos_renyi,
    /// binary_tree, regular_tree.
    #[staticmethod]
    #[pyo3(signature = (kind, n=None, degree=None, p=None, depth=None, seed=0))]
    fn generate(
        kind: &str,
        n: Option<usize>,
        degree: Option<usize>,
        p: Option<f64>,
        depth: Option<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let need =
            |v: Option<usize>, name: &str| v.ok_or_else(|| PyValueError::new_err(format!("{kind} needs {name}")));
        let kind = match kind {
            "path" => GraphKind::Path { n: need(n, "n")? },
            "cycle" => GraphKind::Cycle { n: need(n, "n")? },
            "complete" => GraphKind::Complete { n: need(n, "n")? },
            "random_regular" => GraphKind::RandomRegular { n: need(n, "n")?, d: need(degree, "degree")? },
            "erdos_renyi" => GraphKind::ErdosRenyi {
                n: need(n, "n")?,
                p: p.ok_or_else(|| PyValueError::new_err("erdos_renyi needs p"))?,
            },
            "binary_tree" => GraphKind::CompleteBinaryTree { depth: need(depth, "depth")? },
            "regular_tree" => GraphKind::RegularTree { degree: need(degree, "degree")?, depth: need(depth, "depth")? },
            other => return Err(PyValueError::new_err(format!("unknown graph kind {other:?}"))),
        };
        Ok(Self { inner: generate(&kind, seed).map_err(value_error)? })
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        self.check(v)?;
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn degree(&self, v: usize) -> PyResult<usize> {
        self.check(v)?;
        Ok(self.inner.degree(v))
    }

    fn max_degree(&self) -> usize {
        self.inner.max_degree()
    }

    fn distance(&self, u: usize, v: usize) -> PyResult<Option<usize>> {
        self.inner.distance(u, v).map_err(value_error)
    }

    fn ball(&self, v: usize, radius: usize) -> PyResult<Vec<usize>> {
        self.inner.ball(v, radius).map_err(value_error)
    }

    fn sphere(&self, v: usize, radius: usize) -> PyResult<Vec<usize>> {
        self.inner.sphere(v, radius).map_err(value_error)
    }

    fn maximal_path_density(&self, v: usize, radius: usize) -> PyResult<usize> {
        self.inner.maximal_path_density(v, radius).map_err(value_error)
    }

    fn avg_path_degree(&self, v: usize, radius: usize) -> PyResult<f64> {
        self.inner.avg_path_degree(v, radius).map_err(value_error)
    }

    fn max_avg_degree(&self, radius: usize) -> PyResult<f64> {
        self.inner.max_avg_degree(radius).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.vertex_count(), self.inner.edge_count())
    }
}

impl Graph {
    fn check(&self, v: usize) -> PyResult<()> {
        if self.inner.contains(v) {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("vertex {v} out of range")))
        }
    }
}

/// Two-state spin system: log-weights `(pp, pm, mp, mm)` per edge in the
/// order of `graph.edges`, and `(h_plus, h_minus)` per vertex.
#[pyclass(module = "spinsaw", frozen)]
struct SpinSystem {
    inner: spinsaw::SpinSystem,
}

#[pymethods]
impl SpinSystem {
    #[new]
    fn new(graph: PyRef<'_, Graph>, potentials: Vec<(f64, f64, f64, f64)>, fields: Vec<(f64, f64)>) -> PyResult<Self> {
        let pots = potentials.into_iter().map(|(a, b, c, d)| EdgePotential::new(a, b, c, d)).collect();
        let fields = fields.into_iter().map(|(p, m)| VertexField::new(p, m)).collect();
        let inner = spinsaw::SpinSystem::new(graph.inner.clone(), pots, fields).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (graph, coupling, field=0.0))]
    fn ising(graph: PyRef<'_, Graph>, coupling: f64, field: f64) -> PyResult<Self> {
        let inner = spinsaw::SpinSystem::ising_uniform(graph.inner.clone(), coupling, field).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: io::parse_model(text).map_err(value_error)? })
    }

    fn to_json(&self) -> String {
        io::write_model(&self.inner)
    }

    #[getter]
    fn graph(&self) -> Graph {
        Graph { inner: self.inner.graph().clone() }
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    /// Log-weight of a configuration given as a string of `+`/`-`.
    fn log_weight(&self, config: &str) -> PyResult<f64> {
        let spins = config
            .chars()
            .map(|c| c.to_string().parse::<Spin>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_error)?;
        if spins.len() != self.inner.vertex_count() {
            return Err(PyValueError::new_err("configuration length must equal the vertex count"));
        }
        Ok(self.inner.log_weight(&spins))
    }

    /// Coupling, field, alpha and gamma extremes; `None` where undefined.
    fn parameters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = derive_parameters(&self.inner);
        let d = PyDict::new(py);
        d.set_item("max_coupling", p.max_coupling)?;
        d.set_item("min_field", p.min_field)?;
        d.set_item("max_field", p.max_field)?;
        d.set_item("min_alpha", p.min_alpha)?;
        d.set_item("max_alpha", p.max_alpha)?;
        d.set_item("gamma", p.gamma)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let g = self.inner.graph();
        format!("SpinSystem(n={}, edges={})", g.vertex_count(), g.edge_count())
    }
}

/// Self-avoiding-walk tree rooted at one vertex.
#[pyclass(module = "spinsaw", frozen)]
struct SawTree {
    inner: spinsaw::SawTree,
}

#[pymethods]
impl SawTree {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn truncated(&self) -> bool {
        self.inner.has_truncation()
    }

    /// Node count at each depth.
    fn sphere_sizes(&self) -> Vec<usize> {
        self.inner.stats().sphere_sizes
    }

    fn outline(&self) -> String {
        self.inner.to_outline()
    }

    fn dot(&self) -> String {
        self.inner.to_dot()
    }

    /// Exact root `P(+)`; fails on truncated trees.
    fn exact_marginal(&self) -> PyResult<f64> {
        Ok(exact_root_marginal(&self.inner).map_err(value_error)?.p_plus)
    }

    /// Root `P(+)` with every free node at depth `t` replaced by `init`.
    #[pyo3(signature = (t, init=None))]
    fn truncated_marginal(&self, t: usize, init: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
        let rule = init.map(init_rule).transpose()?.unwrap_or_default();
        Ok(truncated_root_marginal(&self.inner, t, rule).map_err(value_error)?.p_plus)
    }
}

/// Output of [`approx_log_partition`].
#[pyclass(module = "spinsaw", frozen, get_all)]
struct ApproxResult {
    log_z: f64,
    epsilon: f64,
    regime: String,
    certified_error: f64,
    guarantee_met: bool,
    total_nodes: usize,
    max_nodes: usize,
    depths: Vec<Option<usize>>,
}

#[pymethods]
impl ApproxResult {
    fn __repr__(&self) -> String {
        format!(
            "ApproxResult(log_z={}, regime={}, guarantee_met={})",
            self.log_z,
            self.regime,
            if self.guarantee_met { "True" } else { "False" }
        )
    }
}

#[pyfunction]
#[pyo3(signature = (system, root, condition=None, depth=None))]
fn build_saw_tree(
    system: PyRef<'_, SpinSystem>,
    root: usize,
    condition: Option<&Bound<'_, PyAny>>,
    depth: Option<usize>,
) -> PyResult<SawTree> {
    let cond = boundary(condition)?;
    Ok(SawTree { inner: build_tree(&system.inner, root, &cond, depth).map_err(value_error)? })
}

#[pyfunction]
#[pyo3(signature = (system, condition=None, cap=DEFAULT_FREE_CAP))]
fn exact_log_partition(
    py: Python<'_>,
    system: PyRef<'_, SpinSystem>,
    condition: Option<&Bound<'_, PyAny>>,
    cap: usize,
) -> PyResult<f64> {
    let cond = boundary(condition)?;
    let sys = &system.inner;
    py.detach(|| exact_log_partition_capped(sys, &cond, cap)).map_err(oracle_error)
}

#[pyfunction]
#[pyo3(signature = (system, vertex, condition=None, cap=DEFAULT_FREE_CAP))]
fn exact_marginal(
    py: Python<'_>,
    system: PyRef<'_, SpinSystem>,
    vertex: usize,
    condition: Option<&Bound<'_, PyAny>>,
    cap: usize,
) -> PyResult<f64> {
    let cond = boundary(condition)?;
    let sys = &system.inner;
    py.detach(|| exact_marginal_capped(sys, vertex, &cond, cap)).map_err(oracle_error)
}

/// Approximate `ln Z`. `depth` is `None` (automatic), an int, or `"full"`.
#[pyfunction]
#[pyo3(signature = (system, epsilon, d, depth=None, init=None, relaxed=false))]
fn approx_log_partition(
    py: Python<'_>,
    system: PyRef<'_, SpinSystem>,
    epsilon: f64,
    d: f64,
    depth: Option<&Bound<'_, PyAny>>,
    init: Option<&Bound<'_, PyAny>>,
    relaxed: bool,
) -> PyResult<ApproxResult> {
    let depth = match depth {
        None => DepthChoice::Auto,
        Some(obj) if obj.is_none() => DepthChoice::Auto,
        Some(obj) => match obj.extract::<String>() {
            Ok(s) if s == "full" => DepthChoice::Full,
            Ok(s) => return Err(PyValueError::new_err(format!("depth must be an int or \"full\", got {s:?}"))),
            Err(_) => DepthChoice::Fixed(obj.extract()?),
        },
    };
    let config = FptasConfig {
        depth,
        init: init.map(init_rule).transpose()?.unwrap_or_default(),
        relaxed,
        ..FptasConfig::new(epsilon, d)
    };
    let sys = &system.inner;
    let r = py.detach(|| approx(sys, &config)).map_err(|e| match e {
        spinsaw::FptasError::NoRegime(_) => NoRegime::new_err(e.to_string()),
        other => value_error(other),
    })?;
    Ok(ApproxResult {
        log_z: r.log_z_hat,
        epsilon: r.epsilon,
        regime: r.regime.to_string(),
        certified_error: r.certified_error,
        guarantee_met: r.guarantee_met,
        total_nodes: r.total_nodes,
        max_nodes: r.max_nodes,
        depths: r.per_vertex.iter().map(|v| v.depth).collect(),
    })
}

/// Regime, prefactor, rate and form of the decay function at degree `d`.
#[pyfunction]
fn classify_mixing<'py>(py: Python<'py>, system: PyRef<'_, SpinSystem>, d: f64) -> PyResult<Bound<'py, PyDict>> {
    let b = classify(&derive_parameters(&system.inner), d);
    let out = PyDict::new(py);
    out.set_item("regime", b.regime.to_string())?;
    out.set_item("prefactor", b.prefactor)?;
    out.set_item("rate", b.rate)?;
    out.set_item("log_form", b.log_form)?;
    Ok(out)
}

#[pyfunction]
fn critical_coupling(d: f64) -> PyResult<f64> {
    jd(d).map_err(value_error)
}

#[pyfunction]
fn field_threshold(d: f64, alpha: f64, gamma: f64) -> PyResult<f64> {
    threshold(d, alpha, gamma).map_err(value_error)
}

/// One dict per `t` with keys `t`, `sphere`, `observed`, `observed_log`,
/// `bound`, `regime`.
#[pyfunction]
#[pyo3(signature = (system, vertex, ts, d, exhaustive=false))]
fn empirical_decay<'py>(
    py: Python<'py>,
    system: PyRef<'_, SpinSystem>,
    vertex: usize,
    ts: Vec<usize>,
    d: f64,
    exhaustive: bool,
) -> PyResult<Bound<'py, PyList>> {
    let strategy = if exhaustive { BoundaryStrategy::Exhaustive } else { BoundaryStrategy::Extremal };
    let sys = &system.inner;
    let rows = py.detach(|| decay_rows(sys, vertex, &ts, strategy, d)).map_err(value_error)?;
    let out = PyList::empty(py);
    for r in rows {
        let row = PyDict::new(py);
        row.set_item("t", r.t)?;
        row.set_item("sphere", r.sphere)?;
        row.set_item("observed", r.observed)?;
        row.set_item("observed_log", r.observed_log)?;
        row.set_item("bound", r.bound)?;
        row.set_item("regime", r.regime.to_string())?;
        out.append(row)?;
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "spinsaw")]
fn spinsaw_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<SpinSystem>()?;
    m.add_class::<SawTree>()?;
    m.add_class::<ApproxResult>()?;
    m.add("CapExceeded", m.py().get_type::<CapExceeded>())?;
    m.add("NoRegime", m.py().get_type::<NoRegime>())?;
    m.add_function(wrap_pyfunction!(build_saw_tree, m)?)?;
    m.add_function(wrap_pyfunction!(exact_log_partition, m)?)?;
    m.add_function(wrap_pyfunction!(exact_marginal, m)?)?;
    m.add_function(wrap_pyfunction!(approx_log_partition, m)?)?;
    m.add_function(wrap_pyfunction!(classify_mixing, m)?)?;
    m.add_function(wrap_pyfunction!(critical_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(field_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_decay, m)?)?;
    Ok(())
}
