use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spinsaw::fptas::{Conditioning, DepthChoice, DepthMode};
use spinsaw::marginal::{marginal_difference_bound, vertex_g, vertex_g_partial, EdgeMaps};
use spinsaw::mixing::{
    contraction_holds, decay_csv, derivative_bound_holds, empirical_decay, product_bound_holds, BoundaryStrategy,
};
use spinsaw::oracle::{exact_log_partition_capped, exact_summary};
use spinsaw::{
    approx_log_partition, build_saw_tree, classify_mixing, critical_coupling, derive_parameters, exact_root_marginal,
    field_threshold, generate, io, Boundary, EdgePotential, FptasConfig, FptasError, GraphError, GraphKind, InitRule,
    MixingError, ModelError, OracleError, Regime, SawError, SpinSystem, VertexField, DEFAULT_FREE_CAP,
};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_MODEL: u8 = 3;
const EXIT_CAP: u8 = 4;
const EXIT_NO_REGIME: u8 = 5;
const EXIT_INTERNAL: u8 = 6;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::new(EXIT_MODEL, e.to_string())
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<SawError> for Failure {
    fn from(e: SawError) -> Self {
        match e {
            SawError::Graph(g) => g.into(),
            other => Failure::new(EXIT_INTERNAL, other.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::CapExceeded { .. } => Failure::new(EXIT_CAP, e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<FptasError> for Failure {
    fn from(e: FptasError) -> Self {
        match e {
            FptasError::NoRegime(_) => Failure::new(EXIT_NO_REGIME, e.to_string()),
            FptasError::BadEpsilon(_) => Failure::usage(e.to_string()),
            FptasError::Tree(t) => t.into(),
            FptasError::ZeroMarginal(_) => Failure::new(EXIT_INTERNAL, e.to_string()),
        }
    }
}

impl From<MixingError> for Failure {
    fn from(e: MixingError) -> Self {
        match e {
            MixingError::Tree(t) => t.into(),
            MixingError::BadDegree(_) => Failure::usage(e.to_string()),
            other => Failure::new(EXIT_INTERNAL, other.to_string()),
        }
    }
}

type CliResult = Result<Report, Failure>;

/// Text written to stdout plus whether every requested check passed.
struct Report {
    text: String,
    ok: bool,
}

impl Report {
    fn new() -> Self {
        Self { text: String::new(), ok: true }
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key}: {value}");
    }

    /// Full precision followed by a rounded value.
    fn num(&mut self, key: &str, value: f64) {
        let _ = writeln!(self.text, "{key}: {value:?} (~{value:.4})");
    }

    fn check(&mut self, key: &str, passed: bool) {
        self.line(key, if passed { "pass" } else { "fail" });
        self.ok &= passed;
    }
}

#[derive(Parser, Debug)]
#[command(name = "spinsaw", version, about = "Self-avoiding-walk tree tools for two-state spin systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact log partition function by enumeration.
    ExactZ(ExactZArgs),
    /// Approximate log partition function through truncated SAW trees.
    ApproxZ(ApproxZArgs),
    /// Root marginal of a SAW tree, exact or truncated.
    Marginal(MarginalArgs),
    /// Build and export a SAW tree.
    SawTree(SawTreeArgs),
    /// Path density, average path degree and the sphere/ball bounds.
    Metrics(MetricsArgs),
    /// System parameters and the applicable mixing regime.
    CheckConditions(CheckArgs),
    /// Measured decay of the root marginal against the regime bound, as CSV.
    DecayScan(DecayArgs),
    /// Randomized checks of the contraction, derivative and product inequalities.
    VerifyProps(VerifyArgs),
    /// Write a generated model file.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct ModelArg {
    /// Model file (JSON); `-` reads stdin.
    model: PathBuf,
}

impl ModelArg {
    fn load(&self) -> Result<SpinSystem, Failure> {
        let text = if self.model.as_os_str() == "-" {
            std::io::read_to_string(std::io::stdin())
        } else {
            std::fs::read_to_string(&self.model)
        }
        .map_err(|e| Failure::new(EXIT_MODEL, format!("cannot read {}: {e}", self.model.display())))?;
        Ok(io::parse_model(&text)?)
    }
}

/// `--d` accepts a number or `auto`.
#[derive(Clone, Copy, Debug)]
enum DegreeArg {
    Value(f64),
    Auto,
}

impl std::str::FromStr for DegreeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(DegreeArg::Auto);
        }
        match s.parse::<f64>() {
            Ok(d) if d > 0.0 && d.is_finite() => Ok(DegreeArg::Value(d)),
            _ => Err(format!("expected a positive number or `auto`, got {s:?}")),
        }
    }
}

#[derive(Args, Debug)]
struct DegreeArgs {
    /// Degree parameter `d`, or `auto` for the maximum average degree at `--radius`.
    #[arg(long)]
    d: DegreeArg,
    /// Path radius used by `--d auto`.
    #[arg(long)]
    radius: Option<usize>,
}

impl DegreeArgs {
    fn resolve(&self, system: &SpinSystem, report: &mut Report) -> Result<f64, Failure> {
        match (self.d, self.radius) {
            (DegreeArg::Value(d), _) => Ok(d),
            (DegreeArg::Auto, None) => Err(Failure::usage("--d auto requires --radius")),
            (DegreeArg::Auto, Some(r)) => {
                let d = system.graph().max_avg_degree(r)?;
                report.num("d_auto", d);
                if d <= 0.0 {
                    return Err(Failure::usage("graph has no edges; --d auto is undefined"));
                }
                Ok(d)
            }
        }
    }
}

#[derive(Args, Debug)]
struct ConditionArg {
    /// Pinned vertices, e.g. `0=+,3=-`.
    #[arg(long, default_value = "")]
    condition: Boundary,
}

#[derive(Args, Debug)]
struct ExactZArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    condition: ConditionArg,
    /// Largest number of free vertices to enumerate.
    #[arg(long, default_value_t = DEFAULT_FREE_CAP)]
    cap: usize,
    /// Also print every vertex marginal.
    #[arg(long)]
    marginals: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    PerVertex,
    Global,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConditioningArg {
    Plus,
    FieldSign,
}

#[derive(Args, Debug)]
struct ApproxZArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    degree: DegreeArgs,
    /// Fixed truncation depth, or `full` for untruncated trees.
    #[arg(long)]
    depth_override: Option<String>,
    /// Boundary value at the cut: 0, 1/2, 1 or any probability.
    #[arg(long, default_value = "1/2")]
    init: InitRule,
    #[arg(long, value_enum, default_value = "per-vertex")]
    depth_mode: ModeArg,
    #[arg(long, value_enum, default_value = "plus")]
    conditioning: ConditioningArg,
    /// Accept per-vertex field thresholds instead of the global minimum.
    #[arg(long)]
    relaxed: bool,
    /// Compare with exact enumeration when the graph is small enough.
    #[arg(long)]
    verify: bool,
    /// Size limit for `--verify`.
    #[arg(long, default_value_t = DEFAULT_FREE_CAP)]
    verify_cap: usize,
    /// Print the per-vertex table as CSV after the summary.
    #[arg(long)]
    per_vertex: bool,
}

#[derive(Args, Debug)]
struct MarginalArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    vertex: usize,
    #[command(flatten)]
    condition: ConditionArg,
    /// Truncation depth; exact when omitted.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value = "1/2")]
    init: InitRule,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TreeFormat {
    Outline,
    Dot,
    Stats,
}

#[derive(Args, Debug)]
struct SawTreeArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    vertex: usize,
    #[command(flatten)]
    condition: ConditionArg,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, value_enum, default_value = "outline")]
    format: TreeFormat,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    radius: usize,
    /// Restrict the per-vertex table to one vertex.
    #[arg(long)]
    vertex: Option<usize>,
    /// Check the path-density, sphere and ball bounds for multipliers 1..=3.
    #[arg(long)]
    check_props: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    degree: DegreeArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Extremal,
    Exhaustive,
}

#[derive(Args, Debug)]
struct DecayArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    vertex: usize,
    #[command(flatten)]
    degree: DegreeArgs,
    #[arg(long, default_value_t = 1)]
    t_min: usize,
    #[arg(long)]
    t_max: usize,
    #[arg(long, value_enum, default_value = "extremal")]
    strategy: StrategyArg,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid points per edge for the derivative bound.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Path,
    Cycle,
    Complete,
    RandomRegular,
    ErdosRenyi,
    BinaryTree,
    RegularTree,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Vertex count for path, cycle, complete and random graphs.
    #[arg(long)]
    n: Option<usize>,
    /// Degree for random-regular and regular-tree.
    #[arg(long)]
    degree: Option<usize>,
    /// Edge probability for erdos-renyi.
    #[arg(long)]
    p: Option<f64>,
    /// Depth for the tree kinds.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniform Ising coupling.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    coupling: f64,
    /// Uniform Ising field.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    field: f64,
    /// Draw every log-weight uniformly from `[-s, s]` instead.
    #[arg(long)]
    random_scale: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exact_z(args: &ExactZArgs) -> CliResult {
    let sys = args.model.load()?;
    let cond = &args.condition.condition;
    let mut r = Report::new();
    let summary = exact_summary(&sys, cond, args.marginals, args.cap)?;
    r.num("log_z", summary.log_z);
    r.line("condition", if cond.is_empty() { "none".to_string() } else { cond.to_string() });
    if let Some(m) = summary.marginals {
        r.line("marginals", "vertex,p_plus");
        for (v, p) in m.iter().enumerate() {
            let _ = writeln!(r.text, "{v},{p:?}");
        }
    }
    Ok(r)
}

fn parse_depth_override(s: Option<&str>) -> Result<DepthChoice, Failure> {
    match s {
        None => Ok(DepthChoice::Auto),
        Some("full") => Ok(DepthChoice::Full),
        Some(t) => {
            t.parse::<usize>().ok().filter(|&t| t >= 1).map(DepthChoice::Fixed).ok_or_else(|| {
                Failure::usage(format!("--depth-override must be a positive integer or `full`, got {t:?}"))
            })
        }
    }
}

fn approx_z(args: &ApproxZArgs) -> CliResult {
    let sys = args.model.load()?;
    let mut r = Report::new();
    let depth = parse_depth_override(args.depth_override.as_deref())?;
    let d = args.degree.resolve(&sys, &mut r)?;
    let config = FptasConfig {
        depth,
        init: args.init,
        depth_mode: match args.depth_mode {
            ModeArg::PerVertex => DepthMode::PerVertex,
            ModeArg::Global => DepthMode::Global,
        },
        conditioning: match args.conditioning {
            ConditioningArg::Plus => Conditioning::Plus,
            ConditioningArg::FieldSign => Conditioning::FieldSign,
        },
        relaxed: args.relaxed,
        ..FptasConfig::new(args.epsilon, d)
    };
    let result = approx_log_partition(&sys, &config)?;
    r.num("log_z_hat", result.log_z_hat);
    r.num("epsilon", result.epsilon);
    r.line("regime", result.regime);
    r.num("certified_error", result.certified_error);
    r.line("guarantee_met", result.guarantee_met);
    r.line("total_nodes", result.total_nodes);
    r.line("max_nodes", result.max_nodes);
    if args.verify {
        let n = sys.vertex_count();
        if n > args.verify_cap {
            r.line("verify", format!("skipped ({n} vertices exceed cap {})", args.verify_cap));
        } else {
            let exact = exact_log_partition_capped(&sys, &Boundary::new(), args.verify_cap)?;
            let err = (result.log_z_hat - exact).abs();
            r.num("log_z", exact);
            r.num("abs_error", err);
            r.check("verify", err <= args.epsilon);
        }
    }
    if args.per_vertex {
        r.text.push_str("vertex,spin,p_hat,depth,error_bound,nodes\n");
        for v in &result.per_vertex {
            let depth = v.depth.map_or("full".to_string(), |t| t.to_string());
            let _ = writeln!(r.text, "{},{},{:?},{depth},{:?},{}", v.vertex, v.spin, v.p_hat, v.error_bound, v.nodes);
        }
    }
    Ok(r)
}

fn check_root(sys: &SpinSystem, vertex: usize, cond: &Boundary) -> Result<(), Failure> {
    let n = sys.vertex_count();
    if vertex >= n {
        return Err(GraphError::VertexOutOfRange { vertex, n }.into());
    }
    if cond.contains(vertex) {
        return Err(Failure::usage(format!("vertex {vertex} is pinned by --condition")));
    }
    Ok(())
}

fn marginal(args: &MarginalArgs) -> CliResult {
    let sys = args.model.load()?;
    let cond = &args.condition.condition;
    check_root(&sys, args.vertex, cond)?;
    let mut r = Report::new();
    let tree = build_saw_tree(&sys, args.vertex, cond, args.depth)?;
    let result = match args.depth {
        None => exact_root_marginal(&tree)?,
        Some(t) => {
            let m = spinsaw::truncated_root_marginal(&tree, t, args.init)?;
            m.with_error_bound(marginal_difference_bound(&tree, t))
        }
    };
    r.num("p_plus", result.p_plus);
    r.num("log_ratio", result.log_ratio);
    r.line("depth", result.depth_used.map_or("full".to_string(), |t| t.to_string()));
    if let Some(b) = result.error_bound {
        r.num("error_bound", b);
    }
    r.line("nodes", tree.len());
    Ok(r)
}

fn saw_tree(args: &SawTreeArgs) -> CliResult {
    let sys = args.model.load()?;
    let cond = &args.condition.condition;
    check_root(&sys, args.vertex, cond)?;
    let tree = build_saw_tree(&sys, args.vertex, cond, args.depth)?;
    let mut r = Report::new();
    match args.format {
        TreeFormat::Outline => r.text = tree.to_outline(),
        TreeFormat::Dot => r.text = tree.to_dot(),
        TreeFormat::Stats => {
            let stats = tree.stats();
            r.line("node_count", stats.node_count);
            r.line("max_depth", stats.max_depth);
            let sizes: Vec<String> = stats.sphere_sizes.iter().map(|s| s.to_string()).collect();
            r.line("sphere_sizes", sizes.join(","));
            r.line("truncated", tree.has_truncation());
        }
    }
    Ok(r)
}

fn metrics(args: &MetricsArgs) -> CliResult {
    let sys = args.model.load()?;
    let g = sys.graph();
    let n = g.vertex_count();
    let l = args.radius;
    if l == 0 {
        return Err(Failure::usage("--radius must be at least 1"));
    }
    let mut r = Report::new();
    r.num("max_avg_degree", g.max_avg_degree(l)?);
    let vertices: Vec<usize> = match args.vertex {
        Some(v) if v >= n => return Err(GraphError::VertexOutOfRange { vertex: v, n }.into()),
        Some(v) => vec![v],
        None => (0..n).collect(),
    };
    r.text.push_str("vertex,degree,path_density,avg_path_degree\n");
    for &v in &vertices {
        let s = g.sparsity_report(v, l)?;
        let _ = writeln!(r.text, "{v},{},{},{:?}", g.degree(v), s.path_density, s.avg_path_degree);
    }
    if args.check_props {
        let (density, sphere, ball) = sparsity_checks(&sys, l)?;
        r.check("path_density_composition", density);
        r.check("sphere_bound", sphere);
        r.check("ball_bound", ball);
    }
    Ok(r)
}

/// Composition of path density, the SAW-tree sphere bound at depth `l + 1`
/// and the ball bound at depths `j·l`, for `j = 1..=3`.
fn sparsity_checks(sys: &SpinSystem, l: usize) -> Result<(bool, bool, bool), Failure> {
    let g = sys.graph();
    let n = g.vertex_count();
    let trees =
        (0..n).map(|v| build_saw_tree(sys, v, &Boundary::new(), Some(3 * l + 1))).collect::<Result<Vec<_>, _>>()?;
    let ball = |v: usize, depth: usize| trees[v].nodes().iter().filter(|x| x.depth <= depth).count();
    let m: Vec<usize> = (0..n).map(|u| g.maximal_path_density(u, l)).collect::<Result<_, _>>()?;
    let best = (0..n).map(|u| m[u] - g.degree(u)).max().unwrap_or(0);
    let best_ball = (0..n).map(|u| ball(u, l)).max().unwrap_or(0) as f64;
    let (mut density, mut sphere, mut balls) = (true, true, true);
    for v in 0..n {
        for j in 1..=3 {
            density &= g.maximal_path_density(v, j * l)? <= j * best + g.degree(v);
            balls &= ball(v, j * l) as f64 <= best_ball.powi(j as i32);
        }
        let delta = g.avg_path_degree(v, l)?;
        if delta >= 2.0 {
            let s = trees[v].nodes().iter().filter(|x| x.depth == l + 1).count();
            sphere &= s as f64 <= g.degree(v) as f64 * (delta - 1.0).powi(l as i32);
        }
    }
    Ok((density, sphere, balls))
}

fn check_conditions(args: &CheckArgs) -> CliResult {
    let sys = args.model.load()?;
    let mut r = Report::new();
    let d = args.degree.resolve(&sys, &mut r)?;
    let params = derive_parameters(&sys);
    let opt = |r: &mut Report, key: &str, v: Option<f64>| match v {
        Some(x) => r.num(key, x),
        None => r.line(key, "none"),
    };
    r.num("d", d);
    opt(&mut r, "max_coupling", params.max_coupling);
    opt(&mut r, "min_field", params.min_field);
    opt(&mut r, "max_field", params.max_field);
    opt(&mut r, "min_alpha", params.min_alpha);
    opt(&mut r, "max_alpha", params.max_alpha);
    opt(&mut r, "gamma", params.gamma);
    r.num("critical_coupling", critical_coupling(d)?);
    let gamma = params.gamma_or_zero();
    let threshold = |alpha: Option<f64>| alpha.and_then(|a| field_threshold(d, a, gamma).ok());
    opt(&mut r, "field_threshold_plus", threshold(params.max_alpha));
    opt(&mut r, "field_threshold_minus", threshold(params.min_alpha.map(|a| -a)).map(|b| -b));
    let bound = classify_mixing(&params, d);
    r.line("regime", bound.regime);
    if bound.regime != Regime::None {
        r.num("prefactor", bound.prefactor);
        r.num("rate", bound.rate);
        r.line("log_form", bound.log_form);
    }
    Ok(r)
}

fn decay_scan(args: &DecayArgs) -> CliResult {
    let sys = args.model.load()?;
    check_root(&sys, args.vertex, &Boundary::new())?;
    if args.t_min > args.t_max {
        return Err(Failure::usage("--t-min exceeds --t-max"));
    }
    let mut header = Report::new();
    let d = args.degree.resolve(&sys, &mut header)?;
    let ts: Vec<usize> = (args.t_min..=args.t_max).collect();
    let strategy = match args.strategy {
        StrategyArg::Extremal => BoundaryStrategy::Extremal,
        StrategyArg::Exhaustive => BoundaryStrategy::Exhaustive,
    };
    let rows = empirical_decay(&sys, args.vertex, &ts, strategy, d)?;
    let mut r = Report::new();
    r.text = decay_csv(&rows);
    if rows.iter().any(|row| row.regime != Regime::None && !row.within_bound()) {
        r.ok = false;
        eprintln!("observed decay exceeds the regime bound");
    }
    Ok(r)
}

fn verify_props(args: &VerifyArgs) -> CliResult {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let pos = |rng: &mut ChaCha8Rng| rng.gen_range(-3.0f64..3.0).exp();
    let potential = |rng: &mut ChaCha8Rng| {
        EdgePotential::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        )
    };
    let mut bad = [0usize; 4];
    let mut worst_gradient = 0.0f64;
    for _ in 0..args.samples {
        let v: Vec<f64> = (0..6).map(|_| pos(&mut rng)).collect();
        bad[0] += !contraction_holds(v[0], v[1], v[2], v[3], v[4], v[5])? as usize;
        bad[1] += !derivative_bound_holds(&potential(&mut rng), args.grid) as usize;
        let k = rng.gen_range(1..=8);
        let lambdas: Vec<f64> = (0..k).map(|_| pos(&mut rng)).collect();
        bad[2] += !product_bound_holds(&lambdas)? as usize;

        let q = rng.gen_range(1..=5);
        let maps: Vec<EdgeMaps> = (0..q).map(|_| EdgeMaps::new(&potential(&mut rng))).collect();
        let lambda = pos(&mut rng);
        let xs: Vec<f64> = (0..q).map(|_| rng.gen_range(0.0..1.0)).collect();
        let i = rng.gen_range(0..q);
        let rel = gradient_error(lambda, &maps, &xs, i);
        worst_gradient = worst_gradient.max(rel);
        bad[3] += (rel > 1e-6) as usize;
    }
    let mut r = Report::new();
    r.line("samples", args.samples);
    r.line("seed", args.seed);
    r.line("contraction_violations", bad[0]);
    r.line("derivative_bound_violations", bad[1]);
    r.line("product_violations", bad[2]);
    r.line("gradient_violations", bad[3]);
    r.num("gradient_max_relative_error", worst_gradient);
    r.check("all", bad.iter().all(|&b| b == 0));
    Ok(r)
}

/// Relative error of the analytic partial derivative against a central
/// difference of `min(g, 1 - g)`.
fn gradient_error(lambda: f64, maps: &[EdgeMaps], xs: &[f64], i: usize) -> f64 {
    const STEP: f64 = 1e-6;
    let analytic = vertex_g_partial(lambda, maps, xs, i);
    let upper = vertex_g(lambda, maps, xs) > 0.5;
    let side = |x: f64| {
        let mut ys = xs.to_vec();
        ys[i] = x;
        let w: f64 = lambda * maps.iter().zip(&ys).map(|(m, &y)| m.f(y)).product::<f64>();
        if upper {
            -w / (1.0 + w)
        } else {
            1.0 / (1.0 + w)
        }
    };
    let numeric = (side(xs[i] + STEP) - side(xs[i] - STEP)) / (2.0 * STEP);
    (numeric - analytic).abs() / analytic.abs()
}

fn generate_model(args: &GenerateArgs) -> CliResult {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Failure::usage(format!("--kind requires --{flag}")));
    let kind = match args.kind {
        KindArg::Path => GraphKind::Path { n: need(args.n, "n")? },
        KindArg::Cycle => GraphKind::Cycle { n: need(args.n, "n")? },
        KindArg::Complete => GraphKind::Complete { n: need(args.n, "n")? },
        KindArg::RandomRegular => GraphKind::RandomRegular { n: need(args.n, "n")?, d: need(args.degree, "degree")? },
        KindArg::ErdosRenyi => GraphKind::ErdosRenyi {
            n: need(args.n, "n")?,
            p: args.p.ok_or_else(|| Failure::usage("--kind erdos-renyi requires --p"))?,
        },
        KindArg::BinaryTree => GraphKind::CompleteBinaryTree { depth: need(args.depth, "depth")? },
        KindArg::RegularTree => {
            GraphKind::RegularTree { degree: need(args.degree, "degree")?, depth: need(args.depth, "depth")? }
        }
    };
    let g = generate(&kind, args.seed)?;
    let sys = match args.random_scale {
        None => SpinSystem::ising_uniform(g, args.coupling, args.field)?,
        Some(s) if s >= 0.0 && s.is_finite() => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5eed);
            let mut w = || if s == 0.0 { 0.0 } else { rng.gen_range(-s..=s) };
            let pots = (0..g.edge_count()).map(|_| EdgePotential::new(w(), w(), w(), w())).collect();
            let fields = (0..g.vertex_count()).map(|_| VertexField::new(w(), w())).collect();
            SpinSystem::new(g, pots, fields)?
        }
        Some(s) => return Err(Failure::usage(format!("--random-scale must be non-negative, got {s}"))),
    };
    let text = io::write_model(&sys) + "\n";
    let mut r = Report::new();
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(EXIT_INTERNAL, format!("cannot write {}: {e}", path.display())))?,
        None => r.text = text,
    }
    Ok(r)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("SPINSAW_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Failure::usage(format!("SPINSAW_THREADS must be a non-negative integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))
}

fn run(cli: &Cli) -> CliResult {
    configure_threads()?;
    match &cli.command {
        Command::ExactZ(a) => exact_z(a),
        Command::ApproxZ(a) => approx_z(a),
        Command::Marginal(a) => marginal(a),
        Command::SawTree(a) => saw_tree(a),
        Command::Metrics(a) => metrics(a),
        Command::CheckConditions(a) => check_conditions(a),
        Command::DecayScan(a) => decay_scan(a),
        Command::VerifyProps(a) => verify_props(a),
        Command::Generate(a) => generate_model(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.text);
            ExitCode::from(if report.ok { 0 } else { EXIT_CHECK_FAILED })
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
