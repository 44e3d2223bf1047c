//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{random_boundary, random_connected_graph, random_potential, random_system, random_tree, slope};
use spinsaw::marginal::{vertex_g, vertex_g_partial, EdgeMaps};
use spinsaw::mixing::{
    contraction_holds, derivative_bound_holds, empirical_decay, product_bound_holds, BoundaryStrategy,
};
use spinsaw::oracle::exact_summary;
use spinsaw::{
    approx_log_partition, build_saw_tree, classify_mixing, collapse_subtree, derive_parameters, exact_log_partition,
    exact_root_marginal, field_threshold, generate, Boundary, FptasConfig, Graph, GraphKind, InitRule, Regime,
    SpinSystem, DEFAULT_FREE_CAP,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// SAW-tree marginals equal graph marginals.
fn criterion1() -> Outcome {
    let instances = 600;
    let results: Vec<(usize, f64)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
            let n = rng.gen_range(3..=10);
            let p = if n <= 7 { rng.gen_range(0.25..0.6) } else { rng.gen_range(0.2..0.4) };
            let g = random_connected_graph(&mut rng, n, p);
            let sys = random_system(&mut rng, g, 2.0);
            let sigma = random_boundary(&mut rng, n, 0.25);
            let oracle = exact_summary(&sys, &sigma, true, DEFAULT_FREE_CAP).unwrap();
            let marginals = oracle.marginals.unwrap();
            let mut worst = 0.0f64;
            let mut checked = 0;
            for v in (0..n).filter(|&v| !sigma.contains(v)) {
                let tree = build_saw_tree(&sys, v, &sigma, None).unwrap();
                let p_tree = exact_root_marginal(&tree).unwrap().p_plus;
                worst = worst.max((p_tree - marginals[v]).abs());
                checked += 1;
            }
            (checked, worst)
        })
        .collect();
    let vertices: usize = results.iter().map(|r| r.0).sum();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Outcome::new(
        worst <= 1e-9,
        format!("{instances} instances, {vertices} vertices, max |dp| = {worst:.2e} (tol 1e-9)"),
    )
}

/// Connected graph on `n` vertices with maximum degree at most `d`.
fn bounded_degree_graph(rng: &mut ChaCha8Rng, n: usize, d: usize, extra: f64) -> Graph {
    let tree = random_tree(rng, n, Some(d));
    let mut edges = tree.edges().to_vec();
    let mut degree: Vec<usize> = (0..n).map(|v| tree.degree(v)).collect();
    for u in 0..n {
        for v in u + 1..n {
            if degree[u] < d && degree[v] < d && !edges.contains(&(u, v)) && rng.gen::<f64>() < extra {
                edges.push((u, v));
                degree[u] += 1;
                degree[v] += 1;
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

const EPSILONS: [f64; 3] = [0.3, 0.1, 0.03];

/// Runs every (ε, init) pair; returns the largest error over ε.
fn fptas_worst_ratio(sys: &SpinSystem, d: f64) -> f64 {
    let exact = exact_log_partition(sys, &Boundary::new()).unwrap();
    let mut worst = 0.0f64;
    for eps in EPSILONS {
        for init in InitRule::STANDARD {
            let cfg = FptasConfig { init, ..FptasConfig::new(eps, d) };
            let r = approx_log_partition(sys, &cfg).unwrap();
            worst = worst.max((r.log_z_hat - exact).abs() / eps);
        }
    }
    worst
}

/// FPTAS error at most ε in both regimes.
fn criterion2() -> Outcome {
    let temperature: Vec<f64> = (0..120u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(2000 + i);
            loop {
                let n = rng.gen_range(4..=16);
                let dmax = rng.gen_range(2..=4);
                let g = bounded_degree_graph(&mut rng, n, dmax, 0.3);
                let d = g.max_degree().max(2) as f64;
                let scale = rng.gen_range(0.05..0.5);
                let pots = (0..g.edge_count()).map(|_| random_potential(&mut rng, scale)).collect();
                let fields = (0..n).map(|_| common::random_field(&mut rng, 1.0)).collect();
                let sys = SpinSystem::new(g, pots, fields).unwrap();
                if classify_mixing(&derive_parameters(&sys), d).regime == Regime::InverseTemperature {
                    return fptas_worst_ratio(&sys, d);
                }
            }
        })
        .collect();
    let field: Vec<f64> = (0..60u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(3000 + i);
            let n = rng.gen_range(4..=16);
            let g = bounded_degree_graph(&mut rng, n, 3, 0.3);
            let j = rng.gen_range(0.55..0.8) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let threshold = {
                let probe = SpinSystem::ising_uniform(g.clone(), j, 0.0).unwrap();
                let params = derive_parameters(&probe);
                field_threshold(3.0, params.max_alpha.unwrap(), params.gamma.unwrap()).unwrap()
            };
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let couplings = vec![j; g.edge_count()];
            let fields: Vec<f64> = (0..n).map(|_| sign * (threshold + rng.gen_range(0.3..2.0))).collect();
            let sys = SpinSystem::ising(g, &couplings, &fields).unwrap();
            assert_eq!(classify_mixing(&derive_parameters(&sys), 3.0).regime, Regime::FieldDominated);
            fptas_worst_ratio(&sys, 3.0)
        })
        .collect();
    let wt = temperature.iter().cloned().fold(0.0, f64::max);
    let wf = field.iter().cloned().fold(0.0, f64::max);
    Outcome::new(
        wt <= 1.0 && wf <= 1.0,
        format!(
            "{} temperature-regime + {} field-regime instances x 3 eps x 3 inits, max |dlnZ|/eps = {wt:.3} / {wf:.3}",
            temperature.len(),
            field.len()
        ),
    )
}

/// Log-ratio envelope on complete 3-regular trees.
fn criterion3() -> Outcome {
    let g = generate(&GraphKind::RegularTree { degree: 3, depth: 8 }, 0).unwrap();
    let ts: Vec<usize> = (2..=7).collect();
    let mut pass = true;
    let mut worst_margin = 0.0f64;
    let mut worst_fit = f64::NEG_INFINITY;
    for j in [0.1, 0.3, 0.5] {
        for b in [0.0, 0.5] {
            let sys = SpinSystem::ising_uniform(g.clone(), j, b).unwrap();
            let rows = empirical_decay(&sys, 0, &ts, BoundaryStrategy::Extremal, 3.0).unwrap();
            let tanh: f64 = f64::tanh(j);
            for r in &rows {
                let envelope = 4.0 * j * r.sphere as f64 * tanh.powi(r.t as i32 - 1);
                pass &= r.observed_log <= envelope;
                worst_margin = worst_margin.max(r.observed_log / envelope);
            }
            let xs: Vec<f64> = rows.iter().map(|r| r.t as f64).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.observed_log.ln()).collect();
            let ratio = slope(&xs, &ys).exp();
            let limit = 2.0 * tanh + 0.02;
            pass &= ratio <= limit;
            worst_fit = worst_fit.max(ratio - limit);
        }
    }
    Outcome::new(
        pass,
        format!(
            "J in {{0.1,0.3,0.5}}, B in {{0,0.5}}, t=2..7: max observed/envelope = {worst_margin:.3}, max fitted ratio - limit = {worst_fit:.3}"
        ),
    )
}

/// Probability-form envelope in the field regime.
fn criterion4() -> Outcome {
    let ts: Vec<usize> = (2..=6).collect();
    let mut cases: Vec<(SpinSystem, usize, f64)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    for (d, js) in [(3usize, [0.6, -0.8]), (4, [0.4, -0.6])] {
        for j in js {
            let complete = generate(&GraphKind::RegularTree { degree: d, depth: 6 }, 0).unwrap();
            let random = random_tree(&mut rng, 40, Some(d));
            for (g, root) in [(complete, 0), (random, rng.gen_range(0..40))] {
                let probe = SpinSystem::ising_uniform(g.clone(), j, 0.0).unwrap();
                let params = derive_parameters(&probe);
                let th = field_threshold(d as f64, params.max_alpha.unwrap(), params.gamma.unwrap()).unwrap();
                for sign in [1.0, -1.0] {
                    for margin in [0.1, 1.0] {
                        let sys = SpinSystem::ising_uniform(g.clone(), j, sign * (th + margin)).unwrap();
                        cases.push((sys, root, d as f64));
                    }
                }
            }
        }
    }
    let results: Vec<(bool, bool, f64)> = cases
        .par_iter()
        .flat_map(|(sys, root, d)| {
            empirical_decay(sys, *root, &ts, BoundaryStrategy::Exhaustive, *d)
                .unwrap()
                .into_iter()
                .map(|r| {
                    let ratio = if r.bound > 0.0 { r.observed / r.bound } else { 0.0 };
                    (r.regime == Regime::FieldDominated, r.observed <= r.bound, ratio)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let regime_ok = results.iter().all(|r| r.0);
    let pass = regime_ok && results.iter().all(|r| r.1);
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    Outcome::new(
        pass,
        format!("{} trees x t=2..6, max observed/bound = {worst:.3}, all field regime: {regime_ok}", cases.len()),
    )
}

/// Inequality property suites.
fn criterion5() -> Outcome {
    let samples = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    let pos = |rng: &mut ChaCha8Rng| rng.gen_range(-3.0f64..3.0).exp();
    let mut bad = [0usize; 3];
    for _ in 0..samples {
        let v: Vec<f64> = (0..6).map(|_| pos(&mut rng)).collect();
        bad[0] += !contraction_holds(v[0], v[1], v[2], v[3], v[4], v[5]).unwrap() as usize;
        let p = random_potential(&mut rng, 2.0);
        bad[1] += !derivative_bound_holds(&p, 1000) as usize;
        let k = rng.gen_range(1..=8);
        let lambdas: Vec<f64> = (0..k).map(|_| pos(&mut rng)).collect();
        bad[2] += !product_bound_holds(&lambdas).unwrap() as usize;
    }
    Outcome::new(
        bad == [0, 0, 0],
        format!("{samples} samples each, violations (contraction, |h| <= gamma, product) = {bad:?}"),
    )
}

/// Collapsing a subtree preserves the root marginal.
fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=30);
        let g = random_tree(&mut rng, n, None);
        let sys = random_system(&mut rng, g, 2.0);
        let root = rng.gen_range(0..n);
        let sigma = random_boundary(&mut rng, n, 0.15);
        let mut sigma_free_root = Boundary::new();
        for (v, s) in sigma.iter().filter(|&(v, _)| v != root) {
            sigma_free_root.insert(v, s);
        }
        let tree = build_saw_tree(&sys, root, &sigma_free_root, None).unwrap();
        let child = rng.gen_range(1..tree.len());
        let parent = tree.node(child).unwrap().parent.unwrap();
        let before = exact_root_marginal(&tree).unwrap().p_plus;
        let collapsed = collapse_subtree(&tree, parent, child).unwrap();
        let after = exact_root_marginal(&collapsed).unwrap().p_plus;
        worst = worst.max((before - after).abs());
    }
    Outcome::new(worst <= 1e-10, format!("200 trees, max |dp| = {worst:.2e} (tol 1e-10)"))
}

fn connected(n: usize, mask: u32, pairs: &[(usize, usize)]) -> bool {
    let mut seen = 1u32;
    let mut frontier = vec![0usize];
    while let Some(u) = frontier.pop() {
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 0 {
                continue;
            }
            let w = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if seen >> w & 1 == 0 {
                seen |= 1 << w;
                frontier.push(w);
            }
        }
    }
    seen == (1 << n) - 1
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Edge-set bitmask that is minimal over all relabelings.
fn canonical(mask: u32, pairs: &[(usize, usize)], perms: &[Vec<usize>], index: &[Vec<usize>]) -> u32 {
    perms
        .iter()
        .map(|p| {
            pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &(a, b))| 1u32 << index[p[a]][p[b]])
                .sum()
        })
        .min()
        .unwrap()
}

fn graph_set(n: usize, sample: Option<(usize, u64)>) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut index = vec![vec![0usize; n]; n];
    for (k, &(a, b)) in pairs.iter().enumerate() {
        index[a][b] = k;
        index[b][a] = k;
    }
    let perms = permutations(n);
    let masks: Vec<u32> = match sample {
        None => (0..1u32 << pairs.len()).collect(),
        Some((count, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let p = rng.gen_range(0.2..0.8);
                    (0..pairs.len()).filter(|_| rng.gen::<f64>() < p).map(|k| 1u32 << k).sum()
                })
                .collect()
        }
    };
    let canon: HashSet<u32> = masks
        .into_par_iter()
        .filter(|&m| connected(n, m, &pairs))
        .map(|m| canonical(m, &pairs, &perms, &index))
        .collect();
    let mut canon: Vec<u32> = canon.into_iter().collect();
    canon.sort_unstable();
    canon
        .into_iter()
        .map(|m| {
            let edges: Vec<_> = pairs.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, &e)| e).collect();
            Graph::from_edges(n, &edges).unwrap()
        })
        .collect()
}

/// Violations of the path-density, sphere and ball bounds on one graph.
fn sparsity_violations(g: &Graph) -> [usize; 3] {
    let n = g.vertex_count();
    let sys = SpinSystem::zero(g.clone());
    let trees: Vec<_> = (0..n).map(|v| build_saw_tree(&sys, v, &Boundary::new(), None).unwrap()).collect();
    let ball = |v: usize, r: usize| trees[v].nodes().iter().filter(|x| x.depth <= r).count();
    let mut bad = [0usize; 3];
    for l in 1..=3 {
        let m_l: Vec<usize> = (0..n).map(|u| g.maximal_path_density(u, l).unwrap()).collect();
        let best = (0..n).map(|u| m_l[u] - g.degree(u)).max().unwrap();
        let best_ball = (0..n).map(|u| ball(u, l)).max().unwrap();
        for v in 0..n {
            for j in 1..=3 {
                if g.maximal_path_density(v, j * l).unwrap() > j * best + g.degree(v) {
                    bad[0] += 1;
                }
                if ball(v, j * l) as f64 > (best_ball as f64).powi(j as i32) {
                    bad[2] += 1;
                }
            }
            let delta = g.avg_path_degree(v, l).unwrap();
            if delta >= 2.0 {
                let sphere = trees[v].nodes().iter().filter(|x| x.depth == l + 1).count();
                if sphere as f64 > g.degree(v) as f64 * (delta - 1.0).powi(l as i32) {
                    bad[1] += 1;
                }
            }
        }
    }
    bad
}

/// Sparsity propositions on small connected graphs.
fn criterion7() -> Outcome {
    let mut graphs = Vec::new();
    for n in 2..=6 {
        graphs.extend(graph_set(n, None));
    }
    let exhaustive = graphs.len();
    graphs.extend(graph_set(7, Some((3000, 7000))));
    let sampled = graphs.len() - exhaustive;
    let bad =
        graphs.par_iter().map(sparsity_violations).reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    Outcome::new(
        bad == [0, 0, 0],
        format!("{exhaustive} graphs with n <= 6 + {sampled} sampled with n = 7, violations (path density, sphere, ball) = {bad:?}"),
    )
}

/// `min(g, 1 - g)` from the maps directly, for accurate differences.
fn g_small_side(lambda: f64, maps: &[EdgeMaps], xs: &[f64], upper: bool) -> f64 {
    let prod: f64 = maps.iter().zip(xs).map(|(m, &x)| m.f(x)).product();
    let w = lambda * prod;
    if upper {
        w / (1.0 + w)
    } else {
        1.0 / (1.0 + w)
    }
}

/// Gradient identity against central differences.
fn criterion8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8000);
    let step = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = rng.gen_range(1..=5);
        let maps: Vec<EdgeMaps> = (0..q).map(|_| EdgeMaps::new(&random_potential(&mut rng, 2.0))).collect();
        let lambda = rng.gen_range(-3.0f64..3.0).exp();
        let xs: Vec<f64> = (0..q).map(|_| rng.gen_range(0.0..1.0)).collect();
        let i = rng.gen_range(0..q);
        let analytic = vertex_g_partial(lambda, &maps, &xs, i);
        let upper = vertex_g(lambda, &maps, &xs) > 0.5;
        let at = |x: f64| {
            let mut ys = xs.clone();
            ys[i] = x;
            g_small_side(lambda, &maps, &ys, upper)
        };
        let mut numeric = (at(xs[i] + step) - at(xs[i] - step)) / (2.0 * step);
        if upper {
            numeric = -numeric;
        }
        worst = worst.max((numeric - analytic).abs() / analytic.abs());
    }
    Outcome::new(worst <= 1e-6, format!("1000 configurations, max relative error = {worst:.2e} (tol 1e-6)"))
}

/// Visit counts grow polynomially in n.
fn criterion9() -> Outcome {
    let ns = [50usize, 100, 200, 400];
    let j: f64 = 0.2;
    let eps = 0.1;
    let mut visits = Vec::new();
    for &n in &ns {
        let g = generate(&GraphKind::RandomRegular { n, d: 3 }, 9000 + n as u64).unwrap();
        let sys = SpinSystem::ising_uniform(g, j, 0.1).unwrap();
        let r = approx_log_partition(&sys, &FptasConfig::new(eps, 3.0)).unwrap();
        assert_eq!(r.regime, Regime::InverseTemperature);
        visits.push(r.total_nodes as f64);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = visits.iter().map(|v| v.ln()).collect();
    let fitted = slope(&xs, &ys);
    let a_eff = 1.0 / -(2.0 * j.tanh()).ln();
    let window = 1.0 + 2f64.ln() * a_eff + 0.5;
    let ratios: Vec<f64> = ys.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = ratios.iter().all(|&r| r < 1.5);
    Outcome::new(
        pass,
        format!(
            "visits {visits:?}, log-log slope {fitted:.3} (sanity window <= {window:.3}, {}), successive log-visit ratios {ratios:.3?}",
            if fitted <= window { "inside" } else { "outside" }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("SAW-tree marginal equivalence", criterion1),
        ("FPTAS error guarantee", criterion2),
        ("log-ratio decay envelope on trees", criterion3),
        ("field-regime decay envelope", criterion4),
        ("inequality property suites", criterion5),
        ("subtree collapse", criterion6),
        ("path density, sphere and ball bounds", criterion7),
        ("gradient identity", criterion8),
        ("complexity shape", criterion9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        failed += !outcome.pass as usize;
        println!("criterion {} [{name}]: {verdict} ({}; {:.1}s)", k + 1, outcome.detail, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
