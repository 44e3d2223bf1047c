#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spinsaw::{Boundary, EdgePotential, Graph, Spin, SpinSystem, VertexField};

pub fn random_potential(rng: &mut ChaCha8Rng, scale: f64) -> EdgePotential {
    let mut draw = || rng.gen_range(-scale..=scale);
    EdgePotential::new(draw(), draw(), draw(), draw())
}

pub fn random_field(rng: &mut ChaCha8Rng, scale: f64) -> VertexField {
    VertexField::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale))
}

/// Random graph on `n` vertices: a random spanning tree plus each other
/// pair independently with probability `p`.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((labels[i].min(labels[j]), labels[i].max(labels[j])));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Random tree with `n` nodes: node `i` attaches to a uniform earlier node.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize, max_degree: Option<usize>) -> Graph {
    let mut degree = vec![0usize; n];
    let mut edges = Vec::new();
    for i in 1..n {
        let candidates: Vec<usize> = (0..i).filter(|&j| max_degree.map_or(true, |d| degree[j] < d)).collect();
        let j = *candidates.choose(rng).unwrap();
        degree[i] += 1;
        degree[j] += 1;
        edges.push((j, i));
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_system(rng: &mut ChaCha8Rng, g: Graph, scale: f64) -> SpinSystem {
    let pots = (0..g.edge_count()).map(|_| random_potential(rng, scale)).collect();
    let fields = (0..g.vertex_count()).map(|_| random_field(rng, scale)).collect();
    SpinSystem::new(g, pots, fields).unwrap()
}

pub fn random_boundary(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Boundary {
    let mut sigma = Boundary::new();
    for v in 0..n {
        if rng.gen::<f64>() < p {
            sigma.insert(v, if rng.gen::<bool>() { Spin::Plus } else { Spin::Minus });
        }
    }
    sigma
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
