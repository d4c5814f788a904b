//! Seeded generators of small random instances, shared by the test suites
//! and the `verify` command.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::Graph;
use crate::models::{BipartiteHardcoreModel, HardcoreModel, IsingModel, Model, RandomClusterModel};

/// Random simple graph on `n` vertices with `m` distinct edges
/// (`m` is capped at n(n-1)/2).
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Graph {
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    all.shuffle(rng);
    all.truncate(m.min(all.len()));
    Graph::new(n, all).expect("generated edges are valid")
}

/// Random bipartite graph with `left` + `right` vertices and `m` edges.
pub fn random_bipartite<R: Rng + ?Sized>(rng: &mut R, left: usize, right: usize, m: usize) -> Graph {
    let mut all: Vec<(usize, usize)> = (0..left)
        .flat_map(|u| (left..left + right).map(move |v| (u, v)))
        .collect();
    all.shuffle(rng);
    all.truncate(m.min(all.len()).max(1));
    Graph::bipartite(left + right, left, all).expect("generated edges cross")
}

/// Graph with between 1 and `max_edges` edges on at most `max_vertices`.
fn small_graph<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize, max_edges: usize) -> Graph {
    let n = rng.random_range(2..=max_vertices);
    let cap = (n * (n - 1) / 2).min(max_edges);
    let m = rng.random_range(1..=cap);
    random_graph(rng, n, m)
}

pub fn random_rc<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize, max_edges: usize) -> Model {
    let g = Arc::new(small_graph(rng, max_vertices, max_edges));
    let p = (0..g.m()).map(|_| rng.random_range(0.1..0.9)).collect();
    let lambda = (0..g.n()).map(|_| rng.random_range(0.0..1.0)).collect();
    Model::RandomCluster(RandomClusterModel::new(g, p, lambda).expect("valid parameters"))
}

pub fn random_ising<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize, max_edges: usize) -> Model {
    let g = Arc::new(small_graph(rng, max_vertices, max_edges));
    let beta = (0..g.m()).map(|_| rng.random_range(1.1..3.0)).collect();
    let lambda = (0..g.n()).map(|_| rng.random_range(0.05..1.0)).collect();
    Model::Ising(IsingModel::new(g, beta, lambda).expect("valid parameters"))
}

pub fn random_hardcore<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize, max_edges: usize) -> Model {
    let g = Arc::new(small_graph(rng, max_vertices, max_edges));
    let lambda = rng.random_range(0.2..2.0);
    Model::Hardcore(HardcoreModel::new(g, lambda).expect("valid parameters"))
}

pub fn random_bipartite_hardcore<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize) -> Model {
    let n = rng.random_range(2..=max_vertices.max(2));
    let left = rng.random_range(1..n);
    let m = rng.random_range(1..=left * (n - left));
    let g = Arc::new(random_bipartite(rng, left, n - left, m));
    let lambda = rng.random_range(0.2..2.0);
    let beta = rng.random_range(0.2..2.0);
    Model::BipartiteHardcore(BipartiteHardcoreModel::new(g, lambda, beta).expect("valid parameters"))
}

/// A monotone model with at most `max_vars` variables whose all-ones state
/// is in the support.
pub fn random_monotone<R: Rng + ?Sized>(rng: &mut R, max_vars: usize) -> Model {
    let max_vars = max_vars.max(2);
    loop {
        let m = match rng.random_range(0..6) {
            0 => random_rc(rng, 4, max_vars),
            1 => random_rc(rng, 4, max_vars).flip().expect("binary"),
            2 => random_ising(rng, max_vars, 4),
            3 => random_bipartite_hardcore(rng, max_vars),
            4 => {
                let full = random_bipartite_hardcore(rng, max_vars + 2);
                full.left_marginal().expect("bipartite")
            }
            _ => {
                let base = random_rc(rng, 4, max_vars).flip().expect("binary");
                base.tilt(rng.random_range(0.2..3.0)).expect("positive tilt")
            }
        };
        if m.num_vars() <= max_vars {
            return m;
        }
    }
}
