use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use super::*;
use crate::graph::Graph;
use crate::instances;
use crate::models::{lambda_c, HardcoreModel, Model, ProductModel, RandomClusterModel};
use crate::rng::Stream;

fn product(p: &[f64]) -> Model {
    Model::Product(ProductModel::new(p.to_vec()).unwrap())
}

fn k2_hardcore() -> Model {
    Model::Hardcore(HardcoreModel::new(Arc::new(Graph::complete(2)), 1.0).unwrap())
}

fn random_rc(rng: &mut Stream, p_low: f64, max_edges: usize) -> RandomClusterModel {
    let n = rng.random_range(2..=4);
    let m = rng.random_range(1..=max_edges);
    let g = Arc::new(instances::random_graph(rng, n, m));
    let p = (0..g.m()).map(|_| rng.random_range(p_low..0.95)).collect();
    let lambda = (0..g.n()).map(|_| rng.random_range(0.05..0.95)).collect();
    RandomClusterModel::new(g, p, lambda).unwrap()
}

#[test]
fn pinning_table_matches_enumeration() {
    let mut rng = Stream::seed_from_u64(3);
    for _ in 0..5 {
        let m = instances::random_monotone(&mut rng, 4);
        let t = PinningTable::of(&m).unwrap();
        let n = m.num_vars();
        let pin: Vec<Option<u8>> = (0..n).map(|_| [None, Some(0), Some(1)][rng.random_range(0..3)]).collect();
        let free = (0..n).find(|&v| pin[v].is_none());
        let (Some(v), true) = (free, t.mass(&pin).unwrap() > 0.0) else {
            continue;
        };
        let code = t.encode(&pin).unwrap();
        let law = m.conditional_marginal(&pin, v).unwrap();
        assert_relative_eq!(t.one_given(code, v).unwrap(), law[1], epsilon = 1e-12);
    }
}

#[test]
fn product_measures_have_no_influence() {
    let m = product(&[0.3, 0.6, 0.5]);
    let psi = influence_matrix(&m, &[None, None, Some(1)]).unwrap();
    for u in 0..3 {
        for v in 0..3 {
            let expect = if u == v && u < 2 { 1.0 } else { 0.0 };
            assert_relative_eq!(psi.entry(u, v), expect, epsilon = 1e-12);
        }
    }
    let si = spectral_independence(&m).unwrap();
    assert_relative_eq!(si.eta, 1.0, epsilon = 1e-12);
    assert!(si.eta_off_diagonal < 1e-12);
    assert_relative_eq!(coupling_independence(&m).unwrap().c, 1.0, epsilon = 1e-10);
    let ms = marginal_stability(&m).unwrap();
    assert_relative_eq!(ms.odds_ratio, 1.0, epsilon = 1e-12);
    assert_relative_eq!(ms.k, 1.0 / 0.4, epsilon = 1e-12);
}

#[test]
fn hardcore_edge_influence_and_coupling() {
    let m = k2_hardcore();
    let psi = influence_matrix(&m, &[None, None]).unwrap();
    assert_relative_eq!(psi.entry(0, 1), -0.5, epsilon = 1e-12);
    assert_relative_eq!(psi.entry(0, 0), 1.0);
    assert_relative_eq!(sinf_norm(&psi), 1.5, epsilon = 1e-12);
    let ci = coupling_independence(&m).unwrap();
    assert_relative_eq!(ci.c, 1.5, epsilon = 1e-10);
    assert!(influence_matrix(&m, &[Some(1), None]).is_err());
}

#[test]
fn influence_zero_when_conditions_fail() {
    // on a path 0-1-2 with vertex 0 occupied, vertex 1 cannot be 1
    let m = Model::Hardcore(HardcoreModel::new(Arc::new(Graph::path(4)), 1.0).unwrap());
    let psi = influence_matrix(&m, &[Some(1), None, None, None]).unwrap();
    for v in 0..4 {
        assert_eq!(psi.entry(1, v), 0.0);
        assert_eq!(psi.entry(v, 1), 0.0);
    }
    assert!(psi.entry(2, 3) != 0.0);
}

#[test]
fn single_vertex_stability() {
    for lambda in [0.2, 1.0, 3.0] {
        let m = product(&[lambda / (1.0 + lambda)]);
        let ms = marginal_stability(&m).unwrap();
        assert_relative_eq!(ms.k, 1.0 + lambda, epsilon = 1e-12);
    }
    let forced = Model::Hardcore(HardcoreModel::new(Arc::new(Graph::complete(2)), 1.0).unwrap())
        .flip()
        .unwrap();
    // flipped hardcore: given the other vertex at 0, this one must be 1
    assert!(marginal_stability(&forced).unwrap().k.is_infinite());
    let json = serde_json::to_string(&marginal_stability(&forced).unwrap()).unwrap();
    assert!(json.contains("\"k\":\"inf\""));
}

#[test]
fn stability_of_flipped_rc_with_large_p() {
    let mut rng = Stream::seed_from_u64(11);
    for _ in 0..10 {
        let rc = random_rc(&mut rng, 2.0 / 3.0, 5);
        let m = Model::RandomCluster(rc).flip().unwrap();
        let k = marginal_stability(&m).unwrap().k;
        assert!(k <= 2.0 + 1e-12, "K = {k}");
    }
}

#[test]
fn independence_inequalities_on_random_instances() {
    let mut rng = Stream::seed_from_u64(12);
    for _ in 0..10 {
        let rc = random_rc(&mut rng, 0.1, 5);
        let lambda_max = rc.lambda().iter().cloned().fold(0.0, f64::max);
        let m = Model::RandomCluster(rc).flip().unwrap().tilt(rng.random_range(0.05..1.0)).unwrap();
        let report = independence_report(&m, 200, rng.random()).unwrap();
        let c = report.coupling.c;
        assert!(report.spectral.eta <= c + 1e-9);
        assert!(c <= 2.0 / (1.0 - lambda_max).powi(2) + 1e-9);
        // the implication is stated for eta >= 1; any larger constant is valid
        let (eta, k) = (report.spectral.eta.max(1.0), report.marginal_stability.k);
        assert!(report.entropic.ratio <= 384.0 * eta * k.powi(4) + 1e-6, "n={} ratio={} eta={eta} k={k}", m.num_vars(), report.entropic.ratio);
        assert!(m.num_vars() < 2 || report.spectral.eta >= 1.0);
    }
}

#[test]
fn diagnostics_are_flip_invariant() {
    let mut rng = Stream::seed_from_u64(13);
    for _ in 0..6 {
        let m = instances::random_monotone(&mut rng, 4);
        let seed = rng.random();
        let a = independence_report(&m, 300, seed).unwrap();
        let b = independence_report(&m.clone().flip().unwrap(), 300, seed).unwrap();
        assert!((a.spectral.eta - b.spectral.eta).abs() < 1e-10);
        assert!((a.coupling.c - b.coupling.c).abs() < 1e-10);
        assert!((a.entropic.ratio - b.entropic.ratio).abs() < 1e-10);
    }
}

#[test]
fn entropic_witness_examples() {
    let mut rng = Stream::seed_from_u64(5);
    let m = product(&[0.2, 0.7, 0.5]);
    let w = ei_witness(&m, 500, &mut rng).unwrap();
    assert_relative_eq!(w.ratio, 1.0, epsilon = 1e-9);

    // the point mass at sigma gives sum_i -ln mu_i(sigma_i) / -ln mu(sigma)
    let m = k2_hardcore();
    let t = PinningTable::of(&m).unwrap();
    let w = ei_witness(&m, 500, &mut rng).unwrap();
    let mu_one = t.one_given(t.encode(&[None, None]).unwrap(), 0).unwrap();
    for (sigma, p) in [([0u8, 0u8], 1.0 / 3.0), ([1, 0], 1.0 / 3.0), ([0, 1], 1.0 / 3.0)] {
        let margins: f64 = sigma
            .iter()
            .map(|&x| -(if x == 1 { mu_one } else { 1.0 - mu_one }).ln())
            .sum();
        assert!(w.ratio >= margins / -f64::ln(p) - 1e-12);
    }
    assert_relative_eq!(w.nu.values().sum::<f64>(), 1.0, epsilon = 1e-12);
}

/// Integrates a pointwise alpha over [0, end] by locating its jumps with
/// bisection and applying 5-point Gauss-Legendre on each smooth piece.
fn quadrature_oracle(alpha: impl Fn(f64) -> f64, end: f64) -> f64 {
    let cells = 4096;
    let mut cuts = vec![0.0];
    for i in 0..cells {
        let (mut a, mut b) = (end * i as f64 / cells as f64, end * (i + 1) as f64 / cells as f64);
        if alpha(a) != alpha(b) {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if alpha(m) == alpha(a) {
                    a = m;
                } else {
                    b = m;
                }
            }
            cuts.push(b);
        }
    }
    cuts.push(end);
    let nodes = [
        (0.0, 128.0 / 225.0),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    cuts.windows(2)
        .map(|w| {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            nodes.iter().map(|&(x, wt)| wt * half * alpha(mid + half * x)).sum::<f64>()
        })
        .sum()
}

#[test]
fn rc_schedule_matches_quadrature() {
    let (p_min, lambda_max, n) = (0.5f64, 0.5f64, 1024usize);
    let s = rc_schedule(p_min, lambda_max, n).unwrap();
    let theta = p_min * f64::min(1e-7, (1.0 - lambda_max) / 27.0) / (n as f64).ln();
    assert_relative_eq!(s.theta(), theta, max_relative = 1e-15);
    let cut = (2.0 / (p_min * (1.0 - lambda_max).powi(2))).ln();
    let alpha = |t: f64| if t <= cut { 3.0 / (1.0 - lambda_max).powi(2) } else { 5e4 };
    let oracle = quadrature_oracle(alpha, (1.0 / theta).ln());
    assert_relative_eq!(s.integral(), oracle, max_relative = 1e-9);
    assert_relative_eq!(s.quadrature(1e-9), oracle, max_relative = 1e-9);
    assert_relative_eq!(s.log_kappa(), -4.0 * oracle, max_relative = 1e-9);
}

#[test]
fn bipartite_schedule_is_clamped() {
    let s = bipartite_schedule(1.0, 3, 0.1, 100).unwrap();
    // ln(1/theta0) = e^9 - ln(lambda) is far past the horizon
    assert!(s.breaks().is_empty());
    assert_relative_eq!(s.values()[0], 1e4 * 2f64.powi(15) / 0.1);
    assert_eq!(s.kappa(), 0.0);
    assert!(s.log_kappa().is_finite());
}

#[test]
fn kappa_closed_forms() {
    let s = AlphaSchedule::constant(0.2, 1.5).unwrap();
    assert_relative_eq!(s.kappa(), (-4.0 * 1.5 * (1.0f64 / 0.2).ln()).exp(), max_relative = 1e-14);
    let s = AlphaSchedule::new(0.01, vec![1.0, 2.5], vec![0.5, 2.0, 1.0]).unwrap();
    let d = s.scaled(2.0).unwrap();
    assert_relative_eq!(d.kappa(), s.kappa().powi(2), max_relative = 1e-12);
    assert!(AlphaSchedule::new(0.01, vec![2.5, 1.0], vec![1.0; 3]).is_err());
    assert!(AlphaSchedule::new(0.01, vec![10.0], vec![1.0; 2]).is_err());
    assert!(AlphaSchedule::new(0.01, vec![], vec![0.0]).is_err());
    let eps: f64 = 0.1;
    let mu_min: f64 = 1e-3;
    let t = s.t_bound(mu_min, eps).unwrap();
    let expect = ((1.0 / mu_min).ln().ln() + (1.0 / (2.0 * eps * eps)).ln()) / s.kappa() + 1.0;
    assert_relative_eq!(t, expect, max_relative = 1e-12);
}

proptest! {
    #[test]
    fn kappa_decreases_in_alpha_and_horizon(
        theta in 0.001f64..0.9,
        a in 0.1f64..5.0,
        bump in 0.01f64..2.0,
        shrink in 0.1f64..0.99,
    ) {
        let s = AlphaSchedule::constant(theta, a).unwrap();
        let more = AlphaSchedule::constant(theta, a + bump).unwrap();
        let longer = AlphaSchedule::constant(theta * shrink, a).unwrap();
        prop_assert!(more.log_kappa() < s.log_kappa());
        prop_assert!(longer.log_kappa() < s.log_kappa());
    }
}

#[test]
fn uniqueness_examples() {
    assert_eq!(lambda_c(3).unwrap(), 4.0);
    assert_eq!(lambda_c(4).unwrap(), 27.0 / 16.0);
    let tiny = uniqueness_check(1e-6, 2.0, 1.0, 1.0, 0.0).unwrap();
    assert!(tiny.holds);
    assert!(tiny.fixed_points[0].slope < 1e-5);
    for p in &tiny.fixed_points {
        assert_relative_eq!(tree_recursion(1e-6, 2.0, 1.0, 1.0, p.x), p.x, max_relative = 1e-12);
    }
}

#[test]
fn uniqueness_below_the_threshold() {
    for delta in [0.1, 0.3] {
        for big_delta in [3u32, 4, 5] {
            let lambda = (1.0 - delta) * lambda_c(big_delta).unwrap();
            let grid = uniqueness_grid(lambda, (big_delta - 1) as f64, lambda, delta / 10.0).unwrap();
            assert!(grid.holds, "delta={delta}, Delta={big_delta}: {:?}", grid.points);
        }
    }
    // well above the threshold the symmetric point has slope above 1
    let lambda = 3.0 * lambda_c(3).unwrap();
    assert!(!uniqueness_check(lambda, 2.0, lambda, 2.0, 0.0).unwrap().holds);
}
