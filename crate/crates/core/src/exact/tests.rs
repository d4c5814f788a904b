use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::Graph;
use crate::instances;
use crate::models::{HardcoreModel, IsingModel, ProductModel, RandomClusterModel, SwRcCoupling};
use crate::order::{increasing_violation, stochastic_dominance, STAR};

fn k2_rc() -> Model {
    Model::RandomCluster(RandomClusterModel::uniform(Arc::new(Graph::complete(2)), 0.5, 1.0).unwrap())
}

fn k2_ising() -> Model {
    Model::Ising(IsingModel::uniform(Arc::new(Graph::complete(2)), 2.0, 1.0).unwrap())
}

fn k2_hardcore() -> Model {
    Model::Hardcore(HardcoreModel::new(Arc::new(Graph::complete(2)), 1.0).unwrap())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn support_sizes() {
    assert_eq!(EnumeratedSupport::of(&k2_rc()).unwrap().len(), 2);
    let hc = EnumeratedSupport::of(&k2_hardcore()).unwrap();
    assert_eq!(hc.states(), &[vec![0, 0], vec![0, 1], vec![1, 0]]);
    let lifted = Model::Product(ProductModel::new(vec![0.3]).unwrap()).lift(0.5).unwrap();
    assert_eq!(EnumeratedSupport::of(&lifted).unwrap().len(), 3);
    let big = Model::Product(ProductModel::new(vec![0.5; 21]).unwrap());
    assert!(matches!(EnumeratedSupport::of(&big), Err(Error::Guard(_))));
}

#[test]
fn single_variable_glauber_rows_equal_mu() {
    let k = glauber_kernel(&k2_rc()).unwrap();
    for i in 0..2 {
        assert!(close(k.row(i), &[2.0 / 3.0, 1.0 / 3.0], 1e-15));
    }
}

#[test]
fn relift_rows_follow_lift_law() {
    let sys = LiftedSystem::new(&k2_ising(), 0.3).unwrap();
    let k = sys.pcl_kernel().unwrap();
    let s = sys.support();
    for i in 0..s.len() {
        for j in 0..s.len() {
            let (x, y) = (s.state(i), s.state(j));
            let expected = if contract_of(x) == contract_of(y) {
                let ones = y.iter().filter(|&&v| v == 1).count() as i32;
                let stars = y.iter().filter(|&&v| v == STAR).count() as i32;
                0.3f64.powi(ones) * 0.7f64.powi(stars)
            } else {
                0.0
            };
            assert!((k.entry(i, j) - expected).abs() < 1e-15);
        }
    }
}

fn contract_of(x: &[u8]) -> Vec<u8> {
    crate::order::contract_values(x)
}

#[test]
fn tilted_step_entries_match_hand_formula() {
    let mu = k2_ising();
    let theta = 0.5;
    let sys = LiftedSystem::new(&mu, theta).unwrap();
    let k = sys.sgd_kernel().unwrap();
    let s = sys.support();
    let w = |x: &[u8]| mu.weight(&contract_of(x)).unwrap();
    for i in 0..s.len() {
        for v in 0..2 {
            let x = s.state(i);
            if x[v] != 0 {
                continue;
            }
            let mut y = x.to_vec();
            y[v] = 1;
            let j = s.index_of(&y).unwrap();
            let expected = 0.5 * theta * w(&y) / (theta * w(&y) + w(x));
            assert!((k.entry(i, j) - expected).abs() < 1e-15);
        }
    }
    // stars are frozen
    let top = s.index_of(&[STAR, STAR]).unwrap();
    assert_eq!(k.entry(top, top), 1.0);
}

#[test]
fn sequences_follow_the_phase_rule() {
    let sys = LiftedSystem::new(&k2_rc(), 0.25).unwrap();
    let seq = sys.algorithm_sequence(2, 3).unwrap();
    assert_eq!(seq.len(), 6);
    let step = sys.sgd_kernel().unwrap();
    for t in [1, 2, 4, 5] {
        assert_eq!(seq.factor(t).row(0), step.row(0));
    }
    let every = sys.algorithm_sequence(3, 1).unwrap();
    let start = sys.pcl_kernel().unwrap().compose(&step).unwrap();
    for t in 0..3 {
        assert!(close(every.factor(t).row(1), start.row(1), 0.0));
    }
    // the re-lift does not disturb the modified chain started at lift(1_V)
    let m = sys.modified_gd_sequence(4, 3).unwrap();
    let pi0 = sys.initial().unwrap();
    let a = propagate(&pi0, m.iter()).unwrap();
    let plain = sys.pi_gd_kernel().unwrap();
    let b = propagate(&pi0, std::iter::repeat_n(&plain, 12)).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(tv(x.probs(), y.probs()) * 2.0 <= 1e-10);
    }
}

#[test]
fn propagation_of_fixed_points() {
    let m = k2_ising();
    let s = EnumeratedSupport::of(&m).unwrap();
    let mu = DistributionVector::of_model(&m, &s).unwrap();
    let id = Kernel::identity(&s);
    let start = DistributionVector::point_mass(&s, &[1, 0]).unwrap();
    for d in propagate(&start, std::iter::repeat_n(&id, 5)).unwrap() {
        assert_eq!(d.probs(), start.probs());
    }
    let k = glauber_kernel_on(&m, &s).unwrap();
    for d in propagate(&mu, std::iter::repeat_n(&k, 5)).unwrap() {
        assert!(close(d.probs(), mu.probs(), 1e-15));
    }
}

#[test]
fn drift_is_an_error() {
    let s = EnumeratedSupport::from_states(1, Alphabet::Binary, vec![vec![0], vec![1]]).unwrap();
    let bad = DistributionVector::from_raw(s.clone(), vec![0.5, 0.6]);
    let id = Kernel::identity(&s);
    assert!(matches!(id.apply(&bad), Err(Error::Drift(_))));
}

#[test]
fn distances() {
    let s = EnumeratedSupport::from_states(1, Alphabet::Binary, vec![vec![0], vec![1]]).unwrap();
    let u = DistributionVector::new(s.clone(), vec![0.5, 0.5]).unwrap();
    let d0 = DistributionVector::point_mass(&s, &[0]).unwrap();
    let d1 = DistributionVector::point_mass(&s, &[1]).unwrap();
    assert_eq!(tv_distance(&u, &u).unwrap(), 0.0);
    assert_eq!(kl_divergence(&u, &u).unwrap(), Divergence::Finite(0.0));
    assert_eq!(tv_distance(&d0, &d1).unwrap(), 1.0);
    assert_eq!(tv_distance(&u, &d0).unwrap(), 0.5);
    assert!((kl_divergence(&d0, &u).unwrap().value() - 2f64.ln()).abs() < 1e-15);
    assert_eq!(kl_divergence(&u, &d0).unwrap(), Divergence::Infinite);
}

#[test]
fn detailed_balance_examples() {
    let s = EnumeratedSupport::from_states(2, Alphabet::Binary, vec![vec![0, 0], vec![0, 1], vec![1, 0]]).unwrap();
    let cycle = Kernel::from_rows(s.clone(), vec![0., 1., 0., 0., 0., 1., 1., 0., 0.]).unwrap();
    let u = DistributionVector::new(s, vec![1.0 / 3.0; 3]).unwrap();
    assert!((check_detailed_balance(&cycle, &u).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let m = instances::random_monotone(&mut rng, 4);
        let k = glauber_kernel(&m).unwrap();
        assert!(check_detailed_balance(&k, k.stationary().unwrap()).unwrap() <= 1e-12);
    }
}

#[test]
fn monotonicity_examples() {
    let s = EnumeratedSupport::of(&k2_ising()).unwrap();
    assert!(check_stochastic_monotonicity(&Kernel::identity(&s)).unwrap().holds);
    let hc = check_stochastic_monotonicity(&glauber_kernel(&k2_hardcore()).unwrap()).unwrap();
    assert!(!hc.holds);
    let w = hc.witness.unwrap();
    assert!(w.deficit > 0.0);
    assert!(crate::order::leq_values(&w.lower, &w.upper));
    let sys = LiftedSystem::new(&k2_rc().flip().unwrap(), 0.4).unwrap();
    for k in [sys.pi_gd_kernel(), sys.pcl_kernel(), sys.sgd_kernel()] {
        assert!(check_stochastic_monotonicity(&k.unwrap()).unwrap().holds);
    }
}

#[test]
fn monotone_system_examples() {
    let r = check_monotone_system(&k2_hardcore()).unwrap();
    assert!(!r.holds);
    let w = r.witness.unwrap();
    assert_eq!((w.lower_tail, w.upper_tail), (0.5, 0.0));
    assert_eq!(w.upper[1 - w.site], Some(1));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let m = instances::random_rc(&mut rng, 4, 5).flip().unwrap();
        assert!(check_monotone_system(&m).unwrap().holds, "{}", m.describe());
        let b = instances::random_bipartite_hardcore(&mut rng, 5);
        assert!(check_monotone_system(&b).unwrap().holds);
        assert!(check_monotone_system(&b.clone().left_marginal().unwrap()).unwrap().holds);
        let lifted = b.clone().lift(rng.random_range(0.1..0.9)).unwrap();
        assert!(check_monotone_system(&lifted).unwrap().holds);
        let tilted = b.tilt(rng.random_range(0.1..3.0)).unwrap();
        assert!(check_monotone_system(&tilted).unwrap().holds);
    }
}

#[test]
fn appendix_counterexample() {
    let sys = LiftedSystem::new(&k2_ising(), 0.5).unwrap();
    let p = sys.pi_gd_kernel().unwrap();
    let q = sys.pcl_kernel().unwrap().compose(&sys.sgd_kernel().unwrap()).unwrap();
    assert!(check_mc_leq(&p, &p, sys.pi()).unwrap().holds);
    let r = check_mc_leq(&p, &q, sys.pi()).unwrap();
    assert!(!r.holds);
    let w = r.witness.unwrap();
    assert_eq!(w.up_set, Some(vec![vec![STAR, STAR]]));
    let top = sys.support().index_of(&[STAR, STAR]).unwrap();
    let nu = DistributionVector::point_mass(sys.support(), &[STAR, STAR]).unwrap();
    assert!((q.apply(&nu).unwrap().probs()[top] - 0.25).abs() < 1e-15);
    assert!((p.apply(&nu).unwrap().probs()[top] - 0.5 * 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn named_suite_on_small_instances() {
    let sys = LiftedSystem::new(&k2_rc(), 0.25).unwrap();
    for r in [
        suite::detailed_balance(&sys).unwrap(),
        suite::lift_identity(&sys, 12).unwrap(),
        suite::relift_stationarity(&sys, 12).unwrap(),
        suite::dominance(&sys, 2, 3).unwrap(),
        suite::tv_comparison(&sys, 2, 3).unwrap(),
        suite::kernel_monotonicity(&sys).unwrap(),
        suite::single_vertex(&sys).unwrap(),
    ] {
        assert!(r.holds, "{r:?}");
    }
    let ising = LiftedSystem::new(&k2_ising(), 0.5).unwrap();
    let r = suite::counterexample(&ising).unwrap();
    assert!(!r.holds);
    assert!(r.detail.contains("{**}"), "{}", r.detail);
    let hc = LiftedSystem::new(&k2_hardcore(), 0.5).unwrap();
    assert!(!suite::kernel_monotonicity(&hc).unwrap().holds);
}

#[test]
fn single_site_comparison_and_random_cross_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let m = instances::random_monotone(&mut rng, 3);
        let sys = LiftedSystem::new(&m, rng.random_range(0.1..0.9)).unwrap();
        for v in 0..m.num_vars() {
            let p = sys.pi_gd_kernel_at(v).unwrap();
            let q = sys.sgd_kernel_at(v).unwrap();
            assert!(check_mc_leq(&p, &q, sys.pi()).unwrap().holds);
            assert!(check_mc_leq_random(&p, &q, sys.pi(), 100, &mut rng).unwrap().holds);
        }
    }
}

#[test]
fn mixing_examples() {
    let m = k2_rc();
    let s = EnumeratedSupport::of(&m).unwrap();
    let k = glauber_kernel_on(&m, &s).unwrap();
    let empty = DistributionVector::point_mass(&s, &[0]).unwrap();
    assert_eq!(mixing_time(&k, &empty, 0.25, 100).unwrap(), 1);
    assert_eq!(mixing_time(&k, &empty, 1e-3, 100).unwrap(), 1);
    let id = Kernel::identity(&s).with_stationary(k.stationary().unwrap().clone()).unwrap();
    assert!(matches!(mixing_time(&id, &empty, 0.1, 50), Err(Error::StepCap(50))));
    // lazy two-state chain: TV_t = pi_1 |1 - a - b|^t from state 0
    let (a, b) = (0.2, 0.1);
    let two = Kernel::from_rows(s.clone(), vec![1.0 - a, a, b, 1.0 - b])
        .unwrap()
        .with_stationary(DistributionVector::new(s.clone(), vec![b / (a + b), a / (a + b)]).unwrap())
        .unwrap();
    let eps = 1e-3;
    let closed = ((eps / (a / (a + b))).ln() / (1.0 - a - b).ln()).ceil() as u64;
    assert_eq!(mixing_time(&two, &empty, eps, 10_000).unwrap(), closed);
}

#[test]
fn tilted_mixing_enumerates_coverable_pinnings() {
    let t = tilted_mixing_time(&k2_rc(), 0.5, 0.1, 100).unwrap();
    assert_eq!(t.pinnings_checked, 2);
    assert_eq!(t.steps, 1);
    let hc = tilted_mixing_time(&k2_hardcore(), 0.5, 0.1, 1000).unwrap();
    // the empty pinning and each single vertex; both vertices is infeasible
    assert_eq!(hc.pinnings_checked, 3);
}

#[test]
fn field_dynamics_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..15 {
        let m = instances::random_monotone(&mut rng, 4);
        let theta = rng.random_range(0.05..0.95);
        let k = fd_kernel(&m, theta).unwrap();
        let mu = k.stationary().unwrap();
        assert!(close(&k.apply_raw(mu.probs()), mu.probs(), 1e-12));
        assert!(check_detailed_balance(&k, mu).unwrap() < 1e-12);
        // from the all-zero state everything is redrawn from the tilted law
        let zeros = vec![0u8; m.num_vars()];
        if let Some(i) = k.support().index_of(&zeros) {
            let tilted = m.clone().tilt(theta).unwrap();
            let law = DistributionVector::of_model(&tilted, k.support()).unwrap();
            assert!(close(k.row(i), law.probs(), 1e-12));
        }
    }
    let near_one = fd_kernel(&k2_rc(), 1.0 - 1e-12).unwrap();
    let mu = near_one.stationary().unwrap().probs();
    for i in 0..2 {
        assert!(tv(near_one.row(i), mu) < 1e-9);
    }
}

#[test]
fn pushforwards_match_targets() {
    for tri in [2, 3] {
        for lambda in [0.5, 1.0] {
            let ising = IsingModel::uniform(Arc::new(Graph::complete(tri)), 2.0, lambda).unwrap();
            let push = rc_to_ising_pushforward(&ising).unwrap();
            let exact = DistributionVector::of_model(&Model::Ising(ising), push.support()).unwrap();
            assert!(tv_distance(&push, &exact).unwrap() <= 1e-12);
        }
    }
    let rc = RandomClusterModel::uniform(Arc::new(Graph::complete(2)), 0.5, 1.0).unwrap();
    let push = sw_to_rc_pushforward(&SwRcCoupling::from_rc(&rc).unwrap()).unwrap();
    assert!(close(push.probs(), &[2.0 / 3.0, 1.0 / 3.0], 1e-15));
}

#[test]
fn csv_headers_use_state_strings() {
    let sys = LiftedSystem::new(&k2_rc(), 0.5).unwrap();
    let mut buf = Vec::new();
    sys.pcl_kernel().unwrap().write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "state,0,1,*");
    assert_eq!(text.lines().count(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lift_identity_and_stationarity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = instances::random_monotone(&mut rng, 4);
        let sys = LiftedSystem::new(&m, rng.random_range(0.05..0.95)).unwrap();
        let ones = vec![1u8; m.num_vars()];
        let mu_t = propagate(
            &DistributionVector::point_mass(sys.base_support(), &ones).unwrap(),
            std::iter::repeat_n(&sys.mu_gd_kernel().unwrap(), 20),
        ).unwrap();
        let pi_gd = sys.pi_gd_kernel().unwrap();
        let pi_t = propagate(&sys.initial().unwrap(), std::iter::repeat_n(&pi_gd, 20)).unwrap();
        let pcl = sys.pcl_kernel().unwrap();
        for (a, b) in mu_t.iter().zip(&pi_t) {
            let lifted = sys.lift_pushforward(a).unwrap();
            prop_assert!(tv_distance(&lifted, b).unwrap() <= 1e-10);
            let again = pcl.apply(b).unwrap();
            prop_assert!(2.0 * tv_distance(&again, b).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn ratio_to_stationary_stays_increasing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = instances::random_monotone(&mut rng, 4);
        let sys = LiftedSystem::new(&m, rng.random_range(0.05..0.95)).unwrap();
        let poset = sys.support().poset();
        let ratio = |d: &DistributionVector, s: &DistributionVector| -> Vec<f64> {
            d.probs().iter().zip(s.probs()).map(|(a, b)| a / b).collect()
        };
        prop_assert!(increasing_violation(&ratio(&sys.initial().unwrap(), sys.pi()), &poset, 1e-9).is_none());
        let k = sys.mu_gd_kernel().unwrap();
        let base_poset = sys.base_support().poset();
        let ones = vec![1u8; m.num_vars()];
        let start = DistributionVector::point_mass(sys.base_support(), &ones).unwrap();
        for d in propagate(&start, std::iter::repeat_n(&k, 10)).unwrap() {
            let r = ratio(&d, sys.mu());
            let scale = r.iter().cloned().fold(0.0, f64::max);
            prop_assert!(increasing_violation(&r, &base_poset, 1e-9 * scale).is_none());
        }
    }

    #[test]
    fn lift_and_contract_keep_dominance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = instances::random_monotone(&mut rng, 3);
        let sys = LiftedSystem::new(&m, rng.random_range(0.05..0.95)).unwrap();
        let s = sys.base_support();
        let poset = s.poset();
        // nu' = nu pushed upward along a random monotone map keeps nu below nu'
        let raw: Vec<f64> = (0..s.len()).map(|_| rng.random::<f64>()).collect();
        let z: f64 = raw.iter().sum();
        let nu: Vec<f64> = raw.iter().map(|x| x / z).collect();
        let mut up = vec![0.0; s.len()];
        for (i, &p) in nu.iter().enumerate() {
            let above: Vec<usize> = (0..s.len()).filter(|&j| poset.leq(i, j)).collect();
            up[above[rng.random_range(0..above.len())]] += p;
        }
        let a = DistributionVector::new(s.clone(), nu).unwrap();
        let b = DistributionVector::new(s.clone(), up).unwrap();
        prop_assert!(stochastic_dominance(a.probs(), b.probs(), &poset).unwrap().holds);
        let (la, lb) = (sys.lift_pushforward(&a).unwrap(), sys.lift_pushforward(&b).unwrap());
        let lposet = sys.support().poset();
        prop_assert!(stochastic_dominance(la.probs(), lb.probs(), &lposet).unwrap().holds);
        let (ca, cb) = (sys.contract_pushforward(&la).unwrap(), sys.contract_pushforward(&lb).unwrap());
        prop_assert!(stochastic_dominance(ca.probs(), cb.probs(), &poset).unwrap().holds);
    }
}
