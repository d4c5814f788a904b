//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use monolab::analysis::{bipartite_schedule, independence_report, marginal_stability, rc_schedule, AlphaSchedule};
use monolab::dynamics::glauber_run;
use monolab::exact::suite::{self, BALANCE_TOL, LIFT_TOL, SLACK_TOL, STATIONARY_TOL};
use monolab::exact::{
    comparison_bound, rc_to_ising_pushforward, sw_to_rc_pushforward, tv, DistributionVector, EnumeratedSupport,
    FdStart, LiftedSystem, DEFAULT_STEP_CAP,
};
use monolab::graph::Graph;
use monolab::instances;
use monolab::models::{lambda_c, IsingModel, Model, RandomClusterModel, SwRcCoupling};
use monolab::order::STAR;
use monolab::rng::{self, Stream};

const BALANCE_INSTANCES: usize = 50;
const BALANCE_BUDGET: Duration = Duration::from_secs(30);
const LIFT_INSTANCES: usize = 20;
const LIFT_HORIZON: usize = 20;
const SMALL_INSTANCES: usize = 20;
const PHASES: usize = 3;
const PHASE_LENGTH: usize = 4;
const COUNTEREXAMPLE_THETA: f64 = 0.5;
const COUNTEREXAMPLE_TOL: f64 = 1e-12;
const PUSHFORWARD_TOL: f64 = 1e-10;
const CHI2_SAMPLES: usize = 1_000_000;
const CHI2_MIN_P: f64 = 1e-4;
const INDEPENDENCE_INSTANCES: usize = 20;
const INFLUENCE_SLACK: f64 = 1e-9;
const EI_SLACK: f64 = 1e-6;
const EI_ITERATIONS: usize = 200;
const STABILITY_BOUND_SLACK: f64 = 1e-12;
const MIXING_INSTANCES: usize = 10;
const MIXING_EPS: f64 = 0.1;
const MIXING_BUDGET: Duration = Duration::from_secs(120);
const QUADRATURE_REL_TOL: f64 = 1e-9;
const SAMPLER_STEPS: u64 = 1_000_000;
const SAMPLER_SIGMAS: f64 = 3.0;

type Outcome = Result<(bool, String), String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rc_or_hardcore(rng: &mut Stream) -> Model {
    match rng.random_range(0..4) {
        0 => instances::random_rc(rng, 4, 6),
        1 => instances::random_rc(rng, 4, 6).flip().expect("binary"),
        2 => instances::random_hardcore(rng, 4, 6),
        _ => instances::random_bipartite_hardcore(rng, 4),
    }
}

fn systems(models: &[Model], rng: &mut Stream) -> Result<Vec<LiftedSystem>, String> {
    models
        .iter()
        .map(|m| LiftedSystem::new(m, rng.random_range(0.1..0.9)).map_err(err))
        .collect()
}

/// Runs `check` on every system and keeps the worst value.
fn worst_over(
    systems: &[LiftedSystem],
    worse: impl Fn(f64, f64) -> bool,
    check: impl Fn(&LiftedSystem) -> monolab::Result<suite::CheckResult>,
) -> Result<(bool, f64), String> {
    let mut all = true;
    let mut worst: Option<f64> = None;
    for s in systems {
        let r = check(s).map_err(err)?;
        all &= r.holds;
        if worst.is_none_or(|w| worse(r.value, w)) {
            worst = Some(r.value);
        }
    }
    Ok((all, worst.unwrap_or(0.0)))
}

fn detailed_balance() -> Outcome {
    let start = Instant::now();
    let mut rng = Stream::seed_from_u64(101);
    let models: Vec<Model> = (0..BALANCE_INSTANCES).map(|_| rc_or_hardcore(&mut rng)).collect();
    let sys = systems(&models, &mut rng)?;
    let (_, worst) = worst_over(&sys, |a, b| a > b, suite::detailed_balance)?;
    let elapsed = start.elapsed();
    Ok((
        worst <= BALANCE_TOL && elapsed < BALANCE_BUDGET,
        format!("{} instances, max violation {worst:.3e}, {:.1}s", sys.len(), elapsed.as_secs_f64()),
    ))
}

fn monotone_systems(seed: u64, max_vars: usize, count: usize) -> Result<Vec<LiftedSystem>, String> {
    let mut rng = Stream::seed_from_u64(seed);
    let models: Vec<Model> = (0..count).map(|_| instances::random_monotone(&mut rng, max_vars)).collect();
    systems(&models, &mut rng)
}

fn lift_identity(sys: &[LiftedSystem]) -> Outcome {
    let (_, worst) = worst_over(sys, |a, b| a > b, |s| suite::lift_identity(s, LIFT_HORIZON))?;
    Ok((worst <= LIFT_TOL, format!("max TV {worst:.3e} for t <= {LIFT_HORIZON}")))
}

fn relift_stationarity(sys: &[LiftedSystem]) -> Outcome {
    let (_, worst) = worst_over(sys, |a, b| a > b, |s| suite::relift_stationarity(s, LIFT_HORIZON))?;
    Ok((worst <= STATIONARY_TOL, format!("max l1 {worst:.3e} for t <= {LIFT_HORIZON}")))
}

fn dominance(sys: &[LiftedSystem]) -> Outcome {
    let (all, worst) = worst_over(sys, |a, b| a > b, |s| suite::dominance(s, PHASES, PHASE_LENGTH))?;
    Ok((all, format!("T1={PHASES} T2={PHASE_LENGTH}, largest unrouted mass {worst:.3e}")))
}

fn tv_comparison(sys: &[LiftedSystem]) -> Outcome {
    let (_, slack) = worst_over(sys, |a, b| a < b, |s| suite::tv_comparison(s, PHASES, PHASE_LENGTH))?;
    Ok((slack >= -SLACK_TOL, format!("smallest slack {slack:.3e}")))
}

fn kernel_monotonicity(sys: &[LiftedSystem]) -> Outcome {
    let (all, failing) = worst_over(sys, |a, b| a > b, suite::kernel_monotonicity)?;
    let hardcore = Model::Hardcore(
        monolab::models::HardcoreModel::new(Arc::new(Graph::complete(2)), 1.0).map_err(err)?,
    );
    let control = suite::kernel_monotonicity(&LiftedSystem::new(&hardcore, 0.5).map_err(err)?).map_err(err)?;
    let witnessed = !control.holds && control.detail.contains("rows");
    Ok((
        all && witnessed,
        format!(
            "{} monotone instances, {failing} failing kernels; hardcore control: {}",
            sys.len(),
            control.detail
        ),
    ))
}

fn single_vertex(sys: &[LiftedSystem]) -> Outcome {
    let (all, worst) = worst_over(sys, |a, b| a > b, suite::single_vertex)?;
    Ok((all, format!("{} instances, worst deficit {worst:.3e}", sys.len())))
}

fn counterexample() -> Outcome {
    let ising = IsingModel::uniform(Arc::new(Graph::complete(2)), 2.0, 1.0).map_err(err)?;
    let sys = LiftedSystem::new(&Model::Ising(ising), COUNTEREXAMPLE_THETA).map_err(err)?;
    let r = suite::counterexample(&sys).map_err(err)?;
    // From the all-star state, re-lift then star-frozen keeps all stars
    // with probability (1 - theta)^2.
    let q = sys
        .pcl_kernel()
        .and_then(|p| p.compose(&sys.sgd_kernel()?))
        .map_err(err)?;
    let stars = sys.support().index_of(&[STAR, STAR]).ok_or("all-star state missing")?;
    let mass = q.entry(stars, stars);
    let expected = (1.0 - COUNTEREXAMPLE_THETA).powi(2);
    Ok((
        !r.holds && r.detail.contains("{**}") && (mass - expected).abs() <= COUNTEREXAMPLE_TOL,
        format!("{}; stay mass {mass}", r.detail),
    ))
}

fn rc_with_fields_at_most_one(rng: &mut Stream, max_edges: usize) -> Result<RandomClusterModel, String> {
    let n = rng.random_range(2..=4);
    let m = rng.random_range(1..=max_edges.min(n * (n - 1) / 2));
    let g = Arc::new(instances::random_graph(rng, n, m));
    let p = (0..g.m()).map(|_| rng.random_range(0.05..0.95)).collect();
    let lambda = (0..g.n()).map(|_| rng.random_range(0.0..=1.0)).collect();
    RandomClusterModel::new(g, p, lambda).map_err(err)
}

fn law(model: &Model) -> Result<DistributionVector, String> {
    let support = EnumeratedSupport::of(model).map_err(err)?;
    DistributionVector::of_model(model, &support).map_err(err)
}

fn subgraph_world_coupling() -> Outcome {
    let mut rng = Stream::seed_from_u64(901);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rc = rc_with_fields_at_most_one(&mut rng, 5)?;
        let pushed = sw_to_rc_pushforward(&SwRcCoupling::from_rc(&rc).map_err(err)?).map_err(err)?;
        let target = law(&Model::RandomCluster(rc))?;
        worst = worst.max(tv(pushed.probs(), target.probs()));
    }

    // Monte Carlo on a 4-cycle.
    let g = Arc::new(Graph::cycle(4));
    let rc = RandomClusterModel::new(g, vec![0.3, 0.5, 0.6, 0.8], vec![0.2, 0.9, 0.5, 0.0]).map_err(err)?;
    let coupling = SwRcCoupling::from_rc(&rc).map_err(err)?;
    let sw = law(&Model::SubgraphWorld(coupling.sw().clone()))?;
    let target = law(&Model::RandomCluster(rc))?;
    let mut counts = vec![0u64; target.len()];
    let mut mc = rng::substream(902, 0, 0);
    for _ in 0..CHI2_SAMPLES {
        let x = sw.support().state(rng::categorical(&mut mc, sw.probs()));
        let y = coupling.sample(x, &mut mc).map_err(err)?;
        counts[target.support().index_of(&y).ok_or("sample outside the support")?] += 1;
    }
    let n = CHI2_SAMPLES as f64;
    let stat: f64 = counts
        .iter()
        .zip(target.probs())
        .map(|(&c, &p)| (c as f64 - n * p).powi(2) / (n * p))
        .sum();
    let dof = (target.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(dof).map_err(err)?.cdf(stat);
    Ok((
        worst <= PUSHFORWARD_TOL && p_value > CHI2_MIN_P,
        format!("max TV {worst:.3e}; chi2 {stat:.2} on {dof} dof, p = {p_value:.4}"),
    ))
}

fn rc_to_ising_transfer() -> Outcome {
    let mut worst: f64 = 0.0;
    for g in [Graph::complete(2), Graph::complete(3)] {
        let g = Arc::new(g);
        for lambda in [0.5, 1.0] {
            let ising = IsingModel::uniform(g.clone(), 2.0, lambda).map_err(err)?;
            let pushed = rc_to_ising_pushforward(&ising).map_err(err)?;
            let target = law(&Model::Ising(ising))?;
            worst = worst.max(tv(pushed.probs(), target.probs()));
        }
    }
    Ok((worst <= PUSHFORWARD_TOL, format!("max TV {worst:.3e} over K2, K3 and lambda in {{0.5, 1}}")))
}

fn independence_inequalities() -> Outcome {
    let mut rng = Stream::seed_from_u64(1101);
    let mut failures = Vec::new();
    let (mut worst_ci, mut worst_ei, mut worst_k): (f64, f64, f64) = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..INDEPENDENCE_INSTANCES {
        // influence norm vs coupling constant, and the entropic bound, on
        // random monotone models
        let m = instances::random_monotone(&mut rng, 4);
        let r = independence_report(&m, EI_ITERATIONS, rng.random()).map_err(err)?;
        if r.spectral.eta > r.coupling.c + INFLUENCE_SLACK {
            failures.push(format!("monotone #{i}: eta {} > C {}", r.spectral.eta, r.coupling.c));
        }
        let (eta, k) = (r.spectral.eta.max(1.0), r.marginal_stability.k);
        let bound = 384.0 * eta * k.powi(4);
        if r.entropic.ratio > bound + EI_SLACK {
            failures.push(format!("monotone #{i}: EI {} > {bound}", r.entropic.ratio));
        }
        worst_ei = worst_ei.max(r.entropic.ratio / bound);

        // coupling constant of tilted flipped random cluster models
        let rc = rc_with_fields_at_most_one(&mut rng, 5)?;
        let lambda_max = rc.lambda().iter().copied().fold(0.0, f64::max);
        if lambda_max < 1.0 {
            let m = Model::RandomCluster(rc)
                .flip()
                .and_then(|m| m.tilt(rng.random_range(0.05..2.0)))
                .map_err(err)?;
            let r = independence_report(&m, EI_ITERATIONS, rng.random()).map_err(err)?;
            let bound = 2.0 / (1.0 - lambda_max).powi(2);
            if r.coupling.c > bound + INFLUENCE_SLACK {
                failures.push(format!("tilted rc #{i}: C {} > {bound}", r.coupling.c));
            }
            if r.spectral.eta > r.coupling.c + INFLUENCE_SLACK {
                failures.push(format!("tilted rc #{i}: eta {} > C {}", r.spectral.eta, r.coupling.c));
            }
            worst_ci = worst_ci.max(r.coupling.c - bound);
        }

        // marginal stability of flipped random cluster models with p >= 2/3
        let n = rng.random_range(2..=4);
        let m_edges = rng.random_range(1..=(n * (n - 1) / 2).min(5));
        let g = Arc::new(instances::random_graph(&mut rng, n, m_edges));
        let p = (0..g.m()).map(|_| rng.random_range(2.0 / 3.0..1.0)).collect();
        let lambda = (0..g.n()).map(|_| rng.random_range(f64::MIN_POSITIVE..=1.0)).collect();
        let flipped = Model::RandomCluster(RandomClusterModel::new(g, p, lambda).map_err(err)?)
            .flip()
            .map_err(err)?;
        let k = marginal_stability(&flipped).map_err(err)?.k;
        if k > 2.0 + STABILITY_BOUND_SLACK {
            failures.push(format!("flipped rc #{i}: K {k} > 2"));
        }
        worst_k = worst_k.max(k);
    }
    let summary = format!(
        "{INDEPENDENCE_INSTANCES} instances per family; max C - bound {worst_ci:.3e}, max EI/bound {worst_ei:.3e}, max K {worst_k:.6}"
    );
    Ok(match failures.is_empty() {
        true => (true, summary),
        false => (false, format!("{summary}; {}", failures.join("; "))),
    })
}

fn comparison_product_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = Stream::seed_from_u64(1201);
    let mut lines = Vec::new();
    let mut all = true;
    for _ in 0..MIXING_INSTANCES {
        let m = instances::random_monotone(&mut rng, 4);
        let theta = rng.random_range(0.2..0.8);
        let b = comparison_bound(&m, theta, MIXING_EPS, FdStart::Arbitrary, DEFAULT_STEP_CAP).map_err(err)?;
        all &= b.holds;
        lines.push(format!("{}<={}x{}", b.glauber_from_ones, b.field, b.tilted));
    }
    let elapsed = start.elapsed();
    Ok((
        all && elapsed < MIXING_BUDGET,
        format!("{} ({:.1}s)", lines.join(" "), elapsed.as_secs_f64()),
    ))
}

/// Integrates a pointwise alpha over [0, end]: jumps are located by
/// bisection, smooth pieces get 5-point Gauss-Legendre.
fn quadrature(alpha: impl Fn(f64) -> f64, end: f64) -> f64 {
    let cells = 4096;
    let mut cuts = vec![0.0];
    for i in 0..cells {
        let (mut a, mut b) = (end * i as f64 / cells as f64, end * (i + 1) as f64 / cells as f64);
        if alpha(a) != alpha(b) {
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if alpha(mid) == alpha(a) {
                    a = mid;
                } else {
                    b = mid;
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

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn schedules_and_thresholds() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut check = |s: &AlphaSchedule, alpha: &dyn Fn(f64) -> f64, theta: f64| {
        let oracle = -4.0 * quadrature(alpha, (1.0 / theta).ln());
        worst = worst
            .max(relative(s.theta(), theta))
            .max(relative(s.log_kappa(), oracle))
            .max(relative(-4.0 * s.quadrature(1e-10), oracle));
    };
    for (p_min, lambda_max, n) in [
        (0.5, 0.5, 1024usize),
        (0.9, 0.1, 100),
        (0.2, 0.9, 10),
        (2.0 / 3.0, 0.0, 1_000_000),
        (0.3, 0.99, 50),
    ] {
        let s = rc_schedule(p_min, lambda_max, n).map_err(err)?;
        let gap: f64 = 1.0 - lambda_max;
        let theta = p_min * f64::min(1e-7, gap / 27.0) / (n as f64).ln();
        let cut = (2.0 / (p_min * gap * gap)).ln();
        let alpha = move |t: f64| if t <= cut { 3.0 / (gap * gap) } else { 5e4 };
        check(&s, &alpha, theta);
    }
    for (lambda, degree, delta, n) in [
        (1.0, 3u32, 0.1, 100usize),
        (0.5, 4, 0.2, 1000),
        (2.0, 3, 0.05, 50),
        (0.1, 10, 0.5, 10_000),
        (1.5, 5, 0.3, 20),
    ] {
        let s = bipartite_schedule(lambda, degree, delta, n).map_err(err)?;
        let d = degree as f64;
        let theta = lambda / (9f64.exp() * (1.0 + lambda).powf(d) * d * (n as f64).ln());
        let growth = (1.0 + lambda).powf(5.0 * d);
        let cut = 9f64.exp() - lambda.ln();
        let alpha = move |t: f64| if t <= cut { 1e4 * growth / delta } else { 2e4 * growth };
        check(&s, &alpha, theta);
    }
    let thresholds = lambda_c(3).map_err(err)? == 4.0 && lambda_c(4).map_err(err)? == 27.0 / 16.0;
    Ok((
        worst <= QUADRATURE_REL_TOL && thresholds,
        format!("max relative gap {worst:.3e}; lambda_c(3) = 4, lambda_c(4) = 27/16: {thresholds}"),
    ))
}

fn sampler_occupancy() -> Outcome {
    let rc = RandomClusterModel::uniform(Arc::new(Graph::complete(2)), 0.5, 1.0).map_err(err)?;
    let model = Model::RandomCluster(rc);
    let run = glauber_run(&model, &[1], SAMPLER_STEPS, 7, &[0, 10, 1000, SAMPLER_STEPS]).map_err(err)?;
    let occ = run.occupancy();
    let n = SAMPLER_STEPS as f64;
    let sigma = (n * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    let ones = *occ.get(&vec![1u8]).unwrap_or(&0) as f64;
    let zeros = *occ.get(&vec![0u8]).unwrap_or(&0) as f64;
    let within = (ones - n / 3.0).abs() <= SAMPLER_SIGMAS * sigma && (zeros - 2.0 * n / 3.0).abs() <= SAMPLER_SIGMAS * sigma;
    let (records, last) = run.replay();
    let again = glauber_run(&model, &[1], SAMPLER_STEPS, 7, &[0, 10, 1000, SAMPLER_STEPS]).map_err(err)?;
    let replayed = records == run.records && last == run.last && again.log == run.log && again.records == run.records;
    Ok((
        within && replayed,
        format!(
            "frequencies {:.5}/{:.5}, {:.2} sigma; replay identical: {replayed}",
            zeros / n,
            ones / n,
            (ones - n / 3.0).abs() / sigma
        ),
    ))
}

fn main() {
    let started = Instant::now();
    let lift_sys = monotone_systems(201, 4, LIFT_INSTANCES);
    let small_sys = monotone_systems(401, 3, SMALL_INSTANCES);
    let on = |sys: &Result<Vec<LiftedSystem>, String>, f: fn(&[LiftedSystem]) -> Outcome| match sys {
        Ok(s) => f(s),
        Err(e) => Err(e.clone()),
    };
    let criteria: Vec<Criterion> = vec![
        ("detailed balance", Box::new(detailed_balance)),
        ("lift identity", Box::new(|| on(&lift_sys, lift_identity))),
        ("re-lift stationarity", Box::new(|| on(&lift_sys, relift_stationarity))),
        ("stochastic dominance of the algorithm", Box::new(|| on(&small_sys, dominance))),
        ("TV comparison", Box::new(|| on(&small_sys, tv_comparison))),
        ("kernel monotonicity", Box::new(|| on(&lift_sys, kernel_monotonicity))),
        ("single-vertex comparison", Box::new(|| on(&small_sys, single_vertex))),
        ("comparison counterexample", Box::new(counterexample)),
        ("subgraph-world coupling", Box::new(subgraph_world_coupling)),
        ("random cluster to Ising transfer", Box::new(rc_to_ising_transfer)),
        ("independence inequalities", Box::new(independence_inequalities)),
        ("field-dynamics product bound", Box::new(comparison_product_bound)),
        ("schedule integrals and thresholds", Box::new(schedules_and_thresholds)),
        ("Glauber occupancy and replay", Box::new(sampler_occupancy)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
