//! Named checks on a lifted system, shared by the `verify` command and the
//! acceptance suite. Each result carries the worst measured quantity so
//! callers can apply their own thresholds.

use serde::Serialize;

use super::{
    check_detailed_balance, check_mc_leq, check_stochastic_monotonicity, propagate, tv, DistributionVector,
    LiftedSystem,
};
use crate::error::Result;
use crate::order::{dominance_flow, sparse, state_string, PROB_TOL};

pub const BALANCE_TOL: f64 = 1e-12;
pub const LIFT_TOL: f64 = 1e-10;
pub const STATIONARY_TOL: f64 = 1e-10;
pub const SLACK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub holds: bool,
    /// Worst violation measure (or smallest slack) over everything checked.
    pub value: f64,
    pub detail: String,
}

fn result(name: &'static str, holds: bool, value: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        holds,
        value,
        detail,
    }
}

/// Glauber on mu and on pi, the re-lift kernel and the star-frozen tilted
/// kernel, each against its stationary law.
pub fn detailed_balance(sys: &LiftedSystem) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (label, k) in [
        ("mu-glauber", sys.mu_gd_kernel()?),
        ("pi-glauber", sys.pi_gd_kernel()?),
        ("relift", sys.pcl_kernel()?),
        ("star-frozen", sys.sgd_kernel()?),
    ] {
        let v = check_detailed_balance(&k, k.stationary().expect("builders attach the stationary law"))?;
        parts.push(format!("{label}={v:.3e}"));
        worst = worst.max(v);
    }
    Ok(result("detailed-balance", worst <= BALANCE_TOL, worst, parts.join(" ")))
}

fn laws(sys: &LiftedSystem, horizon: usize) -> Result<(Vec<DistributionVector>, Vec<DistributionVector>)> {
    let ones = vec![1u8; sys.base().num_vars()];
    let mu_gd = sys.mu_gd_kernel()?;
    let pi_gd = sys.pi_gd_kernel()?;
    let a = propagate(
        &DistributionVector::point_mass(sys.base_support(), &ones)?,
        std::iter::repeat_n(&mu_gd, horizon),
    )?;
    let b = propagate(&sys.initial()?, std::iter::repeat_n(&pi_gd, horizon))?;
    Ok((a, b))
}

/// lift(mu-Glauber from 1_V) and pi-Glauber from lift(1_V) agree for
/// t <= horizon.
pub fn lift_identity(sys: &LiftedSystem, horizon: usize) -> Result<CheckResult> {
    let (mu_t, pi_t) = laws(sys, horizon)?;
    let mut worst: f64 = 0.0;
    for (a, b) in mu_t.iter().zip(&pi_t) {
        worst = worst.max(tv(sys.lift_pushforward(a)?.probs(), b.probs()));
    }
    Ok(result(
        "lift-identity",
        worst <= LIFT_TOL,
        worst,
        format!("max TV over t <= {horizon}"),
    ))
}

/// The laws of pi-Glauber from lift(1_V) are fixed by the re-lift kernel.
pub fn relift_stationarity(sys: &LiftedSystem, horizon: usize) -> Result<CheckResult> {
    let (_, pi_t) = laws(sys, horizon)?;
    let pcl = sys.pcl_kernel()?;
    let mut worst: f64 = 0.0;
    for d in &pi_t {
        worst = worst.max(2.0 * tv(&pcl.apply_raw(d.probs()), d.probs()));
    }
    Ok(result(
        "relift-stationarity",
        worst <= STATIONARY_TOL,
        worst,
        format!("max l1 over t <= {horizon}"),
    ))
}

/// Laws of the algorithm and of pi-Glauber for t <= 2 t1 t2.
fn algorithm_laws(
    sys: &LiftedSystem,
    t1: usize,
    t2: usize,
) -> Result<(Vec<DistributionVector>, Vec<DistributionVector>)> {
    let horizon = 2 * t1 * t2;
    let seq = sys.algorithm_sequence(t1, t2)?.with_len(horizon);
    let alg = propagate(&sys.initial()?, seq.iter())?;
    let (_, gd) = laws(sys, horizon)?;
    Ok((gd, alg))
}

/// pi-Glauber's law is stochastically below the algorithm's at every step.
pub fn dominance(sys: &LiftedSystem, t1: usize, t2: usize) -> Result<CheckResult> {
    let (gd, alg) = algorithm_laws(sys, t1, t2)?;
    let poset = sys.support().poset();
    let mut worst = (0.0, 0);
    for (t, (a, b)) in gd.iter().zip(&alg).enumerate() {
        let (deficit, _) = dominance_flow(&sparse(a.probs()), &sparse(b.probs()), |i, j| poset.leq(i, j));
        if deficit > worst.0 {
            worst = (deficit, t);
        }
    }
    Ok(result(
        "dominance",
        worst.0 <= PROB_TOL,
        worst.0,
        format!("largest unrouted mass {:.3e} at t = {}", worst.0, worst.1),
    ))
}

/// TV(mu-Glauber at t, mu) <= TV(contr(algorithm at t), mu). The value is
/// the smallest slack.
pub fn tv_comparison(sys: &LiftedSystem, t1: usize, t2: usize) -> Result<CheckResult> {
    let horizon = 2 * t1 * t2;
    let (mu_t, _) = laws(sys, horizon)?;
    let (_, alg) = algorithm_laws(sys, t1, t2)?;
    let mut slack = (f64::INFINITY, 0);
    for (t, (a, b)) in mu_t.iter().zip(&alg).enumerate() {
        let lhs = tv(a.probs(), sys.mu().probs());
        let rhs = tv(sys.contract_pushforward(b)?.probs(), sys.mu().probs());
        if rhs - lhs < slack.0 {
            slack = (rhs - lhs, t);
        }
    }
    Ok(result(
        "tv-comparison",
        slack.0 >= -SLACK_TOL,
        slack.0,
        format!("smallest slack at t = {}", slack.1),
    ))
}

/// Stochastic monotonicity of pi-Glauber, the re-lift kernel and the
/// star-frozen kernel. The value counts failing kernels.
pub fn kernel_monotonicity(sys: &LiftedSystem) -> Result<CheckResult> {
    let mut failed = Vec::new();
    for (label, k) in [
        ("pi-glauber", sys.pi_gd_kernel()?),
        ("relift", sys.pcl_kernel()?),
        ("star-frozen", sys.sgd_kernel()?),
    ] {
        let r = check_stochastic_monotonicity(&k)?;
        if let Some(w) = r.witness {
            failed.push(format!(
                "{label}: rows {} <= {} deficit {:.3e}",
                state_string(&w.lower),
                state_string(&w.upper),
                w.deficit
            ));
        }
    }
    let detail = if failed.is_empty() { "all monotone".into() } else { failed.join("; ") };
    Ok(result("stochastic-monotonicity", failed.is_empty(), failed.len() as f64, detail))
}

/// Single-site lifted Glauber is below the single-site star-frozen kernel
/// in the comparison order, at every site.
pub fn single_vertex(sys: &LiftedSystem) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut failing = Vec::new();
    for v in 0..sys.base().num_vars() {
        let r = check_mc_leq(&sys.pi_gd_kernel_at(v)?, &sys.sgd_kernel_at(v)?, sys.pi())?;
        if let Some(w) = r.witness {
            worst = worst.max(w.deficit);
            failing.push(v.to_string());
        }
    }
    let detail = if failing.is_empty() { "every site".into() } else { format!("fails at sites {}", failing.join(",")) };
    Ok(result("single-vertex", failing.is_empty(), worst, detail))
}

/// Whether lifted Glauber is below re-lift followed by the star-frozen
/// kernel in the comparison order. Fails on suitable monotone instances.
pub fn counterexample(sys: &LiftedSystem) -> Result<CheckResult> {
    let q = sys.pcl_kernel()?.compose(&sys.sgd_kernel()?)?;
    let r = check_mc_leq(&sys.pi_gd_kernel()?, &q, sys.pi())?;
    let (value, detail) = match &r.witness {
        Some(w) => (
            w.deficit,
            match &w.up_set {
                Some(u) => format!(
                    "violated on the ray of up-set {{{}}}",
                    u.iter().map(|s| state_string(s)).collect::<Vec<_>>().join(",")
                ),
                None => "violated".into(),
            },
        ),
        None => (0.0, format!("holds on all {} rays", r.checked)),
    };
    Ok(result("counterexample", r.holds, value, detail))
}
