use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::{DistributionVector, EnumeratedSupport, Kernel, KernelSequence, KERNEL_GUARD};
use crate::error::{Error, Result};
use crate::models::{component_one_probability, IsingModel, Model, SiteLaw, SwRcCoupling};
use crate::order::{check_open_unit, contract_values, Alphabet, STAR};

fn kernel_guard(support: &EnumeratedSupport) -> Result<()> {
    if support.len() > KERNEL_GUARD {
        return Err(Error::Guard(format!(
            "support of {} states exceeds the dense kernel limit of {KERNEL_GUARD}",
            support.len()
        )));
    }
    Ok(())
}

/// Kernel that picks one of `choices` sites uniformly, redraws it from `law`
/// if it is in `sites` and stays put otherwise.
fn site_kernel(
    support: &Arc<EnumeratedSupport>,
    sites: &[usize],
    choices: usize,
    law: impl Fn(&[u8], usize) -> Result<SiteLaw> + Sync,
) -> Result<Kernel> {
    kernel_guard(support)?;
    let n = support.len();
    let pick = 1.0 / choices as f64;
    let stay = (choices - sites.len()) as f64 / choices as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = support.state(i);
            let mut row = vec![0.0; n];
            row[i] += stay;
            let mut t = s.to_vec();
            for &v in sites {
                let q = law(s, v)?;
                for (x, &p) in q.iter().enumerate() {
                    if p > 0.0 {
                        t[v] = x as u8;
                        row[support.require(&t)?] += pick * p;
                    }
                }
                t[v] = s[v];
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Kernel::from_rows(support.clone(), rows.concat())
}

pub fn glauber_kernel(model: &Model) -> Result<Kernel> {
    glauber_kernel_on(model, &EnumeratedSupport::of(model)?)
}

/// Glauber kernel of `model`, whose support is `support`.
pub fn glauber_kernel_on(model: &Model, support: &Arc<EnumeratedSupport>) -> Result<Kernel> {
    let n = model.num_vars();
    let sites: Vec<usize> = (0..n).collect();
    let k = site_kernel(support, &sites, n, |s, v| model.cond(s, v))?;
    k.with_stationary(DistributionVector::of_model(model, support)?)
}

/// The update at a fixed site `v`.
pub fn glauber_kernel_at(model: &Model, support: &Arc<EnumeratedSupport>, v: usize) -> Result<Kernel> {
    check_site(model, v)?;
    let k = site_kernel(support, &[v], 1, |s, v| model.cond(s, v))?;
    k.with_stationary(DistributionVector::of_model(model, support)?)
}

/// Glauber step that ignores picks outside `allowed`.
pub fn censored_kernel(model: &Model, support: &Arc<EnumeratedSupport>, allowed: &[bool]) -> Result<Kernel> {
    let n = model.num_vars();
    if allowed.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: allowed.len(),
        });
    }
    let sites: Vec<usize> = (0..n).filter(|&v| allowed[v]).collect();
    let k = site_kernel(support, &sites, n, |s, v| model.cond(s, v))?;
    k.with_stationary(DistributionVector::of_model(model, support)?)
}

fn check_site(model: &Model, v: usize) -> Result<()> {
    if v >= model.num_vars() {
        return Err(Error::Parameter(format!("variable {v} out of range")));
    }
    Ok(())
}

/// A binary model together with its lift, supports and laws, from which
/// the lifted chains are built.
#[derive(Clone, Debug)]
pub struct LiftedSystem {
    base: Model,
    lifted: Model,
    theta: f64,
    base_support: Arc<EnumeratedSupport>,
    support: Arc<EnumeratedSupport>,
    mu: DistributionVector,
    pi: DistributionVector,
}

impl LiftedSystem {
    pub fn new(base: &Model, theta: f64) -> Result<Self> {
        check_open_unit(theta, "theta")?;
        let lifted = base.clone().lift(theta)?;
        let base_support = EnumeratedSupport::of(base)?;
        let support = EnumeratedSupport::of(&lifted)?;
        kernel_guard(&support)?;
        let mu = DistributionVector::of_model(base, &base_support)?;
        let pi = DistributionVector::of_model(&lifted, &support)?;
        Ok(Self {
            base: base.clone(),
            lifted,
            theta,
            base_support,
            support,
            mu,
            pi,
        })
    }

    pub fn base(&self) -> &Model {
        &self.base
    }

    pub fn lifted(&self) -> &Model {
        &self.lifted
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn base_support(&self) -> &Arc<EnumeratedSupport> {
        &self.base_support
    }

    pub fn support(&self) -> &Arc<EnumeratedSupport> {
        &self.support
    }

    pub fn mu(&self) -> &DistributionVector {
        &self.mu
    }

    pub fn pi(&self) -> &DistributionVector {
        &self.pi
    }

    /// Glauber dynamics on the base model.
    pub fn mu_gd_kernel(&self) -> Result<Kernel> {
        glauber_kernel_on(&self.base, &self.base_support)
    }

    /// Glauber dynamics on the lifted model.
    pub fn pi_gd_kernel(&self) -> Result<Kernel> {
        glauber_kernel_on(&self.lifted, &self.support)
    }

    pub fn pi_gd_kernel_at(&self, v: usize) -> Result<Kernel> {
        glauber_kernel_at(&self.lifted, &self.support, v)
    }

    /// Re-lift: X goes to lift(contr(X)).
    pub fn pcl_kernel(&self) -> Result<Kernel> {
        let n = self.support.len();
        let theta = self.theta;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = self.lift_row(&contract_values(self.support.state(i)), 1.0, theta)?;
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Kernel::from_rows(self.support.clone(), rows.concat())?.with_stationary(self.pi.clone())
    }

    /// Law of lift(x) scaled by `mass`, as a vector over the lifted support.
    fn lift_row(&self, x: &[u8], mass: f64, theta: f64) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.support.len()];
        self.add_lift(x, mass, theta, &mut row)?;
        Ok(row)
    }

    fn add_lift(&self, x: &[u8], mass: f64, theta: f64, out: &mut [f64]) -> Result<()> {
        let ones: Vec<usize> = (0..x.len()).filter(|&v| x[v] == 1).collect();
        let mut y = x.to_vec();
        for mask in 0u64..(1u64 << ones.len()) {
            let mut p = mass;
            for (b, &v) in ones.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    y[v] = STAR;
                    p *= 1.0 - theta;
                } else {
                    y[v] = 1;
                    p *= theta;
                }
            }
            out[self.support.require(&y)?] += p;
        }
        Ok(())
    }

    fn sgd_law(&self, s: &[u8], v: usize) -> Result<SiteLaw> {
        if s[v] == STAR {
            return Ok([0.0, 0.0, 1.0]);
        }
        let q = self.base.cond(&contract_values(s), v)?;
        let w1 = self.theta * q[1];
        let z = q[0] + w1;
        if !(z > 0.0) {
            return Err(Error::Infeasible(format!("no feasible value at variable {v}")));
        }
        Ok([q[0] / z, w1 / z, 0.0])
    }

    /// Tilted Glauber on the non-star sites; stars never move.
    pub fn sgd_kernel(&self) -> Result<Kernel> {
        let n = self.base.num_vars();
        let sites: Vec<usize> = (0..n).collect();
        site_kernel(&self.support, &sites, n, |s, v| self.sgd_law(s, v))?
            .with_stationary(self.pi.clone())
    }

    pub fn sgd_kernel_at(&self, v: usize) -> Result<Kernel> {
        check_site(&self.base, v)?;
        site_kernel(&self.support, &[v], 1, |s, v| self.sgd_law(s, v))?.with_stationary(self.pi.clone())
    }

    /// Law of lift(nu) for nu over the base support.
    pub fn lift_pushforward(&self, nu: &DistributionVector) -> Result<DistributionVector> {
        super::check_same(nu.support(), &self.base_support)?;
        let mut out = vec![0.0; self.support.len()];
        for (i, &p) in nu.probs().iter().enumerate() {
            if p > 0.0 {
                self.add_lift(self.base_support.state(i), p, self.theta, &mut out)?;
            }
        }
        DistributionVector::new(self.support.clone(), out)
    }

    /// Law of contr(nu) for nu over the lifted support.
    pub fn contract_pushforward(&self, nu: &DistributionVector) -> Result<DistributionVector> {
        super::check_same(nu.support(), &self.support)?;
        let mut out = vec![0.0; self.base_support.len()];
        for (i, &p) in nu.probs().iter().enumerate() {
            if p > 0.0 {
                out[self.base_support.require(&contract_values(self.support.state(i)))?] += p;
            }
        }
        DistributionVector::new(self.base_support.clone(), out)
    }

    /// Law of lift(1_V), the algorithm's starting point.
    pub fn initial(&self) -> Result<DistributionVector> {
        let ones = vec![1u8; self.base.num_vars()];
        if self.base_support.index_of(&ones).is_none() {
            return Err(Error::Infeasible("the all-ones state has zero weight".into()));
        }
        self.lift_pushforward(&DistributionVector::point_mass(&self.base_support, &ones)?)
    }

    /// P_cl P_s-GD at phase starts, P_s-GD otherwise, for t1 * t2 steps.
    pub fn algorithm_sequence(&self, t1: usize, t2: usize) -> Result<KernelSequence> {
        let step = Arc::new(self.sgd_kernel()?);
        let start = Arc::new(self.pcl_kernel()?.compose(&step)?);
        KernelSequence::periodic(start, step, t2, t1 * t2)
    }

    /// Same shape with plain lifted Glauber in place of P_s-GD.
    pub fn modified_gd_sequence(&self, t1: usize, t2: usize) -> Result<KernelSequence> {
        let step = Arc::new(self.pi_gd_kernel()?);
        let start = Arc::new(self.pcl_kernel()?.compose(&step)?);
        KernelSequence::periodic(start, step, t2, t1 * t2)
    }
}

/// The re-lift kernel of a lifted model.
pub fn pcl_kernel(lifted: &Model) -> Result<Kernel> {
    let (base, theta) = lifted
        .lifted_parts()
        .ok_or_else(|| Error::Alphabet("the re-lift kernel needs a lifted model".into()))?;
    LiftedSystem::new(base, theta)?.pcl_kernel()
}

pub fn sgd_kernel(mu: &Model, theta: f64) -> Result<Kernel> {
    LiftedSystem::new(mu, theta)?.sgd_kernel()
}

/// Largest variable count accepted by the field-dynamics kernel.
pub const FD_GUARD: usize = 20;

pub fn fd_kernel(mu: &Model, theta: f64) -> Result<Kernel> {
    fd_kernel_on(mu, &EnumeratedSupport::of(mu)?, theta)
}

/// Exact field-dynamics kernel: keep each 1 pinned with probability
/// 1 - theta, then redraw the rest from the tilted law given those pins.
pub fn fd_kernel_on(mu: &Model, support: &Arc<EnumeratedSupport>, theta: f64) -> Result<Kernel> {
    check_open_unit(theta, "theta")?;
    if mu.alphabet() != Alphabet::Binary {
        return Err(Error::Alphabet("field dynamics needs a binary model".into()));
    }
    let n = mu.num_vars();
    if n > FD_GUARD {
        return Err(Error::Guard(format!("field dynamics kernel limited to {FD_GUARD} variables")));
    }
    kernel_guard(support)?;
    let law = DistributionVector::of_model(mu, support)?;
    let mask_of = |s: &[u8]| s.iter().enumerate().fold(0usize, |m, (v, &x)| m | ((x as usize) << v));
    let masks: Vec<usize> = support.states().iter().map(|s| mask_of(s)).collect();
    // tilted weights, then superset sums Z(P) = total tilted weight with P all ones
    let mut tilted = vec![0.0; support.len()];
    let mut z = vec![0.0; 1 << n];
    for (i, &m) in masks.iter().enumerate() {
        tilted[i] = law.probs()[i] * theta.powi(m.count_ones() as i32);
        z[m] += tilted[i];
    }
    for b in 0..n {
        for m in 0..(1usize << n) {
            if m >> b & 1 == 0 {
                z[m] += z[m | 1 << b];
            }
        }
    }
    let size = support.len();
    let rows: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|i| {
            let ones = masks[i];
            let k = ones.count_ones() as i32;
            // coefficient of each pinned set P: Pr[P | X] / Z(P)
            let mut coef = vec![0.0; 1 << n];
            let mut p = ones;
            loop {
                let c = p.count_ones() as i32;
                coef[p] = (1.0 - theta).powi(c) * theta.powi(k - c) / z[p];
                if p == 0 {
                    break;
                }
                p = (p - 1) & ones;
            }
            (0..size)
                .map(|j| {
                    let common = ones & masks[j];
                    let mut acc = 0.0;
                    let mut p = common;
                    loop {
                        acc += coef[p];
                        if p == 0 {
                            break;
                        }
                        p = (p - 1) & common;
                    }
                    acc * tilted[j]
                })
                .collect()
        })
        .collect();
    Kernel::from_rows(support.clone(), rows.concat())?.with_stationary(law)
}

/// Exact law of the Ising configuration obtained by drawing from the
/// matching random cluster model and colouring clusters, over the Ising
/// support.
pub fn rc_to_ising_pushforward(ising: &IsingModel) -> Result<DistributionVector> {
    let rc = Model::RandomCluster(ising.random_cluster()?);
    let rc_support = EnumeratedSupport::of(&rc)?;
    let rc_law = DistributionVector::of_model(&rc, &rc_support)?;
    let g = ising.graph();
    let target = Model::Ising(ising.clone());
    let support = EnumeratedSupport::of(&target)?;
    let mut out = vec![0.0; support.len()];
    for (i, &p) in rc_law.probs().iter().enumerate() {
        let edges = rc_support.state(i);
        let labels = g.components(|e| edges[e] == 1);
        let roots: Vec<usize> = (0..g.n()).filter(|&v| labels[v] == v).collect();
        let prod: BTreeMap<usize, f64> = roots
            .iter()
            .map(|&r| {
                let d = (0..g.n()).filter(|&v| labels[v] == r).map(|v| ising.lambda()[v]).product();
                (r, d)
            })
            .collect();
        for colouring in 0u64..(1u64 << roots.len()) {
            let mut q = p;
            let mut spin = vec![0u8; g.n()];
            for (b, r) in roots.iter().enumerate() {
                let one = component_one_probability(prod[r]);
                if colouring >> b & 1 == 1 {
                    q *= one;
                    for v in 0..g.n() {
                        if labels[v] == *r {
                            spin[v] = 1;
                        }
                    }
                } else {
                    q *= 1.0 - one;
                }
            }
            if q > 0.0 {
                out[support.require(&spin)?] += q;
            }
        }
    }
    DistributionVector::new(support, out)
}

/// Exact law of X u Z for X from the coupled subgraph-world model and Z
/// independent edge coins, over the random cluster support.
pub fn sw_to_rc_pushforward(coupling: &SwRcCoupling) -> Result<DistributionVector> {
    let sw = Model::SubgraphWorld(coupling.sw().clone());
    let sw_support = EnumeratedSupport::of(&sw)?;
    let sw_law = DistributionVector::of_model(&sw, &sw_support)?;
    let rc = Model::RandomCluster(coupling.rc().clone());
    let support = EnumeratedSupport::of(&rc)?;
    let m = rc.num_vars();
    let q = coupling.q();
    let mut out = vec![0.0; support.len()];
    for (i, &p) in sw_law.probs().iter().enumerate() {
        let x = sw_support.state(i);
        for zmask in 0u64..(1u64 << m) {
            let mut w = p;
            let mut y = x.to_vec();
            for e in 0..m {
                if zmask >> e & 1 == 1 {
                    w *= q[e];
                    y[e] = 1;
                } else {
                    w *= 1.0 - q[e];
                }
            }
            if w > 0.0 {
                out[support.require(&y)?] += w;
            }
        }
    }
    DistributionVector::new(support, out)
}
