use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{decode, DistributionVector, Kernel};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::order::{dominance_flow, enumerate_up_sets, sparse, Poset, UpSet, PROB_TOL};

/// Largest variable count for the monotone-system checker.
pub const MONOTONE_GUARD: usize = 12;

/// Largest |mu(x)P(x,y) - mu(y)P(y,x)| over all pairs.
pub fn check_detailed_balance(kernel: &Kernel, dist: &DistributionVector) -> Result<f64> {
    super::check_same(kernel.support(), dist.support())?;
    let p = dist.probs();
    let n = kernel.size();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| (p[i] * kernel.entry(i, j) - p[j] * kernel.entry(j, i)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct RowWitness {
    pub lower: Vec<u8>,
    pub upper: Vec<u8>,
    /// Up-set given more mass by the lower state's row.
    pub up_set: Vec<Vec<u8>>,
    pub deficit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub holds: bool,
    pub pairs_checked: usize,
    pub witness: Option<RowWitness>,
}

fn members(poset: &Poset, u: &UpSet) -> Vec<Vec<u8>> {
    u.indices().map(|i| poset.element(i).to_vec()).collect()
}

/// Rows of comparable states must be ordered by stochastic dominance.
pub fn check_stochastic_monotonicity(kernel: &Kernel) -> Result<MonotonicityReport> {
    let support = kernel.support();
    let poset = support.poset();
    let n = kernel.size();
    let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| sparse(kernel.row(i))).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && poset.leq(i, j))
        .collect();
    let failure = pairs.par_iter().find_map_first(|&(i, j)| {
        let (deficit, reached) = dominance_flow(&rows[i], &rows[j], |a, b| poset.leq(a, b));
        (deficit > PROB_TOL).then(|| RowWitness {
            lower: support.state(i).to_vec(),
            upper: support.state(j).to_vec(),
            up_set: members(&poset, &poset.up_closure(reached)),
            deficit,
        })
    });
    Ok(MonotonicityReport {
        holds: failure.is_none(),
        pairs_checked: pairs.len(),
        witness: failure,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneWitness {
    pub site: usize,
    /// Pinnings of the other sites (`None` at `site`), lower below upper.
    pub lower: Vec<Option<u8>>,
    pub upper: Vec<Option<u8>>,
    /// Value threshold k: the checked quantity is Pr[x_site >= k].
    pub threshold: u8,
    pub lower_tail: f64,
    pub upper_tail: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneReport {
    pub holds: bool,
    pub witness: Option<MonotoneWitness>,
}

/// Checks that every single-site conditional is stochastically increasing
/// in the pinning of the other sites, over all feasible comparable pairs.
/// Conditionals come from weight ratios, not the model's fast paths.
pub fn check_monotone_system(model: &Model) -> Result<MonotoneReport> {
    let n = model.num_vars();
    if n > MONOTONE_GUARD {
        return Err(Error::Guard(format!(
            "monotone-system check limited to {MONOTONE_GUARD} variables, got {n}"
        )));
    }
    let k = model.alphabet().size();
    for v in 0..n {
        if let Some(w) = check_site(model, v, k)? {
            return Ok(MonotoneReport {
                holds: false,
                witness: Some(w),
            });
        }
    }
    Ok(MonotoneReport {
        holds: true,
        witness: None,
    })
}

fn check_site(model: &Model, v: usize, k: usize) -> Result<Option<MonotoneWitness>> {
    let n = model.num_vars();
    let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
    let total = k.pow(others.len() as u32);
    let state_of = |code: usize| -> Vec<u8> {
        let digits = decode(code, others.len(), k);
        let mut s = vec![0u8; n];
        // digit i of the code (most significant first) belongs to others[i]
        for (i, &u) in others.iter().enumerate() {
            s[u] = digits[i];
        }
        s
    };
    // tails[c][t-1] = Pr[x_v >= t] under pinning c, None if infeasible
    let tails: Vec<Option<Vec<f64>>> = (0..total)
        .into_par_iter()
        .map(|c| {
            model.conditional_generic(&state_of(c), v).ok().map(|law| {
                (1..k).map(|t| law[t..k].iter().sum::<f64>()).collect()
            })
        })
        .collect();
    let strides: Vec<usize> = (0..others.len()).map(|i| k.pow((others.len() - 1 - i) as u32)).collect();
    let pin = |code: usize| -> Vec<Option<u8>> {
        let s = state_of(code);
        (0..n).map(|u| (u != v).then_some(s[u])).collect()
    };
    for t in 0..k - 1 {
        // best[c] = smallest tail over feasible pinnings above c, with its code
        let mut best: Vec<Option<(f64, usize)>> = vec![None; total];
        for c in (0..total).rev() {
            let mut b = tails[c].as_ref().map(|tl| (tl[t], c));
            let digits = decode(c, others.len(), k);
            for (i, &stride) in strides.iter().enumerate() {
                if (digits[i] as usize) < k - 1 {
                    if let Some(up) = best[c + stride] {
                        if b.is_none_or(|cur| up.0 < cur.0) {
                            b = Some(up);
                        }
                    }
                }
            }
            best[c] = b;
            if let (Some(own), Some((low, at))) = (&tails[c], b) {
                if own[t] > low + PROB_TOL {
                    return Ok(Some(MonotoneWitness {
                        site: v,
                        lower: pin(c),
                        upper: pin(at),
                        threshold: t as u8 + 1,
                        lower_tail: own[t],
                        upper_tail: low,
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct McWitness {
    /// The up-set U of the extreme ray nu proportional to 1_U mu, when the
    /// failing nu is one.
    pub up_set: Option<Vec<Vec<u8>>>,
    pub nu: Vec<f64>,
    pub deficit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub holds: bool,
    pub checked: usize,
    pub witness: Option<McWitness>,
}

fn mc_failure(p: &Kernel, q: &Kernel, nu: &[f64], poset: &Poset) -> Option<f64> {
    let a = sparse(&p.apply_raw(nu));
    let b = sparse(&q.apply_raw(nu));
    let (deficit, _) = dominance_flow(&a, &b, |i, j| poset.leq(i, j));
    (deficit > PROB_TOL).then_some(deficit)
}

fn ray(u: &UpSet, mu: &[f64]) -> Option<Vec<f64>> {
    let mass = u.measure(mu);
    (mass > 0.0).then(|| {
        mu.iter()
            .enumerate()
            .map(|(i, &m)| if u.contains(i) { m / mass } else { 0.0 })
            .collect()
    })
}

/// Whether nu P is dominated by nu Q for every nu with nu/mu increasing,
/// checked on the extreme rays nu_U proportional to 1_U mu, smallest U
/// first.
pub fn check_mc_leq(p: &Kernel, q: &Kernel, mu: &DistributionVector) -> Result<McReport> {
    super::check_same(p.support(), q.support())?;
    super::check_same(p.support(), mu.support())?;
    let poset = p.support().poset();
    let mut ups = enumerate_up_sets(&poset)?;
    ups.sort_by_key(|u| u.len());
    let rays: Vec<(usize, Vec<f64>)> = ups
        .iter()
        .enumerate()
        .filter_map(|(i, u)| ray(u, mu.probs()).map(|r| (i, r)))
        .collect();
    let failure = rays.par_iter().find_map_first(|(i, nu)| {
        mc_failure(p, q, nu, &poset).map(|deficit| McWitness {
            up_set: Some(members(&poset, &ups[*i])),
            nu: nu.clone(),
            deficit,
        })
    });
    Ok(McReport {
        holds: failure.is_none(),
        checked: rays.len(),
        witness: failure,
    })
}

/// Randomized form: `trials` densities nu/mu built as positive mixtures of
/// random up-set indicators.
pub fn check_mc_leq_random<R: Rng + ?Sized>(
    p: &Kernel,
    q: &Kernel,
    mu: &DistributionVector,
    trials: usize,
    rng: &mut R,
) -> Result<McReport> {
    super::check_same(p.support(), q.support())?;
    super::check_same(p.support(), mu.support())?;
    let poset = p.support().poset();
    let n = poset.len();
    let mut checked = 0;
    while checked < trials {
        let mut density = vec![0.0; n];
        for _ in 0..rng.random_range(1..=4) {
            let seeds: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(0..n)).collect();
            let c: f64 = rng.random();
            for i in poset.up_closure(seeds).indices() {
                density[i] += c;
            }
        }
        let w: Vec<f64> = density.iter().zip(mu.probs()).map(|(d, m)| d * m).collect();
        let z: f64 = w.iter().sum();
        if !(z > 0.0) {
            continue;
        }
        let nu: Vec<f64> = w.iter().map(|x| x / z).collect();
        checked += 1;
        if let Some(deficit) = mc_failure(p, q, &nu, &poset) {
            return Ok(McReport {
                holds: false,
                checked,
                witness: Some(McWitness {
                    up_set: None,
                    nu,
                    deficit,
                }),
            });
        }
    }
    Ok(McReport {
        holds: true,
        checked,
        witness: None,
    })
}
