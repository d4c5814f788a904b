use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use super::{bits, serialize_extended, serialize_pinning, Diagonal, PinningTable, FREE};
use crate::error::{Error, Result};
use crate::flow::min_cost_transport;
use crate::models::Model;
use crate::order::state_string;
use crate::rng::{self, purpose};

/// Largest variable count for the marginal-stability sweep.
pub const STABILITY_GUARD: usize = 10;
/// Largest number of completions on each side of a transport problem.
pub const COUPLING_SIDE_GUARD: usize = 512;

/// Common denominator for the integer transport problems.
const TRANSPORT_SCALE: u64 = 1_000_000_000_000;
/// Candidates with KL(nu || mu) below this are skipped.
const KL_FLOOR: f64 = 1e-8;
const WITNESS_RESTARTS: u64 = 8;

fn require_pairs(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "pinnings leaving two free variables need at least 2 variables, got {n}"
        )));
    }
    Ok(())
}

/// Influence of each variable on each other under a fixed pinning.
#[derive(Clone, Debug, Serialize)]
pub struct InfluenceMatrix {
    #[serde(serialize_with = "serialize_pinning")]
    pub pinning: Vec<Option<u8>>,
    pub n: usize,
    /// Row-major: entry (u, v) at u * n + v.
    pub entries: Vec<f64>,
}

impl InfluenceMatrix {
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.entries[u * self.n + v]
    }

    pub fn row_sum(&self, u: usize, diagonal: Diagonal) -> f64 {
        (0..self.n)
            .filter(|&v| matches!(diagonal, Diagonal::Include) || v != u)
            .map(|v| self.entry(u, v).abs())
            .sum()
    }

    /// Largest absolute row sum and the row attaining it.
    pub fn norm(&self, diagonal: Diagonal) -> (f64, usize) {
        (0..self.n)
            .map(|u| (self.row_sum(u, diagonal), u))
            .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a })
    }
}

pub fn sinf_norm(psi: &InfluenceMatrix) -> f64 {
    psi.norm(Diagonal::Include).0
}

fn influence_at(t: &PinningTable, code: usize) -> InfluenceMatrix {
    let n = t.num_vars();
    let mut entries = vec![0.0; n * n];
    for u in (0..n).filter(|&u| t.digit(code, u) == FREE) {
        let (c0, c1) = (t.with(code, u, 0), t.with(code, u, 1));
        if t.mass_at(c0) == 0.0 || t.mass_at(c1) == 0.0 {
            continue;
        }
        for v in (0..n).filter(|&v| t.digit(code, v) == FREE) {
            if t.mass_at(t.with(code, v, 1)) == 0.0 {
                continue;
            }
            entries[u * n + v] = if u == v {
                1.0
            } else {
                t.one_given(c1, v).unwrap() - t.one_given(c0, v).unwrap()
            };
        }
    }
    InfluenceMatrix {
        pinning: t.decode(code),
        n,
        entries,
    }
}

/// Influence matrix under `pinning`: entry (u, v) is the change in the
/// probability that v is 1 when u goes from 0 to 1. Zero unless both
/// values of u are feasible and v can be 1; the diagonal is 1 where defined.
pub fn influence_matrix(model: &Model, pinning: &[Option<u8>]) -> Result<InfluenceMatrix> {
    let t = PinningTable::of(model)?;
    let n = t.num_vars();
    require_pairs(n)?;
    let code = t.encode(pinning)?;
    if t.pinned_count(code) > n - 2 {
        return Err(Error::Parameter("the pinning must leave at least two variables free".into()));
    }
    if t.mass_at(code) == 0.0 {
        return Err(Error::Infeasible("pinning has zero probability".into()));
    }
    Ok(influence_at(&t, code))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralIndependence {
    /// Largest absolute row sum over all feasible pinnings.
    pub eta: f64,
    /// The same with the diagonal left out.
    pub eta_off_diagonal: f64,
    #[serde(serialize_with = "serialize_pinning")]
    pub pinning: Vec<Option<u8>>,
    pub row: usize,
}

fn feasible_codes(t: &PinningTable, max_pinned: usize) -> impl ParallelIterator<Item = usize> + '_ {
    (0..t.codes())
        .into_par_iter()
        .filter(move |&c| t.mass_at(c) > 0.0 && t.pinned_count(c) <= max_pinned)
}

pub(crate) fn spectral_from(t: &PinningTable) -> Result<SpectralIndependence> {
    let n = t.num_vars();
    if n < 2 {
        // no pinning leaves two variables free
        return Ok(SpectralIndependence {
            eta: 0.0,
            eta_off_diagonal: 0.0,
            pinning: vec![None; n],
            row: 0,
        });
    }
    let rows: Vec<(f64, f64, usize, usize)> = feasible_codes(t, n - 2)
        .map(|c| {
            let psi = influence_at(t, c);
            let (full, row) = psi.norm(Diagonal::Include);
            (full, psi.norm(Diagonal::Exclude).0, row, c)
        })
        .collect();
    let best = rows.iter().fold(None::<&(f64, f64, usize, usize)>, |b, r| match b {
        Some(b) if b.0 >= r.0 => Some(b),
        _ => Some(r),
    });
    let &(eta, _, row, code) = best.expect("the empty pinning is feasible");
    Ok(SpectralIndependence {
        eta,
        eta_off_diagonal: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        pinning: t.decode(code),
        row,
    })
}

/// Largest influence-matrix norm over pinnings that leave at least two
/// variables free.
pub fn spectral_independence(model: &Model) -> Result<SpectralIndependence> {
    spectral_from(&PinningTable::of(model)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginalStability {
    /// Smallest valid constant; "inf" if some conditional forbids 0.
    #[serde(serialize_with = "serialize_extended")]
    pub k: f64,
    /// Largest odds ratio R(tau) / R(tau restricted to a subset).
    pub odds_ratio: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub inverse_zero: f64,
    /// Pinning, sub-pinning and variable attaining the odds ratio.
    #[serde(serialize_with = "serialize_pinning")]
    pub pinning: Vec<Option<u8>>,
    #[serde(serialize_with = "serialize_pinning")]
    pub sub_pinning: Vec<Option<u8>>,
    pub site: usize,
}

pub(crate) fn stability_from(t: &PinningTable) -> Result<MarginalStability> {
    let n = t.num_vars();
    if n > STABILITY_GUARD {
        return Err(Error::Guard(format!(
            "marginal stability limited to {STABILITY_GUARD} variables, got {n}"
        )));
    }
    let per_site: Vec<(f64, usize, usize, f64)> = (0..n)
        .into_par_iter()
        .map(|v| {
            // lowest[c] = smallest odds at v over pinnings below c, with its code
            let mut lowest = vec![(f64::INFINITY, 0usize); t.codes()];
            let mut best = (0.0, 0, 0, 0.0);
            for c in (0..t.codes()).rev() {
                if t.digit(c, v) != FREE || t.mass_at(c) == 0.0 {
                    continue;
                }
                let (z0, z1) = (t.mass_at(t.with(c, v, 0)), t.mass_at(t.with(c, v, 1)));
                let odds = if z0 > 0.0 { z1 / z0 } else { f64::INFINITY };
                let mut low = (odds, c);
                for i in (0..n).filter(|&i| t.digit(c, i) != FREE) {
                    let up = lowest[t.with(c, i, FREE)];
                    if up.0 < low.0 {
                        low = up;
                    }
                }
                lowest[c] = low;
                best.3 = f64::max(best.3, t.mass_at(c) / z0);
                if odds > 0.0 && odds.is_finite() && odds / low.0 > best.0 {
                    best = (odds / low.0, c, low.1, best.3);
                }
            }
            best
        })
        .collect();
    let inverse_zero = per_site.iter().map(|s| s.3).fold(0.0, f64::max);
    let (v, &(odds_ratio, c, sub, _)) = per_site
        .iter()
        .enumerate()
        .fold(None::<(usize, &(f64, usize, usize, f64))>, |b, (v, s)| match b {
            Some(b) if b.1 .0 >= s.0 => Some(b),
            _ => Some((v, s)),
        })
        .ok_or_else(|| Error::Parameter("model has no variables".into()))?;
    Ok(MarginalStability {
        k: odds_ratio.max(inverse_zero),
        odds_ratio,
        inverse_zero,
        pinning: t.decode(c),
        sub_pinning: t.decode(sub),
        site: v,
    })
}

/// Smallest K with R(tau) <= K R(tau_S) and mu(0 | tau) >= 1/K over all
/// feasible pinnings tau, sub-pinnings tau_S and free variables.
pub fn marginal_stability(model: &Model) -> Result<MarginalStability> {
    stability_from(&PinningTable::of(model)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingIndependence {
    /// Largest optimal expected Hamming distance between the two
    /// conditionings, counting the conditioned variable.
    pub c: f64,
    #[serde(serialize_with = "serialize_pinning")]
    pub pinning: Vec<Option<u8>>,
    pub site: usize,
}

/// Rounds a probability vector to integers summing to TRANSPORT_SCALE.
fn quantize(p: &[f64]) -> Vec<u64> {
    let mut q: Vec<u64> = p.iter().map(|&x| (x * TRANSPORT_SCALE as f64).round() as u64).collect();
    let total: u64 = q.iter().sum();
    let top = (0..q.len()).max_by_key(|&i| q[i]).expect("nonempty");
    q[top] = (q[top] as i128 + TRANSPORT_SCALE as i128 - total as i128) as u64;
    q
}

fn transport_at(t: &PinningTable, code: usize, i: usize) -> f64 {
    let n = t.num_vars();
    let free: Vec<usize> = (0..n).filter(|&u| u != i && t.digit(code, u) == FREE).collect();
    let pinned: usize = (0..n).filter(|&u| t.digit(code, u) == 1).map(|u| 1 << u).sum();
    let side = |value: usize| -> Vec<f64> {
        let z = t.mass_at(t.with(code, i, value as u8));
        (0..1usize << free.len())
            .map(|a| {
                let mask = free.iter().enumerate().fold(pinned | value << i, |m, (b, &u)| m | (a >> b & 1) << u);
                t.probs()[mask] / z
            })
            .collect()
    };
    let (x, y) = (quantize(&side(0)), quantize(&side(1)));
    let cost = min_cost_transport(&x, &y, |a, b| ((a ^ b).count_ones() + 1) as i64);
    cost as f64 / TRANSPORT_SCALE as f64
}

pub(crate) fn coupling_from(t: &PinningTable) -> Result<CouplingIndependence> {
    let n = t.num_vars();
    if n < 2 {
        return Ok(CouplingIndependence {
            c: 0.0,
            pinning: vec![None; n],
            site: 0,
        });
    }
    if 1usize << (n - 1) > COUPLING_SIDE_GUARD {
        return Err(Error::Guard(format!(
            "coupling independence limited to {COUPLING_SIDE_GUARD} completions per side, needs {}",
            1usize << (n - 1)
        )));
    }
    let best = feasible_codes(t, n - 2)
        .flat_map_iter(|c| {
            (0..n)
                .filter(move |&i| {
                    t.digit(c, i) == FREE && t.mass_at(t.with(c, i, 0)) > 0.0 && t.mass_at(t.with(c, i, 1)) > 0.0
                })
                .map(move |i| (c, i))
        })
        .map(|(c, i)| (transport_at(t, c, i), c, i))
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a });
    Ok(match best {
        Some((c, code, site)) => CouplingIndependence {
            c,
            pinning: t.decode(code),
            site,
        },
        // no variable can take both values under any pinning
        None => CouplingIndependence {
            c: 0.0,
            pinning: vec![None; n],
            site: 0,
        },
    })
}

/// Exact optimal coupling constant by min-cost transport over every
/// pinning, variable pair of conditionings.
pub fn coupling_independence(model: &Model) -> Result<CouplingIndependence> {
    coupling_from(&PinningTable::of(model)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct EiWitness {
    /// Best ratio sum_i KL(nu_i || mu_i) / KL(nu || mu) found. A lower
    /// bound on any valid entropic-independence constant.
    pub ratio: f64,
    /// The witnessing nu on its support.
    pub nu: BTreeMap<String, f64>,
    pub restarts: u64,
    pub iterations: usize,
}

struct Objective<'a> {
    n: usize,
    states: &'a [usize],
    mu: &'a [f64],
    mu_one: Vec<f64>,
}

impl Objective<'_> {
    fn ratio(&self, nu: &[f64]) -> Option<f64> {
        let joint: f64 = nu
            .iter()
            .zip(self.mu)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, q)| p * (p / q).ln())
            .sum();
        if !(joint > KL_FLOOR) {
            return None;
        }
        let mut one = vec![0.0; self.n];
        for (&s, &p) in self.states.iter().zip(nu) {
            for (v, o) in one.iter_mut().enumerate() {
                if s >> v & 1 == 1 {
                    *o += p;
                }
            }
        }
        let marginals: f64 = one
            .iter()
            .zip(&self.mu_one)
            .map(|(&a, &b)| bernoulli_kl(a.clamp(0.0, 1.0), b))
            .sum();
        Some(marginals / joint)
    }

    fn softmax(&self, logs: &[f64]) -> Vec<f64> {
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }
}

fn bernoulli_kl(a: f64, b: f64) -> f64 {
    let term = |p: f64, q: f64| if p > 0.0 { p * (p / q).ln() } else { 0.0 };
    (term(a, b) + term(1.0 - a, 1.0 - b)).max(0.0)
}

/// Best (ratio, nu over the support) for the law `probs` over bit masks.
fn witness_search(n: usize, probs: &[f64], iterations: usize, root: u64) -> (f64, Vec<(usize, f64)>) {
    let states: Vec<usize> = (0..probs.len()).filter(|&s| probs[s] > 0.0).collect();
    let mu: Vec<f64> = states.iter().map(|&s| probs[s]).collect();
    let mu_one = (0..n)
        .map(|v| states.iter().zip(&mu).filter(|(s, _)| *s >> v & 1 == 1).map(|(_, p)| p).sum())
        .collect();
    let obj = Objective {
        n,
        states: &states,
        mu: &mu,
        mu_one,
    };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let consider = |nu: Vec<f64>, best: &mut (f64, Vec<f64>)| {
        if let Some(r) = obj.ratio(&nu) {
            if r > best.0 {
                *best = (r, nu);
            }
        }
    };
    for j in 0..states.len() {
        let mut nu = vec![0.0; states.len()];
        nu[j] = 1.0;
        consider(nu, &mut best);
    }
    // up- and down-sets of single states, tilted by the number of ones
    for &s in &states {
        for up in [true, false] {
            for tilt in [1.0 / 16.0, 0.25, 1.0, 4.0, 16.0] {
                let logs: Vec<f64> = states
                    .iter()
                    .zip(&mu)
                    .map(|(&x, &m)| {
                        let inside = if up { x & s == s } else { x & s == x };
                        if inside {
                            m.ln() + x.count_ones() as f64 * f64::ln(tilt)
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                consider(obj.softmax(&logs), &mut best);
            }
        }
    }
    let climbs: Vec<(f64, Vec<f64>)> = (0..WITNESS_RESTARTS)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::substream(root, r, purpose::WITNESS);
            let mut logs: Vec<f64> = mu.iter().map(|m| m.ln() + rng.random_range(-2.0..2.0)).collect();
            let mut here = obj.ratio(&obj.softmax(&logs)).unwrap_or(f64::NEG_INFINITY);
            let mut step: f64 = 1.0;
            for _ in 0..iterations {
                let j = rng::index(&mut rng, logs.len());
                let old = logs[j];
                logs[j] += rng.random_range(-step..step);
                match obj.ratio(&obj.softmax(&logs)) {
                    Some(r) if r > here => {
                        here = r;
                        step = (step * 1.2).min(10.0);
                    }
                    _ => {
                        logs[j] = old;
                        step = (step * 0.98).max(1e-3);
                    }
                }
            }
            (here, obj.softmax(&logs))
        })
        .collect();
    for (r, nu) in climbs {
        if r > best.0 {
            best = (r, nu);
        }
    }
    let nu = states.iter().zip(best.1).filter(|(_, p)| *p > 0.0).map(|(&s, p)| (s, p)).collect();
    (best.0, nu)
}

pub(crate) fn ei_from(t: &PinningTable, iterations: usize, root: u64) -> EiWitness {
    let n = t.num_vars();
    let full = (1usize << n) - 1;
    let flipped: Vec<f64> = (0..=full).map(|s| t.probs()[full ^ s]).collect();
    // searching mu and its flip together makes the result flip-invariant
    let (r0, nu0) = witness_search(n, t.probs(), iterations, root);
    let (r1, nu1) = witness_search(n, &flipped, iterations, root);
    let (ratio, nu) = if r1 > r0 {
        (r1, nu1.into_iter().map(|(s, p)| (full ^ s, p)).collect())
    } else {
        (r0, nu0)
    };
    EiWitness {
        ratio,
        nu: nu.into_iter().map(|(s, p)| (state_string(&bits(s, n)), p)).collect(),
        restarts: WITNESS_RESTARTS,
        iterations,
    }
}

/// Searches for nu with a large marginal-to-joint KL ratio: point masses,
/// tilted up- and down-set restrictions, then seeded hill climbing.
pub fn ei_witness<R: RngCore + ?Sized>(model: &Model, iterations: usize, rng: &mut R) -> Result<EiWitness> {
    let t = PinningTable::of(model)?;
    Ok(ei_from(&t, iterations, rng.next_u64()))
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    pub spectral: SpectralIndependence,
    pub marginal_stability: MarginalStability,
    pub coupling: CouplingIndependence,
    pub entropic: EiWitness,
}

pub fn independence_report(model: &Model, ei_iterations: usize, seed: u64) -> Result<IndependenceReport> {
    let t = PinningTable::of(model)?;
    Ok(IndependenceReport {
        spectral: spectral_from(&t)?,
        marginal_stability: stability_from(&t)?,
        coupling: coupling_from(&t)?,
        entropic: ei_from(&t, ei_iterations, seed),
    })
}
