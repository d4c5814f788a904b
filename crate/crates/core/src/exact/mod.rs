//! Exact enumeration oracle: supports, probability vectors, dense kernels
//! and the checks built on them.

mod checks;
mod kernels;
mod mixing;
pub mod suite;

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{normalize_log_weights, LogWeight, Model};
use crate::order::{state_string, Alphabet, Poset, PROB_TOL};

pub use checks::{
    check_detailed_balance, check_mc_leq, check_mc_leq_random, check_monotone_system,
    check_stochastic_monotonicity, McReport, McWitness, MonotoneReport, MonotoneWitness,
    MonotonicityReport, RowWitness, MONOTONE_GUARD,
};
pub use kernels::{
    censored_kernel, fd_kernel, fd_kernel_on, glauber_kernel, glauber_kernel_at, glauber_kernel_on,
    pcl_kernel, rc_to_ising_pushforward, sgd_kernel, sw_to_rc_pushforward, LiftedSystem, FD_GUARD,
};
pub use mixing::{
    comparison_bound, fd_mixing_time, mixing_time, mixing_time_all_starts, tilted_mixing_time,
    ComparisonBound, FdStart, TiltedMixing, DEFAULT_STEP_CAP,
};

/// Largest state space (k^n) the enumerator walks.
pub const SUPPORT_GUARD: usize = 1 << 20;
/// Largest support for which dense kernels are built.
pub const KERNEL_GUARD: usize = 1 << 12;
/// Allowed deviation of a propagated vector's mass from 1.
pub const DRIFT_TOL: f64 = 1e-9;

/// The support of a model, in lexicographic order (variable 0 most
/// significant, digits 0 < 1 < *).
#[derive(Debug)]
pub struct EnumeratedSupport {
    n: usize,
    alphabet: Alphabet,
    states: Vec<Vec<u8>>,
    lookup: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl EnumeratedSupport {
    pub fn of(model: &Model) -> Result<Arc<Self>> {
        let n = model.num_vars();
        let alphabet = model.alphabet();
        let total = space_size(n, alphabet)?;
        let k = alphabet.size();
        let keep: Vec<bool> = (0..total)
            .into_par_iter()
            .map(|code| model.lw(&decode(code, n, k)).is_possible())
            .collect();
        let states = (0..total).filter(|&c| keep[c]).map(|c| decode(c, n, k)).collect();
        Self::from_states(n, alphabet, states)
    }

    /// Support from an explicit state list, which is sorted and deduplicated.
    pub fn from_states(n: usize, alphabet: Alphabet, mut states: Vec<Vec<u8>>) -> Result<Arc<Self>> {
        let total = space_size(n, alphabet)?;
        for s in &states {
            if s.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: s.len(),
                });
            }
            alphabet.check(s)?;
        }
        states.sort();
        states.dedup();
        if states.is_empty() {
            return Err(Error::Infeasible("empty support".into()));
        }
        let k = alphabet.size();
        let mut lookup = vec![ABSENT; total];
        for (i, s) in states.iter().enumerate() {
            lookup[encode(s, k)] = i as u32;
        }
        Ok(Arc::new(Self {
            n,
            alphabet,
            states,
            lookup,
        }))
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn index_of(&self, state: &[u8]) -> Option<usize> {
        if state.len() != self.n || state.iter().any(|&x| x as usize >= self.alphabet.size()) {
            return None;
        }
        match self.lookup[encode(state, self.alphabet.size())] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    pub(crate) fn require(&self, state: &[u8]) -> Result<usize> {
        self.index_of(state)
            .ok_or_else(|| Error::SupportMismatch(format!("state {} is outside the support", state_string(state))))
    }

    pub fn poset(&self) -> Poset {
        Poset::new(self.states.clone()).expect("support states share a length")
    }

    pub fn header(&self) -> Vec<String> {
        self.states.iter().map(|s| state_string(s)).collect()
    }
}

fn space_size(n: usize, alphabet: Alphabet) -> Result<usize> {
    let k = alphabet.size();
    match k.checked_pow(n as u32) {
        Some(t) if t <= SUPPORT_GUARD => Ok(t),
        _ => Err(Error::Guard(format!(
            "{k}^{n} states exceed the enumeration limit of {SUPPORT_GUARD}"
        ))),
    }
}

pub(crate) fn decode(mut code: usize, n: usize, k: usize) -> Vec<u8> {
    let mut s = vec![0u8; n];
    for i in (0..n).rev() {
        s[i] = (code % k) as u8;
        code /= k;
    }
    s
}

fn encode(s: &[u8], k: usize) -> usize {
    s.iter().fold(0, |c, &x| c * k + x as usize)
}

fn same_support(a: &Arc<EnumeratedSupport>, b: &Arc<EnumeratedSupport>) -> bool {
    Arc::ptr_eq(a, b) || a.states == b.states
}

fn check_same(a: &Arc<EnumeratedSupport>, b: &Arc<EnumeratedSupport>) -> Result<()> {
    if same_support(a, b) {
        Ok(())
    } else {
        Err(Error::SupportMismatch(format!(
            "supports of size {} and {} differ",
            a.len(),
            b.len()
        )))
    }
}

/// A probability vector over an enumerated support.
#[derive(Clone, Debug)]
pub struct DistributionVector {
    support: Arc<EnumeratedSupport>,
    probs: Vec<f64>,
}

impl DistributionVector {
    pub fn new(support: Arc<EnumeratedSupport>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != support.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                got: probs.len(),
            });
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > PROB_TOL || probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::NotNormalized(s));
        }
        Ok(Self { support, probs })
    }

    pub(crate) fn from_raw(support: Arc<EnumeratedSupport>, probs: Vec<f64>) -> Self {
        Self { support, probs }
    }

    /// Normalized weights of `model` over `support`.
    pub fn of_model(model: &Model, support: &Arc<EnumeratedSupport>) -> Result<Self> {
        let ws: Vec<LogWeight> = support.states.iter().map(|s| model.log_weight(s)).collect::<Result<_>>()?;
        let probs = normalize_log_weights(&ws).ok_or_else(|| Error::Infeasible("model has zero mass".into()))?;
        Self::new(support.clone(), probs)
    }

    pub fn point_mass(support: &Arc<EnumeratedSupport>, state: &[u8]) -> Result<Self> {
        let i = support.require(state)?;
        let mut probs = vec![0.0; support.len()];
        probs[i] = 1.0;
        Ok(Self {
            support: support.clone(),
            probs,
        })
    }

    pub fn support(&self) -> &Arc<EnumeratedSupport> {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, state: &[u8]) -> f64 {
        self.support.index_of(state).map_or(0.0, |i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Smallest positive probability.
    pub fn min_positive(&self) -> f64 {
        self.probs.iter().copied().filter(|&p| p > 0.0).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", self.support.header().join(","))?;
        let row: Vec<String> = self.probs.iter().map(|p| format!("{p:.16e}")).collect();
        writeln!(w, "{}", row.join(","))
    }
}

/// Dense row-stochastic matrix over an enumerated support.
#[derive(Clone, Debug)]
pub struct Kernel {
    support: Arc<EnumeratedSupport>,
    data: Vec<f64>,
    stationary: Option<DistributionVector>,
}

impl Kernel {
    pub fn from_rows(support: Arc<EnumeratedSupport>, data: Vec<f64>) -> Result<Self> {
        let n = support.len();
        if data.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        for (i, row) in data.chunks(n).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > PROB_TOL || row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::Numerical(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self {
            support,
            data,
            stationary: None,
        })
    }

    pub fn identity(support: &Arc<EnumeratedSupport>) -> Self {
        let n = support.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            support: support.clone(),
            data,
            stationary: None,
        }
    }

    pub fn with_stationary(mut self, dist: DistributionVector) -> Result<Self> {
        check_same(&self.support, &dist.support)?;
        self.stationary = Some(dist);
        Ok(self)
    }

    pub fn stationary(&self) -> Option<&DistributionVector> {
        self.stationary.as_ref()
    }

    pub fn support(&self) -> &Arc<EnumeratedSupport> {
        &self.support
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.size();
        &self.data[i * n..(i + 1) * n]
    }

    /// The kernel `self` followed by `next`, i.e. the product self * next.
    pub fn compose(&self, next: &Kernel) -> Result<Kernel> {
        check_same(&self.support, &next.support)?;
        let n = self.size();
        let data: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut out = vec![0.0; n];
                for (k, &a) in self.row(i).iter().enumerate() {
                    if a != 0.0 {
                        for (o, &b) in out.iter_mut().zip(next.row(k)) {
                            *o += a * b;
                        }
                    }
                }
                out
            })
            .collect();
        Ok(Kernel {
            support: self.support.clone(),
            data,
            stationary: None,
        })
    }

    /// Left multiplication nu * P of a raw vector.
    pub fn apply_raw(&self, nu: &[f64]) -> Vec<f64> {
        let n = self.size();
        let mut out = vec![0.0; n];
        for (i, &a) in nu.iter().enumerate() {
            if a != 0.0 {
                for (o, &b) in out.iter_mut().zip(self.row(i)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn apply(&self, nu: &DistributionVector) -> Result<DistributionVector> {
        check_same(&self.support, &nu.support)?;
        let out = self.apply_raw(&nu.probs);
        check_drift(&out)?;
        Ok(DistributionVector::from_raw(self.support.clone(), out))
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let header = self.support.header();
        writeln!(w, "state,{}", header.join(","))?;
        for (i, name) in header.iter().enumerate() {
            let row: Vec<String> = self.row(i).iter().map(|p| format!("{p:.16e}")).collect();
            writeln!(w, "{name},{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_drift(v: &[f64]) -> Result<()> {
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > DRIFT_TOL {
        Err(Error::Drift(s))
    } else {
        Ok(())
    }
}

/// A time-inhomogeneous kernel sequence in which step t (from time t to
/// t+1) uses `phase_start` when t is a multiple of `period` and `step`
/// otherwise.
#[derive(Clone, Debug)]
pub struct KernelSequence {
    phase_start: Arc<Kernel>,
    step: Arc<Kernel>,
    period: usize,
    len: usize,
}

impl KernelSequence {
    pub fn periodic(phase_start: Arc<Kernel>, step: Arc<Kernel>, period: usize, len: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::Parameter("period must be at least 1".into()));
        }
        check_same(&phase_start.support, &step.support)?;
        Ok(Self {
            phase_start,
            step,
            period,
            len,
        })
    }

    pub fn factor(&self, t: usize) -> &Kernel {
        if t.is_multiple_of(self.period) {
            &self.phase_start
        } else {
            &self.step
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// The same rule run for `len` steps.
    pub fn with_len(&self, len: usize) -> Self {
        Self { len, ..self.clone() }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Kernel> + '_ {
        (0..self.len).map(move |t| self.factor(t))
    }
}

/// nu_0, nu_0 P_1, nu_0 P_1 P_2, ...; fails if mass drifts by more than
/// `DRIFT_TOL`.
pub fn propagate<'a>(
    start: &DistributionVector,
    kernels: impl IntoIterator<Item = &'a Kernel>,
) -> Result<Vec<DistributionVector>> {
    let mut out = vec![start.clone()];
    for k in kernels {
        let next = k.apply(out.last().expect("nonempty"))?;
        out.push(next);
    }
    Ok(out)
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn tv_distance(a: &DistributionVector, b: &DistributionVector) -> Result<f64> {
    check_same(&a.support, &b.support)?;
    Ok(tv(&a.probs, &b.probs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn value(self) -> f64 {
        match self {
            Divergence::Finite(x) => x,
            Divergence::Infinite => f64::INFINITY,
        }
    }
}

pub(crate) fn kl(nu: &[f64], mu: &[f64]) -> Divergence {
    let mut total = 0.0;
    for (&p, &q) in nu.iter().zip(mu) {
        if p > 0.0 {
            if q <= 0.0 {
                return Divergence::Infinite;
            }
            total += p * (p / q).ln();
        }
    }
    Divergence::Finite(total.max(0.0))
}

pub fn kl_divergence(nu: &DistributionVector, mu: &DistributionVector) -> Result<Divergence> {
    check_same(&nu.support, &mu.support)?;
    Ok(kl(&nu.probs, &mu.probs))
}

#[cfg(test)]
mod tests;
