//! Independence diagnostics computed exactly on small instances, the
//! entropic-independence schedules behind the mixing bounds, and the
//! bipartite-hardcore uniqueness check.

mod independence;
mod schedule;
mod uniqueness;
#[cfg(test)]
mod tests;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

pub use independence::{
    coupling_independence, ei_witness, independence_report, influence_matrix, marginal_stability, sinf_norm,
    spectral_independence, CouplingIndependence, EiWitness, IndependenceReport, InfluenceMatrix, MarginalStability,
    SpectralIndependence, COUPLING_SIDE_GUARD, STABILITY_GUARD,
};
pub use schedule::{bipartite_schedule, bipartite_theta, rc_schedule, rc_theta, AlphaSchedule};
pub use uniqueness::{
    tree_recursion, tree_recursion_derivative, uniqueness_check, uniqueness_grid, UniquenessCheck, UniquenessGrid,
    GRID_EXPONENTS,
};

use crate::error::{Error, Result};
use crate::models::{normalize_log_weights, Model};
use crate::order::Alphabet;

/// Largest variable count for tables over partial pinnings (3^n entries).
pub const PINNING_GUARD: usize = 12;

/// Digit of a free variable in a pinning code.
const FREE: u8 = 2;

/// Mass of every partial pinning of a binary model. A pinning is a
/// base-3 code with digit v in {0, 1, FREE} for variable v (least
/// significant first).
#[derive(Clone, Debug)]
pub struct PinningTable {
    n: usize,
    pow3: Vec<usize>,
    /// Probabilities of the full states, indexed by bit mask.
    probs: Vec<f64>,
    mass: Vec<f64>,
}

impl PinningTable {
    pub fn of(model: &Model) -> Result<Self> {
        if model.alphabet() != Alphabet::Binary {
            return Err(Error::Alphabet("independence diagnostics need a binary model".into()));
        }
        let n = model.num_vars();
        if n > PINNING_GUARD {
            return Err(Error::Guard(format!(
                "pinning tables limited to {PINNING_GUARD} variables, got {n}"
            )));
        }
        let ws: Vec<_> = (0..1usize << n)
            .into_par_iter()
            .map(|mask| model.lw(&bits(mask, n)))
            .collect();
        let probs =
            normalize_log_weights(&ws).ok_or_else(|| Error::Infeasible("model has empty support".into()))?;
        Ok(Self::from_probs(n, probs))
    }

    pub(crate) fn from_probs(n: usize, probs: Vec<f64>) -> Self {
        let pow3: Vec<usize> = (0..=n).map(|i| 3usize.pow(i as u32)).collect();
        let mut mass = vec![0.0; pow3[n]];
        for c in 0..pow3[n] {
            let mut rest = c;
            let mut mask = 0;
            let mut free_at = None;
            for v in 0..n {
                match (rest % 3) as u8 {
                    FREE => {
                        free_at = Some(v);
                        break;
                    }
                    d => mask |= (d as usize) << v,
                }
                rest /= 3;
            }
            mass[c] = match free_at {
                Some(v) => mass[c - 2 * pow3[v]] + mass[c - pow3[v]],
                None => probs[mask],
            };
        }
        Self { n, pow3, probs, mass }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub(crate) fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn codes(&self) -> usize {
        self.pow3[self.n]
    }

    pub(crate) fn digit(&self, code: usize, v: usize) -> u8 {
        (code / self.pow3[v] % 3) as u8
    }

    /// `code` with variable v set to `digit`.
    pub(crate) fn with(&self, code: usize, v: usize, digit: u8) -> usize {
        code - self.digit(code, v) as usize * self.pow3[v] + digit as usize * self.pow3[v]
    }

    pub(crate) fn mass_at(&self, code: usize) -> f64 {
        self.mass[code]
    }

    pub fn encode(&self, pinning: &[Option<u8>]) -> Result<usize> {
        if pinning.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: pinning.len(),
            });
        }
        pinning.iter().enumerate().try_fold(0, |c, (v, x)| match x {
            None => Ok(c + FREE as usize * self.pow3[v]),
            Some(b @ (0 | 1)) => Ok(c + *b as usize * self.pow3[v]),
            Some(b) => Err(Error::Alphabet(format!("value {b} in a binary pinning"))),
        })
    }

    pub(crate) fn decode(&self, code: usize) -> Vec<Option<u8>> {
        (0..self.n)
            .map(|v| match self.digit(code, v) {
                FREE => None,
                d => Some(d),
            })
            .collect()
    }

    /// Probability that the pinned variables take the pinned values.
    pub fn mass(&self, pinning: &[Option<u8>]) -> Result<f64> {
        Ok(self.mass[self.encode(pinning)?])
    }

    /// Conditional probability that v is 1 under the pinning, or None if
    /// the pinning is infeasible.
    pub(crate) fn one_given(&self, code: usize, v: usize) -> Option<f64> {
        let z = self.mass[code];
        (z > 0.0).then(|| self.mass[self.with(code, v, 1)] / z)
    }

    pub(crate) fn pinned_count(&self, code: usize) -> usize {
        (0..self.n).filter(|&v| self.digit(code, v) != FREE).count()
    }
}

pub(crate) fn bits(mask: usize, n: usize) -> Vec<u8> {
    (0..n).map(|v| (mask >> v & 1) as u8).collect()
}

/// Pinning as a string over {0, 1, _} with `_` for free variables.
pub fn pinning_string(pinning: &[Option<u8>]) -> String {
    pinning
        .iter()
        .map(|x| match x {
            None => '_',
            Some(0) => '0',
            Some(_) => '1',
        })
        .collect()
}

pub(crate) fn serialize_pinning<S: Serializer>(p: &[Option<u8>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&pinning_string(p))
}

/// Writes +inf as the string "inf" since JSON has no infinity.
pub(crate) fn serialize_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagonal {
    Include,
    Exclude,
}
