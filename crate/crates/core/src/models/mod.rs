//! Distributions over {0,1}^V (and lifted ones over {0,1,*}^V) exposing an
//! unnormalized weight and exact single-site conditionals.

mod basic;
mod coupling;
mod hardcore;
mod ising;
mod params;
mod rc;

use std::sync::Arc;

pub use basic::{ProductModel, TableModel};
pub use coupling::{component_one_probability, rc_to_ising, SwRcCoupling};
pub use hardcore::{lambda_c, BipartiteHardcoreModel, HardcoreModel, LeftMarginal};
pub use ising::IsingModel;
pub use params::{build_model, transform_from_spec, ModelKind, Transform, MODEL_KEYS};
pub use rc::{RandomClusterModel, SubgraphWorldModel};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::order::{check_open_unit, contract_values, Alphabet, STAR};

/// Limit on completions enumerated by the generic marginal fallback.
pub const COMPLETION_GUARD: u64 = 1 << 20;

/// A weight kept in log-space, with an explicit marker for zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogWeight {
    Impossible,
    Log(f64),
}

impl LogWeight {
    pub const ONE: LogWeight = LogWeight::Log(0.0);

    pub fn from_linear(w: f64) -> Self {
        if w > 0.0 {
            LogWeight::Log(w.ln())
        } else {
            LogWeight::Impossible
        }
    }

    pub fn linear(self) -> f64 {
        match self {
            LogWeight::Impossible => 0.0,
            LogWeight::Log(l) => l.exp(),
        }
    }

    pub fn log(self) -> Option<f64> {
        match self {
            LogWeight::Impossible => None,
            LogWeight::Log(l) => Some(l),
        }
    }

    pub fn is_possible(self) -> bool {
        matches!(self, LogWeight::Log(_))
    }

    /// Multiplies by e^l.
    pub fn add_log(self, l: f64) -> Self {
        match self {
            LogWeight::Impossible => LogWeight::Impossible,
            LogWeight::Log(x) => LogWeight::Log(x + l),
        }
    }

    /// Multiplies by a nonnegative linear factor.
    pub fn times(self, factor: f64) -> Self {
        if factor > 0.0 {
            self.add_log(factor.ln())
        } else {
            LogWeight::Impossible
        }
    }
}

/// Normalizes log-weights into probabilities; `None` if all are impossible.
pub fn normalize_log_weights(ws: &[LogWeight]) -> Option<Vec<f64>> {
    let max = ws.iter().filter_map(|w| w.log()).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let lin: Vec<f64> = ws
        .iter()
        .map(|w| w.log().map_or(0.0, |l| (l - max).exp()))
        .collect();
    let s: f64 = lin.iter().sum();
    Some(lin.into_iter().map(|x| x / s).collect())
}

/// Law of one site: probabilities of values 0, 1, * (the last is 0 for
/// binary models).
pub type SiteLaw = [f64; 3];

fn binary_law(w0: f64, w1: f64, what: &str) -> Result<SiteLaw> {
    let s = w0 + w1;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Infeasible(format!("no feasible value for {what}")));
    }
    Ok([w0 / s, w1 / s, 0.0])
}

#[derive(Clone, Debug)]
pub enum Model {
    Ising(IsingModel),
    RandomCluster(RandomClusterModel),
    SubgraphWorld(SubgraphWorldModel),
    Hardcore(HardcoreModel),
    BipartiteHardcore(BipartiteHardcoreModel),
    LeftMarginal(LeftMarginal),
    Product(ProductModel),
    Table(TableModel),
    Tilted { base: Box<Model>, theta: f64 },
    Flipped(Box<Model>),
    Pinned { base: Box<Model>, pins: Vec<Option<u8>> },
    Lifted { base: Box<Model>, theta: f64 },
}

impl Model {
    pub fn num_vars(&self) -> usize {
        match self {
            Model::Ising(m) => m.graph().n(),
            Model::RandomCluster(m) => m.graph().m(),
            Model::SubgraphWorld(m) => m.graph().m(),
            Model::Hardcore(m) => m.graph().n(),
            Model::BipartiteHardcore(m) => m.graph().n(),
            Model::LeftMarginal(m) => m.num_vars(),
            Model::Product(m) => m.num_vars(),
            Model::Table(m) => m.num_vars(),
            Model::Tilted { base, .. } | Model::Flipped(base) | Model::Lifted { base, .. } => {
                base.num_vars()
            }
            Model::Pinned { pins, .. } => pins.len(),
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        match self {
            Model::Lifted { .. } => Alphabet::Lifted,
            Model::Pinned { base, .. } => base.alphabet(),
            _ => Alphabet::Binary,
        }
    }

    /// The graph the model lives on, looking through transforms.
    pub fn graph(&self) -> Option<&Arc<Graph>> {
        match self {
            Model::Ising(m) => Some(m.graph()),
            Model::RandomCluster(m) => Some(m.graph()),
            Model::SubgraphWorld(m) => Some(m.graph()),
            Model::Hardcore(m) => Some(m.graph()),
            Model::BipartiteHardcore(m) => Some(m.graph()),
            Model::LeftMarginal(m) => Some(m.full().graph()),
            Model::Product(_) | Model::Table(_) => None,
            Model::Tilted { base, .. }
            | Model::Flipped(base)
            | Model::Lifted { base, .. }
            | Model::Pinned { base, .. } => base.graph(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Model::Ising(_) => "ising".into(),
            Model::RandomCluster(_) => "random-cluster".into(),
            Model::SubgraphWorld(_) => "subgraph-world".into(),
            Model::Hardcore(m) => format!("hardcore(lambda={})", m.lambda()),
            Model::BipartiteHardcore(_) => "bipartite-hardcore".into(),
            Model::LeftMarginal(_) => "left-marginal".into(),
            Model::Product(_) => "product".into(),
            Model::Table(_) => "table".into(),
            Model::Tilted { base, theta } => format!("tilt({theta}, {})", base.describe()),
            Model::Flipped(base) => format!("flip({})", base.describe()),
            Model::Pinned { base, pins } => {
                let p: String = pins
                    .iter()
                    .map(|x| x.map_or('.', crate::order::symbol))
                    .collect();
                format!("pin({p}, {})", base.describe())
            }
            Model::Lifted { base, theta } => format!("lift({theta}, {})", base.describe()),
        }
    }

    fn validate(&self, state: &[u8]) -> Result<()> {
        if state.len() != self.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.num_vars(),
                got: state.len(),
            });
        }
        self.alphabet().check(state)
    }

    pub fn log_weight(&self, state: &[u8]) -> Result<LogWeight> {
        self.validate(state)?;
        Ok(self.lw(state))
    }

    pub fn weight(&self, state: &[u8]) -> Result<f64> {
        Ok(self.log_weight(state)?.linear())
    }

    /// Log-weight without input validation.
    pub(crate) fn lw(&self, s: &[u8]) -> LogWeight {
        match self {
            Model::Ising(m) => m.log_weight(s),
            Model::RandomCluster(m) => m.log_weight(s),
            Model::SubgraphWorld(m) => m.log_weight(s),
            Model::Hardcore(m) => m.log_weight(s),
            Model::BipartiteHardcore(m) => m.log_weight(s),
            Model::LeftMarginal(m) => m.log_weight(s),
            Model::Product(m) => m.log_weight(s),
            Model::Table(m) => m.log_weight(s),
            Model::Tilted { base, theta } => {
                let ones = s.iter().filter(|&&x| x == 1).count() as f64;
                base.lw(s).add_log(ones * theta.ln())
            }
            Model::Flipped(base) => {
                let f: Vec<u8> = s.iter().map(|&x| 1 - x).collect();
                base.lw(&f)
            }
            Model::Pinned { base, pins } => {
                if pins.iter().zip(s).any(|(p, &x)| p.is_some_and(|p| p != x)) {
                    LogWeight::Impossible
                } else {
                    base.lw(s)
                }
            }
            Model::Lifted { base, theta } => {
                let ones = s.iter().filter(|&&x| x == 1).count() as f64;
                let stars = s.iter().filter(|&&x| x == STAR).count() as f64;
                base.lw(&contract_values(s))
                    .add_log(ones * theta.ln() + stars * (1.0 - theta).ln())
            }
        }
    }

    /// Law of `state[v]` given the other coordinates of `state` (the value
    /// at `v` is ignored). Uses the model-specific fast path.
    pub fn conditional(&self, state: &[u8], v: usize) -> Result<SiteLaw> {
        self.validate(state)?;
        if v >= self.num_vars() {
            return Err(Error::Parameter(format!("variable {v} out of range")));
        }
        self.cond(state, v)
    }

    pub fn prob_one(&self, state: &[u8], v: usize) -> Result<f64> {
        Ok(self.conditional(state, v)?[1])
    }

    pub(crate) fn cond(&self, s: &[u8], v: usize) -> Result<SiteLaw> {
        match self {
            Model::Ising(m) => m.conditional(s, v),
            Model::RandomCluster(m) => m.conditional(s, v),
            Model::SubgraphWorld(m) => m.conditional(s, v),
            Model::Hardcore(m) => m.conditional(s, v),
            Model::BipartiteHardcore(m) => m.conditional(s, v),
            Model::LeftMarginal(m) => m.conditional(s, v),
            Model::Product(m) => m.conditional(s, v),
            Model::Table(_) => self.conditional_generic(s, v),
            Model::Tilted { base, theta } => {
                let q = base.cond(s, v)?;
                binary_law(q[0], theta * q[1], "tilted site")
            }
            Model::Flipped(base) => {
                let f: Vec<u8> = s.iter().map(|&x| 1 - x).collect();
                let q = base.cond(&f, v)?;
                Ok([q[1], q[0], 0.0])
            }
            Model::Pinned { base, pins } => {
                if let Some(u) = (0..s.len()).find(|&u| u != v && pins[u].is_some_and(|p| p != s[u])) {
                    return Err(Error::Infeasible(format!("coordinate {u} violates the pinning")));
                }
                match pins[v] {
                    Some(x) => {
                        let mut t = s.to_vec();
                        t[v] = x;
                        if !base.lw(&t).is_possible() {
                            return Err(Error::Infeasible("pinned slice is empty here".into()));
                        }
                        let mut law = [0.0; 3];
                        law[x as usize] = 1.0;
                        Ok(law)
                    }
                    None => base.cond(s, v),
                }
            }
            Model::Lifted { base, theta } => {
                let q = base.cond(&contract_values(s), v)?;
                Ok([q[0], theta * q[1], (1.0 - theta) * q[1]])
            }
        }
    }

    /// Conditional law by weight ratios over the alphabet at `v`.
    pub fn conditional_generic(&self, state: &[u8], v: usize) -> Result<SiteLaw> {
        let k = self.alphabet().size();
        let mut t = state.to_vec();
        let ws: Vec<LogWeight> = (0..k as u8)
            .map(|x| {
                t[v] = x;
                self.lw(&t)
            })
            .collect();
        let p = normalize_log_weights(&ws)
            .ok_or_else(|| Error::Infeasible(format!("no feasible value at variable {v}")))?;
        let mut law = [0.0; 3];
        law[..k].copy_from_slice(&p);
        Ok(law)
    }

    /// Law of `v` given a partial pinning of the other variables, by
    /// enumerating completions of the unpinned ones.
    pub fn conditional_marginal(&self, pinning: &[Option<u8>], v: usize) -> Result<SiteLaw> {
        let n = self.num_vars();
        if pinning.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: pinning.len(),
            });
        }
        let free: Vec<usize> = (0..n).filter(|&u| u != v && pinning[u].is_none()).collect();
        let mut base: Vec<u8> = pinning.iter().map(|x| x.unwrap_or(0)).collect();
        self.alphabet().check(&base)?;
        if free.is_empty() {
            return self.cond(&base, v);
        }
        let k = self.alphabet().size();
        let total = (k as u64).checked_pow(free.len() as u32).unwrap_or(u64::MAX);
        if total > COMPLETION_GUARD {
            return Err(Error::Guard(format!("{total} completions to enumerate")));
        }
        let mut acc = vec![Vec::<LogWeight>::new(); k];
        for code in 0..total {
            let mut c = code;
            for &u in &free {
                base[u] = (c % k as u64) as u8;
                c /= k as u64;
            }
            for (x, bucket) in acc.iter_mut().enumerate() {
                base[v] = x as u8;
                bucket.push(self.lw(&base));
            }
        }
        let sums: Vec<LogWeight> = acc.iter().map(|ws| log_sum(ws)).collect();
        let p = normalize_log_weights(&sums)
            .ok_or_else(|| Error::Infeasible("pinning has no feasible completion".into()))?;
        let mut law = [0.0; 3];
        law[..k].copy_from_slice(&p);
        Ok(law)
    }

    /// Whether some support element agrees with the pinning.
    pub fn pinning_feasible(&self, pinning: &[Option<u8>]) -> Result<bool> {
        let n = self.num_vars();
        let free: Vec<usize> = (0..n).filter(|&u| pinning[u].is_none()).collect();
        let k = self.alphabet().size() as u64;
        let total = k.checked_pow(free.len() as u32).unwrap_or(u64::MAX);
        if total > COMPLETION_GUARD {
            return Err(Error::Guard(format!(
                "{total} completions needed to confirm pinning feasibility"
            )));
        }
        let mut s: Vec<u8> = pinning.iter().map(|x| x.unwrap_or(0)).collect();
        for code in 0..total {
            let mut c = code;
            for &u in &free {
                s[u] = (c % k) as u8;
                c /= k;
            }
            if self.lw(&s).is_possible() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// (theta * mu)(x) proportional to mu(x) theta^(number of ones).
    pub fn tilt(self, theta: f64) -> Result<Model> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Parameter(format!("tilt needs theta > 0, got {theta}")));
        }
        if self.alphabet() != Alphabet::Binary {
            return Err(Error::Alphabet("only binary models can be tilted".into()));
        }
        Ok(match self {
            Model::Hardcore(h) => Model::Hardcore(HardcoreModel::new(h.graph().clone(), h.lambda() * theta)?),
            Model::Tilted { base, theta: t } => Model::Tilted {
                base,
                theta: t * theta,
            },
            other => Model::Tilted {
                base: Box::new(other),
                theta,
            },
        })
    }

    /// mu-bar(x) = mu(1 - x).
    pub fn flip(self) -> Result<Model> {
        if self.alphabet() != Alphabet::Binary {
            return Err(Error::Alphabet("only binary models can be flipped".into()));
        }
        Ok(match self {
            Model::Flipped(base) => *base,
            other => Model::Flipped(Box::new(other)),
        })
    }

    /// Restricts to states agreeing with `pins`; the slice must be nonempty.
    pub fn pin(self, pins: Vec<Option<u8>>) -> Result<Model> {
        if pins.len() != self.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.num_vars(),
                got: pins.len(),
            });
        }
        let fixed: Vec<u8> = pins.iter().flatten().copied().collect();
        self.alphabet().check(&fixed)?;
        if !self.pinning_feasible(&pins)? {
            return Err(Error::Infeasible("pinning has no feasible completion".into()));
        }
        Ok(self.pin_unchecked(pins))
    }

    pub(crate) fn pin_unchecked(self, pins: Vec<Option<u8>>) -> Model {
        Model::Pinned {
            base: Box::new(self),
            pins,
        }
    }

    /// Pins every variable in `set` to 1.
    pub fn pin_ones(self, set: &[usize]) -> Result<Model> {
        let mut pins = vec![None; self.num_vars()];
        for &v in set {
            *pins.get_mut(v).ok_or_else(|| Error::Parameter(format!("variable {v} out of range")))? = Some(1);
        }
        self.pin(pins)
    }

    /// The law of lift(X) for X drawn from this model.
    pub fn lift(self, theta: f64) -> Result<Model> {
        check_open_unit(theta, "lift theta")?;
        if self.alphabet() != Alphabet::Binary {
            return Err(Error::Alphabet("only binary models can be lifted".into()));
        }
        Ok(Model::Lifted {
            base: Box::new(self),
            theta,
        })
    }

    /// Left-side marginal of a bipartite hardcore model.
    pub fn left_marginal(self) -> Result<Model> {
        match self {
            Model::BipartiteHardcore(b) => Ok(Model::LeftMarginal(LeftMarginal::new(b))),
            other => Err(Error::Parameter(format!(
                "left marginal needs a bipartite hardcore model, got {}",
                other.describe()
            ))),
        }
    }

    /// For lifted models: the underlying binary model and theta.
    pub fn lifted_parts(&self) -> Option<(&Model, f64)> {
        match self {
            Model::Lifted { base, theta } => Some((base, *theta)),
            _ => None,
        }
    }
}

pub(crate) fn log_sum(ws: &[LogWeight]) -> LogWeight {
    let max = ws.iter().filter_map(|w| w.log()).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogWeight::Impossible;
    }
    let s: f64 = ws.iter().filter_map(|w| w.log()).map(|l| (l - max).exp()).sum();
    LogWeight::Log(max + s.ln())
}
