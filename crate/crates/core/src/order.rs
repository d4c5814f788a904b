//! Configurations over {0,1} and {0,1,*}, the componentwise partial order,
//! up-sets, stochastic dominance, and the lift/contract maps.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::MaxFlow;

/// Value code of the extra symbol in lifted configurations.
pub const STAR: u8 = 2;

/// Absolute tolerance for probability comparisons.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alphabet {
    Binary,
    Lifted,
}

impl Alphabet {
    pub fn size(self) -> usize {
        match self {
            Alphabet::Binary => 2,
            Alphabet::Lifted => 3,
        }
    }

    pub fn check(self, values: &[u8]) -> Result<()> {
        let k = self.size() as u8;
        match values.iter().find(|&&x| x >= k) {
            Some(&x) => Err(Error::Alphabet(format!(
                "value {x} is outside the {self:?} alphabet"
            ))),
            None => Ok(()),
        }
    }
}

/// Character used for a value code in state strings.
pub fn symbol(x: u8) -> char {
    match x {
        0 => '0',
        1 => '1',
        _ => '*',
    }
}

pub fn state_string(values: &[u8]) -> String {
    values.iter().map(|&x| symbol(x)).collect()
}

pub fn parse_state(s: &str) -> Result<Vec<u8>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            '*' => Ok(STAR),
            _ => Err(Error::Parse(format!("bad state character {c:?}"))),
        })
        .collect()
}

/// Variable index set 0..n with optional labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl VariableSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("a variable set needs n >= 1".into()));
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut set = Self::new(labels.len())?;
        set.labels = Some(labels);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }
}

/// Anything that is a vector of value codes over a fixed alphabet.
pub trait Assignment {
    const ALPHABET: Alphabet;
    fn values(&self) -> &[u8];
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(Vec<u8>);

impl Configuration {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        Alphabet::Binary.check(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&x| x == 1).count()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|&x| 1 - x).collect())
    }

    pub fn into_values(self) -> Vec<u8> {
        self.0
    }
}

impl Assignment for Configuration {
    const ALPHABET: Alphabet = Alphabet::Binary;
    fn values(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&state_string(&self.0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LiftedConfiguration(Vec<u8>);

impl LiftedConfiguration {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        Alphabet::Lifted.check(&values)?;
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&x| x == 1).count()
    }

    pub fn count_stars(&self) -> usize {
        self.0.iter().filter(|&&x| x == STAR).count()
    }

    pub fn into_values(self) -> Vec<u8> {
        self.0
    }
}

impl Assignment for LiftedConfiguration {
    const ALPHABET: Alphabet = Alphabet::Lifted;
    fn values(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for LiftedConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&state_string(&self.0))
    }
}

/// Componentwise comparison of raw value codes (0 < 1 < *).
#[inline]
pub fn leq_values(x: &[u8], y: &[u8]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

pub fn leq<A: Assignment>(x: &A, y: &A) -> Result<bool> {
    let (x, y) = (x.values(), y.values());
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(leq_values(x, y))
}

/// Sends every 1 to * with probability 1 - theta, independently.
pub fn lift<R: Rng + ?Sized>(
    x: &Configuration,
    theta: f64,
    rng: &mut R,
) -> Result<LiftedConfiguration> {
    check_open_unit(theta, "lift theta")?;
    Ok(LiftedConfiguration(lift_values(x.values(), theta, rng)))
}

pub(crate) fn lift_values<R: Rng + ?Sized>(x: &[u8], theta: f64, rng: &mut R) -> Vec<u8> {
    x.iter()
        .map(|&v| {
            if v == 0 {
                0
            } else if crate::rng::unit(rng) < 1.0 - theta {
                STAR
            } else {
                1
            }
        })
        .collect()
}

pub fn contract(y: &LiftedConfiguration) -> Configuration {
    Configuration(contract_values(y.values()))
}

#[inline]
pub fn contract_values(y: &[u8]) -> Vec<u8> {
    y.iter().map(|&v| v.min(1)).collect()
}

pub(crate) fn check_open_unit(theta: f64, what: &str) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{what} must lie in (0,1), got {theta}")))
    }
}

/// A finite set of equal-length states under the componentwise order.
#[derive(Clone, Debug)]
pub struct Poset {
    elements: Vec<Vec<u8>>,
}

impl Poset {
    pub fn new(elements: Vec<Vec<u8>>) -> Result<Self> {
        if let Some(first) = elements.first() {
            for e in &elements {
                if e.len() != first.len() {
                    return Err(Error::LengthMismatch {
                        expected: first.len(),
                        got: e.len(),
                    });
                }
            }
        }
        Ok(Self { elements })
    }

    /// All of {0,1}^n or {0,1,*}^n in lexicographic order.
    pub fn product(n: usize, alphabet: Alphabet) -> Self {
        let k = alphabet.size();
        let total = k.pow(n as u32);
        let elements = (0..total)
            .map(|mut code| {
                let mut s = vec![0u8; n];
                for i in (0..n).rev() {
                    s[i] = (code % k) as u8;
                    code /= k;
                }
                s
            })
            .collect();
        Self { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &[u8] {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Vec<u8>] {
        &self.elements
    }

    #[inline]
    pub fn leq(&self, i: usize, j: usize) -> bool {
        leq_values(&self.elements[i], &self.elements[j])
    }

    pub fn position(&self, state: &[u8]) -> Option<usize> {
        self.elements.iter().position(|e| e == state)
    }

    /// Smallest up-set containing every flagged element.
    pub fn up_closure(&self, seeds: impl IntoIterator<Item = usize>) -> UpSet {
        let seeds: Vec<usize> = seeds.into_iter().collect();
        let members = (0..self.len())
            .map(|j| seeds.iter().any(|&i| self.leq(i, j)))
            .collect();
        UpSet { members }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UpSet {
    members: Vec<bool>,
}

impl UpSet {
    pub fn from_members(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn measure(&self, dist: &[f64]) -> f64 {
        self.indices().map(|i| dist[i]).sum()
    }

    pub fn is_upward_closed(&self, poset: &Poset) -> bool {
        (0..poset.len()).all(|i| {
            !self.members[i] || (0..poset.len()).all(|j| !poset.leq(i, j) || self.members[j])
        })
    }
}

/// First pair (x, y) with x below y but f(x) > f(y) + tol.
pub fn increasing_violation(f: &[f64], poset: &Poset, tol: f64) -> Option<(usize, usize)> {
    for i in 0..poset.len() {
        for j in 0..poset.len() {
            if i != j && poset.leq(i, j) && f[i] > f[j] + tol {
                return Some((i, j));
            }
        }
    }
    None
}

pub fn is_increasing(f: &[f64], poset: &Poset) -> bool {
    increasing_violation(f, poset, 0.0).is_none()
}

#[derive(Clone, Copy, Debug)]
pub struct UpSetGuard {
    pub max_elements: usize,
    pub max_count: usize,
}

impl Default for UpSetGuard {
    fn default() -> Self {
        Self {
            max_elements: 32,
            max_count: 1_000_000,
        }
    }
}

pub fn enumerate_up_sets(poset: &Poset) -> Result<Vec<UpSet>> {
    enumerate_up_sets_guarded(poset, UpSetGuard::default())
}

/// Every up-set exactly once. Elements are decided from the top down along a
/// linear extension; an element may join only if everything above it has.
pub fn enumerate_up_sets_guarded(poset: &Poset, guard: UpSetGuard) -> Result<Vec<UpSet>> {
    let n = poset.len();
    if n > guard.max_elements.min(64) {
        return Err(Error::Guard(format!(
            "poset has {n} elements (limit {}); use the flow-based dominance check instead",
            guard.max_elements
        )));
    }
    let rank = |i: usize| -> u32 { poset.element(i).iter().map(|&x| x as u32).sum() };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(rank(i)));
    let above: Vec<u64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && poset.leq(i, j))
                .fold(0u64, |m, j| m | (1u64 << j))
        })
        .collect();

    struct Search<'a> {
        order: &'a [usize],
        above: &'a [u64],
        out: Vec<u64>,
        limit: usize,
    }
    impl Search<'_> {
        fn go(&mut self, depth: usize, chosen: u64) -> bool {
            if depth == self.order.len() {
                if self.out.len() >= self.limit {
                    return false;
                }
                self.out.push(chosen);
                return true;
            }
            let x = self.order[depth];
            if !self.go(depth + 1, chosen) {
                return false;
            }
            if self.above[x] & !chosen == 0 {
                return self.go(depth + 1, chosen | (1u64 << x));
            }
            true
        }
    }

    let mut search = Search {
        order: &order,
        above: &above,
        out: Vec::new(),
        limit: guard.max_count,
    };
    if !search.go(0, 0) {
        return Err(Error::Guard(format!(
            "more than {} up-sets; use the flow-based dominance check instead",
            guard.max_count
        )));
    }
    Ok(search
        .out
        .into_iter()
        .map(|mask| UpSet {
            members: (0..n).map(|i| mask >> i & 1 == 1).collect(),
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct Dominance {
    pub holds: bool,
    /// Mass of the lower law that could not be routed upward.
    pub deficit: f64,
    /// On failure, an up-set U with nu(U) > nu'(U).
    pub witness: Option<UpSet>,
}

fn check_normalized(dist: &[f64]) -> Result<()> {
    let s: f64 = dist.iter().sum();
    if (s - 1.0).abs() > PROB_TOL || dist.iter().any(|&p| p < -PROB_TOL) {
        return Err(Error::NotNormalized(s));
    }
    Ok(())
}

/// Strassen check of nu below nu' via max-flow.
pub fn stochastic_dominance(lower: &[f64], upper: &[f64], poset: &Poset) -> Result<Dominance> {
    stochastic_dominance_tol(lower, upper, poset, PROB_TOL)
}

pub fn stochastic_dominance_tol(
    lower: &[f64],
    upper: &[f64],
    poset: &Poset,
    tol: f64,
) -> Result<Dominance> {
    if lower.len() != poset.len() || upper.len() != poset.len() {
        return Err(Error::SupportMismatch(format!(
            "distributions of length {} and {} over a poset of {}",
            lower.len(),
            upper.len(),
            poset.len()
        )));
    }
    check_normalized(lower)?;
    check_normalized(upper)?;
    let a: Vec<(usize, f64)> = sparse(lower);
    let b: Vec<(usize, f64)> = sparse(upper);
    let (deficit, reached) = dominance_flow(&a, &b, |i, j| poset.leq(i, j));
    let holds = deficit <= tol;
    let witness = (!holds).then(|| poset.up_closure(reached));
    Ok(Dominance {
        holds,
        deficit,
        witness,
    })
}

pub(crate) fn sparse(dist: &[f64]) -> Vec<(usize, f64)> {
    dist.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (i, p))
        .collect()
}

/// Routes the lower law onto the upper one along order arcs. Returns the
/// unrouted mass and the lower-side elements reachable in the residual
/// network, whose up-closure is the violated up-set when the deficit is
/// positive.
pub(crate) fn dominance_flow(
    lower: &[(usize, f64)],
    upper: &[(usize, f64)],
    leq: impl Fn(usize, usize) -> bool,
) -> (f64, Vec<usize>) {
    let (na, nb) = (lower.len(), upper.len());
    let source = na + nb;
    let sink = source + 1;
    let mut net = MaxFlow::new(na + nb + 2);
    for (i, &(_, p)) in lower.iter().enumerate() {
        net.add_edge(source, i, p);
    }
    for (j, &(_, q)) in upper.iter().enumerate() {
        net.add_edge(na + j, sink, q);
    }
    for (i, &(x, _)) in lower.iter().enumerate() {
        for (j, &(y, _)) in upper.iter().enumerate() {
            if leq(x, y) {
                net.add_edge(i, na + j, f64::INFINITY);
            }
        }
    }
    let flow = net.run(source, sink);
    let total: f64 = lower.iter().map(|&(_, p)| p).sum();
    let deficit = (total - flow).max(0.0);
    let reach = net.reachable_from(source);
    let reached = (0..na).filter(|&i| reach[i]).map(|i| lower[i].0).collect();
    (deficit, reached)
}

/// Up-set form of the dominance check: nu(U) <= nu'(U) + tol for every U.
/// Returns the first violated up-set.
pub fn dominance_by_up_sets<'a>(
    lower: &[f64],
    upper: &[f64],
    up_sets: &'a [UpSet],
    tol: f64,
) -> Option<&'a UpSet> {
    up_sets
        .iter()
        .find(|u| u.measure(lower) > u.measure(upper) + tol)
}
