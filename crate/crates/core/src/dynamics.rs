//! Monte Carlo samplers with replayable logs: Glauber dynamics, field
//! dynamics, the lift/contract simulation algorithm and censored Glauber.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{log_sum, normalize_log_weights, LogWeight, Model, COMPLETION_GUARD};
use crate::order::{check_open_unit, contract_values, lift_values, state_string, Alphabet, STAR};
use crate::rng::{self, purpose, Stream};

/// One time step of a run: an optional whole-state replacement, then an
/// optional single-site write (site, value).
#[derive(Clone, Debug, PartialEq)]
pub struct StepLog {
    pub reset: Option<Box<[u8]>>,
    pub site: Option<(u32, u8)>,
}

/// A finished run: start, seed, per-step log and the states recorded at
/// the requested times (time t = state after t steps).
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub initial: Vec<u8>,
    pub seed: u64,
    pub steps: u64,
    pub log: Vec<StepLog>,
    pub records: Vec<(u64, Vec<u8>)>,
    pub last: Vec<u8>,
}

impl ChainRun {
    fn start(initial: Vec<u8>, seed: u64, steps: u64, record_at: &[u64]) -> Recorder {
        let mut times = record_at.to_vec();
        times.sort_unstable();
        times.dedup();
        let mut r = Recorder {
            run: ChainRun {
                last: initial.clone(),
                initial,
                seed,
                steps,
                log: Vec::with_capacity(steps.min(1 << 24) as usize),
                records: Vec::new(),
            },
            times,
            next: 0,
        };
        r.record(0);
        r
    }

    /// Re-applies the log to the initial state; returns the states at the
    /// recorded times and the final state.
    pub fn replay(&self) -> (Vec<(u64, Vec<u8>)>, Vec<u8>) {
        let times: Vec<u64> = self.records.iter().map(|r| r.0).collect();
        let mut x = self.initial.clone();
        let mut out = Vec::new();
        let mut k = 0;
        let mut emit = |t: u64, x: &[u8], out: &mut Vec<(u64, Vec<u8>)>| {
            while k < times.len() && times[k] == t {
                out.push((t, x.to_vec()));
                k += 1;
            }
        };
        emit(0, &x, &mut out);
        for (i, step) in self.log.iter().enumerate() {
            apply(&mut x, step);
            emit(i as u64 + 1, &x, &mut out);
        }
        (out, x)
    }

    /// One line per recorded time: "t<TAB>state".
    pub fn trajectory_dump(&self) -> String {
        let mut s = String::new();
        for (t, x) in &self.records {
            let _ = writeln!(s, "{t}\t{}", state_string(x));
        }
        s
    }

    /// Visit counts of the states after steps 1..=steps.
    pub fn occupancy(&self) -> BTreeMap<Vec<u8>, u64> {
        let mut counts = BTreeMap::new();
        let mut x = self.initial.clone();
        for step in &self.log {
            apply(&mut x, step);
            *counts.entry(x.clone()).or_insert(0) += 1;
        }
        counts
    }
}

fn apply(x: &mut [u8], step: &StepLog) {
    if let Some(r) = &step.reset {
        x.copy_from_slice(r);
    }
    if let Some((v, value)) = step.site {
        x[v as usize] = value;
    }
}

struct Recorder {
    run: ChainRun,
    times: Vec<u64>,
    next: usize,
}

impl Recorder {
    fn record(&mut self, t: u64) {
        while self.next < self.times.len() && self.times[self.next] == t {
            self.run.records.push((t, self.run.last.clone()));
            self.next += 1;
        }
    }

    fn push(&mut self, t: u64, step: StepLog) {
        apply(&mut self.run.last, &step);
        self.run.log.push(step);
        self.record(t);
    }

    fn finish(self) -> ChainRun {
        self.run
    }
}

fn check_start(model: &Model, x0: &[u8]) -> Result<()> {
    if model.log_weight(x0)? == LogWeight::Impossible {
        return Err(Error::Infeasible(format!(
            "start state {} has zero weight",
            state_string(x0)
        )));
    }
    Ok(())
}

/// One heat-bath update at a uniformly chosen site; returns (site, value).
pub fn glauber_step(model: &Model, x: &mut [u8], rng: &mut Stream) -> Result<(usize, u8)> {
    let v = rng::index(rng, x.len());
    let law = model.cond(x, v)?;
    let value = rng::categorical(rng, &law[..model.alphabet().size()]) as u8;
    x[v] = value;
    debug_assert!(model.lw(x).is_possible());
    Ok((v, value))
}

pub fn glauber_run(model: &Model, x0: &[u8], steps: u64, seed: u64, record_at: &[u64]) -> Result<ChainRun> {
    check_start(model, x0)?;
    let mut rng = rng::substream(seed, 0, purpose::GLAUBER);
    let mut rec = ChainRun::start(x0.to_vec(), seed, steps, record_at);
    let mut x = x0.to_vec();
    for t in 1..=steps {
        let (v, value) = glauber_step(model, &mut x, &mut rng)?;
        rec.push(t, StepLog { reset: None, site: Some((v as u32, value)) });
    }
    Ok(rec.finish())
}

/// How field dynamics redraws the freed sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InnerSampler {
    /// Exact draw by enumerating the slice.
    Exact,
    /// This many tilted Glauber steps started from the current state.
    Glauber(u64),
}

/// Tilted conditional of `v` given the others: (q0, theta q1) normalized.
fn tilted_prob_one(model: &Model, x: &[u8], v: usize, theta: f64) -> Result<f64> {
    let q = model.cond(x, v)?;
    let w1 = theta * q[1];
    let z = q[0] + w1;
    if !(z > 0.0) {
        return Err(Error::Infeasible(format!("no feasible value at variable {v}")));
    }
    Ok(w1 / z)
}

/// One field-dynamics step: every 0 joins S, every 1 joins S with
/// probability theta; the sites outside S stay pinned to 1 and S is redrawn
/// from the tilted law.
pub fn field_dynamics_step(
    model: &Model,
    theta: f64,
    x: &[u8],
    rng: &mut Stream,
    inner: InnerSampler,
) -> Result<Vec<u8>> {
    check_open_unit(theta, "theta")?;
    if model.alphabet() != Alphabet::Binary {
        return Err(Error::Alphabet("field dynamics needs a binary model".into()));
    }
    let free: Vec<bool> = x.iter().map(|&b| b == 0 || rng::unit(rng) < theta).collect();
    match inner {
        InnerSampler::Exact => exact_slice_draw(model, theta, x, &free, rng),
        InnerSampler::Glauber(t2) => {
            let mut y = x.to_vec();
            for _ in 0..t2 {
                let v = rng::index(rng, y.len());
                if free[v] {
                    y[v] = rng::bernoulli(rng, tilted_prob_one(model, &y, v, theta)?) as u8;
                }
            }
            Ok(y)
        }
    }
}

fn exact_slice_draw(model: &Model, theta: f64, x: &[u8], free: &[bool], rng: &mut Stream) -> Result<Vec<u8>> {
    let sites: Vec<usize> = (0..x.len()).filter(|&v| free[v]).collect();
    let total = 1u64.checked_shl(sites.len() as u32).filter(|&t| t <= COMPLETION_GUARD);
    let total = total.ok_or_else(|| {
        Error::Guard(format!(
            "exact field-dynamics step would enumerate 2^{} states",
            sites.len()
        ))
    })?;
    let ln_theta = theta.ln();
    let mut y = x.to_vec();
    let ws: Vec<LogWeight> = (0..total)
        .map(|code| {
            for (b, &v) in sites.iter().enumerate() {
                y[v] = (code >> b & 1) as u8;
            }
            let ones = y.iter().filter(|&&b| b == 1).count() as f64;
            model.lw(&y).add_log(ones * ln_theta)
        })
        .collect();
    if !log_sum(&ws).is_possible() {
        return Err(Error::Infeasible("pinned slice is empty".into()));
    }
    let p = normalize_log_weights(&ws).expect("slice has mass");
    let code = rng::categorical(rng, &p) as u64;
    for (b, &v) in sites.iter().enumerate() {
        y[v] = (code >> b & 1) as u8;
    }
    Ok(y)
}

pub fn field_dynamics_run(
    model: &Model,
    theta: f64,
    x0: &[u8],
    steps: u64,
    seed: u64,
    record_at: &[u64],
    inner: InnerSampler,
) -> Result<ChainRun> {
    check_start(model, x0)?;
    let mut rng = rng::substream(seed, 0, purpose::FIELD);
    let mut rec = ChainRun::start(x0.to_vec(), seed, steps, record_at);
    let mut x = x0.to_vec();
    for t in 1..=steps {
        x = field_dynamics_step(model, theta, &x, &mut rng, inner)?;
        debug_assert!(model.lw(&x).is_possible());
        rec.push(t, StepLog { reset: Some(x.clone().into_boxed_slice()), site: None });
    }
    Ok(rec.finish())
}

/// A run of the simulation algorithm: the lifted trajectory and its
/// contracted output.
#[derive(Clone, Debug)]
pub struct AlgorithmRun {
    pub run: ChainRun,
    pub output: Vec<u8>,
}

/// Starts at lift(1_V); every `t2` steps re-lifts the contracted state;
/// each step picks a site, leaves it if it is a star and otherwise redraws
/// it in {0,1} from the tilted conditional given the contraction.
pub fn simulate_algorithm(
    model: &Model,
    theta: f64,
    t1: u64,
    t2: u64,
    seed: u64,
    record_at: &[u64],
) -> Result<AlgorithmRun> {
    check_open_unit(theta, "theta")?;
    if model.alphabet() != Alphabet::Binary {
        return Err(Error::Alphabet("the simulation algorithm needs a binary model".into()));
    }
    if t1 == 0 || t2 == 0 {
        return Err(Error::Parameter("T1 and T2 must be at least 1".into()));
    }
    let n = model.num_vars();
    let ones = vec![1u8; n];
    if !model.log_weight(&ones)?.is_possible() {
        return Err(Error::Infeasible("the all-ones state has zero weight".into()));
    }
    let mut rng = rng::substream(seed, 0, purpose::ALGORITHM);
    let steps = t1.checked_mul(t2).ok_or_else(|| Error::Parameter("T1 * T2 overflows".into()))?;
    let x0 = lift_values(&ones, theta, &mut rng);
    let mut rec = ChainRun::start(x0.clone(), seed, steps, record_at);
    let mut x = x0;
    for t in 0..steps {
        let reset = if t % t2 == 0 {
            x = lift_values(&contract_values(&x), theta, &mut rng);
            Some(x.clone().into_boxed_slice())
        } else {
            None
        };
        let v = rng::index(&mut rng, n);
        if x[v] != STAR {
            let c = contract_values(&x);
            x[v] = rng::bernoulli(&mut rng, tilted_prob_one(model, &c, v, theta)?) as u8;
        }
        debug_assert!(model.lw(&contract_values(&x)).is_possible());
        rec.push(t + 1, StepLog { reset, site: Some((v as u32, x[v])) });
    }
    let run = rec.finish();
    let output = contract_values(&run.last);
    Ok(AlgorithmRun { run, output })
}

/// Which sites may update at each step. Never depends on the chain state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Schedule {
    All,
    Never,
    Fixed(Vec<bool>),
    /// Phases of `inner` steps; each phase draws v uniformly from the left
    /// side (sites 0..left) and allows {v} together with the right side.
    TwoLevelBipartite { left: usize, inner: u64, seed: u64 },
}

impl Schedule {
    pub fn allows(&self, t: u64, w: usize) -> bool {
        match self {
            Schedule::All => true,
            Schedule::Never => false,
            Schedule::Fixed(a) => a.get(w).copied().unwrap_or(false),
            Schedule::TwoLevelBipartite { left, .. } => w >= *left || w == self.phase_site(t),
        }
    }

    fn phase_site(&self, t: u64) -> usize {
        match *self {
            Schedule::TwoLevelBipartite { left, inner, seed } => {
                let mut r = rng::substream(seed, t / inner.max(1), purpose::SCHEDULE);
                rng::index(&mut r, left)
            }
            _ => usize::MAX,
        }
    }

    /// Allowed-site flags at step t over n sites.
    pub fn allowed_set(&self, t: u64, n: usize) -> Vec<bool> {
        match self {
            Schedule::TwoLevelBipartite { left, .. } => {
                let v = self.phase_site(t);
                (0..n).map(|w| w >= *left || w == v).collect()
            }
            _ => (0..n).map(|w| self.allows(t, w)).collect(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Schedule::Fixed(a) if a.len() != n => Err(Error::LengthMismatch {
                expected: n,
                got: a.len(),
            }),
            Schedule::TwoLevelBipartite { left, inner, .. } if *left == 0 || *left > n || *inner == 0 => {
                Err(Error::Parameter(format!(
                    "two-level schedule needs 1 <= left <= {n} and inner >= 1"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Glauber dynamics whose picks outside the schedule's allowed set are
/// ignored (the step is still consumed).
pub fn censored_glauber(
    model: &Model,
    x0: &[u8],
    schedule: &Schedule,
    steps: u64,
    seed: u64,
    record_at: &[u64],
) -> Result<ChainRun> {
    check_start(model, x0)?;
    let n = model.num_vars();
    schedule.validate(n)?;
    let k = model.alphabet().size();
    let mut rng = rng::substream(seed, 0, purpose::CENSORED);
    let mut rec = ChainRun::start(x0.to_vec(), seed, steps, record_at);
    let mut x = x0.to_vec();
    for t in 0..steps {
        let w = rng::index(&mut rng, n);
        if schedule.allows(t, w) {
            let law = model.cond(&x, w)?;
            x[w] = rng::categorical(&mut rng, &law[..k]) as u8;
        }
        rec.push(t + 1, StepLog { reset: None, site: Some((w as u32, x[w])) });
    }
    Ok(rec.finish())
}
