use rayon::prelude::*;
use serde::Serialize;

use super::{check_drift, fd_kernel_on, glauber_kernel_on, tv, DistributionVector, EnumeratedSupport, Kernel};
use crate::error::{Error, Result};
use crate::models::Model;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("epsilon must lie in (0,1), got {eps}")))
    }
}

fn target(kernel: &Kernel) -> Result<&DistributionVector> {
    kernel
        .stationary()
        .ok_or_else(|| Error::Parameter("kernel has no stationary law attached".into()))
}

/// Smallest t >= 1 with TV(start P^t, stationary) <= eps.
pub fn mixing_time(kernel: &Kernel, start: &DistributionVector, eps: f64, cap: u64) -> Result<u64> {
    check_eps(eps)?;
    super::check_same(kernel.support(), start.support())?;
    let pi = target(kernel)?.probs();
    let mut nu = start.probs().to_vec();
    for t in 1..=cap {
        nu = kernel.apply_raw(&nu);
        check_drift(&nu)?;
        if tv(&nu, pi) <= eps {
            return Ok(t);
        }
    }
    Err(Error::StepCap(cap))
}

/// Worst case of `mixing_time` over point-mass starts in the support.
pub fn mixing_time_all_starts(kernel: &Kernel, eps: f64, cap: u64) -> Result<u64> {
    let support = kernel.support();
    (0..support.len())
        .into_par_iter()
        .map(|i| {
            let start = DistributionVector::point_mass(support, support.state(i))?;
            mixing_time(kernel, &start, eps, cap)
        })
        .try_reduce(|| 0, |a, b| Ok(a.max(b)))
}

#[derive(Clone, Debug, Serialize)]
pub struct TiltedMixing {
    pub steps: u64,
    /// A pinned set attaining the maximum.
    pub worst_pinned: Vec<usize>,
    pub pinnings_checked: usize,
}

/// Worst-start Glauber mixing time of the tilted model pinned to 1 on
/// Lambda, maximized over every Lambda that some support state covers.
pub fn tilted_mixing_time(mu: &Model, theta: f64, eps: f64, cap: u64) -> Result<TiltedMixing> {
    let n = mu.num_vars();
    if n > 20 {
        return Err(Error::Guard(format!("tilted mixing over all pinnings limited to 20 variables, got {n}")));
    }
    let support = EnumeratedSupport::of(mu)?;
    let masks: Vec<u32> = support
        .states()
        .iter()
        .map(|s| s.iter().enumerate().fold(0u32, |m, (v, &x)| m | ((x as u32) << v)))
        .collect();
    let tilted = mu.clone().tilt(theta)?;
    let mut best = TiltedMixing {
        steps: 0,
        worst_pinned: Vec::new(),
        pinnings_checked: 0,
    };
    for lambda in 0u32..(1u32 << n) {
        if !masks.iter().any(|&m| m & lambda == lambda) {
            continue;
        }
        let pins = (0..n).map(|v| (lambda >> v & 1 == 1).then_some(1u8)).collect();
        let pinned = tilted.clone().pin_unchecked(pins);
        let slice = EnumeratedSupport::of(&pinned)?;
        let k = glauber_kernel_on(&pinned, &slice)?;
        let t = mixing_time_all_starts(&k, eps, cap)?;
        best.pinnings_checked += 1;
        if t > best.steps {
            best.steps = t;
            best.worst_pinned = (0..n).filter(|&v| lambda >> v & 1 == 1).collect();
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FdStart {
    /// Worst case over all support states.
    Arbitrary,
    /// From the all-ones state only.
    AllOnes,
}

pub fn fd_mixing_time(mu: &Model, theta: f64, eps: f64, start: FdStart, cap: u64) -> Result<u64> {
    let support = EnumeratedSupport::of(mu)?;
    let k = fd_kernel_on(mu, &support, theta)?;
    match start {
        FdStart::Arbitrary => mixing_time_all_starts(&k, eps, cap),
        FdStart::AllOnes => {
            let ones = vec![1u8; mu.num_vars()];
            mixing_time(&k, &DistributionVector::point_mass(&support, &ones)?, eps, cap)
        }
    }
}

/// Both sides of the comparison between Glauber dynamics from the all-ones
/// state and field dynamics with tilted Glauber inner steps.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonBound {
    pub eps: f64,
    pub theta: f64,
    pub fd_start: FdStart,
    /// Glauber mixing time from 1_V at eps.
    pub glauber_from_ones: u64,
    /// Field-dynamics mixing time at eps/2.
    pub field: u64,
    /// eps / (2 * field).
    pub delta: f64,
    /// Tilted mixing time at delta.
    pub tilted: u64,
    pub product: u64,
    pub holds: bool,
}

pub fn comparison_bound(mu: &Model, theta: f64, eps: f64, fd_start: FdStart, cap: u64) -> Result<ComparisonBound> {
    check_eps(eps)?;
    let support = EnumeratedSupport::of(mu)?;
    let ones = vec![1u8; mu.num_vars()];
    let start = DistributionVector::point_mass(&support, &ones)
        .map_err(|_| Error::Infeasible("the all-ones state has zero weight".into()))?;
    let glauber = mixing_time(&glauber_kernel_on(mu, &support)?, &start, eps, cap)?;
    let field = fd_mixing_time(mu, theta, eps / 2.0, fd_start, cap)?;
    let delta = eps / (2.0 * field as f64);
    let tilted = tilted_mixing_time(mu, theta, delta, cap)?.steps;
    let product = field.saturating_mul(tilted);
    Ok(ComparisonBound {
        eps,
        theta,
        fd_start,
        glauber_from_ones: glauber,
        field,
        delta,
        tilted,
        product,
        holds: glauber <= product,
    })
}
