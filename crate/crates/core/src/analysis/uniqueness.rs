use serde::Serialize;

use crate::error::{Error, Result};

/// Exponents k of the sampled w = 2^k in `uniqueness_grid`.
pub const GRID_EXPONENTS: std::ops::RangeInclusive<i32> = -6..=12;
/// Extra w values probing the w -> 0 and w -> infinity ends.
const ENDPOINT_EXPONENTS: [i32; 2] = [-30, 40];

/// Two-step bipartite tree recursion lambda (1 + beta (1+x)^-w)^-d.
pub fn tree_recursion(lambda: f64, d: f64, beta: f64, w: f64, x: f64) -> f64 {
    lambda * (1.0 + beta * (-w * x.ln_1p()).exp()).powf(-d)
}

pub fn tree_recursion_derivative(lambda: f64, d: f64, beta: f64, w: f64, x: f64) -> f64 {
    let decay = (-w * x.ln_1p()).exp();
    lambda * d * beta * w * decay / (1.0 + x) * (1.0 + beta * decay).powf(-d - 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPoint {
    pub x: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessCheck {
    pub holds: bool,
    pub fixed_points: Vec<FixedPoint>,
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {x}")))
    }
}

/// Whether every fixed point of the recursion has slope at most 1 - delta.
/// Fixed points lie in (0, lambda); they are bracketed on a mixed linear
/// and logarithmic grid and refined by bisection.
pub fn uniqueness_check(lambda: f64, d: f64, beta: f64, w: f64, delta: f64) -> Result<UniquenessCheck> {
    check_positive("lambda", lambda)?;
    check_positive("d", d)?;
    check_positive("beta", beta)?;
    check_positive("w", w)?;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Parameter(format!("delta must lie in [0,1), got {delta}")));
    }
    let g = |x: f64| tree_recursion(lambda, d, beta, w, x) - x;
    let mut grid: Vec<f64> = (0..=1024).map(|i| lambda * i as f64 / 1024.0).collect();
    grid.extend((0..=1024).map(|i| lambda * 10f64.powf(-15.0 * i as f64 / 1024.0)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut roots = Vec::new();
    for pair in grid.windows(2) {
        let (mut a, mut b) = (pair[0], pair[1]);
        let (ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            roots.push(a);
            continue;
        }
        if ga.signum() == gb.signum() || gb == 0.0 {
            continue;
        }
        loop {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if g(m).signum() == ga.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    if g(lambda) == 0.0 {
        roots.push(lambda);
    }
    if roots.is_empty() {
        return Err(Error::Numerical(format!(
            "no fixed point found for lambda={lambda}, d={d}, beta={beta}, w={w}"
        )));
    }
    let fixed_points: Vec<FixedPoint> = roots
        .into_iter()
        .map(|x| FixedPoint {
            x,
            slope: tree_recursion_derivative(lambda, d, beta, w, x),
        })
        .collect();
    Ok(UniquenessCheck {
        holds: fixed_points.iter().all(|p| p.slope <= 1.0 - delta),
        fixed_points,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GridPoint {
    pub w: f64,
    pub holds: bool,
    pub max_slope: f64,
}

/// Sampled check of the condition for all w > 0. Heuristic: only the
/// listed w are examined.
#[derive(Clone, Debug, Serialize)]
pub struct UniquenessGrid {
    pub heuristic: bool,
    pub holds: bool,
    pub points: Vec<GridPoint>,
}

pub fn uniqueness_grid(lambda: f64, d: f64, beta: f64, delta: f64) -> Result<UniquenessGrid> {
    let points = GRID_EXPONENTS
        .chain(ENDPOINT_EXPONENTS)
        .map(|k| {
            let w = 2f64.powi(k);
            let c = uniqueness_check(lambda, d, beta, w, delta)?;
            Ok(GridPoint {
                w,
                holds: c.holds,
                max_slope: c.fixed_points.iter().map(|p| p.slope).fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UniquenessGrid {
        heuristic: true,
        holds: points.iter().all(|p| p.holds),
        points,
    })
}
