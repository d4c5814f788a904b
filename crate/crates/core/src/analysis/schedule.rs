use serde::Serialize;

use crate::error::{Error, Result};

/// Piecewise-constant alpha on [0, -ln theta]: `values[k]` holds between
/// breakpoints k-1 and k (with 0 and the horizon at the ends).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaSchedule {
    theta: f64,
    breaks: Vec<f64>,
    values: Vec<f64>,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("theta must lie in (0,1), got {theta}")))
    }
}

impl AlphaSchedule {
    pub fn new(theta: f64, breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_theta(theta)?;
        let horizon = -theta.ln();
        if values.len() != breaks.len() + 1 {
            return Err(Error::Parameter(format!(
                "{} breakpoints need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter(format!("alpha values must be positive and finite, got {v}")));
        }
        let mut prev = 0.0;
        for &b in &breaks {
            if !(b > prev && b < horizon) {
                return Err(Error::Parameter(format!(
                    "breakpoints must increase strictly inside (0, {horizon}), got {b}"
                )));
            }
            prev = b;
        }
        Ok(Self { theta, breaks, values })
    }

    /// Like `new`, but breakpoints at or past the horizon are dropped
    /// together with the values after them.
    pub fn clamped(theta: f64, mut breaks: Vec<f64>, mut values: Vec<f64>) -> Result<Self> {
        check_theta(theta)?;
        let horizon = -theta.ln();
        if let Some(k) = breaks.iter().position(|&b| b >= horizon) {
            breaks.truncate(k);
            values.truncate(k + 1);
        }
        Self::new(theta, breaks, values)
    }

    pub fn constant(theta: f64, value: f64) -> Result<Self> {
        Self::new(theta, Vec::new(), vec![value])
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn horizon(&self) -> f64 {
        -self.theta.ln()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.theta, self.breaks.clone(), self.values.iter().map(|v| v * factor).collect())
    }

    /// Alpha at t, right-continuous at breakpoints.
    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= t)]
    }

    /// Exact integral of alpha over [0, horizon].
    pub fn integral(&self) -> f64 {
        let mut ends = self.breaks.clone();
        ends.push(self.horizon());
        let mut start = 0.0;
        ends.iter()
            .zip(&self.values)
            .map(|(&end, &v)| {
                let piece = v * (end - start);
                start = end;
                piece
            })
            .sum()
    }

    /// Adaptive Simpson estimate of the integral.
    pub fn quadrature(&self, tol: f64) -> f64 {
        let f = |t: f64| self.value_at(t);
        let (a, b) = (0.0, self.horizon());
        let m = 0.5 * (a + b);
        let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        simpson(&f, a, b, f(a), f(m), f(b), whole, tol, 60)
    }

    /// ln kappa = -4 * integral of alpha. Kept in log form because kappa
    /// itself underflows for the schedules of interest.
    pub fn log_kappa(&self) -> f64 {
        -4.0 * self.integral()
    }

    pub fn kappa(&self) -> f64 {
        self.log_kappa().exp()
    }

    /// kappa^-1 (ln ln(1/mu_min) + ln(1/(2 eps^2))) + 1.
    pub fn t_bound(&self, mu_min: f64, eps: f64) -> Result<f64> {
        let a = log_terms(mu_min, eps)?.0;
        Ok((-self.log_kappa()).exp() * a + 1.0)
    }

    /// The order-of form kappa^-1 (ln ln(1/mu_min) + ln(1/eps)) with the
    /// hidden constant set to 1.
    pub fn t_bound_order_of(&self, mu_min: f64, eps: f64) -> Result<f64> {
        let b = log_terms(mu_min, eps)?.1;
        Ok((-self.log_kappa()).exp() * b)
    }
}

fn log_terms(mu_min: f64, eps: f64) -> Result<(f64, f64)> {
    if !(mu_min > 0.0 && mu_min < 1.0) {
        return Err(Error::Parameter(format!("mu_min must lie in (0,1), got {mu_min}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("epsilon must lie in (0,1), got {eps}")));
    }
    let ll = (1.0 / mu_min).ln().ln();
    Ok((ll + (1.0 / (2.0 * eps * eps)).ln(), ll + (1.0 / eps).ln()))
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn check_rc(p_min: f64, lambda_max: f64, n: usize) -> Result<()> {
    if !(p_min > 0.0 && p_min <= 1.0) {
        return Err(Error::Parameter(format!("p_min must lie in (0,1], got {p_min}")));
    }
    if !(0.0..1.0).contains(&lambda_max) {
        return Err(Error::Parameter(format!("lambda_max must lie in [0,1), got {lambda_max}")));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 vertices, got {n}")));
    }
    Ok(())
}

/// theta = p_min min(1e-7, (1 - lambda_max)/27) / ln n.
pub fn rc_theta(p_min: f64, lambda_max: f64, n: usize) -> Result<f64> {
    check_rc(p_min, lambda_max, n)?;
    Ok(p_min * f64::min(1e-7, (1.0 - lambda_max) / 27.0) / (n as f64).ln())
}

/// Random-cluster schedule: 3 (1 - lambda_max)^-2 up to ln(1/theta0) with
/// theta0 = p_min (1 - lambda_max)^2 / 2, then 5e4.
pub fn rc_schedule(p_min: f64, lambda_max: f64, n: usize) -> Result<AlphaSchedule> {
    let theta = rc_theta(p_min, lambda_max, n)?;
    let gap = 1.0 - lambda_max;
    let theta0 = 0.5 * p_min * gap * gap;
    AlphaSchedule::clamped(theta, vec![-theta0.ln()], vec![3.0 / (gap * gap), 5e4])
}

fn check_bipartite(lambda: f64, max_degree: u32, n: usize) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if max_degree < 1 {
        return Err(Error::Parameter("max degree must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 vertices, got {n}")));
    }
    Ok(())
}

/// theta = lambda / (e^9 (1 + lambda)^Delta Delta ln n).
pub fn bipartite_theta(lambda: f64, max_degree: u32, n: usize) -> Result<f64> {
    check_bipartite(lambda, max_degree, n)?;
    let d = max_degree as f64;
    Ok(lambda / (9f64.exp() * (1.0 + lambda).powf(d) * d * (n as f64).ln()))
}

/// Bipartite-hardcore schedule: 1e4 (1 + lambda)^(5 Delta) / delta up to
/// ln(1/theta0) = e^9 - ln lambda, then 2e4 (1 + lambda)^(5 Delta). The
/// breakpoint usually lies past the horizon and is then dropped.
pub fn bipartite_schedule(lambda: f64, max_degree: u32, delta: f64, n: usize) -> Result<AlphaSchedule> {
    let theta = bipartite_theta(lambda, max_degree, n)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0,1), got {delta}")));
    }
    let growth = (1.0 + lambda).powf(5.0 * max_degree as f64);
    let cut = 9f64.exp() - lambda.ln();
    AlphaSchedule::clamped(theta, vec![cut], vec![1e4 * growth / delta, 2e4 * growth])
}
