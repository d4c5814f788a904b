use super::{binary_law, LogWeight, SiteLaw};
use crate::error::{Error, Result};

/// Independent coordinates with P(x_v = 1) = p_v.
#[derive(Clone, Debug)]
pub struct ProductModel {
    p_one: Vec<f64>,
}

impl ProductModel {
    pub fn new(p_one: Vec<f64>) -> Result<Self> {
        if p_one.is_empty() {
            return Err(Error::Parameter("product model needs at least one variable".into()));
        }
        if let Some(p) = p_one.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Parameter(format!("product marginal {p} outside [0,1]")));
        }
        Ok(Self { p_one })
    }

    pub fn num_vars(&self) -> usize {
        self.p_one.len()
    }

    pub fn p_one(&self) -> &[f64] {
        &self.p_one
    }

    pub(crate) fn log_weight(&self, s: &[u8]) -> LogWeight {
        s.iter().zip(&self.p_one).fold(LogWeight::ONE, |w, (&x, &p)| {
            w.times(if x == 1 { p } else { 1.0 - p })
        })
    }

    pub(crate) fn conditional(&self, _s: &[u8], v: usize) -> Result<SiteLaw> {
        binary_law(1.0 - self.p_one[v], self.p_one[v], "product site")
    }
}

/// Arbitrary nonnegative weights over {0,1}^n, indexed by the state read as
/// a binary number with variable 0 as the most significant bit.
#[derive(Clone, Debug)]
pub struct TableModel {
    n: usize,
    weights: Vec<f64>,
}

impl TableModel {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 || n > 24 || weights.len() != 1 << n {
            return Err(Error::Parameter(format!(
                "table model over {n} variables needs 2^{n} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::Parameter("table weights must be finite and nonnegative".into()));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Parameter("table weights are all zero".into()));
        }
        Ok(Self { n, weights })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn index_of(s: &[u8]) -> usize {
        s.iter().fold(0, |acc, &x| acc << 1 | x as usize)
    }

    pub(crate) fn log_weight(&self, s: &[u8]) -> LogWeight {
        LogWeight::from_linear(self.weights[Self::index_of(s)])
    }
}
