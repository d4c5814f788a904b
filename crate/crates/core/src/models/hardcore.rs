use std::sync::Arc;

use super::{binary_law, log_sum, LogWeight, SiteLaw, COMPLETION_GUARD};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Uniqueness threshold (d-1)^(d-1) / (d-2)^d of the hardcore model on
/// graphs of maximum degree d. Infinite for d = 2.
pub fn lambda_c(max_degree: u32) -> Result<f64> {
    match max_degree {
        0 | 1 => Err(Error::Parameter(format!("lambda_c needs degree >= 2, got {max_degree}"))),
        2 => Ok(f64::INFINITY),
        d => {
            let d = d as i32;
            Ok(((d - 1) as f64).powi(d - 1) / ((d - 2) as f64).powi(d))
        }
    }
}

/// Hardcore model with the plain encoding: value 1 means the vertex is in
/// the independent set.
#[derive(Clone, Debug)]
pub struct HardcoreModel {
    graph: Arc<Graph>,
    lambda: f64,
}

impl HardcoreModel {
    pub fn new(graph: Arc<Graph>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!("hardcore: lambda must be positive, got {lambda}")));
        }
        Ok(Self { graph, lambda })
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub(crate) fn log_weight(&self, s: &[u8]) -> LogWeight {
        if self.graph.edges().iter().any(|&(u, v)| s[u] == 1 && s[v] == 1) {
            return LogWeight::Impossible;
        }
        let k = s.iter().filter(|&&x| x == 1).count() as f64;
        LogWeight::Log(k * self.lambda.ln())
    }

    pub(crate) fn conditional(&self, s: &[u8], v: usize) -> Result<SiteLaw> {
        if self
            .graph
            .edges()
            .iter()
            .any(|&(a, b)| a != v && b != v && s[a] == 1 && s[b] == 1)
        {
            return Err(Error::Infeasible("occupied vertices are adjacent".into()));
        }
        if self.graph.neighbors(v).any(|u| s[u] == 1) {
            Ok([1.0, 0.0, 0.0])
        } else {
            binary_law(1.0, self.lambda, "hardcore vertex")
        }
    }
}

/// Bipartite hardcore model with fugacity `lambda` on the left and `beta`
/// on the right. Left value 1 means NOT in the set; right value 1 means in
/// the set. Under this encoding the model is monotone.
#[derive(Clone, Debug)]
pub struct BipartiteHardcoreModel {
    graph: Arc<Graph>,
    lambda: f64,
    beta: f64,
}

impl BipartiteHardcoreModel {
    pub fn new(graph: Arc<Graph>, lambda: f64, beta: f64) -> Result<Self> {
        if graph.left_size().is_none() {
            return Err(Error::Parameter("bipartite hardcore needs a bipartite graph".into()));
        }
        for (name, x) in [("lambda", lambda), ("beta", beta)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Parameter(format!("bipartite hardcore: {name} must be positive, got {x}")));
            }
        }
        Ok(Self { graph, lambda, beta })
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn left(&self) -> usize {
        self.graph.left_size().expect("checked at construction")
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn occupied(&self, s: &[u8], v: usize) -> bool {
        if v < self.left() {
            s[v] == 0
        } else {
            s[v] == 1
        }
    }

    pub(crate) fn log_weight(&self, s: &[u8]) -> LogWeight {
        if self
            .graph
            .edges()
            .iter()
            .any(|&(u, v)| self.occupied(s, u) && self.occupied(s, v))
        {
            return LogWeight::Impossible;
        }
        let k = self.left();
        let left_in = (0..k).filter(|&v| s[v] == 0).count() as f64;
        let right_in = (k..s.len()).filter(|&v| s[v] == 1).count() as f64;
        LogWeight::Log(left_in * self.lambda.ln() + right_in * self.beta.ln())
    }

    pub(crate) fn conditional(&self, s: &[u8], v: usize) -> Result<SiteLaw> {
        if self
            .graph
            .edges()
            .iter()
            .any(|&(a, b)| a != v && b != v && self.occupied(s, a) && self.occupied(s, b))
        {
            return Err(Error::Infeasible("occupied vertices are adjacent".into()));
        }
        let blocked = self.graph.neighbors(v).any(|u| self.occupied(s, u));
        match (v < self.left(), blocked) {
            (true, true) => Ok([0.0, 1.0, 0.0]),
            (true, false) => binary_law(self.lambda, 1.0, "left vertex"),
            (false, true) => Ok([1.0, 0.0, 0.0]),
            (false, false) => binary_law(1.0, self.beta, "right vertex"),
        }
    }
}

/// Marginal of a bipartite hardcore model on its left side (same encoding:
/// value 0 means in the set).
#[derive(Clone, Debug)]
pub struct LeftMarginal {
    full: BipartiteHardcoreModel,
}

impl LeftMarginal {
    pub fn new(full: BipartiteHardcoreModel) -> Self {
        Self { full }
    }

    pub fn full(&self) -> &BipartiteHardcoreModel {
        &self.full
    }

    pub fn num_vars(&self) -> usize {
        self.full.left()
    }

    /// Right vertices with no neighbour in the left set given by `s`,
    /// ignoring `skip`.
    fn free_right(&self, s: &[u8], skip: Option<usize>) -> Vec<bool> {
        let g = self.full.graph();
        let k = self.full.left();
        let mut free = vec![true; g.n() - k];
        for &(a, b) in g.edges() {
            let (l, r) = if a < k { (a, b) } else { (b, a) };
            if Some(l) != skip && s[l] == 0 {
                free[r - k] = false;
            }
        }
        free
    }

    pub(crate) fn log_weight(&self, s: &[u8]) -> LogWeight {
        let left_in = s.iter().filter(|&&x| x == 0).count() as f64;
        let free = self.free_right(s, None).iter().filter(|&&f| f).count() as f64;
        LogWeight::Log(left_in * self.full.lambda.ln() + free * self.full.beta.ln_1p())
    }

    /// The same weight summed explicitly over right-side states.
    pub fn log_weight_by_summation(&self, s: &[u8]) -> Result<LogWeight> {
        let g = self.full.graph();
        let k = self.full.left();
        let r = g.n() - k;
        if (1u64 << r.min(63)) > COMPLETION_GUARD {
            return Err(Error::Guard(format!("{r} right vertices to sum over")));
        }
        let mut full = vec![0u8; g.n()];
        full[..k].copy_from_slice(s);
        let mut terms = Vec::with_capacity(1 << r);
        for code in 0u64..1 << r {
            for j in 0..r {
                full[k + j] = (code >> j & 1) as u8;
            }
            terms.push(self.full.log_weight(&full));
        }
        Ok(log_sum(&terms))
    }

    /// P(v in set | rest) = lambda / (lambda + (1+beta)^f), where f counts
    /// right neighbours of v not already blocked by the rest of the set.
    pub(crate) fn conditional(&self, s: &[u8], v: usize) -> Result<SiteLaw> {
        let k = self.full.left();
        let free = self.free_right(s, Some(v));
        let g = self.full.graph();
        let f = g.neighbors(v).filter(|&w| free[w - k]).count();
        let t = f as f64 * self.full.beta.ln_1p() - self.full.lambda.ln();
        Ok([1.0 / (1.0 + t.exp()), 1.0 / (1.0 + (-t).exp()), 0.0])
    }
}
