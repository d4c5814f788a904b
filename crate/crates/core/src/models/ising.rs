use std::sync::Arc;

use super::{binary_law, LogWeight, SiteLaw};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Ferromagnetic Ising model: weight is the product of `beta_e` over
/// monochromatic edges times `lambda_v` over vertices with spin 1.
#[derive(Clone, Debug)]
pub struct IsingModel {
    graph: Arc<Graph>,
    beta: Vec<f64>,
    lambda: Vec<f64>,
}

impl IsingModel {
    pub fn new(graph: Arc<Graph>, beta: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if beta.len() != graph.m() || lambda.len() != graph.n() {
            return Err(Error::Parameter("ising: parameter vector lengths do not match the graph".into()));
        }
        if let Some(b) = beta.iter().find(|&&b| !(b > 1.0 && b.is_finite())) {
            return Err(Error::Parameter(format!("ising: beta must exceed 1, got {b}")));
        }
        if let Some(l) = lambda.iter().find(|&&l| !(0.0..=1.0).contains(&l)) {
            return Err(Error::Parameter(format!("ising: lambda must lie in [0,1], got {l}")));
        }
        Ok(Self { graph, beta, lambda })
    }

    pub fn uniform(graph: Arc<Graph>, beta: f64, lambda: f64) -> Result<Self> {
        let (m, n) = (graph.m(), graph.n());
        Self::new(graph, vec![beta; m], vec![lambda; n])
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub(crate) fn log_weight(&self, s: &[u8]) -> LogWeight {
        let mut l = 0.0;
        for (v, &x) in s.iter().enumerate() {
            if x == 1 {
                if self.lambda[v] == 0.0 {
                    return LogWeight::Impossible;
                }
                l += self.lambda[v].ln();
            }
        }
        for (e, &(u, v)) in self.graph.edges().iter().enumerate() {
            if s[u] == s[v] {
                l += self.beta[e].ln();
            }
        }
        LogWeight::Log(l)
    }

    pub(crate) fn conditional(&self, s: &[u8], v: usize) -> Result<SiteLaw> {
        if let Some(u) = (0..s.len()).find(|&u| u != v && s[u] == 1 && self.lambda[u] == 0.0) {
            return Err(Error::Infeasible(format!("vertex {u} has spin 1 but zero field")));
        }
        let (mut l0, mut l1) = (0.0, 0.0);
        for &e in self.graph.incident(v) {
            let u = self.graph.other_end(e, v);
            if s[u] == 1 {
                l1 += self.beta[e].ln();
            } else {
                l0 += self.beta[e].ln();
            }
        }
        let w1 = self.lambda[v] * (l1 - l0).exp();
        binary_law(1.0, w1, "ising site")
    }
}
