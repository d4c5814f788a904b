use std::sync::Arc;

use super::{binary_law, LogWeight, SiteLaw};
use crate::error::{Error, Result};
use crate::graph::Graph;

fn check_edge_probs(p: &[f64], what: &str) -> Result<()> {
    match p.iter().find(|&&x| !(0.0..1.0).contains(&x)) {
        Some(x) => Err(Error::Parameter(format!("{what}: edge probability {x} outside [0,1)"))),
        None => Ok(()),
    }
}

fn check_unit(xs: &[f64], what: &str) -> Result<()> {
    match xs.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        Some(x) => Err(Error::Parameter(format!("{what}: value {x} outside [0,1]"))),
        None => Ok(()),
    }
}

/// Random cluster model over edge subsets: weight is the product of
/// p_e/(1-p_e) over kept edges times (1 + prod of lambda over the component)
/// over the connected components of (V, S). Variables are edges.
#[derive(Clone, Debug)]
pub struct RandomClusterModel {
    graph: Arc<Graph>,
    p: Vec<f64>,
    lambda: Vec<f64>,
}

impl RandomClusterModel {
    pub fn new(graph: Arc<Graph>, p: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if p.len() != graph.m() || lambda.len() != graph.n() {
            return Err(Error::Parameter("random cluster: parameter lengths do not match the graph".into()));
        }
        if graph.m() == 0 {
            return Err(Error::Parameter("random cluster: graph has no edges".into()));
        }
        check_edge_probs(&p, "random cluster")?;
        check_unit(&lambda, "random cluster lambda")?;
        Ok(Self { graph, p, lambda })
    }

    pub fn uniform(graph: Arc<Graph>, p: f64, lambda: f64) -> Result<Self> {
        let (m, n) = (graph.m(), graph.n());
        Self::new(graph, vec![p; m], vec![lambda; n])
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    fn odds(&self, e: usize) -> f64 {
        self.p[e] / (1.0 - self.p[e])
    }

    /// Product of lambda over each component, keyed by representative.
    fn component_fields(&self, labels: &[usize]) -> Vec<f64> {
        let mut prod = vec![1.0; self.graph.n()];
        for (v, &c) in labels.iter().enumerate() {
            prod[c] *= self.lambda[v];
        }
        prod
    }

    pub(crate) fn log_weight(&self, s: &[u8]) -> LogWeight {
        let mut l = 0.0;
        for (e, &x) in s.iter().enumerate() {
            if x == 1 {
                if self.p[e] == 0.0 {
                    return LogWeight::Impossible;
                }
                l += self.odds(e).ln();
            }
        }
        let labels = self.graph.components(|e| s[e] == 1);
        let prod = self.component_fields(&labels);
        for (v, &c) in labels.iter().enumerate() {
            if c == v {
                l += prod[c].ln_1p();
            }
        }
        LogWeight::Log(l)
    }

    /// mu(S + e) / mu(S - e), from the components of (V, S - e).
    pub fn marginal_ratio(&self, s: &[u8], e: usize) -> Result<f64> {
        if e >= self.graph.m() {
            return Err(Error::Parameter(format!("edge {e} out of range")));
        }
        if s.len() != self.graph.m() {
            return Err(Error::LengthMismatch {
                expected: self.graph.m(),
                got: s.len(),
            });
        }
        Ok(self.ratio(s, e))
    }

    fn ratio(&self, s: &[u8], e: usize) -> f64 {
        let labels = self.graph.components(|f| f != e && s[f] == 1);
        let (u, v) = self.graph.edge(e);
        let (cu, cv) = (labels[u], labels[v]);
        if cu == cv {
            return self.odds(e);
        }
        let prod = self.component_fields(&labels);
        let (du, dv) = (prod[cu], prod[cv]);
        self.odds(e) * (1.0 + du * dv) / ((1.0 + du) * (1.0 + dv))
    }

    pub(crate) fn conditional(&self, s: &[u8], e: usize) -> Result<SiteLaw> {
        if let Some(f) = (0..s.len()).find(|&f| f != e && s[f] == 1 && self.p[f] == 0.0) {
            return Err(Error::Infeasible(format!("edge {f} is present but has p = 0")));
        }
        binary_law(1.0, self.ratio(s, e), "random cluster edge")
    }
}

/// Subgraph-world model over edge subsets: product of p_e/(1-p_e) over kept
/// edges times eta_v over vertices of odd degree in S.
#[derive(Clone, Debug)]
pub struct SubgraphWorldModel {
    graph: Arc<Graph>,
    p: Vec<f64>,
    eta: Vec<f64>,
}

impl SubgraphWorldModel {
    pub fn new(graph: Arc<Graph>, p: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        if p.len() != graph.m() || eta.len() != graph.n() {
            return Err(Error::Parameter("subgraph world: parameter lengths do not match the graph".into()));
        }
        if graph.m() == 0 {
            return Err(Error::Parameter("subgraph world: graph has no edges".into()));
        }
        check_edge_probs(&p, "subgraph world")?;
        check_unit(&eta, "subgraph world eta")?;
        Ok(Self { graph, p, eta })
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    fn degrees(&self, s: &[u8], skip: Option<usize>) -> Vec<usize> {
        let mut deg = vec![0; self.graph.n()];
        for (e, &(u, v)) in self.graph.edges().iter().enumerate() {
            if s[e] == 1 && Some(e) != skip {
                deg[u] += 1;
                deg[v] += 1;
            }
        }
        deg
    }

    pub(crate) fn log_weight(&self, s: &[u8]) -> LogWeight {
        let mut w = LogWeight::ONE;
        for (e, &x) in s.iter().enumerate() {
            if x == 1 {
                w = w.times(self.p[e] / (1.0 - self.p[e]));
            }
        }
        for (v, d) in self.degrees(s, None).into_iter().enumerate() {
            if d % 2 == 1 {
                w = w.times(self.eta[v]);
            }
        }
        w
    }

    pub(crate) fn conditional(&self, s: &[u8], e: usize) -> Result<SiteLaw> {
        let deg = self.degrees(s, Some(e));
        let (u, v) = self.graph.edge(e);
        if let Some(w) = (0..self.graph.n()).find(|&w| w != u && w != v && deg[w] % 2 == 1 && self.eta[w] == 0.0) {
            return Err(Error::Infeasible(format!("vertex {w} has odd degree and eta = 0")));
        }
        if let Some(f) = (0..s.len()).find(|&f| f != e && s[f] == 1 && self.p[f] == 0.0) {
            return Err(Error::Infeasible(format!("edge {f} is present but has p = 0")));
        }
        let parity = |x: usize, d: usize| if d % 2 == 1 { self.eta[x] } else { 1.0 };
        let w0 = parity(u, deg[u]) * parity(v, deg[v]);
        let w1 = self.p[e] / (1.0 - self.p[e]) * parity(u, deg[u] + 1) * parity(v, deg[v] + 1);
        binary_law(w0, w1, "subgraph world edge")
    }
}
