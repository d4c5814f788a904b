use rand::Rng;

use super::{IsingModel, RandomClusterModel, SubgraphWorldModel};
use crate::error::{Error, Result};
use crate::order::Configuration;
use crate::rng;

/// Probability that a cluster with field product `d` is assigned spin 1.
pub fn component_one_probability(d: f64) -> f64 {
    d / (1.0 + d)
}

impl IsingModel {
    /// The random cluster model whose clusters, coloured independently,
    /// give this Ising model: p_e = 1 - 1/beta_e, same fields.
    pub fn random_cluster(&self) -> Result<RandomClusterModel> {
        let p = self.beta().iter().map(|b| 1.0 - 1.0 / b).collect();
        RandomClusterModel::new(self.graph().clone(), p, self.lambda().to_vec())
    }
}

/// Colours each cluster of (V, S) all-1 with probability
/// prod(lambda)/(1 + prod(lambda)) and all-0 otherwise.
pub fn rc_to_ising<R: Rng + ?Sized>(
    edges: &[u8],
    ising: &IsingModel,
    rng: &mut R,
) -> Result<Configuration> {
    let g = ising.graph();
    if edges.len() != g.m() {
        return Err(Error::Parameter(format!(
            "edge subset has {} entries but the graph has {} edges",
            edges.len(),
            g.m()
        )));
    }
    let labels = g.components(|e| edges[e] == 1);
    let mut prod = vec![1.0; g.n()];
    for (v, &c) in labels.iter().enumerate() {
        prod[c] *= ising.lambda()[v];
    }
    let mut spin = vec![0u8; g.n()];
    for v in 0..g.n() {
        if labels[v] == v {
            spin[v] = rng::bernoulli(rng, component_one_probability(prod[v])) as u8;
        }
    }
    let out = labels.iter().map(|&c| spin[c]).collect();
    Configuration::new(out)
}

/// The subgraph-world model and independent edge coins whose union is
/// distributed as a given random cluster model.
#[derive(Clone, Debug)]
pub struct SwRcCoupling {
    rc: RandomClusterModel,
    sw: SubgraphWorldModel,
    q: Vec<f64>,
}

impl SwRcCoupling {
    /// Derives p' = p/2, eta = (1-lambda)/(1+lambda), q = p/(2-p).
    pub fn from_rc(rc: &RandomClusterModel) -> Result<Self> {
        let p_half = rc.p().iter().map(|p| p / 2.0).collect();
        let eta = rc.lambda().iter().map(|l| (1.0 - l) / (1.0 + l)).collect();
        let sw = SubgraphWorldModel::new(rc.graph().clone(), p_half, eta)?;
        let q = rc.p().iter().map(|p| p / (2.0 - p)).collect();
        Ok(Self { rc: rc.clone(), sw, q })
    }

    /// Accepts an explicitly built subgraph-world model after checking its
    /// parameters against the derivation from `rc`.
    pub fn new(sw: SubgraphWorldModel, rc: &RandomClusterModel) -> Result<Self> {
        let derived = Self::from_rc(rc)?;
        let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12);
        if sw.graph() != rc.graph() || !close(sw.p(), derived.sw.p()) || !close(sw.eta(), derived.sw.eta()) {
            return Err(Error::Parameter(
                "subgraph-world parameters are not p/2 and (1-lambda)/(1+lambda) of the target".into(),
            ));
        }
        Ok(Self { sw, ..derived })
    }

    pub fn rc(&self) -> &RandomClusterModel {
        &self.rc
    }

    pub fn sw(&self) -> &SubgraphWorldModel {
        &self.sw
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// X union Z with Z_e ~ Bernoulli(q_e) independently.
    pub fn sample<R: Rng + ?Sized>(&self, x: &[u8], rng: &mut R) -> Result<Vec<u8>> {
        if x.len() != self.q.len() {
            return Err(Error::LengthMismatch {
                expected: self.q.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.q)
            .map(|(&xe, &q)| {
                let z = rng::bernoulli(rng, q) as u8;
                xe | z
            })
            .collect())
    }
}
