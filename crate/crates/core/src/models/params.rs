use std::sync::Arc;

use super::{BipartiteHardcoreModel, HardcoreModel, IsingModel, Model, RandomClusterModel, SubgraphWorldModel};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kv::KeyValues;
use crate::order::STAR;

/// Parameter names a model file may use (each also accepts `.default` and
/// `.<index>` forms where per-element values make sense).
pub const MODEL_KEYS: &[&str] = &["model", "p", "lambda", "beta", "eta"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Ising,
    RandomCluster,
    SubgraphWorld,
    Hardcore,
    BipartiteHardcore,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ising" => ModelKind::Ising,
            "rc" | "random-cluster" => ModelKind::RandomCluster,
            "sw" | "subgraph-world" => ModelKind::SubgraphWorld,
            "hardcore" => ModelKind::Hardcore,
            "bipartite-hardcore" | "bhc" => ModelKind::BipartiteHardcore,
            _ => return Err(Error::Parse(format!("unknown model kind {s:?}"))),
        })
    }
}

fn scalar(kv: &KeyValues, name: &str) -> Result<f64> {
    match kv.f64(name)? {
        Some(x) => Ok(x),
        None => kv.require_f64(&format!("{name}.default")),
    }
}

/// Builds the base model named by the `model` key.
pub fn build_model(graph: Arc<Graph>, kv: &KeyValues) -> Result<Model> {
    let kind: ModelKind = kv
        .get("model")
        .ok_or_else(|| Error::Parse("parameter file needs a model= key".into()))?
        .parse()?;
    let (n, m) = (graph.n(), graph.m());
    Ok(match kind {
        ModelKind::Ising => Model::Ising(IsingModel::new(
            graph,
            kv.indexed("beta", m, None)?,
            kv.indexed("lambda", n, Some(1.0))?,
        )?),
        ModelKind::RandomCluster => Model::RandomCluster(RandomClusterModel::new(
            graph,
            kv.indexed("p", m, None)?,
            kv.indexed("lambda", n, Some(1.0))?,
        )?),
        ModelKind::SubgraphWorld => Model::SubgraphWorld(SubgraphWorldModel::new(
            graph,
            kv.indexed("p", m, None)?,
            kv.indexed("eta", n, None)?,
        )?),
        ModelKind::Hardcore => Model::Hardcore(HardcoreModel::new(graph, scalar(kv, "lambda")?)?),
        ModelKind::BipartiteHardcore => {
            let lambda = scalar(kv, "lambda")?;
            let beta = match kv.f64("beta")?.or(kv.f64("beta.default")?) {
                Some(b) => b,
                None => lambda,
            };
            Model::BipartiteHardcore(BipartiteHardcoreModel::new(graph, lambda, beta)?)
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    Tilt(f64),
    Flip,
    Pin(Vec<Option<u8>>),
    Lift(f64),
    LeftMarginal,
}

impl Transform {
    pub fn apply(&self, model: Model) -> Result<Model> {
        match self {
            Transform::Tilt(t) => model.tilt(*t),
            Transform::Flip => model.flip(),
            Transform::Pin(p) => model.pin(p.clone()),
            Transform::Lift(t) => model.lift(*t),
            Transform::LeftMarginal => model.left_marginal(),
        }
    }
}

/// Parses a pin file: one line over {0,1,*,.}, one character per variable,
/// with `.` marking a free variable.
pub fn parse_pins(text: &str) -> Result<Vec<Option<u8>>> {
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or_else(|| Error::Parse("empty pin file".into()))?;
    line.chars()
        .map(|c| match c {
            '.' => Ok(None),
            '0' => Ok(Some(0)),
            '1' => Ok(Some(1)),
            '*' => Ok(Some(STAR)),
            _ => Err(Error::Parse(format!("bad pin character {c:?}"))),
        })
        .collect()
}

/// Parses `tilt=θ`, `flip`, `pin=<file>`, `lift=θ` or `left-marginal`;
/// `read` loads pin files.
pub fn transform_from_spec(spec: &str, read: impl Fn(&str) -> Result<String>) -> Result<Transform> {
    let num = |v: &str| -> Result<f64> {
        v.parse()
            .map_err(|_| Error::Parse(format!("transform {spec:?}: bad number {v:?}")))
    };
    match spec.split_once('=') {
        Some(("tilt", v)) => Ok(Transform::Tilt(num(v)?)),
        Some(("lift", v)) => Ok(Transform::Lift(num(v)?)),
        Some(("pin", file)) => Ok(Transform::Pin(parse_pins(&read(file)?)?)),
        None if spec == "flip" => Ok(Transform::Flip),
        None if spec == "left-marginal" => Ok(Transform::LeftMarginal),
        _ => Err(Error::Parse(format!("unknown transform {spec:?}"))),
    }
}
