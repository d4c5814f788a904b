//! Experiment configuration: a flat key=value file merged with command-line
//! flags, plus the model it describes.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use monolab::graph::Graph;
use monolab::kv::KeyValues;
use monolab::models::{build_model, transform_from_spec, Model};
use monolab::order::parse_state;
use sha2::{Digest, Sha256};

/// Flags shared by every subcommand. Each one maps to the config key of the
/// same name and overrides it.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Flat key=value file holding any of the options below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Graph file: "n m [bipartite left]" then one "u v" line per edge.
    #[arg(long)]
    pub graph: Option<String>,
    /// Model parameter file (model=..., p.default=..., lambda.0=..., ...).
    #[arg(long)]
    pub params: Option<String>,
    /// tilt=θ | flip | pin=FILE | lift=θ | left-marginal, applied in order.
    #[arg(long)]
    pub transform: Vec<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Check name, or "all" (verify only).
    #[arg(long)]
    pub check: Vec<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub t1: Option<String>,
    #[arg(long)]
    pub t2: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    /// Comma-separated times, "all", or "every:K".
    #[arg(long)]
    pub record: Option<String>,
    /// glauber | field | algorithm | censored
    #[arg(long)]
    pub dynamics: Option<String>,
    /// ones | zeros | an explicit state such as 0110.
    #[arg(long)]
    pub start: Option<String>,
    /// arbitrary | ones
    #[arg(long = "fd-start")]
    pub fd_start: Option<String>,
    /// exact | glauber:T
    #[arg(long)]
    pub inner: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    /// all | never | fixed:BITS | bipartite:INNER
    #[arg(long)]
    pub schedule: Option<String>,
    /// glauber | pi-glauber | relift | star-frozen | field
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long = "ei-iterations")]
    pub ei_iterations: Option<String>,
    #[arg(long)]
    pub cap: Option<String>,
    #[arg(long)]
    pub horizon: Option<String>,
}

const COMMON_KEYS: &[&str] = &["graph", "params", "transform", "seed", "out"];

/// Keys each command accepts beyond the common ones.
pub fn command_keys(command: &str) -> &'static [&'static str] {
    match command {
        "sample" => &[
            "dynamics", "steps", "record", "start", "theta", "inner", "t1", "t2", "schedule",
        ],
        "verify" => &["check", "theta", "t1", "t2", "horizon"],
        "analyze" => &["eps", "delta", "ei-iterations"],
        "mixing" => &["eps", "theta", "start", "fd-start", "cap"],
        "kernel-export" => &["kernel", "theta"],
        _ => &[],
    }
}

pub struct Config {
    pub command: &'static str,
    pub values: KeyValues,
    pub hash: String,
    pub seed: u64,
    pub graph: Arc<Graph>,
    /// Parameter file contents, parsed.
    pub params: KeyValues,
    pub model: Model,
}

fn resolve(base: &Path, p: &str) -> String {
    let path = Path::new(p);
    if path.is_absolute() {
        p.to_string()
    } else {
        base.join(path).to_string_lossy().into_owned()
    }
}

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
}

/// Config file values with relative paths resolved against the file's
/// directory.
fn load_file(path: &Path) -> Result<KeyValues> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let kv = KeyValues::parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = KeyValues::default();
    for (k, v) in kv.iter() {
        let v = match k {
            "graph" | "params" | "out" => resolve(base, v),
            "transform" => split_list(v)
                .map(|t| match t.split_once('=') {
                    Some(("pin", f)) => format!("pin={}", resolve(base, f)),
                    _ => t.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            _ => v.to_string(),
        };
        out.insert(k, v);
    }
    Ok(out)
}

pub fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn merge(flags: &Flags) -> Result<KeyValues> {
    let mut kv = match &flags.config {
        Some(p) => load_file(p)?,
        None => KeyValues::default(),
    };
    let singles = [
        ("graph", &flags.graph),
        ("params", &flags.params),
        ("seed", &flags.seed),
        ("out", &flags.out),
        ("eps", &flags.eps),
        ("t1", &flags.t1),
        ("t2", &flags.t2),
        ("steps", &flags.steps),
        ("record", &flags.record),
        ("dynamics", &flags.dynamics),
        ("start", &flags.start),
        ("fd-start", &flags.fd_start),
        ("inner", &flags.inner),
        ("delta", &flags.delta),
        ("theta", &flags.theta),
        ("schedule", &flags.schedule),
        ("kernel", &flags.kernel),
        ("ei-iterations", &flags.ei_iterations),
        ("cap", &flags.cap),
        ("horizon", &flags.horizon),
    ];
    for (k, v) in singles {
        if let Some(v) = v {
            kv.insert(k, v.clone());
        }
    }
    if !flags.transform.is_empty() {
        kv.insert("transform", flags.transform.join(","));
    }
    if !flags.check.is_empty() {
        kv.insert("check", flags.check.join(","));
    }
    Ok(kv)
}

impl Config {
    pub fn load(command: &'static str, flags: &Flags) -> Result<Self> {
        let values = merge(flags)?;
        let extra = command_keys(command);
        values.reject_unknown(|k| COMMON_KEYS.contains(&k) || extra.contains(&k))?;

        let graph_path = values
            .get("graph")
            .ok_or_else(|| anyhow!("missing --graph"))?;
        let params_path = values
            .get("params")
            .ok_or_else(|| anyhow!("missing --params"))?;
        let graph_text = read(graph_path)?;
        let params_text = read(params_path)?;
        let graph =
            Arc::new(Graph::parse(&graph_text).with_context(|| format!("graph {graph_path}"))?);
        let params =
            KeyValues::parse(&params_text).with_context(|| format!("params {params_path}"))?;

        let mut hasher = Sha256::new();
        hasher.update(format!("command={command}\n"));
        for (k, v) in values.iter() {
            if !matches!(k, "graph" | "params" | "transform" | "out") {
                hasher.update(format!("{k}={v}\n"));
            }
        }
        hasher.update(format!("graph:\n{graph_text}\nparams:\n{params_text}\n"));

        let mut transforms = Vec::new();
        if let Some(list) = values.get("transform") {
            for spec in split_list(list) {
                let t = transform_from_spec(spec, |f| {
                    read(f).map_err(|e| monolab::Error::Parse(format!("{e:#}")))
                })?;
                match spec.split_once('=') {
                    Some(("pin", f)) => hasher.update(format!("transform pin:\n{}\n", read(f)?)),
                    _ => hasher.update(format!("transform {spec}\n")),
                }
                transforms.push(t);
            }
        }
        let hash: String = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();

        let mut model = build_model(graph.clone(), &params)?;
        for t in &transforms {
            model = t.apply(model)?;
        }
        let seed = match values.get("seed") {
            Some(s) => s
                .parse()
                .with_context(|| format!("seed: not an unsigned integer: {s:?}"))?,
            None => 0,
        };
        Ok(Config {
            command,
            values,
            hash,
            seed,
            graph,
            params,
            model,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        Ok(self.values.f64(key)?)
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| anyhow!("missing --{key}"))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .with_context(|| format!("{key}: not an unsigned integer: {v:?}"))
            })
            .transpose()
    }

    pub fn require_u64(&self, key: &str) -> Result<u64> {
        self.u64(key)?.ok_or_else(|| anyhow!("missing --{key}"))
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }

    /// Named start state over the model's variables.
    pub fn start_state(&self) -> Result<Vec<u8>> {
        let n = self.model.num_vars();
        match self.get("start").unwrap_or("ones") {
            "ones" => Ok(vec![1; n]),
            "zeros" => Ok(vec![0; n]),
            s => {
                let x = parse_state(s)?;
                if x.len() != n {
                    bail!(
                        "start state {s:?} has {} values, the model has {n} variables",
                        x.len()
                    );
                }
                Ok(x)
            }
        }
    }
}

/// Record times up to `steps`.
pub fn record_times(spec: Option<&str>, steps: u64) -> Result<Vec<u64>> {
    let spec = match spec {
        Some(s) => s,
        None => return Ok(every((steps / 1000).max(1), steps)),
    };
    if spec == "all" {
        return Ok(every(1, steps));
    }
    if let Some(k) = spec.strip_prefix("every:") {
        let k: u64 = k
            .parse()
            .with_context(|| format!("record: bad stride {k:?}"))?;
        if k == 0 {
            bail!("record: stride must be positive");
        }
        return Ok(every(k, steps));
    }
    split_list(spec)
        .map(|t| {
            let t: u64 = t
                .parse()
                .with_context(|| format!("record: bad time {t:?}"))?;
            if t > steps {
                bail!("record: time {t} is past the last step {steps}");
            }
            Ok(t)
        })
        .collect()
}

fn every(k: u64, steps: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..=steps).step_by(k as usize).collect();
    if v.last() != Some(&steps) {
        v.push(steps);
    }
    v
}
