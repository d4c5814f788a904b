use anyhow::Result;
use monolab::analysis::{
    bipartite_schedule, independence_report, rc_schedule, uniqueness_grid, AlphaSchedule,
};
use monolab::exact::{DistributionVector, EnumeratedSupport};
use monolab::models::{build_model, lambda_c, Model};
use serde_json::{json, Value};

use crate::config::Config;
use crate::output::{num, write_atomic};
use crate::Outcome;

const DEFAULT_EI_ITERATIONS: usize = 200;
const DEFAULT_EPS: f64 = 0.25;

fn schedule_json(s: &AlphaSchedule, mu_min: f64, eps: f64) -> Value {
    let bound = |r: monolab::Result<f64>| {
        r.map(num)
            .unwrap_or_else(|e| json!({ "error": e.to_string() }))
    };
    json!({
        "theta": num(s.theta()),
        "horizon": num(s.horizon()),
        "breaks": s.breaks().iter().copied().map(num).collect::<Vec<_>>(),
        "values": s.values().iter().copied().map(num).collect::<Vec<_>>(),
        "integral": num(s.integral()),
        "log_kappa": num(s.log_kappa()),
        "kappa": num(s.kappa()),
        "eps": eps,
        "t_bound": bound(s.t_bound(mu_min, eps)),
        "t_bound_order_of": bound(s.t_bound_order_of(mu_min, eps)),
    })
}

fn error(e: impl std::fmt::Display) -> Value {
    json!({ "error": e.to_string() })
}

/// Schedule, threshold and uniqueness values for the base model family,
/// computed from the parameter file regardless of transforms.
fn family_bounds(cfg: &Config, mu_min: f64, eps: f64) -> Result<Value> {
    let base = build_model(cfg.graph.clone(), &cfg.params)?;
    let delta = cfg.f64("delta")?;
    let g = &cfg.graph;
    Ok(match &base {
        Model::RandomCluster(m) => {
            let p_min = m.p().iter().copied().fold(f64::INFINITY, f64::min);
            let lambda_max = m.lambda().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            json!({
                "family": "random-cluster",
                "p_min": p_min,
                "lambda_max": lambda_max,
                "vertices": g.n(),
                "schedule": match rc_schedule(p_min, lambda_max, g.n()) {
                    Ok(s) => schedule_json(&s, mu_min, eps),
                    Err(e) => error(e),
                },
            })
        }
        Model::BipartiteHardcore(m) => {
            let left_degree = (0..m.left()).map(|v| g.degree(v)).max().unwrap_or(0) as u32;
            let threshold = lambda_c(left_degree).map(num).unwrap_or_else(error);
            let (schedule, uniqueness) = match delta {
                Some(d) => (
                    match bipartite_schedule(m.lambda(), left_degree, d, g.n()) {
                        Ok(s) => schedule_json(&s, mu_min, eps),
                        Err(e) => error(e),
                    },
                    match uniqueness_grid(m.lambda(), left_degree as f64 - 1.0, m.beta(), d) {
                        Ok(u) => serde_json::to_value(u)?,
                        Err(e) => error(e),
                    },
                ),
                None => (error("needs --delta"), error("needs --delta")),
            };
            json!({
                "family": "bipartite-hardcore",
                "lambda": m.lambda(),
                "beta": m.beta(),
                "left_max_degree": left_degree,
                "lambda_c": threshold,
                "schedule": schedule,
                "uniqueness": uniqueness,
            })
        }
        Model::Hardcore(m) => json!({
            "family": "hardcore",
            "lambda": m.lambda(),
            "max_degree": g.max_degree(),
            "lambda_c": lambda_c(g.max_degree() as u32).map(num).unwrap_or_else(error),
        }),
        other => json!({ "family": other.describe() }),
    })
}

pub fn run(cfg: &Config) -> Result<Outcome> {
    let started = std::time::Instant::now();
    let iterations = match cfg.u64("ei-iterations")? {
        Some(k) => k as usize,
        None => DEFAULT_EI_ITERATIONS,
    };
    let eps = cfg.f64("eps")?.unwrap_or(DEFAULT_EPS);
    let model = &cfg.model;
    let support = EnumeratedSupport::of(model)?;
    let mu = DistributionVector::of_model(model, &support)?;
    let mu_min = mu.min_positive();

    let report = independence_report(model, iterations, cfg.seed)?;
    let metrics = json!({
        "variables": model.num_vars(),
        "support_size": support.len(),
        "mu_min": mu_min,
        "independence": serde_json::to_value(&report)?,
        "bounds": family_bounds(cfg, mu_min, eps)?,
    });
    let record = crate::output::record(cfg, metrics, started.elapsed().as_secs_f64());
    let text = crate::output::pretty(&record);
    if let Some(out) = cfg.out_dir() {
        write_atomic(&out, "analyze.json", text.as_bytes())?;
    }
    print!("{text}");
    Ok(Outcome::Ok)
}
