use anyhow::{bail, Result};
use monolab::exact::suite::{self, CheckResult};
use monolab::exact::{check_monotone_system, LiftedSystem};
use monolab::models::Model;
use serde_json::{json, Value};

use crate::config::{split_list, Config};
use crate::output::{num, write_atomic};
use crate::Outcome;

/// The suite run when no --check is given. `counterexample` is opt-in.
pub const DEFAULT_CHECKS: &[&str] = &[
    "monotone-system",
    "detailed-balance",
    "lift-identity",
    "relift-stationarity",
    "stochastic-monotonicity",
    "dominance",
    "tv-comparison",
    "single-vertex",
];

const ALL_CHECKS: &[&str] = &[
    "monotone-system",
    "detailed-balance",
    "lift-identity",
    "relift-stationarity",
    "stochastic-monotonicity",
    "dominance",
    "tv-comparison",
    "single-vertex",
    "counterexample",
];

/// Checks whose chains start from the all-ones state.
const STARTS_AT_ONES: &[&str] = &[
    "lift-identity",
    "relift-stationarity",
    "dominance",
    "tv-comparison",
];

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Expect {
    Holds,
    Fails,
    /// No prediction; the result is reported but never fails the run.
    Unknown,
}

/// Whether the model is known to be a monotone system: Some(true) for the
/// families that are, Some(false) for hardcore on a graph with an edge.
pub fn expected_monotone(model: &Model) -> Option<bool> {
    match model {
        Model::Ising(_)
        | Model::RandomCluster(_)
        | Model::BipartiteHardcore(_)
        | Model::LeftMarginal(_)
        | Model::Product(_) => Some(true),
        Model::Hardcore(m) => Some(m.graph().m() == 0),
        Model::SubgraphWorld(_) | Model::Table(_) => None,
        Model::Tilted { base, .. }
        | Model::Flipped(base)
        | Model::Pinned { base, .. }
        | Model::Lifted { base, .. } => expected_monotone(base),
    }
}

fn expectation(check: &str, monotone: Option<bool>) -> Expect {
    match check {
        "monotone-system" => match monotone {
            Some(true) => Expect::Holds,
            Some(false) => Expect::Fails,
            None => Expect::Unknown,
        },
        "detailed-balance" | "lift-identity" | "relift-stationarity" => Expect::Holds,
        // A violation is what the check looks for.
        "counterexample" => Expect::Fails,
        _ => match monotone {
            Some(true) => Expect::Holds,
            _ => Expect::Unknown,
        },
    }
}

fn status(expect: Expect, holds: bool) -> &'static str {
    match (expect, holds) {
        (Expect::Holds, true) => "pass",
        (Expect::Fails, false) => "expected-negative pass",
        (Expect::Unknown, _) => "reported",
        _ => "fail",
    }
}

fn selected(cfg: &Config) -> Result<Vec<&'static str>> {
    let Some(list) = cfg.get("check") else {
        return Ok(DEFAULT_CHECKS.to_vec());
    };
    let mut out = Vec::new();
    for name in split_list(list) {
        if name == "all" {
            out = ALL_CHECKS.to_vec();
            continue;
        }
        match ALL_CHECKS.iter().find(|&&c| c == name) {
            Some(c) if !out.contains(c) => out.push(*c),
            Some(_) => {}
            None => bail!("unknown check {name:?}; known: {}", ALL_CHECKS.join(", ")),
        }
    }
    Ok(out)
}

fn monotone_system(model: &Model) -> Result<CheckResult> {
    let r = check_monotone_system(model)?;
    let detail = match &r.witness {
        Some(w) => format!("{w:?}"),
        None => "every site conditional is increasing".into(),
    };
    Ok(CheckResult {
        name: "monotone-system",
        holds: r.holds,
        value: if r.holds { 0.0 } else { 1.0 },
        detail,
    })
}

pub fn run(cfg: &Config) -> Result<Outcome> {
    let started = std::time::Instant::now();
    let checks = selected(cfg)?;
    let needs_lift = checks.iter().any(|&c| c != "monotone-system");
    let needs_times = checks
        .iter()
        .any(|&c| matches!(c, "dominance" | "tv-comparison"));
    let horizon = cfg.u64("horizon")?.unwrap_or(20) as usize;
    let system = if needs_lift {
        Some(LiftedSystem::new(&cfg.model, cfg.require_f64("theta")?)?)
    } else {
        None
    };
    let (t1, t2) = if needs_times {
        (
            cfg.require_u64("t1")? as usize,
            cfg.require_u64("t2")? as usize,
        )
    } else {
        (0, 0)
    };

    let monotone = expected_monotone(&cfg.model);
    let mut rows = Vec::new();
    let mut all_ok = true;
    let ones_feasible = system.as_ref().is_none_or(|s| {
        s.base_support()
            .index_of(&vec![1u8; s.base().num_vars()])
            .is_some()
    });
    for name in checks {
        if !ones_feasible && STARTS_AT_ONES.contains(&name) {
            rows.push(json!({
                "name": name,
                "status": "skipped",
                "detail": "the all-ones state has zero weight",
            }));
            continue;
        }
        let r = match (name, system.as_ref()) {
            ("monotone-system", _) => monotone_system(&cfg.model)?,
            ("detailed-balance", Some(s)) => suite::detailed_balance(s)?,
            ("lift-identity", Some(s)) => suite::lift_identity(s, horizon)?,
            ("relift-stationarity", Some(s)) => suite::relift_stationarity(s, horizon)?,
            ("stochastic-monotonicity", Some(s)) => suite::kernel_monotonicity(s)?,
            ("dominance", Some(s)) => suite::dominance(s, t1, t2)?,
            ("tv-comparison", Some(s)) => suite::tv_comparison(s, t1, t2)?,
            ("single-vertex", Some(s)) => suite::single_vertex(s)?,
            ("counterexample", Some(s)) => suite::counterexample(s)?,
            _ => unreachable!("lifted system is built whenever a check needs it"),
        };
        let expect = expectation(name, monotone);
        let st = status(expect, r.holds);
        all_ok &= st != "fail";
        rows.push(json!({
            "name": r.name,
            "holds": r.holds,
            "expected": format!("{expect:?}").to_lowercase(),
            "status": st,
            "value": num(r.value),
            "detail": r.detail,
        }));
    }

    let metrics = json!({
        "theta": system.as_ref().map(|s| s.theta()),
        "t1": t1,
        "t2": t2,
        "horizon": horizon,
        "all_as_expected": all_ok,
        "checks": Value::Array(rows),
    });
    let record = crate::output::record(cfg, metrics, started.elapsed().as_secs_f64());
    let text = crate::output::pretty(&record);
    if let Some(out) = cfg.out_dir() {
        write_atomic(&out, "verify.json", text.as_bytes())?;
    }
    print!("{text}");
    Ok(if all_ok {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    })
}
