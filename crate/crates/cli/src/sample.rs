use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use monolab::dynamics::{
    censored_glauber, field_dynamics_run, glauber_run, simulate_algorithm, ChainRun, InnerSampler,
    Schedule,
};
use monolab::order::{parse_state, state_string};
use serde_json::{json, Value};

use crate::config::{record_times, Config};
use crate::output::{comment_header, float, write_atomic};
use crate::Outcome;

fn inner_sampler(spec: Option<&str>) -> Result<InnerSampler> {
    match spec {
        None | Some("exact") => Ok(InnerSampler::Exact),
        Some(s) => match s.strip_prefix("glauber:") {
            Some(t) => Ok(InnerSampler::Glauber(
                t.parse()
                    .with_context(|| format!("inner: bad step count {t:?}"))?,
            )),
            None => bail!("inner: expected exact or glauber:T, got {s:?}"),
        },
    }
}

fn schedule(cfg: &Config) -> Result<Schedule> {
    let spec = cfg
        .get("schedule")
        .ok_or_else(|| anyhow!("censored dynamics needs --schedule"))?;
    match spec {
        "all" => Ok(Schedule::All),
        "never" => Ok(Schedule::Never),
        s => {
            if let Some(bits) = s.strip_prefix("fixed:") {
                let x = parse_state(bits)?;
                return Ok(Schedule::Fixed(x.into_iter().map(|b| b == 1).collect()));
            }
            if let Some(inner) = s.strip_prefix("bipartite:") {
                let left = cfg
                    .graph
                    .left_size()
                    .ok_or_else(|| anyhow!("bipartite schedule needs a bipartite graph file"))?;
                let inner = inner
                    .parse()
                    .with_context(|| format!("schedule: bad phase length {inner:?}"))?;
                return Ok(Schedule::TwoLevelBipartite {
                    left,
                    inner,
                    seed: cfg.seed,
                });
            }
            bail!("schedule: expected all, never, fixed:BITS or bipartite:INNER, got {s:?}")
        }
    }
}

fn reject(cfg: &Config, dynamics: &str, keys: &[&str]) -> Result<()> {
    for k in keys {
        if cfg.get(k).is_some() {
            bail!("{k} does not apply to {dynamics} dynamics");
        }
    }
    Ok(())
}

pub fn run(cfg: &Config) -> Result<Outcome> {
    let out = cfg.out_dir().ok_or_else(|| anyhow!("sample needs --out"))?;
    let dynamics = cfg.get("dynamics").unwrap_or("glauber");
    let model = &cfg.model;
    let mut extra = json!({});
    let started = std::time::Instant::now();
    let run: ChainRun = match dynamics {
        "glauber" => {
            reject(cfg, dynamics, &["theta", "inner", "t1", "t2", "schedule"])?;
            let steps = cfg.require_u64("steps")?;
            let times = record_times(cfg.get("record"), steps)?;
            glauber_run(model, &cfg.start_state()?, steps, cfg.seed, &times)?
        }
        "field" => {
            reject(cfg, dynamics, &["t1", "t2", "schedule"])?;
            let steps = cfg.require_u64("steps")?;
            let times = record_times(cfg.get("record"), steps)?;
            let theta = cfg.require_f64("theta")?;
            let inner = inner_sampler(cfg.get("inner"))?;
            extra = json!({ "theta": theta, "inner": format!("{inner:?}") });
            field_dynamics_run(
                model,
                theta,
                &cfg.start_state()?,
                steps,
                cfg.seed,
                &times,
                inner,
            )?
        }
        "algorithm" => {
            reject(cfg, dynamics, &["steps", "start", "inner", "schedule"])?;
            let theta = cfg.require_f64("theta")?;
            let t1 = cfg.require_u64("t1")?;
            let t2 = cfg.require_u64("t2")?;
            let times = record_times(cfg.get("record"), t1.saturating_mul(t2))?;
            let a = simulate_algorithm(model, theta, t1, t2, cfg.seed, &times)?;
            extra =
                json!({ "theta": theta, "t1": t1, "t2": t2, "output": state_string(&a.output) });
            a.run
        }
        "censored" => {
            reject(cfg, dynamics, &["theta", "inner", "t1", "t2"])?;
            let steps = cfg.require_u64("steps")?;
            let times = record_times(cfg.get("record"), steps)?;
            let s = schedule(cfg)?;
            extra = json!({ "schedule": cfg.get("schedule") });
            censored_glauber(model, &cfg.start_state()?, &s, steps, cfg.seed, &times)?
        }
        d => bail!("dynamics: expected glauber, field, algorithm or censored, got {d:?}"),
    };

    let header = comment_header(cfg);
    let mut traj = header.clone();
    traj.push_str("t\tstate\n");
    traj.push_str(&run.trajectory_dump());

    let occupancy = run.occupancy();
    let mut occ = header;
    occ.push_str("state,count,frequency\n");
    for (state, count) in &occupancy {
        let _ = writeln!(
            occ,
            "{},{count},{}",
            state_string(state),
            float(*count as f64 / run.steps as f64)
        );
    }

    let mut metrics = json!({
        "dynamics": dynamics,
        "steps": run.steps,
        "start": state_string(&run.initial),
        "final_state": state_string(&run.last),
        "distinct_states": occupancy.len(),
        "records": run.records.len(),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut metrics, extra) {
        m.extend(e);
    }
    let record = crate::output::record(cfg, metrics, started.elapsed().as_secs_f64());

    write_atomic(&out, "trajectory.tsv", traj.as_bytes())?;
    write_atomic(&out, "occupancy.csv", occ.as_bytes())?;
    write_atomic(
        &out,
        "result.json",
        crate::output::pretty(&record).as_bytes(),
    )?;
    print!("{}", crate::output::pretty(&record));
    Ok(Outcome::Ok)
}
