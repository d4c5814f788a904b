use std::fmt::Write as _;

use anyhow::{bail, Result};
use monolab::exact::{
    comparison_bound, glauber_kernel_on, mixing_time, DistributionVector, EnumeratedSupport,
    FdStart, DEFAULT_STEP_CAP,
};
use monolab::order::state_string;
use serde_json::json;

use crate::config::Config;
use crate::output::{comment_header, float, write_atomic};
use crate::Outcome;

const COLUMNS: &str =
    "start,eps,theta,fd_start,glauber,glauber_from_ones,field,delta,tilted,product,holds";

pub fn run(cfg: &Config) -> Result<Outcome> {
    let started = std::time::Instant::now();
    let eps = cfg.require_f64("eps")?;
    let theta = cfg.require_f64("theta")?;
    let cap = cfg.u64("cap")?.unwrap_or(DEFAULT_STEP_CAP);
    let fd_start = match cfg.get("fd-start").unwrap_or("arbitrary") {
        "arbitrary" => FdStart::Arbitrary,
        "ones" => FdStart::AllOnes,
        s => bail!("fd-start: expected arbitrary or ones, got {s:?}"),
    };
    let model = &cfg.model;
    let start = cfg.start_state()?;

    let b = comparison_bound(model, theta, eps, fd_start, cap)?;
    let glauber = if start.iter().all(|&x| x == 1) {
        b.glauber_from_ones
    } else {
        let support = EnumeratedSupport::of(model)?;
        let k = glauber_kernel_on(model, &support)?;
        mixing_time(
            &k,
            &DistributionVector::point_mass(&support, &start)?,
            eps,
            cap,
        )?
    };
    let fd_label = match fd_start {
        FdStart::Arbitrary => "arbitrary",
        FdStart::AllOnes => "ones",
    };

    let mut csv = comment_header(cfg);
    csv.push_str(COLUMNS);
    csv.push('\n');
    let _ = writeln!(
        csv,
        "{},{},{},{fd_label},{glauber},{},{},{},{},{},{}",
        state_string(&start),
        float(eps),
        float(theta),
        b.glauber_from_ones,
        b.field,
        float(b.delta),
        b.tilted,
        b.product,
        b.holds
    );

    let metrics = json!({
        "start": state_string(&start),
        "glauber": glauber,
        "comparison": b,
        "cap": cap,
    });
    let record = crate::output::record(cfg, metrics, started.elapsed().as_secs_f64());
    match cfg.out_dir() {
        Some(out) => {
            write_atomic(&out, "mixing.csv", csv.as_bytes())?;
            write_atomic(
                &out,
                "result.json",
                crate::output::pretty(&record).as_bytes(),
            )?;
            print!("{}", crate::output::pretty(&record));
        }
        None => print!("{csv}"),
    }
    Ok(if b.holds {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    })
}
