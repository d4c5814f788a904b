use anyhow::{anyhow, bail, Result};
use monolab::exact::{fd_kernel, glauber_kernel, Kernel, LiftedSystem};
use serde_json::json;

use crate::config::Config;
use crate::output::{comment_header, write_atomic};
use crate::Outcome;

fn build(cfg: &Config, name: &str) -> Result<Kernel> {
    let theta = || cfg.require_f64("theta");
    Ok(match name {
        "glauber" => glauber_kernel(&cfg.model)?,
        "field" => fd_kernel(&cfg.model, theta()?)?,
        "pi-glauber" => LiftedSystem::new(&cfg.model, theta()?)?.pi_gd_kernel()?,
        "relift" => LiftedSystem::new(&cfg.model, theta()?)?.pcl_kernel()?,
        "star-frozen" => LiftedSystem::new(&cfg.model, theta()?)?.sgd_kernel()?,
        k => bail!("kernel: expected glauber, field, pi-glauber, relift or star-frozen, got {k:?}"),
    })
}

pub fn run(cfg: &Config) -> Result<Outcome> {
    let started = std::time::Instant::now();
    let name = cfg.get("kernel").unwrap_or("glauber");
    let kernel = build(cfg, name)?;
    let header = comment_header(cfg);

    let mut matrix = header.clone().into_bytes();
    kernel.write_csv(&mut matrix)?;
    let stationary = kernel
        .stationary()
        .ok_or_else(|| anyhow!("kernel {name} has no stationary law"))?;
    let mut law = header.into_bytes();
    stationary.write_csv(&mut law)?;

    match cfg.out_dir() {
        Some(out) => {
            write_atomic(&out, "kernel.csv", &matrix)?;
            write_atomic(&out, "stationary.csv", &law)?;
            let metrics = json!({ "kernel": name, "states": kernel.size() });
            let record = crate::output::record(cfg, metrics, started.elapsed().as_secs_f64());
            print!("{}", crate::output::pretty(&record));
        }
        None => print!("{}", String::from_utf8(matrix)?),
    }
    Ok(Outcome::Ok)
}
