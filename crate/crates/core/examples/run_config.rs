//! Runs any experiment config and writes its CSV and JSON summary, like
//! `sea-oco run` but from library code.
//!
//! cargo run --release --example run_config -- path/to/exp.toml [out_dir]

use std::path::PathBuf;

use sea_oco::config::ExperimentConfig;
use sea_oco::harness::{run_experiment, write_outputs};
use sea_oco::verify::IID_LINEAR;

fn main() -> sea_oco::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::load(path.as_ref(), &[])?,
        None => ExperimentConfig::from_toml(IID_LINEAR)?,
    };
    let out: PathBuf = args.next().unwrap_or_else(|| "results".into()).into();
    let exp = run_experiment(&cfg)?;
    for c in &exp.aggregate.checks {
        println!("{} T={:?}: {:.3} vs {:.3} -> {}", c.name, c.horizon, c.value, c.threshold, c.passed);
    }
    let (csv, json) = write_outputs(&cfg, &exp, &out)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}
