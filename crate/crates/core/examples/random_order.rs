//! Random-order losses: the per-round variance rises as the pool empties,
//! while the variation stays small, and multi-pass reshuffles spike the
//! variation at each pass boundary.
//!
//! cargo run --release --example random_order

use sea_oco::config::{EnvKind, ExperimentConfig};
use sea_oco::environments::RandomOrder;
use sea_oco::harness::run_trial;

const CONFIG: &str = r#"
[env]
preset = "multipass_rom"
set = "ball"
radius = 1.0
mean = [0.5, 0.0]
spread = 1.0
pool_size = 200
pool_seed = 11
passes = 3

[learner]
preset = "oftrl"

[run]
horizons = [600]
seeds = 1
"#;

fn main() -> sea_oco::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let EnvKind::Rom { pool, .. } = &cfg.env.kind else { unreachable!() };
    let env = RandomOrder::single_pass(pool.generate(200)?, cfg.env.set.clone())?;
    println!("pool variance {:.4}, upper {:.4}", env.pool_variance(), env.pool_variance_upper());

    let trace = run_trial(&cfg, 600, 0)?;
    for r in trace.records.iter().filter(|r| r.t % 50 == 1 || r.t % 200 == 0) {
        println!("t={:>3}  sigma_t^2 {:.4}  Sigma_t^2 {:.2e}", r.t, r.sigma_sq, r.variation_sq);
    }
    Ok(())
}
