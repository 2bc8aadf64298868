//! The sqrt(T) regret rate of OFTRL on i.i.d. linear losses, and its linear
//! dependence on the noise level.
//!
//! cargo run --release --example iid_rate

use sea_oco::config::ExperimentConfig;
use sea_oco::harness::run_experiment;

const CONFIG: &str = r#"
[env]
preset = "iid"
set = "box"
half_width = 0.7071067811865476
mean = [1.0, 0.0]
gradient_bound = 2.0

[learner]
preset = "oftrl"

[run]
horizons = [1000, 3000, 10000, 30000]
seeds = 20
"#;

fn main() -> sea_oco::Result<()> {
    for sigma in [0.25, 0.5, 1.0] {
        let cfg = ExperimentConfig::with_overrides(CONFIG, &[format!("env.sigma={sigma}")])?;
        let agg = run_experiment(&cfg)?.aggregate;
        let cells: Vec<String> = agg.horizons.iter().map(|h| format!("T={} {:.1}+-{:.1}", h.horizon, h.mean_regret, h.stderr)).collect();
        println!("sigma={sigma:<5} slope {:.3}  {}", agg.slope.unwrap_or(f64::NAN), cells.join("  "));
    }
    Ok(())
}
