//! The Rademacher adversary on [a, b]: even rounds are free, odd rounds carry
//! a random-sign gradient, and no learner escapes sqrt(T) regret.
//!
//! cargo run --release --example lower_bound

use sea_oco::config::ExperimentConfig;
use sea_oco::harness::run_experiment;

const CONFIG: &str = r#"
[env]
preset = "lb_rademacher"
a = 1.0
b = 2.0
scale = 1.0

[learner]
preset = "oftrl"

[run]
horizons = [1000, 10000, 100000]
seeds = 50
"#;

fn main() -> sea_oco::Result<()> {
    for learner in ["oftrl", "ogd"] {
        let cfg = ExperimentConfig::with_overrides(CONFIG, &[format!("learner.preset=\"{learner}\"")])?;
        let agg = run_experiment(&cfg)?.aggregate;
        println!("{learner}: slope {:.3}", agg.slope.unwrap_or(f64::NAN));
        for h in &agg.horizons {
            let scaled = h.mean_regret / (h.horizon as f64).sqrt();
            println!("  T={:>6}  regret {:>7.2}+-{:.2}  regret/sqrt(T) {scaled:.4}", h.horizon, h.mean_regret, h.stderr);
        }
    }
    Ok(())
}
