//! Adversarial corruptions on top of i.i.d. losses: extra regret grows with
//! the corruption budget C, roughly like sqrt(C).
//!
//! cargo run --release --example corruption

use sea_oco::config::ExperimentConfig;
use sea_oco::harness::run_experiment;

const CONFIG: &str = r#"
[env]
preset = "corrupted"
set = "box"
half_width = 0.7071067811865476
mean = [1.0, 0.0]
sigma = 1.0
level = 1.0
direction = [0.0, 1.0]
gradient_bound = 3.0

[learner]
preset = "oftrl"

[run]
horizons = [10000]
seeds = 20
"#;

fn main() -> sea_oco::Result<()> {
    let mut clean = None;
    for budget in [0, 25, 100, 400, 1600] {
        let cfg = ExperimentConfig::with_overrides(CONFIG, &[format!("env.budget={budget}")])?;
        let h = run_experiment(&cfg)?.aggregate.horizons[0].clone();
        let base = *clean.get_or_insert(h.mean_regret);
        println!(
            "C={budget:>5}  regret {:>7.2}+-{:.2}  excess {:>6.2}  Sigma_bar {:.3}",
            h.mean_regret,
            h.stderr,
            h.mean_regret - base,
            h.variation_bar
        );
    }
    Ok(())
}
