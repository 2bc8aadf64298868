//! Non-stationary stochastic losses: a slowly rotating mean and a mean that
//! switches a few times. Both keep the cumulative variation small.
//!
//! Regret is measured against the best fixed point, so a learner that
//! tracks a moving optimum can end with negative regret.
//!
//! cargo run --release --example drift

use sea_oco::config::ExperimentConfig;
use sea_oco::harness::run_experiment;

const SHIFT: &str = r#"
[env]
preset = "shift"
set = "ball"
radius = 1.0
mean = [1.0, 0.0]
sigma = 0.5

[learner]
preset = "oftrl"

[run]
horizons = [1000, 10000]
seeds = 20
"#;

const SWITCH: &str = r#"
[env]
preset = "switch"
set = "ball"
radius = 1.0
means = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
switches = [250, 500, 750]
sigma = 0.5

[learner]
preset = "oftrl"

[run]
horizons = [1000]
seeds = 20
"#;

fn main() -> sea_oco::Result<()> {
    for eps in [1e-6, 1e-4, 1e-2] {
        let cfg = ExperimentConfig::with_overrides(SHIFT, &[format!("env.epsilon={eps}")])?;
        let agg = run_experiment(&cfg)?.aggregate;
        for h in &agg.horizons {
            println!(
                "shift eps={eps:e} T={:>5}: regret {:>6.2}  Sigma_bar {:.4}  bound {:.1}",
                h.horizon,
                h.mean_regret,
                h.variation_bar,
                h.bound_thm1.unwrap_or(f64::NAN)
            );
        }
    }
    let h = run_experiment(&ExperimentConfig::from_toml(SWITCH)?)?.aggregate.horizons[0].clone();
    println!("switch x3 T=1000: regret {:.2}  Sigma^(2) {:.2}", h.mean_regret, h.variation_sq_cum);
    Ok(())
}
