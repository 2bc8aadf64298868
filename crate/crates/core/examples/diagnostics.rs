//! Trace diagnostics: the variance proxy Var_T and the path length D_2 on
//! coordinate quadratics, where D_2 grows linearly but the SEA quantities
//! stay at T/d.
//!
//! cargo run --release --example diagnostics

use sea_oco::config::ExperimentConfig;
use sea_oco::harness::run_trial;
use sea_oco::metrics::diagnostics_var_d2;
use sea_oco::Point;

const CONFIG: &str = r#"
[env]
preset = "coord_quadratic"
dim = 4

[learner]
preset = "oftrl"

[run]
horizons = [1000]
seeds = 5
"#;

fn main() -> sea_oco::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    // every gradient vanishes at the center, so probe on the diagonal too
    let diagonal = Point::new(vec![0.5; 4])?;
    for &seed in &cfg.run.seeds {
        let trace = run_trial(&cfg, 1000, seed)?;
        let losses = trace.losses();
        let at_center = diagnostics_var_d2(&losses, None, &cfg.env.set)?;
        let at_diagonal = diagnostics_var_d2(&losses, Some(&diagonal), &cfg.env.set)?;
        let sea: f64 = trace.records.iter().map(|r| r.sigma_sq + r.variation_sq).sum();
        println!(
            "seed {seed}: D_2 {:>6.1}  Var_T center {:.1} diagonal {:>5.1} sup {:>5.1}  sigma^(2)+Sigma^(2) {sea:>6.1}",
            at_center.d2, at_center.var_t, at_diagonal.var_t, at_center.var_t_sup
        );
    }
    Ok(())
}
