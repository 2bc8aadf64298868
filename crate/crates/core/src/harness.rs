//! Seeded trials, multi-seed aggregation and rate fits.
//!
//! A trial is a pure function of `(config, horizon, seed)`: every random
//! draw comes from the stream of [`StreamKey::new`]`(master_seed, seed,
//! horizon)` for its round. Trials for one horizon are dispatched to the
//! rayon pool in chunks and reduced in seed order, so aggregates and output
//! files are byte-identical from run to run regardless of thread count.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, LearnerConfig, RegretKind};
use crate::environments::{EnvConstants, Sea};
use crate::error::{Error, Result};
use crate::learners::Learner;
use crate::metrics::{
    cum_aggregates, regret_curve, theorem1_bound, theorem3_bound, worst_case_bound, BoundConstants, CumAggregates,
    RoundRecord, Trace,
};
use crate::rng::StreamKey;

/// Everything a trial needs, validated before the first round.
pub struct TrialSetup {
    pub env: Box<dyn Sea>,
    pub learner: Box<dyn Learner>,
    pub constants: EnvConstants,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
}

/// Builds the environment and learner for one trial and checks that the
/// learner's assumptions hold (e.g. OFTL needs `mu > 0`).
pub fn prepare(cfg: &ExperimentConfig, horizon: usize) -> Result<TrialSetup> {
    let env = cfg.env.build(horizon)?;
    let constants = cfg.env.constants(env.as_ref())?;
    let learner = cfg.learner.build(env.set(), &constants)?;
    let nu = cfg.learner.resolved_nu(env.set(), &constants);
    let mu = cfg.learner.resolved_mu(&constants);
    Ok(TrialSetup { env, learner, constants, nu, mu })
}

fn trial_error(cfg: &ExperimentConfig, horizon: usize, seed: u64, e: Error) -> Error {
    Error::Trial {
        env: cfg.env.preset.clone(),
        learner: cfg.learner.name().to_string(),
        horizon,
        seed,
        source: Box::new(e),
    }
}

/// Plays one trial in protocol order: the learner commits to `x_t`, the
/// environment sees it and the history, draws `xi_t`, and only then is
/// `g_t` revealed to the learner.
pub fn run_trial(cfg: &ExperimentConfig, horizon: usize, seed: u64) -> Result<Trace> {
    let setup = prepare(cfg, horizon).map_err(|e| trial_error(cfg, horizon, seed, e))?;
    play(cfg, setup, horizon, seed).map(|(trace, _)| trace)
}

fn play(cfg: &ExperimentConfig, setup: TrialSetup, horizon: usize, seed: u64) -> Result<(Trace, TrialSetup)> {
    let TrialSetup { mut env, mut learner, constants, nu, mu } = setup;
    let key = StreamKey::new(cfg.run.master_seed, seed, horizon);
    let mut records: Vec<RoundRecord> = Vec::with_capacity(horizon);
    let g_max = constants.gradient_bound;
    let mut round = |t: usize, records: &mut Vec<RoundRecord>| -> Result<()> {
        let x = learner.predict()?;
        let outcome = env.step(t, &x, records, &mut key.round(t))?;
        let g = outcome.xi.grad(&x);
        debug_assert!(
            g.norm() <= g_max * (1.0 + 1e-9) + 1e-12,
            "gradient norm {} exceeds the bound {g_max} at round {t}",
            g.norm()
        );
        let eta = learner.eta();
        learner.observe(&g)?;
        records.push(RoundRecord::new(t, x, g, eta, &outcome));
        Ok(())
    };
    for t in 1..=horizon {
        round(t, &mut records).map_err(|e| trial_error(cfg, horizon, seed, e))?;
    }
    let trace = Trace {
        records,
        env: cfg.env.preset.clone(),
        learner: cfg.learner.name().to_string(),
        seed,
        horizon,
        convention: env.convention(),
        set: env.set().clone(),
    };
    Ok((trace, TrialSetup { env, learner, constants, nu, mu }))
}

/// Per-trial results; one CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed: u64,
    pub regret_final: f64,
    pub sigma_bar: f64,
    #[serde(rename = "Sigma_bar")]
    pub variation_bar: f64,
    pub bound_thm1: Option<f64>,
    pub bound_thm3: Option<f64>,
    pub eta_final: f64,
    #[serde(skip)]
    pub regret_linearized: f64,
    #[serde(skip)]
    pub regret_function_value: f64,
    #[serde(skip)]
    pub aggregates: CumAggregates,
}

fn bound_constants(cfg: &ExperimentConfig, setup_c: &EnvConstants, mu: Option<f64>) -> BoundConstants {
    BoundConstants {
        diameter: cfg.env.set.diameter(),
        gradient_bound: setup_c.gradient_bound,
        smoothness: setup_c.smoothness,
        strong_convexity: mu.unwrap_or(setup_c.strong_convexity),
    }
}

fn regret_kind(cfg: &ExperimentConfig) -> RegretKind {
    match (cfg.run.regret, &cfg.learner) {
        (RegretKind::Auto, LearnerConfig::Oftl { .. }) => RegretKind::FunctionValue,
        (RegretKind::Auto, _) => RegretKind::Linearized,
        (k, _) => k,
    }
}

fn summarize(cfg: &ExperimentConfig, trace: &Trace, setup: &TrialSetup) -> Result<TrialSummary> {
    let horizon = trace.horizon;
    if trace.is_empty() {
        return Ok(TrialSummary {
            horizon,
            seed: trace.seed,
            regret_final: 0.0,
            sigma_bar: 0.0,
            variation_bar: 0.0,
            bound_thm1: None,
            bound_thm3: None,
            eta_final: 0.0,
            regret_linearized: 0.0,
            regret_function_value: 0.0,
            aggregates: CumAggregates::default(),
        });
    }
    let curves = regret_curve(trace, &trace.set)?;
    let agg = cum_aggregates(trace)?;
    let bc = bound_constants(cfg, &setup.constants, setup.mu);
    let (lin, val) = (curves.final_linearized(), curves.final_function_value());
    let regret_final = match regret_kind(cfg) {
        RegretKind::FunctionValue => val,
        _ => lin,
    };
    Ok(TrialSummary {
        horizon,
        seed: trace.seed,
        regret_final,
        sigma_bar: agg.sigma_bar,
        variation_bar: agg.variation_bar,
        bound_thm1: setup.nu.map(|nu| theorem1_bound(&bc, nu, agg.sigma_bar, agg.variation_bar, horizon)),
        bound_thm3: (bc.strong_convexity > 0.0)
            .then(|| theorem3_bound(&bc, agg.sigma_max, agg.variation_max, horizon, cfg.run.bound_mode)),
        eta_final: trace.records.last().map_or(0.0, |r| r.eta),
        regret_linearized: lin,
        regret_function_value: val,
        aggregates: agg,
    })
}

/// Runs and summarizes one trial, also returning its per-round `sigma_t^2`
/// and `Sigma_t^2`.
pub fn run_summarized(cfg: &ExperimentConfig, horizon: usize, seed: u64) -> Result<(TrialSummary, Vec<f64>, Vec<f64>)> {
    let setup = prepare(cfg, horizon).map_err(|e| trial_error(cfg, horizon, seed, e))?;
    let (trace, setup) = play(cfg, setup, horizon, seed)?;
    let summary = summarize(cfg, &trace, &setup).map_err(|e| trial_error(cfg, horizon, seed, e))?;
    let sig = trace.records.iter().map(|r| r.sigma_sq).collect();
    let var = trace.records.iter().map(|r| r.variation_sq).collect();
    Ok((summary, sig, var))
}

/// Seed-averaged results at one horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonAggregate {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seeds: usize,
    pub mean_regret: f64,
    pub stderr: f64,
    pub max_regret: f64,
    pub mean_regret_linearized: f64,
    pub mean_regret_function_value: f64,
    /// `sqrt(E[sum_t sigma_t^2] / T)`
    pub sigma_bar: f64,
    #[serde(rename = "Sigma_bar")]
    pub variation_bar: f64,
    /// `sqrt(max_t E[sigma_t^2])`
    pub sigma_max: f64,
    #[serde(rename = "Sigma_max")]
    pub variation_max: f64,
    pub sigma_sq_cum: f64,
    #[serde(rename = "Sigma_sq_cum")]
    pub variation_sq_cum: f64,
    pub mean_eta_final: f64,
    pub bound_thm1: Option<f64>,
    pub bound_thm3: Option<f64>,
    pub bound_worst_case: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub label: String,
    pub regret_kind: RegretKind,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub constants: Option<BoundConstants>,
    pub horizons: Vec<HorizonAggregate>,
    /// Log-log slope of mean regret over the largest horizons.
    pub slope: Option<f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Aggregate {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn at(&self, horizon: usize) -> Option<&HorizonAggregate> {
        self.horizons.iter().find(|h| h.horizon == horizon)
    }
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub aggregate: Aggregate,
    /// Ordered by horizon, then by position in the seed list.
    pub trials: Vec<TrialSummary>,
}

/// Sample mean and standard error (`n - 1` denominator; 0 for one value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Least-squares slope of `log(values)` against `log(ts)`.
pub fn fit_loglog_slope(ts: &[f64], values: &[f64]) -> Result<f64> {
    if ts.len() != values.len() {
        return Err(Error::contract(format!("{} horizons but {} values", ts.len(), values.len())));
    }
    if ts.len() < 3 {
        return Err(Error::contract("slope fit needs at least 3 points"));
    }
    if let Some(v) = ts.iter().chain(values).find(|v| v.is_nan() || **v <= 0.0) {
        return Err(Error::Domain(format!("log-log fit of nonpositive value {v}")));
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("slope fit needs distinct horizons".into()));
    }
    Ok(sxy / sxx)
}

/// Runs every `(horizon, seed)` pair and aggregates per horizon.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    if cfg.run.seeds.is_empty() {
        return Err(Error::config("an experiment needs at least one seed"));
    }
    let chunk = (rayon::current_num_threads() * 2).max(1);
    let mut trials = Vec::new();
    let mut horizons = Vec::new();
    let mut warnings = Vec::new();
    let mut checks = Vec::new();
    let mut meta = None;
    if cfg.run.seeds.len() == 1 {
        warnings.push("single seed: standard errors reported as 0".to_string());
    }
    for &horizon in &cfg.run.horizons {
        let setup = prepare(cfg, horizon).map_err(|e| trial_error(cfg, horizon, cfg.run.seeds[0], e))?;
        let bc = bound_constants(cfg, &setup.constants, setup.mu);
        meta.get_or_insert((setup.nu, setup.mu, bc));
        let mut sig_sum = vec![0.0; horizon];
        let mut var_sum = vec![0.0; horizon];
        let mut rows = Vec::with_capacity(cfg.run.seeds.len());
        for seeds in cfg.run.seeds.chunks(chunk) {
            let results: Vec<_> = seeds.par_iter().map(|&s| run_summarized(cfg, horizon, s)).collect();
            for r in results {
                let (summary, sig, var) = r?;
                for (acc, v) in sig_sum.iter_mut().zip(&sig) {
                    *acc += v;
                }
                for (acc, v) in var_sum.iter_mut().zip(&var) {
                    *acc += v;
                }
                rows.push(summary);
            }
        }
        let n = rows.len() as f64;
        let regrets: Vec<f64> = rows.iter().map(|r| r.regret_final).collect();
        let (mean_regret, stderr) = mean_stderr(&regrets);
        let t = horizon.max(1) as f64;
        let sigma_sq_cum = sig_sum.iter().sum::<f64>() / n;
        let variation_sq_cum = var_sum.iter().sum::<f64>() / n;
        let sigma_bar = (sigma_sq_cum / t).sqrt();
        let variation_bar = (variation_sq_cum / t).sqrt();
        let sigma_max = (sig_sum.iter().fold(0.0f64, |m, v| m.max(*v)) / n).sqrt();
        let variation_max = (var_sum.iter().fold(0.0f64, |m, v| m.max(*v)) / n).sqrt();
        let bound_thm1 = (horizon > 0).then_some(()).and(setup.nu).map(|nu| theorem1_bound(&bc, nu, sigma_bar, variation_bar, horizon));
        let bound_thm3 = (horizon > 0 && bc.strong_convexity > 0.0)
            .then(|| theorem3_bound(&bc, sigma_max, variation_max, horizon, cfg.run.bound_mode));
        let worst_case = matches!(cfg.learner, LearnerConfig::Oftrl { nu: None, worst_case: true, .. });
        let bound_worst_case = worst_case.then(|| worst_case_bound(bc.diameter, bc.gradient_bound, horizon));

        match &cfg.learner {
            LearnerConfig::Oftrl { .. } => {
                if let Some(b) = bound_thm1 {
                    checks.push(Check { name: "thm1_dominance".into(), horizon: Some(horizon), value: mean_regret, threshold: b, passed: mean_regret <= b });
                }
                if let Some(b) = bound_worst_case {
                    let worst = rows.iter().map(|r| r.regret_linearized).fold(f64::NEG_INFINITY, f64::max);
                    checks.push(Check { name: "worst_case_every_run".into(), horizon: Some(horizon), value: worst, threshold: b, passed: worst <= b });
                }
            }
            LearnerConfig::Oftl { .. } => {
                if let Some(b) = bound_thm3 {
                    checks.push(Check { name: "thm3_dominance".into(), horizon: Some(horizon), value: mean_regret, threshold: b, passed: mean_regret <= b });
                }
            }
            LearnerConfig::Ogd { .. } => {}
        }

        horizons.push(HorizonAggregate {
            horizon,
            seeds: rows.len(),
            mean_regret,
            stderr,
            max_regret: regrets.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_regret_linearized: rows.iter().map(|r| r.regret_linearized).sum::<f64>() / n,
            mean_regret_function_value: rows.iter().map(|r| r.regret_function_value).sum::<f64>() / n,
            sigma_bar,
            variation_bar,
            sigma_max,
            variation_max,
            sigma_sq_cum,
            variation_sq_cum,
            mean_eta_final: rows.iter().map(|r| r.eta_final).sum::<f64>() / n,
            bound_thm1,
            bound_thm3,
            bound_worst_case,
        });
        trials.extend(rows);
    }

    let slope = if horizons.len() >= 3 {
        let tail = &horizons[horizons.len().saturating_sub(cfg.run.slope_points.max(3))..];
        let ts: Vec<f64> = tail.iter().map(|h| h.horizon as f64).collect();
        let vs: Vec<f64> = tail.iter().map(|h| h.mean_regret).collect();
        match fit_loglog_slope(&ts, &vs) {
            Ok(s) => Some(s),
            Err(e) => {
                warnings.push(format!("slope not fitted: {e}"));
                None
            }
        }
    } else {
        None
    };
    let (nu, mu, constants) = match meta {
        Some((nu, mu, bc)) => (nu, mu, Some(bc)),
        None => (None, None, None),
    };
    Ok(Experiment {
        aggregate: Aggregate {
            label: cfg.label(),
            regret_kind: regret_kind(cfg),
            nu,
            mu,
            constants,
            horizons,
            slope,
            checks,
            warnings,
        },
        trials,
    })
}

#[derive(Serialize)]
struct Summary<'a> {
    config: serde_json::Value,
    #[serde(flatten)]
    aggregate: &'a Aggregate,
}

/// Writes `{label}.csv` (one row per trial) and `{label}_summary.json` into
/// `dir`, returning both paths.
pub fn write_outputs(cfg: &ExperimentConfig, exp: &Experiment, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    write_outputs_as(cfg, exp, dir, &cfg.label())
}

/// [`write_outputs`] under an explicit file label.
pub fn write_outputs_as(cfg: &ExperimentConfig, exp: &Experiment, dir: &Path, label: &str) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{label}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    for row in &exp.trials {
        w.serialize(row)?;
    }
    w.flush()?;
    let json_path = dir.join(format!("{label}_summary.json"));
    let summary = Summary { config: serde_json::to_value(&cfg.source)?, aggregate: &exp.aggregate };
    fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok((csv_path, json_path))
}
