//! Command-line front end for the `sea-oco` binary.
//!
//! ```text
//! sea-oco run    --config PATH [--out DIR] [--worst-case] [--set key=value]...
//! sea-oco sweep  --config PATH [--out DIR] [--worst-case] [--set key=value]...
//! sea-oco verify [--out DIR] [--criterion N]...
//! ```
//!
//! `SEA_OCO_SEED` replaces the master seed. Exit codes: 0 on success, 1 when
//! a trial fails or a check does not hold, 2 for usage and configuration
//! errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::harness::{run_experiment, write_outputs, Experiment};
use crate::verify::{self, Context};

/// Environment variable that overrides the master seed.
pub const SEED_VAR: &str = "SEA_OCO_SEED";
const DEFAULT_OUT: &str = "results";

#[derive(Debug, Parser)]
#[command(name = "sea-oco", version, about = "Optimistic online convex optimization under stochastically extended adversaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment over the configured horizons and seeds.
    Run(RunArgs),
    /// Run over the geometric horizon grid `sweep_min..=sweep_max`.
    Sweep(RunArgs),
    /// Run the built-in acceptance criteria.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (defaults to `run.out`, then `results`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the worst-case OFTRL parameter.
    #[arg(long)]
    pub worst_case: bool,
    /// Override a config key, e.g. `--set env.sigma=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Also write every experiment's CSV and summary here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run only these criteria (1-10).
    #[arg(long = "criterion", value_name = "N")]
    pub criteria: Vec<usize>,
}

/// Whether an error is the caller's fault (exit 2) rather than a failed run.
fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::UnknownKey(_) | Error::Read { .. } | Error::Parse(_))
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("{SEED_VAR} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut overrides = args.overrides.clone();
    if args.worst_case {
        overrides.push("learner.worst_case=true".into());
    }
    if let Some(seed) = seed_override()? {
        overrides.push(format!("run.master_seed={seed}"));
    }
    ExperimentConfig::load(&args.config, &overrides)
}

fn report(out: &mut impl Write, exp: &Experiment) -> std::io::Result<()> {
    let agg = &exp.aggregate;
    writeln!(out, "{} ({:?} regret)", agg.label, agg.regret_kind)?;
    writeln!(out, "{:>10} {:>6} {:>14} {:>10} {:>10} {:>10} {:>14}", "T", "seeds", "mean regret", "stderr", "sigma_bar", "Sigma_bar", "bound")?;
    for h in &agg.horizons {
        let bound = h.bound_thm1.or(h.bound_thm3).or(h.bound_worst_case).unwrap_or(f64::NAN);
        writeln!(
            out,
            "{:>10} {:>6} {:>14.4} {:>10.4} {:>10.4} {:>10.4} {:>14.4}",
            h.horizon, h.seeds, h.mean_regret, h.stderr, h.sigma_bar, h.variation_bar, bound
        )?;
    }
    if let Some(s) = agg.slope {
        writeln!(out, "log-log slope: {s:.4}")?;
    }
    let failed = agg.checks.iter().filter(|c| !c.passed).count();
    if !agg.checks.is_empty() {
        writeln!(out, "checks: {}/{} passed", agg.checks.len() - failed, agg.checks.len())?;
    }
    for c in agg.checks.iter().filter(|c| !c.passed) {
        writeln!(out, "  FAILED {} at T={:?}: {} > {}", c.name, c.horizon, c.value, c.threshold)?;
    }
    for w in &agg.warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}

fn run(args: &RunArgs, sweep: bool) -> Result<bool> {
    let mut cfg = load(args)?;
    if sweep {
        cfg.run.expand_sweep()?;
    }
    let exp = run_experiment(&cfg)?;
    let dir = args.out.clone().or_else(|| cfg.run.out.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
    let (csv, json) = write_outputs(&cfg, &exp, &dir)?;
    let mut stdout = std::io::stdout().lock();
    report(&mut stdout, &exp)?;
    writeln!(stdout, "wrote {} and {}", csv.display(), json.display())?;
    Ok(exp.aggregate.all_checks_pass())
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let ctx = Context { out: args.out.clone(), master_seed: seed_override()? };
    let ids: Vec<usize> = if args.criteria.is_empty() { (1..=verify::CRITERIA).collect() } else { args.criteria.clone() };
    let mut all = true;
    for id in ids {
        let r = verify::run_criterion(id, &ctx)?;
        all &= r.passed;
        println!("{r}");
    }
    Ok(all)
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => run(a, false),
        Command::Sweep(a) => run(a, true),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_parses() {
        let cli = Cli::try_parse_from(["sea-oco", "run", "--config", "a.toml", "--worst-case", "--set", "env.sigma=2", "--set", "run.seeds=3"]).unwrap();
        let Command::Run(a) = cli.command else { panic!("expected run") };
        assert!(a.worst_case);
        assert_eq!(a.overrides, ["env.sigma=2", "run.seeds=3"]);
        let cli = Cli::try_parse_from(["sea-oco", "verify", "--criterion", "3", "--criterion", "9"]).unwrap();
        let Command::Verify(v) = cli.command else { panic!("expected verify") };
        assert_eq!(v.criteria, [3, 9]);
        assert!(Cli::try_parse_from(["sea-oco", "run"]).is_err());
    }

    #[test]
    fn usage_errors_are_classified() {
        assert!(is_usage_error(&Error::UnknownKey("env.x".into())));
        assert!(is_usage_error(&Error::config("bad")));
        assert!(!is_usage_error(&Error::protocol("late")));
    }
}
