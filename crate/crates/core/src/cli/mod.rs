//! Command-line front end for the `seamless` binary.

mod config;
mod output;

pub use config::{Config, PowerConfig, RunConfig};
pub use output::{RunManifest, SCHEMA_VERSION};

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::interim_update_exact;
use crate::calibration::{
    alc_search, calibrate_lambda1, calibrate_lambda2, gamma_search, operating_characteristics, predictive_power,
    replicate_map, Estimate,
};
use crate::error::{Error, Result};
use crate::model::{reference_design, OutcomeTable, TrialDesign};
use crate::rng::{Purpose, StreamKey};
use crate::trial::{simulate_trial, Decision};
use output::{header, num, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "seamless", version, about = "Seamless phase II/III dose-combination trial simulation and calibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Average-length criterion search over N and R0.
    Alc(RunArgs),
    /// Drop-threshold search.
    Gamma(RunArgs),
    /// Calibrate lambda1 and lambda2 from simulated y distributions.
    CalibrateLambda(RunArgs),
    /// Operating characteristics of every configured scenario.
    Oc(RunArgs),
    /// Bayesian predictive power under relative-risk scenarios.
    Power(RunArgs),
    /// Per-replicate trial log for the configured scenarios.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Only simulate the scenario with this id.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Randomisation probabilities for the next period of a live trial.
    Interim {
        /// JSON request: {"design"?, "counts", "period"}.
        #[arg(long)]
        request: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Parse and validate a configuration.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, conflicts_with = "entropy_seed")]
    pub seed: Option<u64>,
    /// Draw the root seed from the operating system; it is recorded in config.json.
    #[arg(long)]
    pub entropy_seed: bool,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Worker threads (defaults to available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Posterior draws per fit.
    #[arg(long)]
    pub draws: Option<usize>,
}

/// Live-trial interim request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterimRequest {
    #[serde(default = "reference_design")]
    pub design: TrialDesign,
    pub counts: OutcomeTable,
    /// Period whose data has just been completed (1-based).
    pub period: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterimRecord {
    /// Period the new probabilities apply to.
    pub period: usize,
    pub raw_probs: Vec<f64>,
    pub post_drop_probs: Vec<f64>,
    pub dropped_flags: Vec<bool>,
}

pub fn interim(req: &InterimRequest) -> Result<InterimRecord> {
    req.design.validate()?;
    req.counts.validate(req.design.n_arms())?;
    let n_periods = req.design.schedule.period_sizes().len();
    if req.period == 0 || req.period >= n_periods {
        return Err(Error::invalid(
            "period",
            format!("must lie in 1..{}, got {}", n_periods - 1, req.period),
        ));
    }
    let (raw, state) = interim_update_exact(
        req.design.priors.interim_arm,
        &req.counts,
        req.design.drop_threshold,
        req.period + 1,
    );
    Ok(InterimRecord {
        period: state.period_index,
        raw_probs: raw,
        post_drop_probs: state.active_probs,
        dropped_flags: state.dropped,
    })
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(args: &RunArgs, command: &str) -> Result<Config> {
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    if args.entropy_seed {
        cfg.run.seed = rand::rng().random();
    }
    if let Some(d) = args.draws {
        cfg.design.sampler.n_draws = d;
        cfg.alc.posterior_draws = d;
    }
    if let Some(r) = args.replicates {
        match command {
            "alc" => cfg.alc.replicates = r,
            "gamma" => cfg.gamma.replicates = r,
            "calibrate-lambda" => cfg.lambda.replicates = r,
            "power" => cfg.power.replicates = r,
            _ => cfg.run.replicates = r,
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn replicates_for(cfg: &Config, command: &str) -> usize {
    match command {
        "alc" => cfg.alc.replicates,
        "gamma" => cfg.gamma.replicates,
        "calibrate-lambda" => cfg.lambda.replicates,
        "power" => cfg.power.replicates,
        _ => cfg.run.replicates,
    }
}

fn est_cols(e: Estimate) -> [String; 2] {
    [num(e.value), num(e.stderr)]
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Alc(a) => run_command("alc", &a, None),
        Command::Gamma(a) => run_command("gamma", &a, None),
        Command::CalibrateLambda(a) => run_command("calibrate-lambda", &a, None),
        Command::Oc(a) => run_command("oc", &a, None),
        Command::Power(a) => run_command("power", &a, None),
        Command::Simulate { run, scenario } => run_command("simulate", &run, scenario.as_deref()),
        Command::Interim { request, out } => {
            let record = interim(&load_interim_request(&request)?)?;
            std::fs::create_dir_all(&out)?;
            let mut s = serde_json::to_string_pretty(&record)?;
            s.push('\n');
            std::fs::write(out.join("interim.json"), &s)?;
            print!("{s}");
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = match &config {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            println!("valid; config digest {}", cfg.digest());
            Ok(())
        }
    }
}

fn run_command(command: &str, args: &RunArgs, only: Option<&str>) -> Result<()> {
    let cfg = resolve_config(args, command)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    let start = Instant::now();
    let mut out = OutputDir::create(&args.out, cfg.run.seed, &cfg.digest())?;
    out.text("config.json", &cfg.echo())?;
    pool.install(|| execute(command, &cfg, only, &mut out))?;
    out.finish(
        command,
        replicates_for(&cfg, command),
        threads,
        start.elapsed().as_secs_f64(),
    )
}

/// Runs one subcommand and writes its tables. Output contents depend only on
/// the resolved configuration.
pub fn execute(command: &str, cfg: &Config, only: Option<&str>, out: &mut OutputDir) -> Result<()> {
    let root = StreamKey::root(cfg.run.seed);
    let design = &cfg.design;
    let labels: Vec<&str> = design.doses.iter().map(|d| d.label.as_str()).collect();
    match command {
        "alc" => {
            let r = alc_search(&cfg.alc, &design.priors, &root)?;
            let rows: Vec<Vec<String>> = r
                .cells
                .iter()
                .map(|c| {
                    vec![
                        c.n.to_string(),
                        num(c.r0),
                        c.comparator_n.to_string(),
                        c.novel_n.to_string(),
                        num(c.avg_hpd_length),
                        num(c.mc_stderr),
                    ]
                })
                .collect();
            out.csv(
                "alc.csv",
                &header(&["n", "r0", "comparator_n", "novel_n", "avg_hpd_length", "mc_stderr"]),
                &rows,
            )?;
            out.csv(
                "alc_selection.csv",
                &header(&["zeta", "selected_n", "selected_r0"]),
                &[vec![num(cfg.alc.zeta), r.selected_n.to_string(), num(r.selected_r0)]],
            )?;
        }
        "gamma" => {
            let r = gamma_search(design, &cfg.gamma_scenario, &cfg.gamma, &root)?;
            let rows: Vec<Vec<String>> = r
                .rows
                .iter()
                .map(|g| {
                    let mut row = vec![num(g.gamma)];
                    row.extend(est_cols(g.p_plurality));
                    row.extend(est_cols(g.mean_best_arm_n));
                    row.push(num(g.best_arm_n_low));
                    row.push(num(g.best_arm_n_high));
                    row.push((g.gamma == r.selected_gamma).to_string());
                    row
                })
                .collect();
            out.csv(
                "gamma.csv",
                &header(&[
                    "gamma",
                    "p_plurality",
                    "p_plurality_se",
                    "mean_best_arm_n",
                    "mean_best_arm_n_se",
                    "best_arm_n_q025",
                    "best_arm_n_q975",
                    "selected",
                ]),
                &rows,
            )?;
        }
        "calibrate-lambda" => {
            let l1 = calibrate_lambda1(design, &cfg.lambda, &root)?;
            let l2 = calibrate_lambda2(design, &cfg.lambda, &root)?;
            let null_p = cfg.lambda.p_comparator - design.ni_margin;
            let sup_p = cfg.lambda.superiority_p_optimal;
            let rows = vec![
                vec!["lambda1".into(), num(null_p), num(l1.quantile), num(l1.estimate), num(l1.stderr), l1.replicates.to_string()],
                vec!["lambda2".into(), num(sup_p), num(l2.quantile), num(l2.estimate), num(l2.stderr), l2.replicates.to_string()],
            ];
            out.csv(
                "lambda.csv",
                &header(&["threshold", "p_optimal", "quantile", "estimate", "stderr", "replicates"]),
                &rows,
            )?;
            let ys: Vec<Vec<String>> = [("lambda1", &l1), ("lambda2", &l2)]
                .iter()
                .flat_map(|(name, est)| {
                    est.y_values
                        .iter()
                        .enumerate()
                        .map(move |(k, y)| vec![name.to_string(), k.to_string(), num(*y)])
                })
                .collect();
            out.csv("lambda_y.csv", &header(&["threshold", "replicate", "y"]), &ys)?;
        }
        "oc" => {
            let rows = operating_characteristics(design, &cfg.scenarios, cfg.run.replicates, &root)?;
            let mut cols = header(&[
                "scenario_id",
                "replicates",
                "p_noninferior",
                "p_noninferior_se",
                "p_inconclusive",
                "p_inconclusive_se",
                "p_superior",
                "p_superior_se",
                "p_noninferior_and_correct",
                "p_noninferior_and_correct_se",
            ]);
            cols.extend(labels.iter().map(|l| format!("mean_n_{l}")));
            cols.push("simplex_violations".into());
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.scenario_id.clone(), r.replicates.to_string()];
                    row.extend(est_cols(r.p_noninferior));
                    row.extend(est_cols(r.p_inconclusive));
                    row.extend(est_cols(r.p_superior));
                    match r.p_noninferior_and_correct {
                        Some(e) => row.extend(est_cols(e)),
                        None => row.extend([String::new(), String::new()]),
                    }
                    row.extend(r.mean_arm_n.iter().map(|&m| num(m)));
                    row.push(r.simplex_violations.to_string());
                    row
                })
                .collect();
            out.csv("oc.csv", &cols, &table)?;
        }
        "power" => {
            let rows = predictive_power(design, &cfg.power.scenarios, cfg.power.replicates, &root)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.scenario_id.clone(), r.replicates.to_string()];
                    row.extend(est_cols(r.p_conclusive));
                    row.extend(est_cols(r.p_noninferior));
                    row.extend(est_cols(r.p_superior));
                    row.push(r.simplex_violations.to_string());
                    row
                })
                .collect();
            out.csv(
                "power.csv",
                &header(&[
                    "scenario_id",
                    "replicates",
                    "p_conclusive",
                    "p_conclusive_se",
                    "p_noninferior",
                    "p_noninferior_se",
                    "p_superior",
                    "p_superior_se",
                    "simplex_violations",
                ]),
                &table,
            )?;
        }
        "simulate" => simulate(cfg, only, &root, &labels, out)?,
        other => return Err(Error::Config(format!("unknown command {other}"))),
    }
    Ok(())
}

fn simulate(cfg: &Config, only: Option<&str>, root: &StreamKey, labels: &[&str], out: &mut OutputDir) -> Result<()> {
    let scenarios: Vec<_> = cfg
        .scenarios
        .iter()
        .filter(|s| only.is_none_or(|id| s.id == id))
        .collect();
    if scenarios.is_empty() {
        return Err(Error::invalid("scenario", format!("no scenario with id {:?}", only.unwrap_or(""))));
    }
    let n = cfg.run.replicates;
    let key = root.purpose(Purpose::Replicate);
    let mut trials = Vec::new();
    let mut summary = Vec::new();
    for sc in scenarios {
        let results = replicate_map(&key, n, |_, s| simulate_trial(&cfg.design, sc, s))?;
        let count = |d: Decision| results.iter().filter(|r| r.decision == d).count();
        let mut row = vec![sc.id.clone(), n.to_string()];
        row.extend(est_cols(Estimate::proportion(count(Decision::NonInferior), n)));
        row.extend(est_cols(Estimate::proportion(count(Decision::Inconclusive), n)));
        row.extend(est_cols(Estimate::proportion(count(Decision::ComparatorSuperior), n)));
        summary.push(row);
        for (k, r) in results.iter().enumerate() {
            let mut row = vec![
                sc.id.clone(),
                k.to_string(),
                r.decision.as_str().to_string(),
                labels[r.selected_arm].to_string(),
                num(r.y_stat),
                r.final_counts.comparator_total().to_string(),
            ];
            row.extend(r.arm_totals().iter().map(|m| m.to_string()));
            row.push(r.simplex_violations.to_string());
            trials.push(row);
        }
    }
    let mut cols = header(&["scenario_id", "replicate", "decision", "selected_arm", "y", "n_comparator"]);
    cols.extend(labels.iter().map(|l| format!("n_{l}")));
    cols.push("simplex_violations".into());
    out.csv("trials.csv", &cols, &trials)?;
    out.csv(
        "simulate_summary.csv",
        &header(&[
            "scenario_id",
            "replicates",
            "p_noninferior",
            "p_noninferior_se",
            "p_inconclusive",
            "p_inconclusive_se",
            "p_superior",
            "p_superior_se",
        ]),
        &summary,
    )
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Loads an interim request file.
pub fn load_interim_request(path: &Path) -> Result<InterimRequest> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interim_zero_counts_uniform() {
        let req = InterimRequest {
            design: reference_design(),
            counts: OutcomeTable::empty(3),
            period: 1,
        };
        let r = interim(&req).unwrap();
        assert_eq!(r.period, 2);
        for p in &r.post_drop_probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }
        assert_eq!(r.dropped_flags, vec![false; 3]);
    }

    #[test]
    fn interim_period_bounds() {
        let mut req = InterimRequest {
            design: reference_design(),
            counts: OutcomeTable::empty(3),
            period: 0,
        };
        assert!(interim(&req).is_err());
        req.period = 6;
        assert!(interim(&req).is_err());
        req.period = 5;
        assert!(interim(&req).is_ok());
    }
}
