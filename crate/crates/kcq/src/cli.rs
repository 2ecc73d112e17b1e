//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kcq_core::metrics::{
    discrete_information, fano_bound, keygen_efficiency, profile_bounds, rate_window_check, solve_p1_given_info,
    splitting_cheat_probability, trial_complexity, DiscreteJoint, ErrorProfile, InfoQuery,
};
use serde_json::json;

use crate::catalog::{self, CRITERIA};
use crate::config::{ExperimentConfig, Protocol};
use crate::error::{HarnessError, Result};
use crate::experiment::run_experiment;
use crate::report::{all_gates_pass, emit_report, render, Format, ReportRow};
use crate::runner::Runner;

#[derive(Debug, Parser)]
#[command(name = "kcq", version, about = "Keyed quantum-noise communication experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override the config's rngSeed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Report destination; defaults to the config's outputPath, then stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Qubit keyed scheme.
    Qk(RunArgs),
    /// Coherent-state phase scheme.
    AlphaEta(RunArgs),
    /// Keyed pulse position modulation.
    Cppm(RunArgs),
    /// Security metrics: a config, or one scalar operation printed as JSON.
    Metrics(MetricsCmd),
    /// Run every checked-in acceptance experiment.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
pub struct MetricsCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(subcommand)]
    pub op: Option<MetricsOp>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Query {
    Ixy,
    Ixyk,
    IxyGivenK,
    Ixk,
    HxGivenY,
    Hk,
}

impl From<Query> for InfoQuery {
    fn from(q: Query) -> Self {
        match q {
            Query::Ixy => InfoQuery::IXY,
            Query::Ixyk => InfoQuery::IXYK,
            Query::IxyGivenK => InfoQuery::IXYGivenK,
            Query::Ixk => InfoQuery::IXK,
            Query::HxGivenY => InfoQuery::HXGivenY,
            Query::Hk => InfoQuery::HK,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum MetricsOp {
    /// p₁ consistent with `info` bits of attacker information on n-bit keys.
    SolveP1 {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        info: f64,
    },
    /// Expected guesses Σ k·p_k for a profile (sorted internally).
    TrialComplexity {
        #[arg(long, value_delimiter = ',', required = true)]
        probs: Vec<f64>,
    },
    /// Error-probability floor from Fano's inequality.
    Fano {
        #[arg(long)]
        info: f64,
        #[arg(long)]
        n: f64,
    },
    /// Information and trial-complexity bounds under p₁ ≤ 2^−l.
    ProfileBounds {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        n: u32,
    },
    /// Net key bits per channel use after seed, leak and verification costs.
    KeygenEfficiency {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        km: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        info: f64,
        #[arg(long)]
        kv: f64,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        key_reused: bool,
    },
    /// Success chance of a split-signal attacker, p_b·p_e.
    SplittingCheat {
        #[arg(long)]
        p_b: f64,
        #[arg(long)]
        p_e: f64,
    },
    /// Check I_BE/n < R < I_AB/n and |K| < ΔI.
    RateWindow {
        #[arg(long)]
        i_be: f64,
        #[arg(long)]
        i_ab: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        key_bits: f64,
        #[arg(long)]
        n: f64,
    },
    /// Information quantity of a joint read from a JSON file
    /// `{"dims": [x, y, k], "probs": [...]}`.
    Information {
        #[arg(long, value_name = "PATH")]
        joint: PathBuf,
        #[arg(long, value_enum)]
        query: Query,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Override every experiment's rngSeed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Combined report of every experiment.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Only these criteria (repeatable).
    #[arg(long, value_name = "N")]
    pub criterion: Vec<u8>,
}

fn default_jobs(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn io_err(path: &str, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.into(),
        source,
    }
}

fn print_json(v: serde_json::Value) -> Result<bool> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &v)?;
    writeln!(out).map_err(|e| io_err("<stdout>", e))?;
    Ok(true)
}

fn summarize(rows: &[ReportRow]) -> (usize, usize) {
    let gated = rows.iter().filter(|r| r.is_gated()).count();
    let failed = rows.iter().filter(|r| r.pass == Some(false)).count();
    (gated, failed)
}

fn run_config(protocol: Protocol, args: &RunArgs) -> Result<bool> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::config("--config", "an experiment config is required"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if cfg.protocol != protocol {
        return Err(HarnessError::config(
            format!("{}: protocol", path.display()),
            format!("expected {}, found {}", protocol.name(), cfg.protocol.name()),
        ));
    }
    if let Some(s) = args.seed {
        cfg.rng_seed = s;
    }
    let runner = Runner::with_jobs(default_jobs(args.jobs))?;
    let rows = run_experiment(&cfg, &runner)?;
    match args.out.as_ref().or(cfg.output_path.as_ref()) {
        Some(p) => emit_report(&rows, args.format, p)?,
        None => {
            let bytes = render(&rows, args.format)?;
            std::io::stdout().write_all(&bytes).map_err(|e| io_err("<stdout>", e))?;
        }
    }
    let (gated, failed) = summarize(&rows);
    eprintln!("{}: {} rows, {gated} gated, {failed} failed", cfg.name, rows.len());
    Ok(failed == 0)
}

fn metrics_op(op: &MetricsOp) -> Result<bool> {
    let v = match op {
        MetricsOp::SolveP1 { n, info } => json!({ "p1": solve_p1_given_info(*n, *info)? }),
        MetricsOp::TrialComplexity { probs } => {
            let p = ErrorProfile::from_unsorted(probs.clone())?;
            json!({ "trialComplexity": trial_complexity(&p)? })
        }
        MetricsOp::Fano { info, n } => json!({ "fanoBound": fano_bound(*info, *n) }),
        MetricsOp::ProfileBounds { l, n } => serde_json::to_value(profile_bounds(*l, *n)?)?,
        MetricsOp::KeygenEfficiency {
            r,
            km,
            n,
            info,
            kv,
            m,
            key_reused,
        } => json!({ "efficiency": keygen_efficiency(*r, *km, *n, *info, *kv, *m, *key_reused)? }),
        MetricsOp::SplittingCheat { p_b, p_e } => json!({ "cheatProbability": splitting_cheat_probability(*p_b, *p_e)? }),
        MetricsOp::RateWindow { i_be, i_ab, r, key_bits, n } => {
            serde_json::to_value(rate_window_check(*i_be, *i_ab, *r, *key_bits, *n)?)?
        }
        MetricsOp::Information { joint, query } => {
            let text = std::fs::read_to_string(joint).map_err(|source| HarnessError::Io {
                path: joint.clone(),
                source,
            })?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            let j: DiscreteJoint = serde_path_to_error::deserialize(de)
                .map_err(|e| HarnessError::config(format!("{}: {}", joint.display(), e.path()), e.into_inner()))?;
            j.validate()?;
            json!({ "bits": discrete_information(&j, (*query).into()) })
        }
    };
    print_json(v)
}

/// Run the catalog; one status line per criterion on stdout.
pub fn verify_all(args: &VerifyArgs) -> Result<bool> {
    let runner = Runner::with_jobs(default_jobs(args.jobs))?;
    let mut all_rows = Vec::new();
    let mut ok = true;
    for c in 1..=CRITERIA {
        if !args.criterion.is_empty() && !args.criterion.contains(&c) {
            continue;
        }
        let t0 = Instant::now();
        let mut rows = Vec::new();
        for e in catalog::for_criterion(c) {
            let mut cfg = e.config()?;
            if let Some(s) = args.seed {
                cfg.rng_seed = s;
            }
            rows.extend(run_experiment(&cfg, &runner)?);
        }
        let (gated, failed) = summarize(&rows);
        let pass = gated > 0 && all_gates_pass(&rows);
        ok &= pass;
        println!(
            "criterion {c}: {} ({gated} gated rows, {failed} failed, {:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
        for r in rows.iter().filter(|r| r.pass == Some(false)) {
            println!(
                "  failed {} [{}] {} = {:e} (reference {:e}, gate {})",
                r.experiment,
                r.parameters,
                r.quantity,
                r.estimate,
                r.reference.unwrap_or(f64::NAN),
                r.gate.as_deref().unwrap_or("")
            );
        }
        all_rows.extend(rows);
    }
    if let Some(p) = &args.out {
        emit_report(&all_rows, args.format, p)?;
    }
    Ok(ok)
}

/// Execute a parsed command line; `Ok(true)` iff every gated row passed.
pub fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Qk(a) => run_config(Protocol::Qk, a),
        Command::AlphaEta(a) => run_config(Protocol::AlphaEta, a),
        Command::Cppm(a) => run_config(Protocol::Cppm, a),
        Command::Metrics(m) => match &m.op {
            Some(op) => metrics_op(op),
            None => run_config(Protocol::Metrics, &m.run),
        },
        Command::VerifyAll(a) => verify_all(a),
    }
}
