use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{emit_results, parse_seed_range, sweep, write_sweep_csv, ExperimentConfig, OutputFormat, SweepParam};
use crate::analysis::{
    build_nonidentifiable_pair, estimate_rho_min_for_instance, nonidentifiability_demo, rank_size_empirical,
    TwoItemWalkConfig,
};
use crate::environment::make_synthetic_instance;
use crate::error::Error;
use crate::rankers::{ObservableView, RankerKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "popbias", version, about = "Ranking under popularity-biased user choice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment config (JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed range such as `0..10`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<OutputFormat>,
    /// Multiplier on the exploration bonus.
    #[arg(long)]
    pub bonus_scale: Option<f64>,
    /// Ranker override: qp, quality, popularity-driven, greedy or oblivious.
    #[arg(long)]
    pub ranker: Option<RankerKind>,
    /// Horizon override.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one ranker against the quality reference for each seed.
    Run(ExperimentArgs),
    /// Repeat a run over values of one generator parameter.
    Sweep {
        #[command(flatten)]
        common: ExperimentArgs,
        /// M, d, alpha_min or b_max.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Estimate the variability constant of a generated instance.
    RhoMin {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed of the generated instance.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Simulate the two problems that share saturated choice probabilities.
    Nonident {
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.02)]
        alpha_min: f64,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Two-item popularity-driven walk: selection shares and reranks.
    Walk {
        /// Rank bias of the two positions, e.g. `1,0`.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1.0, 0.0])]
        kappa: Vec<f64>,
        #[arg(long, default_value_t = 50_000)]
        steps: usize,
        #[arg(long, default_value = "0..50")]
        seeds: String,
    },
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn runtime_err(e: Error) -> Failure {
    match e {
        Error::Config(_) => Failure::Config(e),
        other => Failure::Runtime(other),
    }
}

fn load_experiment(args: &ExperimentArgs) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p).map_err(config_err)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &args.seeds {
        cfg.seeds = parse_seed_range(s).map_err(config_err)?;
    }
    if let Some(b) = args.bonus_scale {
        cfg.qp.bonus_scale = b;
    }
    if let Some(r) = args.ranker {
        cfg.ranker = r;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(o) = &args.out {
        cfg.out_dir = Some(o.clone());
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load_experiment(&args)?;
            let records = super::run_experiment(&cfg).map_err(runtime_err)?;
            let dir = out_dir(&cfg);
            let files = emit_results(&records, cfg.format, &dir).map_err(runtime_err)?;
            let finals: Vec<f64> = records.iter().map(|r| r.final_regret()).collect();
            print_json(&json!({
                "ranker": cfg.ranker.to_string(),
                "seeds": cfg.seeds,
                "bonus_scale": cfg.qp.bonus_scale,
                "final_regret": finals,
                "mean_final_regret": finals.iter().sum::<f64>() / finals.len() as f64,
                "runs": files.runs,
            }));
        }
        Command::Sweep { common, param, values } => {
            let cfg = load_experiment(&common)?;
            let rows = sweep(&cfg, param, &values).map_err(runtime_err)?;
            let path = out_dir(&cfg).join(format!("sweep_{}.csv", param.as_str()));
            write_sweep_csv(&rows, &path).map_err(runtime_err)?;
            print_json(&json!({ "param": param.as_str(), "rows": rows, "file": path }));
        }
        Command::RhoMin {
            config,
            seed,
            samples,
            tol,
        } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::load(&p).map_err(config_err)?,
                None => ExperimentConfig::default(),
            };
            let samples = samples.unwrap_or(cfg.rho_sample_slates);
            let tol = tol.unwrap_or(cfg.rho_tol);
            let env = make_synthetic_instance(&cfg.generator, &mut ChaCha8Rng::seed_from_u64(seed))
                .map_err(runtime_err)?;
            let view = ObservableView::new(&env);
            let full = estimate_rho_min_for_instance(&view, true, samples, tol).map_err(runtime_err)?;
            let oblivious = estimate_rho_min_for_instance(&view, false, samples, tol).map_err(runtime_err)?;
            print_json(&json!({
                "seed": seed,
                "users": env.user_count(),
                "sampled_slates": samples,
                "full_model": full,
                "quality_only_model": oblivious,
            }));
        }
        Command::Nonident {
            epsilon,
            alpha_min,
            steps,
            seed,
        } => {
            let pair = build_nonidentifiable_pair(epsilon, alpha_min).map_err(config_err)?;
            let report = nonidentifiability_demo(&pair, steps, seed).map_err(runtime_err)?;
            print_json(&serde_json::to_value(report).map_err(|e| runtime_err(e.into()))?);
        }
        Command::Walk { kappa, steps, seeds } => {
            let seeds = parse_seed_range(&seeds).map_err(config_err)?;
            let walk = TwoItemWalkConfig {
                kappa: [kappa[0], kappa[1]],
            };
            let mut s = rank_size_empirical(&walk, steps, &seeds).map_err(runtime_err)?;
            s.runs.clear();
            print_json(&serde_json::to_value(s).map_err(|e| runtime_err(e.into()))?);
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
