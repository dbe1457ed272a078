use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use log::info;
use serde_json::json;

use bistro::erm::ExactErm;
use bistro::harness::{
    admissibility_check, write_suite, AdmissibilityOptions, Algorithm, Experiment, ExperimentConfig, RelaxationKind,
};
use bistro::rademacher::rademacher_estimate;
use bistro::{verify, Error, Result};

#[derive(Parser)]
#[command(name = "bistro", version, about = "Relaxation-based contextual bandits: simulation and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seed suite and write summary.json plus one CSV per episode.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// A count `k` (seeds 0..k) or a comma-separated list.
        #[arg(long, default_value = "1")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's algorithm.
        #[arg(long)]
        algorithm: Option<Algorithm>,
    },
    /// Monte-Carlo Rademacher average of the configured class under P_x.
    Rademacher {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Empirical admissibility check on a tiny instance.
    Admissibility {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        endpoints: usize,
        /// `adversarial_reduction` checks the reduction; anything else checks BISTRO.
        #[arg(long)]
        algorithm: Option<Algorithm>,
    },
    /// Compare production code against the brute-force reference oracles.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = |_| Error::Config(format!("cannot parse seeds `{text}`"));
    if text.contains(',') {
        text.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse().map_err(bad)).collect()
    } else {
        Ok((0..text.trim().parse::<u64>().map_err(bad)?).collect())
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seeds, out, algorithm } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(a) = algorithm {
                cfg.algorithm = a;
            }
            let seeds = parse_seeds(&seeds)?;
            let exp = Experiment::new(cfg)?;
            info!("running {} seeds of {:?}", seeds.len(), exp.config.algorithm);
            let result = exp.run_suite(&seeds)?;
            write_suite(&result, &out)?;
            print_json(&result.summary)?;
            Ok(true)
        }
        Command::Rademacher { config, samples, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            let exp = Experiment::new(ExperimentConfig { algorithm: Algorithm::Uniform, ..cfg })?;
            let oracle = ExactErm::new(Arc::clone(&exp.class));
            let est = rademacher_estimate(&oracle, &exp.env.contexts, exp.config.n, samples, seed)?;
            print_json(&json!({
                "n": exp.config.n,
                "d": exp.config.d,
                "rad_estimate": est.mean,
                "rad_stderr": est.std_error,
                "samples": est.samples,
            }))?;
            Ok(true)
        }
        Command::Admissibility { config, samples, seed, endpoints, algorithm } => {
            let exp = Experiment::new(ExperimentConfig { algorithm: Algorithm::Uniform, ..ExperimentConfig::load(&config)? })?;
            let kind = match algorithm {
                Some(Algorithm::AdversarialReduction) => RelaxationKind::Reduction,
                _ => RelaxationKind::Bistro,
            };
            let opts = AdmissibilityOptions { samples, endpoints, seed, ..AdmissibilityOptions::default() };
            let report = admissibility_check(kind, &exp, &opts)?;
            print_json(&report)?;
            Ok(report.passed)
        }
        Command::Selftest { seed } => {
            let lines = verify::selftest(seed)?;
            for l in &lines {
                println!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            Ok(lines.iter().all(|l| l.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
