use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use edrop_core::experiment::{run_comparison, run_experiment, run_sweep, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "edrop", version, about = "Train data re-uploading circuits with entangling dropout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the seed ensemble and write traces, summaries and a model grid.
    Run(Common),
    /// Sweep one dropout rate over the values in `[sweep]`.
    Sweep(Common),
    /// Compare the variants in `[compare]` (none / dropout / L1 / L2).
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Comma-separated ensemble seeds; overrides `ensemble_seeds`.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads. Outputs do not depend on this.
    #[arg(short, long)]
    jobs: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, RunOptions)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seeds) = &self.seeds {
            cfg.ensemble_seeds = seeds.clone();
            cfg.validate()?;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok((cfg, RunOptions { jobs: self.jobs }))
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(c) => {
            let (cfg, opts) = c.load()?;
            let out = run_experiment(&cfg, None, opts).context("run failed")?;
            let s = &out.ensemble.stats;
            println!(
                "{}: final out-of-sample {:.5} (std {:.5}), final in-sample {:.5} -> {}",
                cfg.name,
                s.final_out_of_sample_mean,
                s.final_out_of_sample_std,
                s.final_in_sample_mean,
                out.dir.display()
            );
            for f in out.ensemble.failures() {
                eprintln!("seed {} failed: {}", f.seed, f.error);
            }
        }
        Command::Sweep(c) => {
            let (cfg, opts) = c.load()?;
            let out = run_sweep(&cfg, None, opts).context("sweep failed")?;
            println!("rate  in-sample  out-of-sample");
            for p in &out.points {
                println!(
                    "{:<5} {:.5}    {:.5}",
                    p.rate, p.stats.final_in_sample_mean, p.stats.final_out_of_sample_mean
                );
            }
            println!("-> {}", out.dir.display());
        }
        Command::Compare(c) => {
            let (cfg, opts) = c.load()?;
            let out = run_comparison(&cfg, None, opts).context("comparison failed")?;
            for v in &out.variants {
                println!(
                    "{:<10} iters {:<6} lambda {:<8} in {:.5} out {:.5}",
                    v.name,
                    v.iterations,
                    v.lambda.map_or("-".into(), |l| l.to_string()),
                    v.stats.final_in_sample_mean,
                    v.stats.final_out_of_sample_mean
                );
            }
            println!("-> {}", out.dir.display());
        }
    }
    Ok(())
}
