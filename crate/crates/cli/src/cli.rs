//! Argument parsing and dispatch.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dynpsn::features::{Correlation, PcaScope};

use crate::artifacts::Workspace;
use crate::oracle::{run_oracle, OracleOptions};
use crate::{stages, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "dynpsn", version, about = "Dynamic protein structure network classification pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub relaxed_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub correlation: Option<Correlation>,
    #[arg(long, global = true)]
    pub pca_scope: Option<PcaScope>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic corpus to <out>/corpus.jsonl
    Synth,
    /// Domains, event streams, labels and folds from the corpus
    Build,
    /// Dynamic and static graphlet orbit counts
    Count,
    /// GCM, flattening and PCA features
    Featurize,
    /// Nested cross-validated logistic regression
    TrainLr,
    /// Misclassification rates of every predictions file
    Evaluate {
        /// Additional predictions files, e.g. from other methods
        #[arg(long)]
        predictions: Vec<PathBuf>,
    },
    /// Strict and relaxed rank tables
    Rank {
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Pairwise one-sided Wilcoxon tests with Bonferroni q-values
    Stats {
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Tables and SVG charts under <out>/report
    Report {
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Every stage in order
    Run,
    /// Check the counters against brute-force references
    Oracle {
        #[arg(long, default_value_t = 4)]
        max_nodes: usize,
        #[arg(long, default_value_t = 6)]
        max_events: usize,
        #[arg(long, default_value_t = 50)]
        streams: usize,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            jobs: self.jobs,
            relaxed_threshold: self.relaxed_threshold,
            correlation: self.correlation,
            pca_scope: self.pca_scope,
        }
    }
}

/// Runs a parsed command; `Ok(false)` means the oracle reported a failure.
pub fn execute(cli: &Cli) -> Result<bool> {
    let cfg = RunConfig::load(cli.global.config.as_deref(), &cli.global.overrides())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    pool.build()?.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<bool> {
    let ws = Workspace::new(&cfg.out);
    match cmd {
        Command::Synth => stages::synth(&ws, cfg)?,
        Command::Build => stages::build(&ws, cfg)?,
        Command::Count => stages::count(&ws, cfg)?,
        Command::Featurize => stages::featurize(&ws, cfg)?,
        Command::TrainLr => stages::train_lr(&ws, cfg)?,
        Command::Evaluate { predictions } => stages::evaluate(&ws, cfg, predictions)?,
        Command::Rank { results } => stages::rank(&ws, cfg, results.as_deref())?,
        Command::Stats { results } => stages::stats(&ws, cfg, results.as_deref())?,
        Command::Report { results } => stages::report(&ws, cfg, results.as_deref())?,
        Command::Run => stages::run_all(&ws, cfg)?,
        Command::Oracle {
            max_nodes,
            max_events,
            streams,
            inject_fault,
        } => {
            let report = run_oracle(&OracleOptions {
                max_nodes: *max_nodes,
                max_events: *max_events,
                streams: *streams,
                seed: cfg.seed,
                inject_fault: *inject_fault,
            })?;
            print!("{}", report.render());
            return Ok(report.passed());
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn parser_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_after_the_subcommand() {
        let cli = Cli::try_parse_from(["dynpsn", "featurize", "--correlation", "pearson", "--pca-scope", "fold"]).unwrap();
        assert_eq!(cli.global.correlation, Some(Correlation::Pearson));
        assert_eq!(cli.global.pca_scope, Some(PcaScope::Fold));
        assert!(Cli::try_parse_from(["dynpsn", "count", "--correlation", "kendall"]).is_err());
    }
}
