//! Argument parsing and dispatch for the `facetopo` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand};
use facetopo_core::topology::{euler_tour, tree_to_dot};

use crate::config::RunConfig;
use crate::formats::{load_dataset, read_tree, write_confusion_csv, MetricsReport};
use crate::run::{self, FixedTree, TrainOutcome};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "facetopo", version, about = "Learn landmark tree topologies and train sequence classifiers on them")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Threads used to evaluate candidate trees. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory.
    Synth,
    /// Search for a tree, train on it and write a run directory.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Do nothing if the output directory already holds a finished run.
        #[arg(long)]
        resume: bool,
    },
    /// Print metrics of a saved model as JSON.
    Eval {
        /// Run directory holding checkpoint.json and best_tree.json.
        #[arg(long, required_unless_present_all = ["checkpoint", "tree"])]
        run: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        confusion_csv: Option<PathBuf>,
    },
    /// Inspect a tree file.
    Tree {
        path: PathBuf,
        #[arg(long, conflicts_with = "summary")]
        dot: bool,
        #[arg(long)]
        summary: bool,
        /// Pin DOT nodes at the mean landmark positions of this dataset.
        #[arg(long, requires = "dot")]
        dataset: Option<PathBuf>,
    },
    /// Score fixed or random trees with the configured training budget.
    #[command(group(ArgGroup::new("mode").required(true).args(["random_trees", "human_tree", "cross_tree"])))]
    Baseline {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        random_trees: Option<usize>,
        /// Tree JSON, or `chain` for the path through landmarks in index order.
        #[arg(long)]
        human_tree: Option<String>,
        /// Tree JSON learned on another dataset.
        #[arg(long)]
        cross_tree: Option<PathBuf>,
    },
    /// Compare analytic and finite-difference gradients of the full model.
    Gradcheck {
        #[arg(long, hide = true)]
        inject_bug: bool,
    },
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli, dataset: Option<&PathBuf>) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(d) = dataset {
        config.dataset = Some(d.clone());
    }
    Ok(config)
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Synth => {
            let config = load_config(&cli, None)?;
            let out = out_dir(&cli, "data");
            let data = run::synth(&config, &out)?;
            let _ = writeln!(stderr, "wrote {} samples to {}", data.len(), out.display());
        }
        Command::Train { dataset, resume } => {
            let config = load_config(&cli, dataset.as_ref())?;
            let out = out_dir(&cli, "run");
            if let TrainOutcome::Finished(summary) = run::train(&config, &out, cli.workers, *resume, stderr)? {
                let _ = writeln!(
                    stdout,
                    "learned tree: validation recognition rate {:.4} ({} trainings, {} failed)",
                    summary.learned.recognition_rate, summary.trainings, summary.failures
                );
                if !summary.baseline.is_empty() {
                    let _ = writeln!(
                        stdout,
                        "random trees: mean {:.4}, spread {:.4} over {}",
                        facetopo_core::trainer::mean_rr(&summary.baseline),
                        facetopo_core::trainer::spread(&summary.baseline),
                        summary.baseline.len()
                    );
                }
                let _ = writeln!(stdout, "results in {}", out.display());
            }
        }
        Command::Eval {
            run: run_dir,
            checkpoint,
            tree,
            dataset,
            confusion_csv,
        } => {
            let checkpoint = checkpoint
                .clone()
                .or_else(|| run_dir.as_ref().map(|d| d.join(run::CHECKPOINT_FILE)))
                .ok_or_else(|| Error::Config("no checkpoint given".into()))?;
            let tree = tree
                .clone()
                .or_else(|| run_dir.as_ref().map(|d| d.join(run::TREE_FILE)))
                .ok_or_else(|| Error::Config("no tree given".into()))?;
            let metrics = run::eval(&checkpoint, &tree, dataset)?;
            if let Some(path) = confusion_csv {
                write_confusion_csv(path, &metrics.confusion)?;
            }
            let _ = write!(stdout, "{}", MetricsReport::from(&metrics).to_json());
        }
        Command::Tree {
            path,
            dot,
            summary: _,
            dataset,
        } => {
            let tree = read_tree(path)?;
            if *dot {
                let coords = dataset.as_deref().map(mean_shape).transpose()?;
                let _ = write!(stdout, "{}", tree_to_dot(&tree, coords.as_deref())?);
            } else {
                let _ = writeln!(stdout, "n: {}", tree.n());
                let _ = writeln!(stdout, "root: {}", tree.root());
                let _ = writeln!(stdout, "depth: {}", tree.depth());
                let _ = writeln!(stdout, "max_degree: {}", tree.max_degree());
                let _ = writeln!(stdout, "total_weight: {}", tree.total_weight());
                let _ = writeln!(stdout, "traversal (1-based): {}", euler_tour(&tree).to_one_based_string());
            }
        }
        Command::Baseline {
            dataset,
            random_trees,
            human_tree,
            cross_tree,
        } => {
            let config = load_config(&cli, dataset.as_ref())?;
            let out = out_dir(&cli, "baseline");
            std::fs::create_dir_all(&out).map_err(Error::io(&out))?;
            if let Some(trees) = random_trees {
                let scores = run::random_baseline(&config, *trees, cli.workers)?;
                run::write_baseline_reports(&out, &scores)?;
                let _ = writeln!(
                    stdout,
                    "{} random trees: mean {:.4}, spread {:.4}",
                    scores.len(),
                    facetopo_core::trainer::mean_rr(&scores),
                    facetopo_core::trainer::spread(&scores)
                );
            } else {
                let (kind, fixed) = match (human_tree, cross_tree) {
                    (Some(h), _) if h == "chain" => ("human", FixedTree::Chain),
                    (Some(h), _) => ("human", FixedTree::File(PathBuf::from(h))),
                    (None, Some(c)) => ("cross", FixedTree::File(c.clone())),
                    (None, None) => unreachable!("clap requires a mode"),
                };
                let (tree, metrics) = run::fixed_tree_baseline(&config, &fixed)?;
                let text = format!(
                    "source,tree_hash,recognition_rate\n{kind},{:016x},{}\n",
                    run::tree_digest(&tree),
                    metrics.recognition_rate
                );
                let path = out.join(format!("{kind}_tree.csv"));
                std::fs::write(&path, &text).map_err(Error::io(&path))?;
                let _ = write!(stdout, "{text}");
            }
        }
        Command::Gradcheck { inject_bug } => {
            let report = run::gradcheck(cli.seed.unwrap_or(0), *inject_bug)?;
            for b in &report.blocks {
                let _ = writeln!(stdout, "{:<32} {:>8} {:.3e}", b.name, b.len, b.rel_error);
            }
            let worst = report.worst().expect("model has parameters");
            let pass = worst.rel_error < GRADCHECK_TOLERANCE;
            let _ = writeln!(
                stdout,
                "{}: worst block {} relative error {:.3e} (tolerance {GRADCHECK_TOLERANCE:e})",
                if pass { "PASS" } else { "FAIL" },
                worst.name,
                worst.rel_error
            );
            return Ok(if pass { 0 } else { 2 });
        }
    }
    Ok(0)
}

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Mean normalized landmark positions, for laying out DOT output.
fn mean_shape(path: &Path) -> Result<Vec<[f64; 2]>> {
    let data = load_dataset(path)?;
    let mut mean = vec![[0.0; 2]; data.n];
    for s in &data.samples {
        for (m, c) in mean.iter_mut().zip(&s.coords) {
            m[0] += c[0];
            m[1] += c[1];
        }
    }
    let count = data.len().max(1) as f64;
    Ok(mean.into_iter().map(|[x, y]| [x / count, y / count]).collect())
}
