//! The work behind each subcommand, independent of argument parsing.

use std::io::Write;
use std::path::{Path, PathBuf};

use facetopo_core::ccpso2::GenerationRecord;
use facetopo_core::data::{split, synth_generate, Dataset};
use facetopo_core::model::{gradient_check, Fault, GradCheckSetup};
use facetopo_core::nn::gradcheck::GradCheckReport;
use facetopo_core::topology::{chain_tree, euler_tour, selection_matrix, SpanningTree};
use facetopo_core::trainer::{
    cross_tree_eval, evaluate, mean_rr, outer_optimize, random_tree_baseline, spread, Metrics, TrainedModel,
    TreeScore,
};

use crate::config::RunConfig;
use crate::formats::{
    load_dataset, read_checkpoint, read_tree, save_dataset, write_baseline_csv, write_checkpoint,
    write_history_csv, write_json, write_tree, MetricsReport,
};
use crate::parallel::Pool;
use crate::{Error, Result};

pub const CONFIG_FILE: &str = "config.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const TREE_FILE: &str = "best_tree.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const BASELINE_FILE: &str = "random_baseline.csv";
pub const BASELINE_SUMMARY_FILE: &str = "random_baseline_summary.csv";

/// Generates the synthetic dataset described by `config` and saves it.
pub fn synth(config: &RunConfig, out: &Path) -> Result<Dataset> {
    config.validate(None)?;
    let data = synth_generate(&config.synthetic())?;
    save_dataset(out, &data)?;
    Ok(data)
}

/// The configured dataset, or synthetic data when none is configured.
pub fn load_data(config: &RunConfig) -> Result<Dataset> {
    let data = match &config.dataset {
        Some(path) => load_dataset(path)?,
        None => {
            config.validate(None)?;
            synth_generate(&config.synthetic())?
        }
    };
    config.validate(Some(&data))?;
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub learned: Metrics,
    pub baseline: Vec<TreeScore>,
    pub trainings: u64,
    pub failures: u64,
    pub generations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainOutcome {
    AlreadyComplete,
    Finished(Box<TrainSummary>),
}

/// Runs the tree search, retrains the winner, scores it and the random
/// baseline on the held-out split, and fills `out`. `metrics.json` is
/// written last and marks the run complete.
pub fn train(config: &RunConfig, out: &Path, workers: usize, resume: bool, log: &mut dyn Write) -> Result<TrainOutcome> {
    let snapshot = config.to_json();
    if resume && out.join(METRICS_FILE).is_file() {
        let previous = std::fs::read_to_string(out.join(CONFIG_FILE)).map_err(Error::io(&out.join(CONFIG_FILE)))?;
        if previous != snapshot {
            return Err(Error::Config(format!(
                "{} holds a run with a different configuration",
                out.display()
            )));
        }
        let _ = writeln!(log, "run in {} is already complete; nothing to do", out.display());
        return Ok(TrainOutcome::AlreadyComplete);
    }
    let data = load_data(config)?;
    let train_config = config.train(Some(&data));
    let pool = Pool::new(workers)?;
    let (train_set, val_set) = split(&data, config.train_fraction, config.seed)?;
    std::fs::create_dir_all(out).map_err(Error::io(out))?;
    std::fs::write(out.join(CONFIG_FILE), &snapshot).map_err(Error::io(&out.join(CONFIG_FILE)))?;
    let _ = std::fs::remove_file(out.join(METRICS_FILE));

    let mut progress = |r: &GenerationRecord| {
        let _ = writeln!(
            log,
            "restart {} generation {}: best loss {:.6} after {} evaluations",
            r.run, r.generation, r.best_fitness, r.evaluations
        );
    };
    let outer = outer_optimize(&train_set, &train_config, &pool, Some(&mut progress))?;
    let trained = &outer.best.trained;
    let learned = evaluate(trained, &val_set)?;
    write_history_csv(&out.join(HISTORY_FILE), &outer.history)?;
    write_tree(&out.join(TREE_FILE), &trained.tree)?;
    write_checkpoint(&out.join(CHECKPOINT_FILE), &trained.model.config, &trained.params)?;

    let baseline = if config.baseline_trees > 0 {
        let scores = random_tree_baseline(&train_set, &val_set, &train_config, config.baseline_trees, &pool)?;
        write_baseline_reports(out, &scores)?;
        scores
    } else {
        Vec::new()
    };
    write_json(&out.join(METRICS_FILE), &MetricsReport::from(&learned))?;
    Ok(TrainOutcome::Finished(Box::new(TrainSummary {
        learned,
        baseline,
        trainings: outer.trainings,
        failures: outer.failures,
        generations: outer.history.len(),
    })))
}

pub fn write_baseline_reports(out: &Path, scores: &[TreeScore]) -> Result<()> {
    write_baseline_csv(&out.join(BASELINE_FILE), scores)?;
    let rr: Vec<f64> = scores.iter().map(|s| s.metrics.recognition_rate).collect();
    let min = rr.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let text = format!(
        "trees,mean_rr,min_rr,max_rr,spread\n{},{},{},{},{}\n",
        scores.len(),
        mean_rr(scores),
        min,
        max,
        spread(scores)
    );
    let path = out.join(BASELINE_SUMMARY_FILE);
    std::fs::write(&path, text).map_err(Error::io(&path))
}

/// Scores a saved model on every sample of `dataset`.
pub fn eval(checkpoint: &Path, tree: &Path, dataset: &Path) -> Result<Metrics> {
    let (model, params) = read_checkpoint(checkpoint)?;
    let tree = read_tree(tree)?;
    let data = load_dataset(dataset)?;
    if tree.n() != model.config.n {
        return Err(Error::Core(facetopo_core::Error::Dimension {
            what: "tree vertices",
            expected: model.config.n,
            got: tree.n(),
        }));
    }
    let selection = selection_matrix(&euler_tour(&tree));
    let trained = TrainedModel {
        model,
        params,
        tree,
        selection,
    };
    Ok(evaluate(&trained, &data)?)
}

pub fn random_baseline(config: &RunConfig, trees: usize, workers: usize) -> Result<Vec<TreeScore>> {
    let data = load_data(config)?;
    let train_config = config.train(Some(&data));
    let pool = Pool::new(workers)?;
    let (train_set, val_set) = split(&data, config.train_fraction, config.seed)?;
    Ok(random_tree_baseline(&train_set, &val_set, &train_config, trees, &pool)?)
}

/// Where a fixed tree comes from in `baseline --human-tree` and
/// `--cross-tree`.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedTree {
    /// Path `0 - 1 - ... - (n-1)` over the landmark indices.
    Chain,
    File(PathBuf),
}

/// Trains with a frozen tree on the configured split and scores it.
pub fn fixed_tree_baseline(config: &RunConfig, tree: &FixedTree) -> Result<(SpanningTree, Metrics)> {
    let data = load_data(config)?;
    let train_config = config.train(Some(&data));
    let tree = match tree {
        FixedTree::Chain => chain_tree(data.n, config.root)?,
        FixedTree::File(path) => read_tree(path)?,
    };
    let (train_set, val_set) = split(&data, config.train_fraction, config.seed)?;
    let metrics = cross_tree_eval(&tree, &train_set, &val_set, &train_config)?;
    Ok((tree, metrics))
}

pub fn tree_digest(tree: &SpanningTree) -> u64 {
    euler_tour(tree).digest()
}

pub fn gradcheck(seed: u64, inject_bug: bool) -> Result<GradCheckReport> {
    let fault = if inject_bug { Fault::DropGateScale } else { Fault::None };
    Ok(gradient_check(GradCheckSetup::default(), seed, fault)?)
}
