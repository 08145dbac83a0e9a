//! Alternating optimization: particle-swarm search over edge weights outside,
//! Adam training of the classifier on the induced tree inside. Also metrics and
//! the random-tree, hand-designed-tree and cross-dataset baselines.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ccpso2::{optimize, GenerationRecord, Objective, OptimizeResult, SwarmConfig};
use crate::data::{augment_flip, Dataset, LandmarkSample};
use crate::exec::Executor;
use crate::model::{FaceTopoNet, ModelConfig};
use crate::nn::{Adam, AdamConfig, FocalLoss, Gradients, ParamStore};
use crate::seed::{rng_from, salt};
use crate::topology::{
    edge_count, euler_tour, prim_mst, selection_matrix, SelectionMatrix, SpanningTree, TraversalSequence,
    WeightedCompleteGraph,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub inner_epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub focal: FocalLoss,
    /// `dimensions` is ignored; the search space is always `C(n, 2)`.
    pub swarm: SwarmConfig,
    pub seed: u64,
    /// Stop the outer search after this many generations without improvement.
    pub patience: Option<usize>,
    pub flip_probability: f64,
    pub root: usize,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            inner_epochs: 10,
            batch_size: 16,
            adam: AdamConfig::default(),
            focal: FocalLoss::default(),
            swarm: SwarmConfig {
                swarm_size: 6,
                iterations: 10,
                ..SwarmConfig::default()
            },
            seed: 0,
            patience: None,
            flip_probability: 0.25,
            root: 0,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("train config", "batch_size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::invalid("train config", "flip_probability must be in [0, 1]"));
        }
        if self.patience == Some(0) {
            return Err(Error::invalid("train config", "patience must be positive"));
        }
        if self.root >= self.model.n {
            return Err(Error::invalid("train config", format!("root {} >= n {}", self.root, self.model.n)));
        }
        self.adam.validate()?;
        self.model.validate()?;
        self.swarm_for(self.model.n).validate()
    }

    /// Swarm settings for `n` landmarks. Group sizes larger than the edge
    /// count collapse to a single full-width group.
    pub fn swarm_for(&self, n: usize) -> SwarmConfig {
        let dimensions = edge_count(n);
        let mut group_sizes: Vec<usize> = Vec::new();
        for s in self.swarm.group_sizes.iter().map(|&s| s.min(dimensions)) {
            if !group_sizes.contains(&s) {
                group_sizes.push(s);
            }
        }
        SwarmConfig {
            dimensions,
            group_sizes,
            ..self.swarm.clone()
        }
    }

    fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.n != self.model.n {
            return Err(Error::dim("dataset landmarks", self.model.n, data.n));
        }
        if data.num_classes != self.model.num_classes {
            return Err(Error::dim("dataset classes", self.model.num_classes, data.num_classes));
        }
        if data.is_empty() {
            return Err(Error::invalid("dataset", "no samples"));
        }
        Ok(())
    }
}

/// A trained classifier together with the tree it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: FaceTopoNet,
    pub params: ParamStore,
    pub tree: SpanningTree,
    pub selection: SelectionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub trained: TrainedModel,
    /// Mean total loss over the training set before any update.
    pub initial_loss: f64,
    /// Mean total loss over the last epoch's batches; the initial loss when no
    /// epoch ran.
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
}

/// Trains both streams on `tree` with Adam.
///
/// Initialization and batch order come from `config.seed` alone, so two calls
/// with the same tree return bit-identical results and the outer objective is a
/// pure function of the traversal sequence.
pub fn inner_train(tree: &SpanningTree, train: &Dataset, config: &TrainConfig) -> Result<InnerResult> {
    config.validate()?;
    config.check_dataset(train)?;
    if tree.n() != train.n {
        return Err(Error::dim("tree vertices", train.n, tree.n()));
    }
    let selection = selection_matrix(&euler_tour(tree));
    let mut init_rng = rng_from(config.seed, salt::INNER_INIT);
    let mut order_rng = rng_from(config.seed, salt::INNER_SHUFFLE);
    let mut flip_rng = rng_from(config.seed, salt::AUGMENT);
    let (model, mut params) = FaceTopoNet::new(&config.model, &mut init_rng)?;

    let all: Vec<&LandmarkSample> = train.samples.iter().collect();
    let initial_loss = model.batch_loss(&params, &all, &selection, config.focal)?;
    if !initial_loss.is_finite() {
        return Err(Error::Diverged { step: 0 });
    }

    let mut adam = Adam::new(config.adam, &params);
    let mut grads = Gradients::zeros_like(&params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mirror = train.mirror_map.as_deref();
    let mut epoch_losses = Vec::with_capacity(config.inner_epochs);
    let mut step = 0usize;
    for _ in 0..config.inner_epochs {
        order.shuffle(&mut order_rng);
        let mut sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<LandmarkSample> = chunk
                .iter()
                .map(|&i| {
                    let s = &train.samples[i];
                    if config.flip_probability > 0.0 {
                        augment_flip(s, config.flip_probability, mirror, &mut flip_rng)
                    } else {
                        Ok(s.clone())
                    }
                })
                .collect::<Result<_>>()?;
            let refs: Vec<&LandmarkSample> = batch.iter().collect();
            grads.zero();
            let loss = model.loss_and_grad(&params, &refs, &selection, config.focal, &mut grads)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { step });
            }
            adam.step(&mut params, &grads).map_err(|_| Error::Diverged { step })?;
            sum += loss * chunk.len() as f64;
            step += 1;
        }
        epoch_losses.push(sum / train.len() as f64);
    }
    let final_loss = epoch_losses.last().copied().unwrap_or(initial_loss);
    Ok(InnerResult {
        trained: TrainedModel {
            model,
            params,
            tree: tree.clone(),
            selection,
        },
        initial_loss,
        final_loss,
        epoch_losses,
    })
}

/// MST of the complete graph with edge weights `weights`, rooted at `root`.
pub fn tree_from_weights(n: usize, weights: &[f64], root: usize) -> Result<SpanningTree> {
    prim_mst(&WeightedCompleteGraph::from_slice(n, weights)?, root)
}

/// Swarm objective: the final inner-training loss on the tree induced by a
/// weight vector. Losses are memoized by traversal sequence, and the distinct
/// trees of a batch are trained through the executor.
pub struct TreeObjective<'a, E: Executor> {
    train: &'a Dataset,
    config: &'a TrainConfig,
    executor: &'a E,
    cache: BTreeMap<Vec<usize>, f64>,
    trainings: u64,
    failures: u64,
}

impl<'a, E: Executor> TreeObjective<'a, E> {
    pub fn new(train: &'a Dataset, config: &'a TrainConfig, executor: &'a E) -> Self {
        Self {
            train,
            config,
            executor,
            cache: BTreeMap::new(),
            trainings: 0,
            failures: 0,
        }
    }

    /// Number of inner trainings actually run.
    pub fn trainings(&self) -> u64 {
        self.trainings
    }

    /// Candidates whose training failed and were scored `+inf`.
    pub fn failures(&self) -> u64 {
        self.failures
    }

    pub fn distinct_trees(&self) -> usize {
        self.cache.len()
    }
}

impl<E: Executor> Objective for TreeObjective<'_, E> {
    fn evaluate_batch(&mut self, candidates: &[Vec<f64>]) -> Vec<f64> {
        let n = self.train.n;
        let root = self.config.root;
        let trees: Vec<Option<(SpanningTree, Vec<usize>)>> = candidates
            .iter()
            .map(|w| {
                tree_from_weights(n, w, root).ok().map(|t| {
                    let key = euler_tour(&t).vertices().to_vec();
                    (t, key)
                })
            })
            .collect();
        let mut pending: Vec<(&SpanningTree, &Vec<usize>)> = Vec::new();
        for (t, key) in trees.iter().flatten() {
            if !self.cache.contains_key(key) && !pending.iter().any(|(_, k)| *k == key) {
                pending.push((t, key));
            }
        }
        let (train, config) = (self.train, self.config);
        let losses = self
            .executor
            .map(&pending, |(t, _)| inner_train(t, train, config).map(|r| r.final_loss));
        for ((_, key), loss) in pending.iter().zip(losses) {
            self.trainings += 1;
            let v = loss.unwrap_or_else(|_| {
                self.failures += 1;
                f64::INFINITY
            });
            self.cache.insert((*key).clone(), v);
        }
        trees
            .iter()
            .map(|t| t.as_ref().map_or(f64::INFINITY, |(_, key)| self.cache[key]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterResult {
    pub best: InnerResult,
    pub best_weights: Vec<f64>,
    /// Best loss after each generation of the winning restart.
    pub history: Vec<GenerationRecord>,
    pub search: OptimizeResult,
    pub trainings: u64,
    pub failures: u64,
}

/// Searches edge weights with the particle swarm, then retrains the best tree
/// to return its parameters.
pub fn outer_optimize<E: Executor>(
    train: &Dataset,
    config: &TrainConfig,
    executor: &E,
    mut progress: Option<&mut dyn FnMut(&GenerationRecord)>,
) -> Result<OuterResult> {
    config.validate()?;
    config.check_dataset(train)?;
    let swarm = config.swarm_for(train.n);
    let mut objective = TreeObjective::new(train, config, executor);
    let mut best_seen = f64::INFINITY;
    let mut stale = 0usize;
    let mut sink = |rec: &GenerationRecord| {
        if let Some(p) = progress.as_mut() {
            p(rec);
        }
        if rec.best_fitness < best_seen {
            best_seen = rec.best_fitness;
            stale = 0;
        } else {
            stale += 1;
        }
        match config.patience {
            Some(p) if stale >= p => {
                stale = 0;
                best_seen = f64::INFINITY;
                ControlFlow::Break(())
            }
            _ => ControlFlow::Continue(()),
        }
    };
    let search = optimize(&mut objective, &swarm, Some(&mut sink))?;
    if !search.best_fitness.is_finite() {
        return Err(Error::invalid("outer search", "every candidate failed to train"));
    }
    let tree = tree_from_weights(train.n, &search.best_vector, config.root)?;
    let best = inner_train(&tree, train, config)?;
    Ok(OuterResult {
        best,
        best_weights: search.best_vector.clone(),
        history: search.history.clone(),
        trainings: objective.trainings(),
        failures: objective.failures(),
        search,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recognition_rate: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

/// One-vs-all metrics from label pairs.
pub fn metrics_from_predictions(num_classes: usize, truth: &[usize], predicted: &[usize]) -> Result<Metrics> {
    if truth.is_empty() {
        return Err(Error::invalid("evaluation", "empty validation set"));
    }
    if truth.len() != predicted.len() {
        return Err(Error::dim("predictions", truth.len(), predicted.len()));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::invalid("evaluation", format!("label {} out of range", t.max(p))));
        }
        confusion[t][p] += 1;
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut precision = Vec::with_capacity(num_classes);
    let mut recall = Vec::with_capacity(num_classes);
    let mut f1 = Vec::with_capacity(num_classes);
    for c in 0..num_classes {
        let tp = confusion[c][c];
        let predicted_c: usize = (0..num_classes).map(|t| confusion[t][c]).sum();
        let actual_c: usize = confusion[c].iter().sum();
        let p = ratio(tp, predicted_c);
        let r = ratio(tp, actual_c);
        precision.push(p);
        recall.push(r);
        f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
    }
    let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
    Ok(Metrics {
        recognition_rate: correct as f64 / truth.len() as f64,
        precision,
        recall,
        f1,
        confusion,
        total: truth.len(),
    })
}

pub fn evaluate(trained: &TrainedModel, validation: &Dataset) -> Result<Metrics> {
    if validation.is_empty() {
        return Err(Error::invalid("evaluation", "empty validation set"));
    }
    if validation.n != trained.model.config.n {
        return Err(Error::dim("validation landmarks", trained.model.config.n, validation.n));
    }
    let mut truth = Vec::with_capacity(validation.len());
    let mut predicted = Vec::with_capacity(validation.len());
    for s in &validation.samples {
        truth.push(s.label);
        predicted.push(trained.model.predict(&trained.params, s, &trained.selection)?.class);
    }
    metrics_from_predictions(trained.model.config.num_classes, &truth, &predicted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeScore {
    pub tree: SpanningTree,
    pub sequence: TraversalSequence,
    pub final_loss: f64,
    pub metrics: Metrics,
}

impl TreeScore {
    pub fn digest(&self) -> u64 {
        self.sequence.digest()
    }
}

fn score_tree(tree: &SpanningTree, train: &Dataset, validation: &Dataset, config: &TrainConfig) -> Result<TreeScore> {
    let r = inner_train(tree, train, config)?;
    let metrics = evaluate(&r.trained, validation)?;
    Ok(TreeScore {
        tree: tree.clone(),
        sequence: euler_tour(tree),
        final_loss: r.final_loss,
        metrics,
    })
}

/// Random trees drawn as MSTs of i.i.d. uniform weights, each trained with the
/// same inner budget and seeds and scored on `validation`.
pub fn random_tree_baseline<E: Executor>(
    train: &Dataset,
    validation: &Dataset,
    config: &TrainConfig,
    num_trees: usize,
    executor: &E,
) -> Result<Vec<TreeScore>> {
    if num_trees == 0 {
        return Err(Error::invalid("random baseline", "num_trees must be positive"));
    }
    config.validate()?;
    config.check_dataset(train)?;
    let n = train.n;
    let mut rng = rng_from(config.seed, salt::BASELINE);
    let trees: Vec<SpanningTree> = (0..num_trees)
        .map(|_| {
            let w: Vec<f64> = (0..edge_count(n)).map(|_| rng.random::<f64>()).collect();
            tree_from_weights(n, &w, config.root)
        })
        .collect::<Result<_>>()?;
    executor
        .map(&trees, |t| score_tree(t, train, validation, config))
        .into_iter()
        .collect()
}

/// Trains on `train` with a tree learned elsewhere (topology frozen) and scores
/// on `validation`.
pub fn cross_tree_eval(tree: &SpanningTree, train: &Dataset, validation: &Dataset, config: &TrainConfig) -> Result<Metrics> {
    if tree.n() != train.n || tree.n() != validation.n {
        return Err(Error::invalid(
            "cross-tree evaluation",
            format!("tree has {} vertices, datasets have {} and {}", tree.n(), train.n, validation.n),
        ));
    }
    Ok(score_tree(tree, train, validation, config)?.metrics)
}

/// Max minus min recognition rate.
pub fn spread(scores: &[TreeScore]) -> f64 {
    let rr = scores.iter().map(|s| s.metrics.recognition_rate);
    let max = rr.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = rr.fold(f64::INFINITY, f64::min);
    if scores.is_empty() {
        0.0
    } else {
        max - min
    }
}

pub fn mean_rr(scores: &[TreeScore]) -> f64 {
    scores.iter().map(|s| s.metrics.recognition_rate).sum::<f64>() / scores.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synth_generate, SyntheticConfig};
    use crate::exec::Sequential;
    use crate::topology::chain_tree;

    fn tiny_data(per_class: usize) -> Dataset {
        synth_generate(&SyntheticConfig {
            n: 5,
            num_classes: 2,
            samples_per_class: per_class,
            patch_size: 11,
            image_size: 40,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            inner_epochs: 2,
            batch_size: 8,
            swarm: SwarmConfig {
                swarm_size: 2,
                iterations: 3,
                group_sizes: vec![5, 10],
                ..SwarmConfig::default()
            },
            model: ModelConfig {
                n: 5,
                num_classes: 2,
                hidden_dim: 4,
                stream_dim: 4,
                fusion_dim: 4,
                embed_dim: 3,
                patch_size: 11,
                conv_channels: [2, 2],
                ..ModelConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    /// Runs items in reverse order but returns them in input order.
    struct Reversed;

    impl Executor for Reversed {
        fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
        where
            T: Sync,
            R: Send,
            F: Fn(&T) -> R + Sync,
        {
            let mut out: Vec<R> = items.iter().rev().map(f).collect();
            out.reverse();
            out
        }
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let data = tiny_data(4);
        let config = TrainConfig {
            inner_epochs: 0,
            ..tiny_config()
        };
        let r = inner_train(&chain_tree(5, 0).unwrap(), &data, &config).unwrap();
        assert_eq!(r.final_loss, r.initial_loss);
        let (_, fresh) = FaceTopoNet::new(&config.model, &mut rng_from(config.seed, salt::INNER_INIT)).unwrap();
        assert_eq!(r.trained.params, fresh);
    }

    #[test]
    fn inner_training_is_deterministic_and_learns() {
        let data = tiny_data(8);
        let config = TrainConfig {
            inner_epochs: 15,
            ..tiny_config()
        };
        let tree = chain_tree(5, 0).unwrap();
        let a = inner_train(&tree, &data, &config).unwrap();
        let b = inner_train(&tree, &data, &config).unwrap();
        assert_eq!(a.final_loss.to_bits(), b.final_loss.to_bits());
        assert_eq!(a.epoch_losses.len(), 15);
        assert!(a.final_loss < a.initial_loss);
    }

    #[test]
    fn inner_training_rejects_mismatched_tree() {
        let data = tiny_data(2);
        assert!(inner_train(&chain_tree(6, 0).unwrap(), &data, &tiny_config()).is_err());
    }

    #[test]
    fn divergence_reports_the_step() {
        let mut data = tiny_data(2);
        for s in &mut data.samples {
            s.patches.as_mut().unwrap().data.fill(f64::NAN);
        }
        let err = inner_train(&chain_tree(5, 0).unwrap(), &data, &tiny_config()).unwrap_err();
        assert!(matches!(err, Error::Diverged { step: 0 }), "{err:?}");
        let bad_lr = TrainConfig {
            adam: AdamConfig {
                lr: f64::NAN,
                ..AdamConfig::default()
            },
            ..tiny_config()
        };
        assert!(matches!(bad_lr.validate(), Err(Error::Validation { .. })));
    }

    #[test]
    fn metrics_counting() {
        let perfect = metrics_from_predictions(3, &[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap();
        assert_eq!(perfect.recognition_rate, 1.0);
        assert_eq!(perfect.confusion, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);

        let truth: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let constant = metrics_from_predictions(4, &truth, &[2; 40]).unwrap();
        assert_eq!(constant.recognition_rate, 0.25);
        assert_eq!(constant.f1[0], 0.0);
        assert_eq!(constant.recall[2], 1.0);
        assert_eq!(constant.precision[2], 0.25);

        let m = metrics_from_predictions(2, &[0, 0, 1], &[0, 1, 1]).unwrap();
        assert!((m.recognition_rate - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.confusion, vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(m.precision, vec![1.0, 0.5]);
        assert_eq!(m.recall, vec![0.5, 1.0]);
        assert!((m.f1[0] - 2.0 / 3.0).abs() < 1e-15);
        for (row, count) in m.confusion.iter().zip([2, 1]) {
            assert_eq!(row.iter().sum::<usize>(), count);
        }
        assert!(metrics_from_predictions(2, &[], &[]).is_err());
    }

    #[test]
    fn evaluate_is_pure_and_rejects_empty() {
        let data = tiny_data(6);
        let (tr, va) = split(&data, 0.5, 1).unwrap();
        let r = inner_train(&chain_tree(5, 0).unwrap(), &tr, &tiny_config()).unwrap();
        assert_eq!(evaluate(&r.trained, &va).unwrap(), evaluate(&r.trained, &va).unwrap());
        assert!(evaluate(&r.trained, &va.subset(&[])).is_err());
    }

    #[test]
    fn objective_memoizes_and_ignores_schedule() {
        let data = tiny_data(3);
        let config = tiny_config();
        let w1: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut w2 = w1.clone();
        w2[9] = 100.0; // heaviest edge stays out of the tree
        let w3: Vec<f64> = (0..10).map(|i| -(i as f64)).collect();
        let batch = vec![w1, w3.clone(), w2, w3];
        let mut seq = TreeObjective::new(&data, &config, &Sequential);
        let a = seq.evaluate_batch(&batch);
        assert_eq!(seq.trainings(), 2);
        assert_eq!(a[0], a[2]);
        assert_eq!(a[1], a[3]);
        let mut rev = TreeObjective::new(&data, &config, &Reversed);
        let b = rev.evaluate_batch(&batch);
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        seq.evaluate_batch(&batch[..1]);
        assert_eq!(seq.trainings(), 2);
    }

    #[test]
    fn outer_search_history_and_tree() {
        let data = tiny_data(4);
        let config = tiny_config();
        let mut seen = 0;
        let r = outer_optimize(&data, &config, &Sequential, Some(&mut |_: &GenerationRecord| seen += 1)).unwrap();
        assert_eq!(seen, 3);
        assert_eq!(r.history.len(), 3);
        for w in r.history.windows(2) {
            assert!(w[1].best_fitness <= w[0].best_fitness);
        }
        euler_tour(&r.best.trained.tree).check_against(&r.best.trained.tree).unwrap();
        assert_eq!(r.best.final_loss, r.search.best_fitness);
        assert!(r.trainings >= 1);
    }

    #[test]
    fn patience_stops_early() {
        let data = tiny_data(2);
        let config = TrainConfig {
            patience: Some(1),
            swarm: SwarmConfig {
                iterations: 8,
                ..tiny_config().swarm
            },
            ..tiny_config()
        };
        let r = outer_optimize(&data, &config, &Sequential, None).unwrap();
        assert!(r.history.len() < 8);
    }

    #[test]
    fn random_baseline_and_cross_tree() {
        let data = tiny_data(6);
        let (tr, va) = split(&data, 0.5, 0).unwrap();
        let config = tiny_config();
        let a = random_tree_baseline(&tr, &va, &config, 3, &Sequential).unwrap();
        let b = random_tree_baseline(&tr, &va, &config, 3, &Reversed).unwrap();
        assert_eq!(a, b);
        for s in &a {
            s.sequence.check_against(&s.tree).unwrap();
        }
        assert!(spread(&a) >= 0.0);
        let one = random_tree_baseline(&tr, &va, &config, 1, &Sequential).unwrap();
        assert_eq!(one[0], a[0]);

        let tree = a[0].tree.clone();
        let m = cross_tree_eval(&tree, &tr, &va, &config).unwrap();
        assert_eq!(m, a[0].metrics);
        assert!(cross_tree_eval(&chain_tree(6, 0).unwrap(), &tr, &va, &config).is_err());
    }
}
