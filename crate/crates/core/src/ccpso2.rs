//! Cooperatively coevolving particle swarms (CCPSO2) for box-bounded
//! minimization.
//!
//! The decision vector is randomly partitioned into groups of a size drawn from
//! `group_sizes`. Each group is optimized by the same `swarm_size` particles,
//! evaluated inside a context vector whose remaining coordinates come from the
//! global best. Positions are resampled around personal and ring-local bests
//! with a Cauchy or Gaussian step, so no velocity is tracked.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::seed::{derive_seed, rng_from, salt};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwarmConfig {
    pub dimensions: usize,
    pub group_sizes: Vec<usize>,
    pub swarm_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub bounds: (f64, f64),
    pub restarts: usize,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            dimensions: 1,
            group_sizes: vec![1, 5, 7],
            swarm_size: 10,
            iterations: 40,
            seed: 0,
            bounds: (-1.0, 1.0),
            restarts: 1,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: alloc::string::String| Err(Error::invalid("swarm config", reason));
        if self.dimensions == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.group_sizes.is_empty() {
            return bad("group_sizes is empty".into());
        }
        if let Some(&s) = self.group_sizes.iter().find(|&&s| s == 0 || s > self.dimensions) {
            return bad(format!("group size {s} not in 1..={}", self.dimensions));
        }
        if self.swarm_size < 2 {
            return bad(format!("swarm_size must be >= 2, got {}", self.swarm_size));
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1".into());
        }
        if self.restarts == 0 || self.restarts > 30 {
            return bad(format!("restarts must be in 1..=30, got {}", self.restarts));
        }
        let (lo, hi) = self.bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("bounds ({lo}, {hi}) must be finite with low < high"));
        }
        Ok(())
    }

    /// Upper bound on objective calls for one run when every generation uses
    /// the smallest group size.
    pub fn evaluation_budget(&self) -> u64 {
        let min_group = self.group_sizes.iter().copied().min().unwrap_or(1).max(1);
        let groups = self.dimensions.div_ceil(min_group);
        (self.iterations * groups * self.swarm_size * 2) as u64
    }
}

/// Minimization target evaluated a batch at a time.
///
/// A batch holds full-length candidate vectors; the returned fitness values
/// must be in the same order.
pub trait Objective {
    fn evaluate_batch(&mut self, candidates: &[Vec<f64>]) -> Vec<f64>;
}

/// Adapts a plain function to [`Objective`].
pub struct FnObjective<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn evaluate_batch(&mut self, candidates: &[Vec<f64>]) -> Vec<f64> {
        candidates.iter().map(|c| (self.0)(c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<Vec<f64>>,
    pub personal_bests: Vec<Vec<f64>>,
    /// Fitness of each personal best in the most recent evaluation context.
    pub personal_best_fitness: Vec<f64>,
    pub global_best: Vec<f64>,
    pub global_best_fitness: f64,
    pub current_group_size: usize,
    /// Permutation of dimension indices; consecutive chunks of
    /// `current_group_size` form the groups.
    pub group_assignment: Vec<usize>,
    /// Set when the last generation did not improve the global best.
    pub stagnation_flag: bool,
    pub generation: usize,
    pub evaluations: u64,
    pub nan_warnings: u64,
}

impl SwarmState {
    /// Uniform positions in the bounds; personal bests start at the positions
    /// and the first generation always regroups.
    pub fn initialize<R: Rng>(config: &SwarmConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (lo, hi) = config.bounds;
        let positions: Vec<Vec<f64>> = (0..config.swarm_size)
            .map(|_| (0..config.dimensions).map(|_| rng.random_range(lo..hi)).collect())
            .collect();
        Ok(Self {
            personal_bests: positions.clone(),
            personal_best_fitness: vec![f64::INFINITY; config.swarm_size],
            global_best: positions[0].clone(),
            global_best_fitness: f64::INFINITY,
            positions,
            current_group_size: config.group_sizes[0],
            group_assignment: (0..config.dimensions).collect(),
            stagnation_flag: true,
            generation: 0,
            evaluations: 0,
            nan_warnings: 0,
        })
    }

    pub fn group_count(&self) -> usize {
        self.group_assignment.len().div_ceil(self.current_group_size)
    }

    pub fn groups(&self) -> impl Iterator<Item = &[usize]> {
        self.group_assignment.chunks(self.current_group_size)
    }
}

/// Maps `x` back into `[lo, hi]` by mirroring at the walls.
pub fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if x >= lo && x <= hi {
        return x;
    }
    if !x.is_finite() {
        return if x > hi { hi } else { lo };
    }
    let width = hi - lo;
    let period = 2.0 * width;
    let mut t = (x - lo) % period;
    if t < 0.0 {
        t += period;
    }
    if t > width {
        t = period - t;
    }
    (lo + t).clamp(lo, hi)
}

fn evaluate<O: Objective>(state: &mut SwarmState, objective: &mut O, batch: &[Vec<f64>]) -> Vec<f64> {
    let mut fit = objective.evaluate_batch(batch);
    assert_eq!(fit.len(), batch.len(), "objective returned wrong batch size");
    state.evaluations += batch.len() as u64;
    for f in &mut fit {
        if f.is_nan() {
            *f = f64::INFINITY;
            state.nan_warnings += 1;
        }
    }
    fit
}

/// Advances the swarm by one generation.
pub fn step<O: Objective, R: Rng>(
    state: &mut SwarmState,
    config: &SwarmConfig,
    objective: &mut O,
    rng: &mut R,
) {
    let (lo, hi) = config.bounds;
    let s = config.swarm_size;
    let before = state.global_best_fitness;

    if state.stagnation_flag {
        state.current_group_size = config.group_sizes[rng.random_range(0..config.group_sizes.len())];
        state.group_assignment.shuffle(rng);
    }

    let assignment = state.group_assignment.clone();
    let cauchy = Cauchy::new(0.0, 1.0).expect("unit Cauchy");
    for group in assignment.chunks(state.current_group_size) {
        // Batch layout: positions for every particle, then the personal bests
        // whose group slice differs from the position.
        let mut batch: Vec<Vec<f64>> = Vec::with_capacity(2 * s);
        let mut pb_slot = vec![None; s];
        for i in 0..s {
            let mut c = state.global_best.clone();
            for &d in group {
                c[d] = state.positions[i][d];
            }
            batch.push(c);
        }
        for i in 0..s {
            if group.iter().any(|&d| state.personal_bests[i][d] != state.positions[i][d]) {
                let mut c = state.global_best.clone();
                for &d in group {
                    c[d] = state.personal_bests[i][d];
                }
                pb_slot[i] = Some(batch.len());
                batch.push(c);
            }
        }
        let fit = evaluate(state, objective, &batch);

        for i in 0..s {
            let fx = fit[i];
            let fy = pb_slot[i].map_or(fx, |k| fit[k]);
            if fx < fy {
                for &d in group {
                    state.personal_bests[i][d] = state.positions[i][d];
                }
                state.personal_best_fitness[i] = fx;
            } else {
                state.personal_best_fitness[i] = fy;
            }
        }

        let mut best = 0;
        for i in 1..s {
            if state.personal_best_fitness[i] < state.personal_best_fitness[best] {
                best = i;
            }
        }
        if state.personal_best_fitness[best] < state.global_best_fitness {
            for &d in group {
                state.global_best[d] = state.personal_bests[best][d];
            }
            state.global_best_fitness = state.personal_best_fitness[best];
        }

        // Ring neighbourhood of radius 1; ties keep the particle itself.
        let local: Vec<usize> = (0..s)
            .map(|i| {
                let left = (i + s - 1) % s;
                let right = (i + 1) % s;
                let mut b = i;
                for j in [left, right] {
                    if state.personal_best_fitness[j] < state.personal_best_fitness[b] {
                        b = j;
                    }
                }
                b
            })
            .collect();

        for i in 0..s {
            let lb = local[i];
            for &d in group {
                let pb = state.personal_bests[i][d];
                let l = state.personal_bests[lb][d];
                let spread = (pb - l).abs();
                let x = if rng.random::<f64>() < 0.5 {
                    pb + cauchy.sample(rng) * spread
                } else {
                    let z: f64 = StandardNormal.sample(rng);
                    l + z * spread
                };
                state.positions[i][d] = reflect(x, lo, hi);
            }
        }
    }

    state.stagnation_flag = !(state.global_best_fitness < before);
    state.generation += 1;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationRecord {
    pub run: usize,
    pub generation: usize,
    pub best_fitness: f64,
    /// Cumulative objective calls in this run.
    pub evaluations: u64,
    pub group_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub best_vector: Vec<f64>,
    pub best_fitness: f64,
    pub history: Vec<GenerationRecord>,
    pub evaluations: u64,
    pub nan_warnings: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best_vector: Vec<f64>,
    pub best_fitness: f64,
    /// History of the winning run.
    pub history: Vec<GenerationRecord>,
    pub evaluations: u64,
    pub nan_warnings: u64,
    pub runs: Vec<RunSummary>,
}

pub type ProgressSink<'a> = &'a mut dyn FnMut(&GenerationRecord) -> ControlFlow<()>;

/// Seed of restart `run`; run 0 uses the configured seed's swarm stream.
pub fn run_seed(config: &SwarmConfig, run: usize) -> u64 {
    if run == 0 {
        config.seed
    } else {
        derive_seed(config.seed, run as u64)
    }
}

/// Runs `restarts` independent swarms and returns the best.
///
/// The progress sink sees every generation record and may stop the current
/// run early by returning `ControlFlow::Break`.
pub fn optimize<O: Objective>(
    objective: &mut O,
    config: &SwarmConfig,
    mut progress: Option<ProgressSink<'_>>,
) -> Result<OptimizeResult> {
    config.validate()?;
    let mut runs = Vec::with_capacity(config.restarts);
    for run in 0..config.restarts {
        let seed = run_seed(config, run);
        let mut rng: ChaCha8Rng = rng_from(seed, salt::SWARM);
        let mut state = SwarmState::initialize(config, &mut rng)?;
        let mut history = Vec::with_capacity(config.iterations);
        for _ in 0..config.iterations {
            step(&mut state, config, objective, &mut rng);
            let rec = GenerationRecord {
                run,
                generation: state.generation - 1,
                best_fitness: state.global_best_fitness,
                evaluations: state.evaluations,
                group_size: state.current_group_size,
            };
            history.push(rec);
            if let Some(sink) = progress.as_mut() {
                if sink(&rec).is_break() {
                    break;
                }
            }
        }
        runs.push(RunSummary {
            seed,
            best_vector: state.global_best,
            best_fitness: state.global_best_fitness,
            history,
            evaluations: state.evaluations,
            nan_warnings: state.nan_warnings,
        });
    }
    let mut win = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.best_fitness < runs[win].best_fitness {
            win = k;
        }
    }
    Ok(OptimizeResult {
        best_vector: runs[win].best_vector.clone(),
        best_fitness: runs[win].best_fitness,
        history: runs[win].history.clone(),
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        nan_warnings: runs.iter().map(|r| r.nan_warnings).sum(),
        runs,
    })
}

/// Best of `budget` uniform samples in the box; the baseline CCPSO2 is
/// compared against.
pub fn random_search<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    dimensions: usize,
    bounds: (f64, f64),
    budget: u64,
    seed: u64,
) -> f64 {
    let mut rng: ChaCha8Rng = rng_from(seed, salt::BASELINE);
    let mut x = vec![0.0; dimensions];
    let mut best = f64::INFINITY;
    for _ in 0..budget {
        for v in &mut x {
            *v = rng.random_range(bounds.0..bounds.1);
        }
        let f = objective(&x);
        if f < best {
            best = f;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn cfg(d: usize) -> SwarmConfig {
        SwarmConfig {
            dimensions: d,
            ..SwarmConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(105).validate().is_ok());
        assert!(cfg(6).validate().is_err(), "group size 7 exceeds 6 dimensions");
        let mut c = cfg(10);
        c.swarm_size = 1;
        assert!(c.validate().is_err());
        let mut c = cfg(10);
        c.iterations = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(10);
        c.bounds = (1.0, 1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn reflection_stays_in_box() {
        assert_eq!(reflect(0.3, -1.0, 1.0), 0.3);
        assert!((reflect(1.25, -1.0, 1.0) - 0.75).abs() < 1e-15);
        assert!((reflect(-1.5, -1.0, 1.0) + 0.5).abs() < 1e-15);
        assert!((reflect(5.5, -1.0, 1.0) - 0.5).abs() < 1e-12);
        for x in [-1e12, 1e9 + 0.3, -7.77, f64::INFINITY, f64::NEG_INFINITY] {
            let r = reflect(x, -1.0, 1.0);
            assert!((-1.0..=1.0).contains(&r), "{x} -> {r}");
        }
    }

    #[test]
    fn sphere_history_non_increasing_and_improves() {
        let c = cfg(105);
        let res = optimize(&mut FnObjective(sphere), &c, None).unwrap();
        assert_eq!(res.history.len(), 40);
        for w in res.history.windows(2) {
            assert!(w[1].best_fitness <= w[0].best_fitness);
        }
        assert!(res.history.last().unwrap().best_fitness < res.history[0].best_fitness);
        assert_eq!(res.best_fitness, sphere(&res.best_vector));
        assert!(res.evaluations <= c.evaluation_budget());
    }

    #[test]
    fn constant_objective_is_flat() {
        let res = optimize(&mut FnObjective(|_: &[f64]| 7.0), &cfg(12), None).unwrap();
        assert_eq!(res.best_fitness, 7.0);
        assert!(res.history.iter().all(|r| r.best_fitness == 7.0));
    }

    #[test]
    fn nan_counts_as_infinity() {
        let mut calls = 0u32;
        let obj = |x: &[f64]| {
            calls += 1;
            if x[0] > 0.0 {
                f64::NAN
            } else {
                sphere(x)
            }
        };
        let mut c = cfg(8);
        c.group_sizes = vec![1, 2];
        c.iterations = 5;
        let res = optimize(&mut FnObjective(obj), &c, None).unwrap();
        assert!(res.nan_warnings > 0);
        assert!(res.best_fitness.is_finite());
        assert!(res.best_vector[0] <= 0.0);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let c = SwarmConfig {
            seed: 99,
            iterations: 10,
            ..cfg(30)
        };
        let a = optimize(&mut FnObjective(sphere), &c, None).unwrap();
        let b = optimize(&mut FnObjective(sphere), &c, None).unwrap();
        assert_eq!(a.best_vector, b.best_vector);
        let c2 = SwarmConfig { seed: 100, ..c };
        let d = optimize(&mut FnObjective(sphere), &c2, None).unwrap();
        assert_ne!(a.best_vector, d.best_vector);
    }

    #[test]
    fn step_regroups_on_stagnation() {
        let c = cfg(105);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut st = SwarmState::initialize(&c, &mut rng).unwrap();
        assert!(st.stagnation_flag);
        let before = st.group_assignment.clone();
        let mut obj = FnObjective(sphere);
        step(&mut st, &c, &mut obj, &mut rng);
        assert_ne!(st.group_assignment, before);
        assert_eq!(st.group_count(), 105usize.div_ceil(st.current_group_size));
        let mut sorted = st.group_assignment.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..105).collect::<Vec<_>>());

        let g0 = st.global_best_fitness;
        st.stagnation_flag = true;
        let prev = st.group_assignment.clone();
        step(&mut st, &c, &mut obj, &mut rng);
        assert_ne!(st.group_assignment, prev);
        assert!(st.global_best_fitness <= g0);
        for f in &st.personal_best_fitness {
            assert!(st.global_best_fitness <= *f);
        }
    }

    #[test]
    fn no_regroup_without_stagnation() {
        let c = cfg(20);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut st = SwarmState::initialize(&c, &mut rng).unwrap();
        let mut obj = FnObjective(sphere);
        step(&mut st, &c, &mut obj, &mut rng);
        st.stagnation_flag = false;
        let prev = (st.group_assignment.clone(), st.current_group_size);
        step(&mut st, &c, &mut obj, &mut rng);
        assert_eq!((st.group_assignment.clone(), st.current_group_size), prev);
    }

    #[test]
    fn candidates_stay_in_bounds() {
        let c = SwarmConfig {
            bounds: (-0.5, 2.0),
            iterations: 8,
            ..cfg(15)
        };
        let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
        let obj = |x: &[f64]| {
            for &v in x {
                worst.0 = worst.0.min(v);
                worst.1 = worst.1.max(v);
            }
            x.iter().map(|v| (v - 3.0).powi(2)).sum()
        };
        optimize(&mut FnObjective(obj), &c, None).unwrap();
        assert!(worst.0 >= -0.5 && worst.1 <= 2.0, "{worst:?}");
    }

    #[test]
    fn early_stop_through_progress_sink() {
        let c = cfg(10);
        let mut seen = 0;
        let mut sink = |r: &GenerationRecord| {
            seen += 1;
            if r.generation == 2 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        };
        let res = optimize(&mut FnObjective(sphere), &c, Some(&mut sink)).unwrap();
        assert_eq!(res.history.len(), 3);
        assert_eq!(seen, 3);
    }

    #[test]
    fn restarts_pick_the_best_run() {
        let c = SwarmConfig {
            restarts: 3,
            iterations: 5,
            ..cfg(10)
        };
        let res = optimize(&mut FnObjective(sphere), &c, None).unwrap();
        assert_eq!(res.runs.len(), 3);
        let min = res.runs.iter().map(|r| r.best_fitness).fold(f64::INFINITY, f64::min);
        assert_eq!(res.best_fitness, min);
    }
}
