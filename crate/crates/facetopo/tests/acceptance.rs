//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use facetopo::config::RunConfig;
use facetopo::formats::{read_checkpoint, tree_from_json, tree_to_json, write_checkpoint};
use facetopo::run::{self, TrainOutcome};
use facetopo_core::ccpso2::{optimize, random_search, FnObjective, SwarmConfig};
use facetopo_core::data::{split, synth_generate, SyntheticConfig};
use facetopo_core::model::{gradient_check, FaceTopoNet, Fault, GradCheckSetup, ModelConfig};
use facetopo_core::nn::{focal_loss, softmax, AttentionHead, ParamStore};
use facetopo_core::seed::rng_from;
use facetopo_core::topology::{
    brute_force_mst, chain_tree, edge_count, euler_tour, prim_mst, prufer_edges, selection_matrix, SpanningTree,
    WeightedCompleteGraph,
};
use facetopo_core::trainer::{cross_tree_eval, inner_train, mean_rr, spread, TrainConfig};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn random_graph(rng: &mut impl Rng, n: usize) -> WeightedCompleteGraph {
    let w = (0..edge_count(n)).map(|_| rng.random_range(-1.0..1.0)).collect();
    WeightedCompleteGraph::new(n, w).unwrap()
}

fn mst_oracle() -> Verdict {
    let t = Instant::now();
    let mut rng = rng_from(1, 1);
    let mut mismatches = 0;
    for k in 0..200 {
        let n = 3 + k % 4;
        let g = random_graph(&mut rng, n);
        let prim = prim_mst(&g, 0).unwrap();
        let brute = brute_force_mst(&g).unwrap();
        if prim.total_weight() != brute.total_weight() {
            mismatches += 1;
        }
    }
    let elapsed = t.elapsed();
    verdict(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("200 graphs, {mismatches} weight mismatches, {} (limit 10 s)", secs(elapsed)),
    )
}

fn random_tree(rng: &mut impl Rng, n: usize, k: usize) -> SpanningTree {
    let root = rng.random_range(0..n);
    if k.is_multiple_of(2) || n < 3 {
        prim_mst(&random_graph(rng, n), root).unwrap()
    } else {
        let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
        SpanningTree::from_edges(n, root, &prufer_edges(n, &code).unwrap(), None).unwrap()
    }
}

fn euler_invariants() -> Verdict {
    let t = Instant::now();
    let mut rng = rng_from(2, 2);
    let mut failures = 0;
    for k in 0..500 {
        let n = rng.random_range(2..=50);
        let tree = random_tree(&mut rng, n, k);
        let seq = euler_tour(&tree);
        let v = seq.vertices();
        let mut ok = v.len() == 2 * n - 1 && v[0] == tree.root() && v[2 * n - 2] == tree.root();
        ok &= v
            .windows(2)
            .all(|w| tree.parent(w[0]) == Some(w[1]) || tree.parent(w[1]) == Some(w[0]));
        ok &= (0..n).all(|u| v.iter().filter(|&&x| x == u).count() == tree.degree(u) + usize::from(u == tree.root()));
        if !ok {
            failures += 1;
        }
    }
    let elapsed = t.elapsed();
    verdict(
        failures == 0 && elapsed < Duration::from_secs(5),
        format!("500 trees with n in 2..=50, {failures} violations, {} (limit 5 s)", secs(elapsed)),
    )
}

fn nine_node_traversal() -> Verdict {
    let edges = [(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6), (6, 7), (6, 8)];
    let tree = SpanningTree::from_edges(9, 0, &edges, None).unwrap();
    let got = euler_tour(&tree).to_one_based_string();
    let expected = "1-2-3-2-1-4-5-4-1-6-7-8-7-9-7-6-1";
    verdict(got == expected, format!("traversal {got}"))
}

fn gradient_check_criterion() -> Verdict {
    let t = Instant::now();
    let setup = GradCheckSetup {
        n: 6,
        num_classes: 3,
        hidden_dim: 32,
        samples: 2,
        step: 1e-4,
    };
    let report = gradient_check(setup, 0, Fault::None).unwrap();
    let worst = report.worst().unwrap();
    let elapsed = t.elapsed();
    verdict(
        worst.rel_error < 1e-4 && elapsed < Duration::from_secs(60),
        format!(
            "T = {}, {} blocks, worst {} at {:.3e} (limit 1e-4), {} (limit 60 s)",
            2 * setup.n - 1,
            report.blocks.len(),
            worst.name,
            worst.rel_error,
            secs(elapsed)
        ),
    )
}

fn focal_loss_criterion() -> Verdict {
    let mut rng = rng_from(5, 5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.random_range(2..10);
        let z: Vec<f64> = (0..k).map(|_| rng.random_range(-4.0..4.0)).collect();
        let p = softmax(&z);
        let target = rng.random_range(0..k);
        let ce = -p[target].ln();
        worst = worst.max((focal_loss(&p, target, 0.0, 1.0).unwrap() - ce).abs());
    }
    let half = focal_loss(&[0.5, 0.3, 0.2], 0, 2.0, 0.25).unwrap();
    let half_err = (half - 0.25 * 0.25 * std::f64::consts::LN_2).abs();
    verdict(
        worst <= 1e-12 && half_err <= 1e-12,
        format!("max |FL - CE| = {worst:.1e} over 1000 draws, |FL(0.5) - 0.25^2 ln 2| = {half_err:.1e} (limit 1e-12)"),
    )
}

fn fusion_algebra() -> Verdict {
    let data = synth_generate(&SyntheticConfig {
        n: 6,
        num_classes: 3,
        samples_per_class: 5,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let config = ModelConfig {
        n: 6,
        num_classes: 3,
        ..ModelConfig::default()
    };
    let mut rng = rng_from(6, 6);
    let (model, store) = FaceTopoNet::new(&config, &mut rng).unwrap();
    let mut delta_err = 0.0f64;
    let mut eta_err = 0.0f64;
    let mut y_inside = true;
    for (k, s) in data.samples.iter().enumerate() {
        let tree = random_tree(&mut rng, 6, k);
        let u = selection_matrix(&euler_tour(&tree));
        let p = model.predict(&store, s, &u).unwrap();
        for w in [&p.structure_weights, &p.texture_weights].into_iter().flatten() {
            delta_err = delta_err.max((w.iter().sum::<f64>() - 1.0).abs());
        }
        eta_err = eta_err.max((p.fusion.eta[0] + p.fusion.eta[1] - 1.0).abs());
        y_inside &= p.fusion.y.iter().all(|v| *v > -1.0 && *v < 1.0);
    }
    let mut store = ParamStore::new();
    let head = AttentionHead::new(&mut store, "attn", 32, &mut rng);
    let row: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
    let steps = 11;
    let hidden: Vec<f64> = row.iter().copied().cycle().take(steps * 32).collect();
    let uniform_err = head
        .forward(&store, &hidden)
        .weights
        .iter()
        .map(|w| (w - 1.0 / steps as f64).abs())
        .fold(0.0, f64::max);
    verdict(
        delta_err < 1e-9 && eta_err < 1e-9 && y_inside && uniform_err < 1e-9,
        format!(
            "|sum delta - 1| = {delta_err:.1e}, |eta_T + eta_S - 1| = {eta_err:.1e}, y inside (-1, 1): {y_inside}, \
             |delta_i - 1/T| = {uniform_err:.1e} (limit 1e-9)"
        ),
    )
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn ccpso2_sanity() -> Verdict {
    let t = Instant::now();
    let mut monotone = true;
    let mut wins = 0;
    let (mut swarm_best, mut random_best) = (Vec::new(), Vec::new());
    for seed in 0..30 {
        let config = SwarmConfig {
            dimensions: 105,
            seed,
            ..SwarmConfig::default()
        };
        let res = optimize(&mut FnObjective(sphere), &config, None).unwrap();
        monotone &= res.history.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness);
        let baseline = random_search(sphere, 105, config.bounds, res.evaluations, seed);
        if res.best_fitness < baseline {
            wins += 1;
        }
        swarm_best.push(res.best_fitness);
        random_best.push(baseline);
    }
    let elapsed = t.elapsed();
    let (ms, mr) = (median(swarm_best), median(random_best));
    verdict(
        monotone && wins >= 24 && ms < mr && elapsed < Duration::from_secs(60),
        format!(
            "history non-increasing on all seeds: {monotone}, beats budget-matched random search on {wins}/30 \
             (need 24), median {ms:.3} vs {mr:.3}, {} (limit 60 s)",
            secs(elapsed)
        ),
    )
}

fn desk_study() -> Verdict {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::default();
    let mut log = std::io::sink();
    let summary = match run::train(&config, dir.path(), 1, false, &mut log).unwrap() {
        TrainOutcome::Finished(s) => s,
        TrainOutcome::AlreadyComplete => unreachable!(),
    };
    let elapsed = t.elapsed();
    let learned = summary.learned.recognition_rate;
    let (mean, spread) = (mean_rr(&summary.baseline), spread(&summary.baseline));
    verdict(
        summary.baseline.len() == 20 && spread > 0.0 && learned >= mean && elapsed < Duration::from_secs(1800),
        format!(
            "learned tree RR {learned:.4} vs 20 random trees mean {mean:.4} (spread {spread:.4}), \
             {} trainings, {} (limit 30 min)",
            summary.trainings,
            secs(elapsed)
        ),
    )
}

fn overfit() -> Verdict {
    let data = synth_generate(&SyntheticConfig::default()).unwrap();
    let indices: Vec<usize> = (0..64).map(|i| i * 12).collect();
    let small = data.subset(&indices);
    let config = TrainConfig {
        inner_epochs: 50,
        ..TrainConfig::default()
    };
    let r = inner_train(&chain_tree(15, 0).unwrap(), &small, &config).unwrap();
    let ratio = r.final_loss / r.initial_loss;
    verdict(
        ratio < 0.5,
        format!(
            "64 samples, 50 epochs: loss {:.4} -> {:.4}, ratio {ratio:.3} (limit 0.5)",
            r.initial_loss, r.final_loss
        ),
    )
}

fn serialization() -> Verdict {
    let mut rng = rng_from(10, 10);
    let mut trees_ok = true;
    for k in 0..100 {
        let n = rng.random_range(2..30);
        let tree = random_tree(&mut rng, n, k);
        let text = tree_to_json(&tree);
        let back = tree_from_json(&text).unwrap();
        trees_ok &= back == tree && tree_to_json(&back) == text;
    }

    let dir = tempfile::tempdir().unwrap();
    let model = ModelConfig {
        n: 6,
        num_classes: 3,
        ..ModelConfig::default()
    };
    let (_, store) = FaceTopoNet::new(&model, &mut rng).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    write_checkpoint(&a, &model, &store).unwrap();
    let (_, loaded) = read_checkpoint(&a).unwrap();
    write_checkpoint(&b, &model, &loaded).unwrap();
    let ckpt_ok = loaded == store && std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();

    let data = synth_generate(&SyntheticConfig {
        n: 6,
        num_classes: 3,
        samples_per_class: 12,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let (train, val) = split(&data, 0.75, 0).unwrap();
    let config = TrainConfig {
        inner_epochs: 2,
        model,
        ..TrainConfig::default()
    };
    let tree = random_tree(&mut rng, 6, 0);
    let direct = cross_tree_eval(&tree, &train, &val, &config).unwrap();
    let reloaded = cross_tree_eval(&tree_from_json(&tree_to_json(&tree)).unwrap(), &train, &val, &config).unwrap();
    let cross_ok = direct == reloaded && direct.recognition_rate.to_bits() == reloaded.recognition_rate.to_bits();
    verdict(
        trees_ok && ckpt_ok && cross_ok,
        format!("tree JSON round trip: {trees_ok}, checkpoint round trip: {ckpt_ok}, cross-tree metrics identical: {cross_ok}"),
    )
}

const DETERMINISM_CONFIG: &str = r#"{
  "n": 8, "num_classes": 3, "samples_per_class": 16, "image_size": 40, "patch_size": 10,
  "inner_epochs": 1, "swarm_size": 3, "iterations": 3, "group_sizes": [7, 28],
  "hidden_dim": 8, "stream_dim": 8, "fusion_dim": 8, "baseline_trees": 4
}"#;

fn run_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let bin = env!("CARGO_BIN_EXE_facetopo");
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("run-{workers}"));
        let status = Command::new(bin)
            .args(["--config", config.to_str().unwrap(), "--seed", "3", "--workers", workers, "train", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return verdict(false, format!("train --workers {workers} failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push(run_files(&out));
    }
    let same = outputs[0] == outputs[1];
    verdict(
        same && outputs[0].len() >= 6,
        format!("{} files compared, identical for --workers 1 and 4: {same}", outputs[0].len()),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("MST oracle equivalence", mst_oracle),
        ("Euler-tour invariants", euler_invariants),
        ("9-node traversal exactness", nine_node_traversal),
        ("full-model gradient check", gradient_check_criterion),
        ("focal loss", focal_loss_criterion),
        ("attention and fusion algebra", fusion_algebra),
        ("CCPSO2 sphere sanity", ccpso2_sanity),
        ("desk-scale tree study", desk_study),
        ("overfit smoke test", overfit),
        ("serialization round trips", serialization),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {:>2} {}: {} ({})", k + 1, if v.pass { "PASS" } else { "FAIL" }, name, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
