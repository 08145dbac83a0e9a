use std::path::Path;

use facetopo::config::RunConfig;
use facetopo::formats::*;
use facetopo::parallel::Pool;
use facetopo::Error;
use facetopo_core::ccpso2::GenerationRecord;
use facetopo_core::data::{synth_generate, Embeddings, PatchSet, SyntheticConfig};
use facetopo_core::exec::Executor;
use facetopo_core::model::{FaceTopoNet, ModelConfig};
use facetopo_core::seed::rng_from;
use facetopo_core::topology::{edge_count, prim_mst, WeightedCompleteGraph};
use proptest::prelude::*;
use tempfile::tempdir;

fn small_synth() -> SyntheticConfig {
    SyntheticConfig {
        n: 6,
        num_classes: 3,
        samples_per_class: 4,
        image_size: 30,
        patch_size: 10,
        ..SyntheticConfig::default()
    }
}

fn small_model() -> ModelConfig {
    ModelConfig {
        n: 6,
        num_classes: 3,
        hidden_dim: 8,
        stream_dim: 8,
        fusion_dim: 8,
        patch_size: 10,
        ..ModelConfig::default()
    }
}

proptest! {
    #[test]
    fn tree_json_round_trip_is_byte_identical(
        (n, w) in (2usize..25).prop_flat_map(|n| (Just(n), prop::collection::vec(-1.0f64..1.0, edge_count(n)))),
        root in any::<prop::sample::Index>(),
    ) {
        let g = WeightedCompleteGraph::new(n, w).unwrap();
        let tree = prim_mst(&g, root.index(n)).unwrap();
        let text = tree_to_json(&tree);
        let back = tree_from_json(&text).unwrap();
        prop_assert_eq!(&back, &tree);
        prop_assert_eq!(tree_to_json(&back), text);
    }
}

#[test]
fn tree_json_marks_root_with_minus_one() {
    let g = WeightedCompleteGraph::new(3, vec![0.1, 0.2, 0.3]).unwrap();
    let tree = prim_mst(&g, 1).unwrap();
    let file = TreeFile::from(&tree);
    assert_eq!(file.parent[1], -1);
    assert_eq!(file.root, 1);
}

#[test]
fn malformed_tree_json_reports_position() {
    let err = tree_from_json("{\n  \"n\": 2,\n  \"root\": oops\n}").unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    let cyclic = r#"{"n":2,"root":0,"parent":[-1,-1],"children":[[1],[]],"total_weight":0.0}"#;
    assert!(tree_from_json(cyclic).is_err());
    let short = r#"{"n":3,"root":0,"parent":[-1,0],"children":[[1],[]],"total_weight":0.0}"#;
    assert!(tree_from_json(short).is_err());
}

#[test]
fn checkpoint_round_trip_is_lossless() {
    let dir = tempdir().unwrap();
    let config = small_model();
    let (_, store) = FaceTopoNet::new(&config, &mut rng_from(9, 9)).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    write_checkpoint(&a, &config, &store).unwrap();
    let (model, loaded) = read_checkpoint(&a).unwrap();
    assert_eq!(loaded, store);
    assert_eq!(model.config, config);
    write_checkpoint(&b, &model.config, &loaded).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.contains(CHECKPOINT_FORMAT));
}

#[test]
fn checkpoint_rejects_foreign_format_and_layout() {
    let dir = tempdir().unwrap();
    let config = small_model();
    let (_, store) = FaceTopoNet::new(&config, &mut rng_from(1, 1)).unwrap();
    let path = dir.path().join("c.json");
    write_checkpoint(&path, &config, &store).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace(CHECKPOINT_FORMAT, "other-v0")).unwrap();
    assert!(read_checkpoint(&path).is_err());

    let wider = ModelConfig {
        hidden_dim: 9,
        ..config.clone()
    };
    write_checkpoint(&path, &wider, &store).unwrap();
    assert!(read_checkpoint(&path).is_err());
}

#[test]
fn landmark_csv_round_trip_and_errors() {
    let dir = tempdir().unwrap();
    let data = synth_generate(&small_synth()).unwrap();
    let path = dir.path().join("l.csv");
    write_landmark_csv(&path, &data.samples).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("id,label,x_0,y_0,x_1,y_1,"));
    assert_eq!(text.lines().count(), 1 + data.len());
    let back = read_landmark_csv(&path).unwrap();
    for (a, b) in back.iter().zip(&data.samples) {
        assert_eq!((&a.id, a.label), (&b.id, b.label));
        for (p, q) in a.coords.iter().zip(&b.coords) {
            assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        }
    }

    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[3].push_str(",0.5,0.5");
    std::fs::write(&path, lines.join("\n")).unwrap();
    match read_landmark_csv(&path).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 4),
        other => panic!("unexpected {other}"),
    }

    std::fs::write(&path, "id,label,x_0,y_0,x_1,y_1\na,0,1,2,3,nan\n").unwrap();
    let err = read_landmark_csv(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    std::fs::write(&path, "id,label,x_0,y_1\n").unwrap();
    assert!(matches!(read_landmark_csv(&path).unwrap_err(), Error::Parse { line: 1, .. }));
    std::fs::write(&path, "id,label,x_0,y_0,x_1,y_1\na,x,1,2,3,4\n").unwrap();
    assert!(read_landmark_csv(&path).is_err());
}

#[test]
fn landmark_csv_normalizes_on_load() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("raw.csv");
    std::fs::write(&path, "id,label,x_0,y_0,x_1,y_1,x_2,y_2\na,1,10,10,12,10,10,14\n").unwrap();
    let s = &read_landmark_csv(&path).unwrap()[0];
    let cx: f64 = s.coords.iter().map(|c| c[0]).sum();
    let cy: f64 = s.coords.iter().map(|c| c[1]).sum();
    let rms: f64 = s.coords.iter().map(|c| c[0] * c[0] + c[1] * c[1]).sum::<f64>() / 3.0;
    assert!(cx.abs() < 1e-12 && cy.abs() < 1e-12 && (rms - 1.0).abs() < 1e-12);
}

#[test]
fn patch_file_stores_f32() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("p.bin");
    let patches = PatchSet {
        size: 2,
        data: vec![0.0, 0.25, 0.5, 1.0, 0.1, 0.2, 0.3, 0.4],
    };
    write_patch_file(&path, &patches).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 32);
    let back = read_patch_file(&path, 2, 2).unwrap();
    for (a, b) in back.data.iter().zip(&patches.data) {
        assert_eq!(*a, *b as f32 as f64);
    }
    assert!(read_patch_file(&path, 2, 3).is_err());
}

#[test]
fn embedding_csv_round_trip() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let e = Embeddings {
        dim: 3,
        data: vec![0.1, -2.0, 3.5, 1e-9, 0.0, 7.25],
    };
    write_embedding_csv(&path, &e).unwrap();
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("dim_0,dim_1,dim_2\n"));
    assert_eq!(read_embedding_csv(&path).unwrap(), e);
    std::fs::write(&path, "dim_0,dim_1\n1,2\n3\n").unwrap();
    assert!(matches!(read_embedding_csv(&path).unwrap_err(), Error::Parse { line: 3, .. }));
}

#[test]
fn dataset_directory_round_trip() {
    let dir = tempdir().unwrap();
    let data = synth_generate(&small_synth()).unwrap();
    save_dataset(dir.path(), &data).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!((back.n, back.num_classes, back.len()), (data.n, data.num_classes, data.len()));
    assert_eq!(back.mirror_map, data.mirror_map);
    assert_eq!(back.patch_size(), Some(10));
    let a = back.samples[5].patches.as_ref().unwrap();
    let b = data.samples[5].patches.as_ref().unwrap();
    assert!(a.data.iter().zip(&b.data).all(|(x, y)| (x - y).abs() < 1e-6));

    let meta = dir.path().join("meta.json");
    let text = std::fs::read_to_string(&meta).unwrap();
    std::fs::write(&meta, text.replace("\"n\": 6", "\"n\": 7")).unwrap();
    assert!(load_dataset(dir.path()).is_err());
}

#[test]
fn dataset_with_embeddings_round_trip() {
    let dir = tempdir().unwrap();
    let mut data = synth_generate(&SyntheticConfig {
        patch_size: 0,
        ..small_synth()
    })
    .unwrap();
    for (i, s) in data.samples.iter_mut().enumerate() {
        s.embeddings = Some(Embeddings {
            dim: 2,
            data: (0..12).map(|k| (i * 12 + k) as f64 / 8.0).collect(),
        });
    }
    save_dataset(dir.path(), &data).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.samples[3].embeddings, data.samples[3].embeddings);
    assert!(back.samples[0].patches.is_none());
}

#[test]
fn missing_dataset_is_an_io_error() {
    let err = load_dataset(Path::new("/nonexistent/landmarks.csv")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/landmarks.csv"));
}

#[test]
fn reports_have_fixed_headers() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let history = vec![
        GenerationRecord {
            run: 0,
            generation: 0,
            best_fitness: 0.5,
            evaluations: 4,
            group_size: 1,
        },
        GenerationRecord {
            run: 0,
            generation: 1,
            best_fitness: 0.25,
            evaluations: 9,
            group_size: 1,
        },
    ];
    write_history_csv(&path, &history).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "generation,best_fitness,evaluations\n0,0.5,4\n1,0.25,9\n"
    );
    write_confusion_csv(&path, &[vec![3, 1], vec![0, 4]]).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "truth,pred_0,pred_1\n0,3,1\n1,0,4\n");
}

#[test]
fn run_config_keys_are_optional_and_checked() {
    let config = RunConfig::from_json(r#"{"seed": 7, "n": 8}"#).unwrap();
    assert_eq!((config.seed, config.n), (7, 8));
    assert_eq!(config.inner_epochs, RunConfig::default().inner_epochs);
    assert_eq!(RunConfig::from_json(&config.to_json()).unwrap(), config);
    let err = RunConfig::from_json(r#"{"swarm_sise": 3}"#).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("swarm_sise"));
    assert!(RunConfig::default().validate(None).is_ok());
    let bad = RunConfig {
        train_fraction: 1.0,
        ..RunConfig::default()
    };
    assert!(bad.validate(None).is_err());
}

#[test]
fn default_config_is_the_desk_study() {
    let c = RunConfig::default();
    assert_eq!((c.n, c.num_classes, c.samples_per_class), (15, 4, 200));
    assert_eq!(c.noise_std, 0.05);
    assert_eq!(c.baseline_trees, 20);
}

#[test]
fn pool_keeps_input_order() {
    let items: Vec<u64> = (0..200).collect();
    for workers in [1, 3, 8] {
        let pool = Pool::new(workers).unwrap();
        let out = pool.map(&items, |&x| {
            std::thread::sleep(std::time::Duration::from_micros((x * 37) % 50));
            x * x
        });
        assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
    }
    assert!(Pool::new(0).is_err());
}
