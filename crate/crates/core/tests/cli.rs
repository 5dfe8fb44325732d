use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use triplet_watershed::classifier::classify_single;
use triplet_watershed::data::{load_dataset, save_dataset, HsiDataset, SplitMask};
use triplet_watershed::graph::SeedSet;
use triplet_watershed::graph_build::reweight;
use triplet_watershed::nn::Model;
use triplet_watershed::pipeline::{prepare, read_raster};
use triplet_watershed::trainer::{embed_pixels, train_vertices_by_class, TrainData};

fn twshed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twshed")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = twshed(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn digest(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

fn synth(dir: &Path, size: &str) {
    ok(&["make-synth", "--out", p(dir), "--h", size, "--w", size, "--seed", "3"]);
}

const FAST: [&str; 6] = ["--patch-size", "1", "--batch-size", "64", "--embed-dim", "8"];

#[test]
fn make_synth_is_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    synth(&a, "16");
    synth(&b, "16");
    for f in ["cube.json", "cube.f32", "labels.u16"] {
        assert_eq!(digest(&a.join(f)), digest(&b.join(f)), "{f}");
    }
    let ds = load_dataset(&a).unwrap();
    assert_eq!((ds.height(), ds.width(), ds.bands(), ds.classes()), (16, 16, 8, 4));
}

#[test]
fn usage_errors_exit_with_two() {
    let t = tempfile::tempdir().unwrap();
    let out = twshed(&["make-synth", "--out", p(t.path()), "--classes", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = twshed(&["train", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));

    let data = t.path().join("d");
    synth(&data, "8");
    let missing = t.path().join("nope.twnet");
    let out = twshed(&["predict", "--data", p(&data), "--model", p(&missing), "--out", p(t.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn zero_epochs_saves_the_initial_model() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("d");
    synth(&data, "12");
    let run = t.path().join("run");
    let mut args = vec!["train", "--data", p(&data), "--out", p(&run), "--epochs", "0", "--seed", "7"];
    args.extend(FAST);
    let stdout = ok(&args);
    assert!(stdout.contains("parameters"));
    let (model, _) = Model::load(&run.join("model.twnet")).unwrap();
    let mut init = triplet_watershed::nn::build_model(
        &triplet_watershed::nn::Architecture::mlp(),
        8,
        1,
        8,
        7,
    )
    .unwrap();
    init.round_to_f32();
    assert_eq!(model.params(), init.params());
    assert_eq!(std::fs::read(run.join("train_log.jsonl")).unwrap(), b"");
}

#[test]
fn train_predict_eval_round_trip() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("d");
    synth(&data, "16");
    let run = t.path().join("run");
    let mut args = vec!["train", "--data", p(&data), "--out", p(&run), "--epochs", "3", "--seed", "2"];
    args.extend(FAST);
    ok(&args);
    let log = std::fs::read_to_string(run.join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["out_of_box"].as_f64().unwrap() <= 1.0);
    }

    // Degenerate ensemble through the CLI equals a single library watershed.
    let pred = t.path().join("pred");
    let model = run.join("model.twnet");
    ok(&[
        "predict", "--data", p(&data), "--model", p(&model), "--out", p(&pred),
        "--n-estimators", "1", "--seed-frac", "1", "--feature-frac", "1", "--votes",
    ]);
    let ds = load_dataset(&data).unwrap();
    let raster = read_raster(&pred.join("predictions.u16"), ds.n_pixels()).unwrap();
    assert_eq!(std::fs::metadata(pred.join("predictions.u16")).unwrap().len(), 16 * 16 * 2);
    assert!(std::fs::read_to_string(pred.join("votes.csv")).unwrap().starts_with("vertex,class0"));
    assert_eq!(raster, library_single(ds, &model, &run.join("split.u8")));

    let report = t.path().join("report");
    let stdout = ok(&[
        "eval", "--data", p(&data), "--pred", p(&pred.join("predictions.u16")),
        "--split", p(&run.join("split.u8")), "--out", p(&report),
        "--map", "--model", p(&model),
    ]);
    assert!(stdout.contains("OA"));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(report.join("report.json")).unwrap()).unwrap();
    assert!(json["map"]["map"].as_f64().unwrap() > 0.0);
    assert!(report.join("report.csv").exists());
}

fn library_single(ds: HsiDataset, model: &Path, split: &Path) -> Vec<u16> {
    let (model, _) = Model::load(model).unwrap();
    let mask = SplitMask::load(split, &ds).unwrap();
    let prep = prepare(ds, None, None).unwrap();
    let emb = embed_pixels(&model, &prep.features, &prep.edges.vertex_pixels, 1).unwrap();
    let mut g = prep.edges.to_graph().unwrap();
    reweight(&mut g, &emb).unwrap();
    let data = TrainData {
        features: &prep.features,
        edges: &prep.edges,
        labels: prep.dataset.labels(),
        split: &mask,
    };
    let seeds = SeedSet::from_pairs(
        train_vertices_by_class(&data)
            .into_iter()
            .flat_map(|(c, vs)| vs.into_iter().map(move |v| (v, c))),
    )
    .unwrap();
    let labels = classify_single(&g, &seeds).unwrap();
    let mut raster = vec![0u16; prep.dataset.n_pixels()];
    for (v, &px) in prep.edges.vertex_pixels.iter().enumerate() {
        raster[px] = labels.get(v).map_or(0, |c| c as u16 + 1);
    }
    raster
}

#[test]
fn eval_of_ground_truth_is_perfect() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("d");
    synth(&data, "12");
    let run = t.path().join("run");
    let mut args = vec!["train", "--data", p(&data), "--out", p(&run), "--epochs", "0"];
    args.extend(FAST);
    ok(&args);
    let ds = load_dataset(&data).unwrap();
    let truth = t.path().join("truth.u16");
    triplet_watershed::pipeline::write_raster(&truth, ds.labels()).unwrap();
    let report = t.path().join("report");
    let stdout = ok(&[
        "eval", "--data", p(&data), "--pred", p(&truth),
        "--split", p(&run.join("split.u8")), "--out", p(&report),
    ]);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["metrics"]["oa"], 1.0);
    assert_eq!(json["metrics"]["kappa"], 1.0);
    assert!(stdout.contains("1.0000"), "{stdout}");
}

#[test]
fn graph_stats_on_a_strip() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("strip");
    let ds = HsiDataset::new(1, 3, 2, 2, vec![0.0, 0.0, 1.0, 0.0, 5.0, 5.0], vec![1, 1, 2]).unwrap();
    save_dataset(&ds, &data).unwrap();
    let dump = t.path().join("graph.txt");
    let stdout = ok(&["graph-stats", "--data", p(&data), "--dump", p(&dump)]);
    let stats: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(stats["n_vertices"], 3);
    assert_eq!(stats["n_adjacency_edges"], 2);
    assert_eq!(stats["n_emst_edges"], 2);
    assert_eq!(stats["n_combined"], 2);
    assert_eq!(stats["n_connected_components"], 1);
    assert!(dump.exists());
}

#[test]
fn pipeline_writes_summary() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("d");
    synth(&data, "12");
    let out = t.path().join("out");
    let mut args = vec![
        "pipeline", "--data", p(&data), "--out", p(&out), "--epochs", "2", "--repeats", "2",
        "--n-estimators", "3",
    ];
    args.extend(FAST);
    ok(&args);
    assert!(out.join("run_0").join("model.twnet").exists());
    assert!(out.join("run_1").join("predictions.u16").exists());
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["runs"], 2);
}
