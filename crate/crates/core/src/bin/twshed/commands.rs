use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use triplet_watershed::data::{
    load_dataset, make_synthetic, save_dataset, EvalReport, RepeatSummary, SplitMask, SynthConfig,
};
use triplet_watershed::nn::Model;
use triplet_watershed::pipeline::{
    evaluate, prepare, read_raster, run, write_file, write_json, write_raster, Prepared, RunConfig,
    CONFIG_FILE, LOG_FILE, MODEL_FILE, PREDICTIONS_FILE, SPLIT_FILE, VOTES_FILE,
};
use triplet_watershed::Error;

use crate::args::*;
use crate::Failure;

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Configuration problems found before any work starts are usage errors.
fn as_usage(e: Error) -> Failure {
    match e {
        Error::Config(m) => Failure::Usage(m),
        e => Failure::Runtime(e),
    }
}

fn require(path: &Path, what: &str) -> Outcome {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(Error::Io {
        path: dir.to_path_buf(),
        source: e,
    }))
}

fn load_prepared(data: &Path, pca_k: Option<usize>, emst_dims: Option<usize>) -> Result<Prepared, Failure> {
    require(data, "dataset directory")?;
    let ds = load_dataset(data)?;
    if let Some(k) = pca_k {
        if k == 0 || k > ds.bands() {
            return Err(usage(format!("--pca-k {k} outside 1..={}", ds.bands())));
        }
    }
    prepare(ds, pca_k, emst_dims).map_err(as_usage)
}

fn load_model(path: &Path) -> Result<(Model, RunConfig), Failure> {
    require(path, "model file")?;
    let (model, header) = Model::load(path)?;
    let cfg: RunConfig = serde_json::from_value(header.config)
        .map_err(|e| Error::ModelFormat(format!("run config in header: {e}")))?;
    Ok((model, cfg))
}

pub fn make_synth(a: &SynthArgs) -> Outcome {
    if a.classes < 2 {
        return Err(usage(format!("--classes must be at least 2, got {}", a.classes)));
    }
    let cfg = SynthConfig {
        height: a.h,
        width: a.w,
        bands: a.bands,
        classes: a.classes,
        noise_sigma: a.noise_sigma,
        separation: a.separation,
        unlabeled_frac: a.unlabeled_frac,
        seed: a.seed,
    };
    let ds = make_synthetic(&cfg).map_err(as_usage)?;
    save_dataset(&ds, &a.out)?;
    let sizes: Vec<String> = ds
        .class_sizes()
        .iter()
        .enumerate()
        .map(|(c, n)| format!("{}:{n}", c + 1))
        .collect();
    println!("wrote {}x{}x{} cube to {}", a.h, a.w, a.bands, a.out.display());
    println!("class sizes {}", sizes.join(" "));
    Ok(())
}

pub fn train(a: &TrainArgs) -> Outcome {
    let mut cfg = RunConfig {
        pca_k: a.data.pca_k,
        emst_dims: a.data.emst_dims,
        split: a.split.mode(),
        ..RunConfig::default()
    }
    .with_seed(a.seed);
    cfg.train = a.train.config(a.seed);
    cfg.train.validate().map_err(as_usage)?;
    if let Some(r) = &a.resume {
        require(r, "model file")?;
    }
    let prep = load_prepared(&a.data.data, cfg.pca_k, cfg.emst_dims)?;
    let mask = prep.split(cfg.split, cfg.seed).map_err(as_usage)?;
    let mut model = match &a.resume {
        Some(path) => {
            let (m, _) = load_model(path)?;
            let want = [prep.features.bands, cfg.train.patch_size, cfg.train.patch_size];
            if m.input_shape() != want || m.output_dim() != cfg.train.embed_dim {
                return Err(usage(format!(
                    "resumed model takes {:?} -> {}, run needs {want:?} -> {}",
                    m.input_shape(),
                    m.output_dim(),
                    cfg.train.embed_dim
                )));
            }
            m
        }
        None => prep.new_model(&cfg.train)?,
    };
    println!("parameters {}", model.param_count());
    println!("orphan components {}", prep.orphan_components(&mask)?);

    create_dir(&a.out)?;
    mask.save(&a.out.join(SPLIT_FILE))?;
    write_json(&a.out.join(CONFIG_FILE), &cfg.to_json())?;
    let log_path = a.out.join(LOG_FILE);
    let mut log = fs::File::create(&log_path).map_err(|e| Error::Io {
        path: log_path.clone(),
        source: e,
    })?;
    let records = prep.train(&mask, &mut model, &cfg.train, |r| {
        let line = serde_json::to_string(r)?;
        writeln!(log, "{line}").map_err(|e| Error::Io {
            path: log_path.clone(),
            source: e,
        })?;
        if r.degenerate {
            eprintln!("warning: epoch {} watershed left fewer than two classes; SGD skipped", r.epoch);
        }
        eprintln!(
            "epoch {:>3}  loss {:.5}  out-of-box {:.4}  active {:.3}",
            r.epoch, r.mean_loss, r.out_of_box, r.active_fraction
        );
        Ok(())
    })?;
    model.round_to_f32();
    model.save(&a.out.join(MODEL_FILE), cfg.to_json())?;
    if let Some(last) = records.last() {
        println!("epochs {}  final out-of-box {:.4}", records.len(), last.out_of_box);
    }
    println!("model {}", a.out.join(MODEL_FILE).display());
    Ok(())
}

fn split_path(explicit: &Option<PathBuf>, model: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        model.parent().unwrap_or(Path::new(".")).join(SPLIT_FILE)
    })
}

pub fn predict(a: &PredictArgs) -> Outcome {
    let (model, cfg) = load_model(&a.model)?;
    let ens = a.ensemble(cfg.seed);
    ens.validate().map_err(as_usage)?;
    let split_file = split_path(&a.split, &a.model);
    require(&split_file, "split file")?;
    let prep = load_prepared(&a.data, cfg.pca_k, cfg.emst_dims)?;
    let mask = SplitMask::load(&split_file, &prep.dataset)?;
    println!("orphan components {}", prep.orphan_components(&mask)?);
    let pred = prep.predict(&model, &mask, cfg.train.patch_size, &ens)?;
    create_dir(&a.out)?;
    write_raster(&a.out.join(PREDICTIONS_FILE), &pred.raster)?;
    if a.votes {
        write_file(&a.out.join(VOTES_FILE), pred.votes.to_csv().as_bytes())?;
    }
    let meta = json!({
        "format_version": 1,
        "height": prep.dataset.height(),
        "width": prep.dataset.width(),
        "n_vertices": prep.edges.n_vertices(),
        "unlabeled_vertices": pred.unlabeled_vertices(),
        "vote_weighting": "uniform",
        "ensemble": ens,
        "run": cfg,
    });
    write_json(&a.out.join("predict.json"), &meta)?;
    println!("unlabeled vertices {}", pred.unlabeled_vertices());
    println!("predictions {}", a.out.join(PREDICTIONS_FILE).display());
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Outcome {
    require(&a.data, "dataset directory")?;
    require(&a.pred, "prediction file")?;
    require(&a.split, "split file")?;
    let ds = load_dataset(&a.data)?;
    let raster = read_raster(&a.pred, ds.n_pixels())?;
    let mask = SplitMask::load(&a.split, &ds)?;
    let metrics = evaluate(&ds, &raster, &mask)?;
    let mut config = json!({ "predictions": a.pred, "split": a.split });
    let map = match (&a.model, a.map) {
        (Some(path), true) => {
            let (model, cfg) = load_model(path)?;
            let prep = prepare(ds, cfg.pca_k, cfg.emst_dims)?;
            config["run"] = cfg.to_json();
            Some(prep.test_map(&model, &mask, cfg.train.patch_size, a.map_subsample, a.seed)?)
        }
        _ => None,
    };
    let report = EvalReport::new(metrics, &mask, map, config);
    report.write(&a.out)?;
    print_metrics(&report);
    Ok(())
}

fn print_metrics(r: &EvalReport) {
    let m = &r.metrics;
    let kappa = if m.kappa_defined { format!("{:.4}", m.kappa) } else { "undefined".into() };
    print!("OA {:.4}  AA {:.4}  kappa {kappa}", m.oa, m.aa);
    if let Some(map) = &r.map {
        print!("  MAP {:.4}", map.map);
    }
    println!();
    if m.n_unlabeled() > 0 {
        println!("unlabeled test pixels {}", m.n_unlabeled());
    }
}

pub fn graph_stats(a: &GraphStatsArgs) -> Outcome {
    let prep = load_prepared(&a.data.data, a.data.pca_k, a.data.emst_dims)?;
    let seeds: Vec<usize> = match &a.split {
        Some(path) => {
            require(path, "split file")?;
            let mask = SplitMask::load(path, &prep.dataset)?;
            prep.edges
                .vertex_pixels
                .iter()
                .enumerate()
                .filter(|&(_, &p)| mask.role(p) == triplet_watershed::data::Role::Train)
                .map(|(v, _)| v)
                .collect()
        }
        None => (0..prep.edges.n_vertices()).collect(),
    };
    let stats = prep.edges.stats(&seeds)?;
    if let Some(path) = &a.dump {
        write_file(path, prep.edges.to_graph()?.to_dump().as_bytes())?;
    }
    println!("{}", serde_json::to_string_pretty(&stats).map_err(Error::from)?);
    Ok(())
}

pub fn pipeline(a: &PipelineArgs) -> Outcome {
    if a.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let mut base = RunConfig {
        pca_k: a.data.pca_k,
        emst_dims: a.data.emst_dims,
        split: a.split.mode(),
        ..RunConfig::default()
    };
    base.train = a.train.config(a.seed);
    base.ensemble.n_estimators = a.ensemble.n_estimators;
    base.ensemble.feature_fraction = a.ensemble.feature_frac;
    base.ensemble.seed_fraction = a.ensemble_seed_frac;
    base.train.validate().map_err(as_usage)?;
    base.ensemble.validate().map_err(as_usage)?;
    let prep = load_prepared(&a.data.data, base.pca_k, base.emst_dims)?;
    println!("vertices {}  edges {}", prep.edges.n_vertices(), prep.edges.combined.len());

    create_dir(&a.out)?;
    let mut metrics = Vec::new();
    for r in 0..a.repeats {
        let cfg = base.clone().with_seed(a.seed + r as u64);
        let dir = a.out.join(format!("run_{r}"));
        let outcome = run(&prep, &cfg, Some(&dir)).map_err(as_usage)?;
        let map = if a.map {
            Some(prep.test_map(
                &outcome.model,
                &outcome.split,
                cfg.train.patch_size,
                a.map_subsample,
                cfg.seed,
            )?)
        } else {
            None
        };
        let report = EvalReport::new(outcome.metrics.clone(), &outcome.split, map, cfg.to_json());
        report.write(&dir)?;
        print!("run {r} seed {}  epochs {}  ", cfg.seed, outcome.records.len());
        print_metrics(&report);
        metrics.push(outcome.metrics);
    }
    let summary = RepeatSummary::from_reports(&metrics);
    write_json(
        &a.out.join("summary.json"),
        &json!({ "summary": summary, "config": base.to_json() }),
    )?;
    println!(
        "OA {:.4} ± {:.4}  AA {:.4} ± {:.4}  kappa {:.4} ± {:.4}",
        summary.oa.mean, summary.oa.stdev, summary.aa.mean, summary.aa.stdev, summary.kappa.mean,
        summary.kappa.stdev
    );
    Ok(())
}
