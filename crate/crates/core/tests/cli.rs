use std::path::{Path, PathBuf};
use std::process::Command as Process;

use hidam::cli::{cmd_predict, cmd_stats, cmd_sweep, cmd_synth, cmd_train, PredictArgs, StatsArgs, SweepArgs, SynthArgs, TrainArgs};
use hidam::graph::{resolve_all, view_groups};
use hidam::io::{load_checkpoint, load_dataset, read_lift, read_predictions, read_sweep, write_dataset};
use hidam::model::Scorer;
use hidam::pipeline::make_splits;
use hidam::synth::{generate, measure_lift, SynthConfig};
use hidam::train::{eval_seed, evaluate};

fn write(path: &Path, text: &str) -> PathBuf {
    std::fs::write(path, text).unwrap();
    path.to_path_buf()
}

/// Small synthetic dataset plus quick model and training configs.
struct Fixture {
    dir: tempfile::TempDir,
    manifest: PathBuf,
    model: PathBuf,
    train: PathBuf,
}

fn fixture(seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let synth = write(
        &dir.path().join("synth.toml"),
        "companies = 300\npersons = 150\nindustries = 8\nbase_rate = 0.1\n",
    );
    let manifest = cmd_synth(&SynthArgs {
        config: Some(synth),
        seed: Some(seed),
        companies: None,
        out: dir.path().join("data"),
    })
    .unwrap();
    let model = write(&dir.path().join("model.toml"), "dim = 8\nhidden_dim = 8\nneighbor_cap = 5\n");
    let train = write(&dir.path().join("train.toml"), "max_epochs = 3\nbatch_size = 64\nlearning_rate = 0.01\n");
    Fixture { dir, manifest, model, train }
}

fn train_args(f: &Fixture, out: &str, seed: u64) -> TrainArgs {
    TrainArgs {
        manifest: f.manifest.clone(),
        model_config: Some(f.model.clone()),
        train_config: Some(f.train.clone()),
        seed: Some(seed),
        holdout: Some(0.2),
        out: f.dir.path().join(out),
    }
}

fn predict_args(f: &Fixture, run: &str, ids: Option<PathBuf>, out: &str) -> PredictArgs {
    PredictArgs {
        checkpoint: f.dir.path().join(run).join("model.ckpt"),
        manifest: f.manifest.clone(),
        ids,
        seed: None,
        out: f.dir.path().join(out),
    }
}

fn bytes(p: PathBuf) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn reruns_produce_identical_files() {
    let f = fixture(1);
    cmd_train(&train_args(&f, "a", 9)).unwrap();
    cmd_train(&train_args(&f, "b", 9)).unwrap();
    let p = |n: &str| f.dir.path().join(n);
    assert_eq!(bytes(p("a/model.ckpt")), bytes(p("b/model.ckpt")));
    assert_eq!(bytes(p("a/history.csv")), bytes(p("b/history.csv")));
    cmd_predict(&predict_args(&f, "a", None, "pa.csv")).unwrap();
    cmd_predict(&predict_args(&f, "b", None, "pb.csv")).unwrap();
    assert_eq!(bytes(p("pa.csv")), bytes(p("pb.csv")));
    cmd_train(&train_args(&f, "c", 10)).unwrap();
    assert_ne!(bytes(p("a/model.ckpt")), bytes(p("c/model.ckpt")));
}

#[test]
fn loaded_checkpoint_reproduces_validation_auc() {
    let f = fixture(2);
    let args = train_args(&f, "run", 4);
    let ck = cmd_train(&args).unwrap();
    let loaded = load_checkpoint(&args.out.join("model.ckpt")).unwrap();
    let d = load_dataset(&f.manifest).unwrap();
    let splits = make_splits(d.labels.as_ref().unwrap(), 0.2, Some(0.2), 4).unwrap();
    let inputs = loaded.model.encode_inputs(&d.graph).unwrap();
    let val = splits.validation.resolve(&d.graph).unwrap();
    let m = evaluate(&loaded.model, &d.graph, &inputs, &val, eval_seed(4)).unwrap();
    let reported = ck.metrics.unwrap().val_auc.unwrap();
    assert!((m.auc.unwrap() - reported).abs() <= 1e-12);
    assert_eq!(loaded.metrics.unwrap().val_auc, Some(reported));

    // Training-set nodes score as at train time.
    let preds = predict_args(&f, "run", None, "p.csv");
    cmd_predict(&preds).unwrap();
    let rows = read_predictions(&preds.out).unwrap();
    assert_eq!(rows.seed, eval_seed(4));
    let by_id: std::collections::HashMap<_, _> = rows.rows.iter().map(|r| (r.id.clone(), r.score)).collect();
    let scores = loaded.model.predict(&d.graph, &inputs, &val.targets, eval_seed(4)).unwrap();
    for (t, s) in val.targets.iter().zip(scores) {
        let id = d.graph.node_store(0).ids()[*t as usize].clone();
        assert_eq!(by_id[&id], s);
    }
    assert!(rows.rows.iter().all(|r| r.score > 0.0 && r.score < 1.0));
}

#[test]
fn unknown_ids_are_skipped_with_nonzero_exit() {
    let f = fixture(3);
    cmd_train(&train_args(&f, "run", 1)).unwrap();
    let ids = write(&f.dir.path().join("ids.txt"), "C000001\nnobody\n# comment\nC000002\n");
    let out = f.dir.path().join("p.csv");
    let status = Process::new(env!("CARGO_BIN_EXE_hidam"))
        .args(["predict", "--checkpoint"])
        .arg(f.dir.path().join("run/model.ckpt"))
        .arg("--manifest")
        .arg(&f.manifest)
        .arg("--ids")
        .arg(&ids)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("nobody"));
    let rows = read_predictions(&out).unwrap().rows;
    assert_eq!(rows.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["C000001", "C000002"]);
}

#[test]
fn invalid_metapath_fails_before_training() {
    let f = fixture(4);
    let bad = write(&f.dir.path().join("bad.toml"), "metapaths = [\"CtC\", \"CxC\"]\n");
    let mut args = train_args(&f, "run", 1);
    args.model_config = Some(bad);
    let err = cmd_train(&args).unwrap_err().to_string();
    assert!(err.contains("CxC"), "{err}");
    assert!(!args.out.exists());
}

#[test]
fn stats_reports_every_link_type_and_feature_set() {
    let f = fixture(5);
    let out = f.dir.path().join("stats");
    cmd_stats(&StatsArgs { manifest: f.manifest.clone(), seed: 5, out: out.clone() }).unwrap();
    let cov = hidam::io::read_coverage(&out.join("coverage.csv")).unwrap();
    assert_eq!(cov.rows.len(), 5);
    assert!(cov.rows.iter().all(|r| (0.0..=1.0).contains(&r.coverage)));
    let miss = hidam::io::read_missing_rates(&out.join("missing_rates.csv")).unwrap();
    let t = &miss.rows[0];
    assert_eq!(t.rows.len(), 5);
    for r in &t.rows {
        assert!(r.filled.iter().all(|&x| x <= r.own));
    }

    // Lift over the emitted files equals the in-memory measurement.
    let file_lift = read_lift(&out.join("lift.csv")).unwrap().rows;
    let d = generate(&SynthConfig { companies: 300, persons: 150, industries: 8, base_rate: 0.1, seed: 5, ..Default::default() }).unwrap();
    let groups = view_groups(&resolve_all(&hidam::graph::MetaPathSpec::catalog(), d.graph.schema()).unwrap());
    let mem = measure_lift(&d.graph, &d.labels, &groups).unwrap();
    assert_eq!(file_lift.len(), mem.len());
    for (a, b) in file_lift.iter().zip(&mem) {
        assert_eq!((a.defaults_with, a.lift_percent, a.default_share), (b.defaults_with, b.lift_percent, b.default_share));
    }
}

#[test]
fn stats_on_an_empty_graph_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let schema = hidam::synth::synth_schema(&SynthConfig::default());
    let g = hidam::graph::build_graph(schema, &[], &[]).unwrap();
    let manifest = write_dataset(dir.path(), &g, None, &hidam::graph::MetaPathSpec::catalog(), &[]).unwrap();
    let err = cmd_stats(&StatsArgs { manifest, seed: 0, out: dir.path().join("s") }).unwrap_err();
    assert!(err.to_string().contains("zero companies"), "{err}");
}

#[test]
fn different_seeds_give_different_data_with_one_schema() {
    let a = fixture(6);
    let b = fixture(7);
    let read = |f: &Fixture, n: &str| bytes(f.manifest.parent().unwrap().join(n));
    assert_eq!(read(&a, "schema.toml"), read(&b, "schema.toml"));
    assert_ne!(read(&a, "nodes_Company.csv"), read(&b, "nodes_Company.csv"));
}

#[test]
fn single_setting_sweep_matches_train() {
    let f = fixture(8);
    let rows = cmd_sweep(&SweepArgs {
        manifest: f.manifest.clone(),
        model_config: Some(f.model.clone()),
        train_config: Some(f.train.clone()),
        seed: Some(3),
        holdout: Some(0.2),
        dims: vec![8],
        semantic_dims: vec![],
        out: f.dir.path().join("sweep.csv"),
    })
    .unwrap();
    assert_eq!(read_sweep(&f.dir.path().join("sweep.csv")).unwrap().rows, rows);

    let d = load_dataset(&f.manifest).unwrap();
    let ck = cmd_train(&train_args(&f, "run", 3)).unwrap();
    let splits = make_splits(d.labels.as_ref().unwrap(), 0.2, Some(0.2), 3).unwrap();
    let test = splits.test.unwrap().resolve(&d.graph).unwrap();
    let inputs = ck.model.encode_inputs(&d.graph).unwrap();
    let m = evaluate(&ck.model, &d.graph, &inputs, &test, eval_seed(3)).unwrap();
    assert_eq!(rows[0].auc, m.auc);
    assert_eq!(rows[0].ks, m.ks);
}

#[test]
fn new_companies_get_finite_scores() {
    let f = fixture(9);
    cmd_train(&train_args(&f, "run", 1)).unwrap();
    let data = f.manifest.parent().unwrap();
    let mut companies = std::fs::read_to_string(data.join("nodes_Company.csv")).unwrap();
    let width = companies.lines().next().unwrap().split(',').count() - 1;
    companies.push_str(&format!("NEW1,{}\n", vec!["0.5"; width].join(",")));
    std::fs::write(data.join("nodes_Company.csv"), companies).unwrap();
    let mut control = std::fs::read_to_string(data.join("links_control.csv")).unwrap();
    let width = control.lines().next().unwrap().split(',').count() - 2;
    control.push_str(&format!("P000000,NEW1,{}\n", vec![""; width].join(",")));
    std::fs::write(data.join("links_control.csv"), control).unwrap();
    let ids = write(&f.dir.path().join("ids.txt"), "NEW1\n");
    let args = predict_args(&f, "run", Some(ids), "p.csv");
    assert!(cmd_predict(&args).unwrap().skipped.is_empty());
    let rows = read_predictions(&args.out).unwrap().rows;
    assert_eq!(rows.len(), 1);
    assert!(rows[0].score.is_finite() && rows[0].score > 0.0 && rows[0].score < 1.0);
}
