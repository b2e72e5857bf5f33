//! End-to-end CLI checks against the bundled fixture.

mod common;

use std::process::Command;

fn sublabel_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sublabel"))
}

#[test]
fn help_exits_cleanly() {
    let out = sublabel_cmd().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "fit",
        "sweep-k",
        "purity",
        "synthesize",
        "assemble-cases",
        "train-knn",
        "train-mln",
        "bias-variance",
        "compare-cases",
        "pipeline",
    ] {
        assert!(text.contains(sub), "help misses subcommand {sub}");
    }
}

#[test]
fn fit_purity_synthesize_chain() {
    let (dir, images, labels) = common::fixture_files("cli-chain");
    let out_dir = dir.join("chain");
    std::fs::create_dir_all(&out_dir).unwrap();

    let fit = sublabel_cmd()
        .args(["--out-dir", out_dir.to_str().unwrap()])
        .args(["fit", "--images", images.to_str().unwrap()])
        .args(["--take", "12", "--k", "1", "--seed", "0"])
        .output()
        .unwrap();
    assert!(
        fit.status.success(),
        "fit failed: {}",
        String::from_utf8_lossy(&fit.stderr)
    );
    assert!(out_dir.join("model.bmm").exists());

    let purity = sublabel_cmd()
        .args(["--out-dir", out_dir.to_str().unwrap()])
        .args(["purity", "--images", images.to_str().unwrap()])
        .args(["--labels", labels.to_str().unwrap()])
        .args(["--take", "12"])
        .args(["--model", out_dir.join("model.bmm").to_str().unwrap()])
        .args(["--centroids-dir", "centroids"])
        .output()
        .unwrap();
    assert!(
        purity.status.success(),
        "purity failed: {}",
        String::from_utf8_lossy(&purity.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("purity.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("component_id,size,purity"));
    // single component holds all 12 digits with majority label 8
    let row = lines.next().unwrap();
    assert!(row.starts_with("0,12,"), "row: {row}");
    assert!(row.contains(",8,"), "majority label expected in row: {row}");
    assert!(out_dir.join("centroids/component_0000.pgm").exists());

    let synth = sublabel_cmd()
        .args(["--out-dir", out_dir.to_str().unwrap()])
        .args(["synthesize", "--images", images.to_str().unwrap()])
        .args(["--labels", labels.to_str().unwrap()])
        .args(["--take", "12"])
        .args(["--model", out_dir.join("model.bmm").to_str().unwrap()])
        .args(["--target-label", "8"])
        .args(["--min-purity", "0.3", "--min-size", "2"])
        .args(["--n-per-sublabel", "4", "--seed", "1"])
        .output()
        .unwrap();
    assert!(
        synth.status.success(),
        "synthesize failed: {}",
        String::from_utf8_lossy(&synth.stderr)
    );
    let synth_images =
        sublabel::dataset::load_idx_images(&out_dir.join("synthetic-images.idx")).unwrap();
    assert_eq!(synth_images.n(), 4);
    let prov = std::fs::read_to_string(out_dir.join("synthetic-provenance.csv")).unwrap();
    assert_eq!(prov.lines().count(), 5, "header plus four rows");
}

#[test]
fn pipeline_smoke_runs_under_budget() {
    let (dir, images, labels) = common::fixture_files("cli-pipeline");
    let out_dir = dir.join("out");
    let config = format!(
        "images = {}\nlabels = {}\nout_dir = {}\n\
         total = 12\ntrain = 8\nvalidation = 4\n\
         k_grid = 1\nfit_seeds = 0\n\
         target_label = 8\nmin_purity = 0.3\nmin_size = 2\nn_per_sublabel = 4\n\
         knn_k_grid = 1,2,3\nknn_seeds = 0,1\n\
         mln_epochs = 3\nmln_batch_size = 4\ncase_epochs = 2\ncase_seeds = 0,1\n",
        images.display(),
        labels.display(),
        out_dir.display()
    );
    let config_path = dir.join("smoke.cfg");
    std::fs::write(&config_path, config).unwrap();

    let t0 = std::time::Instant::now();
    let out = sublabel_cmd()
        .args(["--config", config_path.to_str().unwrap(), "pipeline"])
        .output()
        .unwrap();
    let elapsed = t0.elapsed();
    assert!(
        out.status.success(),
        "pipeline failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        elapsed < std::time::Duration::from_secs(5),
        "smoke pipeline took {elapsed:?}"
    );
    for artifact in [
        "manifest.json",
        "aic_selection.csv",
        "model.bmm",
        "purity.csv",
        "strong_sublabels.csv",
        "synthetic-images.idx",
        "synthetic-provenance.csv",
        "case-a-images.idx",
        "case-b-labels.idx",
        "case-c-images.idx",
        "knn_sweep.csv",
        "mln_epochs.csv",
        "misclass_share.csv",
        "cases.csv",
        "cases_summary.csv",
        "selections.json",
    ] {
        assert!(out_dir.join(artifact).exists(), "missing artifact {artifact}");
    }
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"failed_stage\": null"));
}

#[test]
fn pipeline_failure_marks_stage_in_manifest() {
    let dir = std::env::temp_dir().join("sublabel-test-cli-fail");
    std::fs::create_dir_all(&dir).unwrap();
    let out_dir = dir.join("out");
    let config = format!(
        "images = {}\nlabels = {}\nout_dir = {}\n",
        dir.join("missing-images.idx").display(),
        dir.join("missing-labels.idx").display(),
        out_dir.display()
    );
    let config_path = dir.join("bad.cfg");
    std::fs::write(&config_path, config).unwrap();

    let out = sublabel_cmd()
        .args(["--config", config_path.to_str().unwrap(), "pipeline"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"failed_stage\": \"ingest\""));
}

#[test]
fn train_knn_on_fixture() {
    let (_dir, images, labels) = common::fixture_files("cli-knn");
    let out = sublabel_cmd()
        .args(["train-knn"])
        .args(["--train-images", images.to_str().unwrap()])
        .args(["--train-labels", labels.to_str().unwrap()])
        .args(["--val-images", images.to_str().unwrap()])
        .args(["--val-labels", labels.to_str().unwrap()])
        .args(["--k", "1", "--seed", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    // validation equals training and vectors are distinct, so k=1 is exact
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0 errors"), "stdout: {text}");
}

#[test]
fn rejects_wrong_files() {
    let (_dir, images, labels) = common::fixture_files("cli-badfiles");
    // labels where images belong
    let out = sublabel_cmd()
        .args(["fit", "--images", labels.to_str().unwrap(), "--k", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("magic"), "stderr: {err}");

    let out = sublabel_cmd()
        .args(["fit", "--images", images.to_str().unwrap()])
        .args(["--take", "999", "--k", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
