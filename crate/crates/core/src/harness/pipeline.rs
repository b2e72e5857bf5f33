//! The end-to-end reproduction driver: ingest, split, binarize, model
//! selection, purity, synthesis, case assembly, classifier sweeps, and the
//! case comparison — every intermediate artifact written under one output
//! directory together with a manifest of content digests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::classifiers::knn::knn_sweep;
use crate::classifiers::mln::{mln_init, mln_to_bytes, mln_train, TrainHistory};
use crate::dataset::{
    binarize, load_idx_images, load_idx_labels, normalize, select_indices, serialize_idx_images,
    serialize_idx_labels, SplitSpec,
};
use crate::error::{Error, Result};
use crate::harness::config::PipelineConfig;
use crate::harness::manifest::{sha256_file, sha256_hex, Manifest, StageRecord};
use crate::harness::reports::{
    case_comparison, misclass_share, run_classifier, Algorithm, CaseComparisonReport,
    ClassifierParams, MisclassShareTable, STREAM_MLN_INIT, STREAM_MLN_SHUFFLE,
};
use crate::mixture::{
    aic_score, e_step, free_parameters, log_likelihood, model_to_bytes, read_model, select_k,
    BernoulliMixture, FitConfig, ModelSelectionReport,
};
use crate::seeding::derive_seed;
use crate::sublabels::{
    centroid_pgm, hard_assign, purity_report, strong_sublabels, StrongRule, StrongSubLabelSet,
    SubLabelReport,
};
use crate::synthesis::{assemble_case, bootstrap_synthesize, CaseId};

/// Everything a pipeline run produced, kept in memory for callers that want
/// to assert on it; the same data lives in the artifact directory.
pub struct PipelineOutcome {
    pub selection: Option<ModelSelectionReport>,
    pub model: BernoulliMixture,
    pub model_loglik: f64,
    pub purity: Vec<SubLabelReport>,
    pub strong: StrongSubLabelSet,
    pub batch_len: usize,
    pub knn_sweep: crate::classifiers::knn::KnnSweepReport,
    pub mln_history: TrainHistory,
    pub knn_share: MisclassShareTable,
    pub mln_share: MisclassShareTable,
    pub cases: CaseComparisonReport,
    pub manifest: Manifest,
}

type StageResult<T> = std::result::Result<T, (&'static str, Error)>;

fn at<T>(stage: &'static str, r: Result<T>) -> StageResult<T> {
    r.map_err(|e| (stage, e))
}

struct ArtifactDir<'a> {
    dir: &'a Path,
}

impl<'a> ArtifactDir<'a> {
    fn write(
        &self,
        outputs: &mut BTreeMap<String, String>,
        name: &str,
        bytes: &[u8],
    ) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }
}

/// Runs the full pipeline. The manifest is written even when a stage fails,
/// with `failed_stage` marking where the run stopped.
pub fn pipeline_run(config: &PipelineConfig) -> Result<PipelineOutcome> {
    std::fs::create_dir_all(&config.out_dir)?;
    let mut manifest = Manifest::new(config.echo());
    match pipeline_inner(config, &mut manifest) {
        Ok(mut outcome) => {
            manifest.write(&config.out_dir.join("manifest.json"))?;
            outcome.manifest = manifest;
            Ok(outcome)
        }
        Err((stage, err)) => {
            manifest.failed_stage = Some(stage.to_string());
            manifest.error = Some(err.to_string());
            let _ = manifest.write(&config.out_dir.join("manifest.json"));
            Err(Error::Stage {
                stage,
                source: Box::new(err),
            })
        }
    }
}

fn pipeline_inner(
    config: &PipelineConfig,
    manifest: &mut Manifest,
) -> StageResult<PipelineOutcome> {
    let artifacts = ArtifactDir {
        dir: &config.out_dir,
    };
    if config.validation == 0 {
        return Err((
            "config",
            Error::Config("pipeline needs a non-empty validation set".into()),
        ));
    }

    // ── ingest ──────────────────────────────────────────────────────────
    let stage = "ingest";
    let images = at(stage, load_idx_images(&config.images))?;
    let labels = at(stage, load_idx_labels(&config.labels))?;
    if images.n() != labels.n() {
        return Err((
            stage,
            Error::LengthMismatch {
                left: images.n(),
                right: labels.n(),
            },
        ));
    }
    manifest
        .inputs
        .insert("images".into(), at(stage, sha256_file(&config.images))?);
    manifest
        .inputs
        .insert("labels".into(), at(stage, sha256_file(&config.labels))?);
    manifest.stages.push(StageRecord {
        name: stage.into(),
        outputs: BTreeMap::new(),
    });

    // ── split ───────────────────────────────────────────────────────────
    let stage = "split";
    let spec = SplitSpec {
        total: config.total,
        train: config.train,
        validation: config.validation,
        seed: config.seed,
        policy: config.split_policy,
    };
    let selected = at(stage, select_indices(images.n(), &spec))?;
    let train_idx = &selected[..spec.train];
    let val_idx = &selected[spec.train..];
    let train_images = images.gather(train_idx);
    let train_labels = labels.gather(train_idx);
    let val_images = images.gather(val_idx);
    let val_labels = labels.gather(val_idx);
    // the selected pool in selection order: the mixture and the case arms
    // both see all `total` digits
    let pool_images = images.gather(&selected);
    let pool_labels = labels.gather(&selected);
    manifest.stages.push(StageRecord {
        name: stage.into(),
        outputs: BTreeMap::new(),
    });

    // ── binarize ────────────────────────────────────────────────────────
    let stage = "binarize";
    let pool_binary = binarize(&pool_images, config.threshold);
    manifest.stages.push(StageRecord {
        name: stage.into(),
        outputs: BTreeMap::new(),
    });

    // ── sweep-k or load model ───────────────────────────────────────────
    let fit_config = FitConfig {
        max_iter: config.max_iter,
        rel_tol: config.rel_tol,
    };
    let (selection, model, model_loglik, sweep_stage) = if let Some(path) = &config.model_in {
        let stage = "load-model";
        let model = at(stage, read_model(path))?;
        let ll = at(stage, log_likelihood(&pool_binary, &model))?;
        (None, model, ll, stage)
    } else {
        let stage = "sweep-k";
        let result = at(
            stage,
            select_k(
                &pool_binary,
                &config.k_grid,
                &config.fit_seeds,
                &fit_config,
                config.selection_rule,
            ),
        )?;
        let ll = result.best_fit.final_loglik();
        (Some(result.report), result.best_fit.model, ll, stage)
    };
    {
        let mut outputs = BTreeMap::new();
        if let Some(report) = &selection {
            let mut csv = String::from("k,seed,loglik,eta,aic_score\n");
            for e in &report.entries {
                writeln!(csv, "{},{},{},{},{}", e.k, e.seed, e.loglik, e.eta, e.aic_score)
                    .unwrap();
            }
            at(sweep_stage, artifacts.write(&mut outputs, "aic_selection.csv", csv.as_bytes()))?;
        }
        at(
            sweep_stage,
            artifacts.write(&mut outputs, "model.bmm", &model_to_bytes(&model)),
        )?;
        manifest.stages.push(StageRecord {
            name: sweep_stage.into(),
            outputs,
        });
    }

    // ── purity ──────────────────────────────────────────────────────────
    let stage = "purity";
    let gamma = at(stage, e_step(&pool_binary, &model))?;
    let assignment = hard_assign(&gamma);
    let purity = at(stage, purity_report(&assignment, &pool_labels, model.k()))?;
    {
        let mut outputs = BTreeMap::new();
        let mut csv = String::from(
            "component_id,size,purity,majority_label,count_0,count_1,count_2,count_3,count_4,count_5,count_6,count_7,count_8,count_9\n",
        );
        for r in &purity {
            let purity_field = r.purity.map_or(String::new(), |p| p.to_string());
            let majority_field = r.majority_label.map_or(String::new(), |m| m.to_string());
            write!(csv, "{},{},{},{}", r.component_id, r.size, purity_field, majority_field)
                .unwrap();
            for c in r.class_counts {
                write!(csv, ",{c}").unwrap();
            }
            csv.push('\n');
        }
        at(stage, artifacts.write(&mut outputs, "purity.csv", csv.as_bytes()))?;
        manifest.stages.push(StageRecord {
            name: stage.into(),
            outputs,
        });
    }

    // ── strong sub-labels ───────────────────────────────────────────────
    let stage = "strong-sublabels";
    let rule = StrongRule {
        min_purity: config.min_purity,
        min_size: config.min_size,
        target_label: config.target_label,
    };
    let strong = strong_sublabels(&purity, rule);
    {
        let mut outputs = BTreeMap::new();
        let mut csv = String::from("component_id,majority_label,size,purity\n");
        for e in &strong.entries {
            writeln!(csv, "{},{},{},{}", e.component_id, e.majority_label, e.size, e.purity)
                .unwrap();
        }
        at(stage, artifacts.write(&mut outputs, "strong_sublabels.csv", csv.as_bytes()))?;
        for e in &strong.entries {
            let pgm = at(stage, centroid_pgm(&model, e.component_id))?;
            let name = format!("centroids/component_{:04}.pgm", e.component_id);
            at(stage, artifacts.write(&mut outputs, &name, &pgm))?;
        }
        manifest.stages.push(StageRecord {
            name: stage.into(),
            outputs,
        });
    }

    // ── synthesize ──────────────────────────────────────────────────────
    let stage = "synthesize";
    let batch = at(
        stage,
        bootstrap_synthesize(
            &pool_images,
            &pool_labels,
            &assignment,
            &strong,
            config.n_per_sublabel,
            config.synth_seed,
        ),
    )?;
    {
        let mut outputs = BTreeMap::new();
        let synth_images = batch.to_image_set();
        let synth_labels = batch.to_label_set();
        at(
            stage,
            artifacts.write(
                &mut outputs,
                "synthetic-images.idx",
                &serialize_idx_images(&synth_images),
            ),
        )?;
        at(
            stage,
            artifacts.write(
                &mut outputs,
                "synthetic-labels.idx",
                &serialize_idx_labels(&synth_labels),
            ),
        )?;
        let mut csv = String::from("row,sub_label_id,parent_a,parent_b\n");
        for (row, p) in batch.provenance().iter().enumerate() {
            writeln!(csv, "{},{},{},{}", row, p.sub_label_id, p.parent_a, p.parent_b).unwrap();
        }
        at(
            stage,
            artifacts.write(&mut outputs, "synthetic-provenance.csv", csv.as_bytes()),
        )?;
        manifest.stages.push(StageRecord {
            name: stage.into(),
            outputs,
        });
    }

    // ── assemble cases ──────────────────────────────────────────────────
    let stage = "assemble-cases";
    let extra_needed = batch.len();
    let selected_set: std::collections::HashSet<usize> = selected.iter().copied().collect();
    // head-of-remaining-file: real digits for case C, then a case evaluation
    // set disjoint from every training arm
    let remaining: Vec<usize> = (0..images.n())
        .filter(|i| !selected_set.contains(i))
        .collect();
    if remaining.len() < extra_needed + config.validation {
        return Err((
            stage,
            Error::InsufficientData {
                requested: config.total + extra_needed + config.validation,
                available: images.n(),
            },
        ));
    }
    let extra_idx: Vec<usize> = remaining[..extra_needed].to_vec();
    let case_val_idx: Vec<usize> =
        remaining[extra_needed..extra_needed + config.validation].to_vec();
    let extra_images = images.gather(&extra_idx);
    let extra_labels = labels.gather(&extra_idx);
    let case_val_images = images.gather(&case_val_idx);
    let case_val_labels = labels.gather(&case_val_idx);
    let case_a = at(
        stage,
        assemble_case(CaseId::A, (&pool_images, &pool_labels), None, None),
    )?;
    let case_b = at(
        stage,
        assemble_case(CaseId::B, (&pool_images, &pool_labels), Some(&batch), None),
    )?;
    let case_c = at(
        stage,
        assemble_case(
            CaseId::C,
            (&pool_images, &pool_labels),
            Some(&batch),
            Some((&extra_images, &extra_labels)),
        ),
    )?;
    {
        let mut outputs = BTreeMap::new();
        for case in [&case_a, &case_b, &case_c] {
            let tag = case.case_id.letter().to_ascii_lowercase();
            at(
                stage,
                artifacts.write(
                    &mut outputs,
                    &format!("case-{tag}-images.idx"),
                    &serialize_idx_images(&case.images),
                ),
            )?;
            at(
                stage,
                artifacts.write(
                    &mut outputs,
                    &format!("case-{tag}-labels.idx"),
                    &serialize_idx_labels(&case.labels),
                ),
            )?;
        }
        manifest.stages.push(StageRecord {
            name: stage.into(),
            outputs,
        });
    }

    // ── classifier sweeps ───────────────────────────────────────────────
    let stage = "classifier-sweeps";
    let train_features = normalize(&train_images);
    let val_features = normalize(&val_images);
    let sweep = at(
        stage,
        knn_sweep(
            (&train_features, train_labels.values()),
            (&val_features, val_labels.values()),
            &config.knn_k_grid,
            &config.knn_seeds,
        ),
    )?;
    let mln_init_model = mln_init(
        &ClassifierParams::default().mln_layout,
        derive_seed(config.mln_seed, STREAM_MLN_INIT),
    );
    let mut mln_config = config.mln_train_config(config.mln_epochs);
    mln_config.seed = derive_seed(config.mln_seed, STREAM_MLN_SHUFFLE);
    let mln_outcome = at(
        stage,
        mln_train(
            &mln_init_model,
            (&train_features, train_labels.values()),
            (&val_features, val_labels.values()),
            &mln_config,
        ),
    )?;

    // per-label misclassification shares of the selected section-3 models
    let knn_params = ClassifierParams {
        knn_k: sweep.best_k,
        ..ClassifierParams::default()
    };
    let knn_preds = at(
        stage,
        run_classifier(
            Algorithm::Knn,
            (&train_features, train_labels.values()),
            &val_features,
            val_labels.values(),
            config.knn_seeds[0],
            &knn_params,
        ),
    )?;
    let knn_share = at(stage, misclass_share(&knn_preds, val_labels.values()))?;
    let mln_preds = at(stage, mln_outcome.best_model.predict_batch(&val_features))?;
    let mln_share = at(stage, misclass_share(&mln_preds, val_labels.values()))?;

    {
        let mut outputs = BTreeMap::new();
        let mut csv = String::from("k,seed,errors,error_rate\n");
        for c in &sweep.cells {
            writeln!(csv, "{},{},{},{}", c.k, c.seed, c.errors, c.error_rate).unwrap();
        }
        at(stage, artifacts.write(&mut outputs, "knn_sweep.csv", csv.as_bytes()))?;

        let mut csv = String::from("k,mean_error_rate\n");
        for &(k, rate) in &sweep.mean_error_per_k {
            writeln!(csv, "{k},{rate}").unwrap();
        }
        at(
            stage,
            artifacts.write(&mut outputs, "knn_sweep_summary.csv", csv.as_bytes()),
        )?;

        let mut csv = String::from("epoch,train_loss,val_error\n");
        for e in &mln_outcome.history.epochs {
            writeln!(csv, "{},{},{}", e.epoch, e.train_loss, e.val_error).unwrap();
        }
        at(stage, artifacts.write(&mut outputs, "mln_epochs.csv", csv.as_bytes()))?;
        at(
            stage,
            artifacts.write(&mut outputs, "mln_best.mln", &mln_to_bytes(&mln_outcome.best_model)),
        )?;

        let mut csv = String::from("label,knn_share,mln_share\n");
        for label in 0..10usize {
            let k = knn_share
                .shares
                .map_or(String::new(), |s| s[label].to_string());
            let m = mln_share
                .shares
                .map_or(String::new(), |s| s[label].to_string());
            writeln!(csv, "{label},{k},{m}").unwrap();
        }
        at(
            stage,
            artifacts.write(&mut outputs, "misclass_share.csv", csv.as_bytes()),
        )?;

        let eta = free_parameters(model.k(), model.d());
        let mut selections: BTreeMap<String, serde_json::Value> = BTreeMap::new();
        selections.insert("mixture_k".into(), model.k().into());
        selections.insert("mixture_eta".into(), eta.into());
        selections.insert("mixture_loglik".into(), model_loglik.into());
        selections.insert(
            "mixture_aic_score".into(),
            aic_score(model_loglik, eta).into(),
        );
        selections.insert("knn_best_k".into(), sweep.best_k.into());
        selections.insert(
            "mln_best_epoch".into(),
            mln_outcome.history.best_epoch.into(),
        );
        let json = serde_json::to_string_pretty(&selections).expect("BTreeMap serializes");
        at(
            stage,
            artifacts.write(&mut outputs, "selections.json", json.as_bytes()),
        )?;
        manifest.stages.push(StageRecord {
            name: stage.into(),
            outputs,
        });
    }

    // ── case comparison ─────────────────────────────────────────────────
    // evaluated on held-out digits disjoint from every case training arm
    let stage = "compare-cases";
    let case_val_features = normalize(&case_val_images);
    let case_params = ClassifierParams {
        knn_k: config.knn_case_k,
        mln: config.mln_train_config(config.case_epochs),
        ..ClassifierParams::default()
    };
    let cases_report = at(
        stage,
        case_comparison(
            &[case_a, case_b, case_c],
            (&case_val_features, case_val_labels.values()),
            &[Algorithm::Knn, Algorithm::Mln],
            &config.case_seeds,
            &case_params,
        ),
    )?;
    {
        let mut outputs = BTreeMap::new();
        let mut csv = String::from(
            "case,algorithm,seed,total_errors,err_0,err_1,err_2,err_3,err_4,err_5,err_6,err_7,err_8,err_9\n",
        );
        for c in &cases_report.cells {
            write!(
                csv,
                "{},{},{},{}",
                c.case.letter(),
                c.algorithm.name(),
                c.seed,
                c.total_errors
            )
            .unwrap();
            for e in c.per_label_errors {
                write!(csv, ",{e}").unwrap();
            }
            csv.push('\n');
        }
        at(stage, artifacts.write(&mut outputs, "cases.csv", csv.as_bytes()))?;

        let mut csv = String::from("case,algorithm,mean_total_errors,mean_err_8\n");
        for case in [CaseId::A, CaseId::B, CaseId::C] {
            for algorithm in [Algorithm::Knn, Algorithm::Mln] {
                writeln!(
                    csv,
                    "{},{},{},{}",
                    case.letter(),
                    algorithm.name(),
                    cases_report.mean_total_errors(case, algorithm),
                    cases_report.mean_label_errors(case, algorithm, 8),
                )
                .unwrap();
            }
        }
        at(
            stage,
            artifacts.write(&mut outputs, "cases_summary.csv", csv.as_bytes()),
        )?;
        manifest.stages.push(StageRecord {
            name: stage.into(),
            outputs,
        });
    }

    Ok(PipelineOutcome {
        selection,
        model,
        model_loglik,
        purity,
        strong,
        batch_len: batch.len(),
        knn_sweep: sweep,
        mln_history: mln_outcome.history,
        knn_share,
        mln_share,
        cases: cases_report,
        manifest: Manifest::new(BTreeMap::new()), // replaced by pipeline_run
    })
}
