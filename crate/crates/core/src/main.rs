//! Command-line driver for the sub-label experiment toolkit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sublabel::classifiers::knn::{knn_sweep, KnnModel};
use sublabel::classifiers::mln::{mln_init, mln_train, write_mln, PAPER_LAYOUT};
use sublabel::dataset::{
    binarize, load_idx_images, load_idx_labels, normalize, serialize_idx_images,
    serialize_idx_labels, ImageSet, LabelSet,
};
use sublabel::error::{Error, Result};
use sublabel::harness::{
    bias_variance_run, case_comparison, pipeline_run, Algorithm, ClassifierParams,
    PipelineConfig,
};
use sublabel::mixture::{
    aic_score, e_step, fit_em, free_parameters, read_model, select_k, write_model, FitConfig,
    SelectionRule,
};
use sublabel::seeding::derive_seed;
use sublabel::sublabels::{
    export_centroid, hard_assign, purity_report, strong_sublabels, StrongRule,
};
use sublabel::synthesis::{assemble_case, bootstrap_synthesize, CaseId};

#[derive(Parser)]
#[command(
    name = "sublabel",
    version,
    about = "Bernoulli-mixture sub-label discovery and bootstrap digit augmentation"
)]
struct Cli {
    /// Default RNG seed for subcommands that take one
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = automatic)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Directory that relative output paths are resolved against
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Pipeline configuration file (flat key = value lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// IDX image file (raw or gzip)
    #[arg(long)]
    images: PathBuf,

    /// IDX label file (raw or gzip)
    #[arg(long)]
    labels: PathBuf,

    /// Use only the first N records
    #[arg(long)]
    take: Option<usize>,
}

impl DataArgs {
    fn load(&self) -> Result<(ImageSet, LabelSet)> {
        let images = load_idx_images(&self.images)?;
        let labels = load_idx_labels(&self.labels)?;
        if images.n() != labels.n() {
            return Err(Error::LengthMismatch {
                left: images.n(),
                right: labels.n(),
            });
        }
        match self.take {
            Some(n) => Ok((images.take(n)?, labels.take(n)?)),
            None => Ok((images, labels)),
        }
    }
}

#[derive(Args)]
struct SplitDataArgs {
    #[arg(long)]
    train_images: PathBuf,
    #[arg(long)]
    train_labels: PathBuf,
    #[arg(long)]
    val_images: PathBuf,
    #[arg(long)]
    val_labels: PathBuf,
}

impl SplitDataArgs {
    #[allow(clippy::type_complexity)]
    fn load(&self) -> Result<((ImageSet, LabelSet), (ImageSet, LabelSet))> {
        let load_pair = |i: &Path, l: &Path| -> Result<(ImageSet, LabelSet)> {
            let images = load_idx_images(i)?;
            let labels = load_idx_labels(l)?;
            if images.n() != labels.n() {
                return Err(Error::LengthMismatch {
                    left: images.n(),
                    right: labels.n(),
                });
            }
            Ok((images, labels))
        };
        Ok((
            load_pair(&self.train_images, &self.train_labels)?,
            load_pair(&self.val_images, &self.val_labels)?,
        ))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit one Bernoulli mixture by EM and save the model
    Fit {
        /// IDX image file to fit on
        #[arg(long)]
        images: PathBuf,
        /// Use only the first N records
        #[arg(long)]
        take: Option<usize>,
        /// Binarization threshold
        #[arg(long, default_value_t = 100)]
        threshold: u8,
        /// Component count
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
        /// Output model path
        #[arg(long, default_value = "model.bmm")]
        out: PathBuf,
    },

    /// Fit a grid of component counts and score them
    SweepK {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        take: Option<usize>,
        #[arg(long, default_value_t = 100)]
        threshold: u8,
        /// Comma-separated component counts
        #[arg(long, value_delimiter = ',')]
        k_grid: Vec<usize>,
        /// Comma-separated fit seeds
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
        /// Seed aggregation: mean | best
        #[arg(long, default_value = "mean")]
        rule: String,
        #[arg(long, default_value = "aic_selection.csv")]
        out: PathBuf,
        /// Also save the selected fit here
        #[arg(long)]
        model_out: Option<PathBuf>,
    },

    /// Hard-assign digits to components and report purity per sub-label
    Purity {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 100)]
        threshold: u8,
        /// Fitted model file
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "purity.csv")]
        out: PathBuf,
        /// Export every component centroid as PGM into this directory
        #[arg(long)]
        centroids_dir: Option<PathBuf>,
    },

    /// Generate synthetic digits inside strong sub-labels
    Synthesize {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 100)]
        threshold: u8,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        target_label: Option<u8>,
        #[arg(long, default_value_t = 0.85)]
        min_purity: f64,
        #[arg(long, default_value_t = 30)]
        min_size: usize,
        #[arg(long, default_value_t = 100)]
        n_per_sublabel: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "synthetic-images.idx")]
        out_images: PathBuf,
        #[arg(long, default_value = "synthetic-labels.idx")]
        out_labels: PathBuf,
        #[arg(long, default_value = "synthetic-provenance.csv")]
        out_provenance: PathBuf,
    },

    /// Assemble the A/B/C case training sets
    AssembleCases {
        #[command(flatten)]
        data: DataArgs,
        /// Real digits per case (cases draw the first N records)
        #[arg(long)]
        total: usize,
        #[arg(long)]
        synth_images: PathBuf,
        #[arg(long)]
        synth_labels: PathBuf,
    },

    /// Classify with KNN, or sweep neighbor counts when a grid is given
    TrainKnn {
        #[command(flatten)]
        data: SplitDataArgs,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep these neighbor counts instead of a single run
        #[arg(long, value_delimiter = ',')]
        k_grid: Vec<usize>,
        /// Seeds for the sweep
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, default_value = "knn_sweep.csv")]
        out: PathBuf,
    },

    /// Train the multilayer network and save history plus the best model
    TrainMln {
        #[command(flatten)]
        data: SplitDataArgs,
        #[arg(long, default_value_t = 0.07)]
        lr: f64,
        #[arg(long, default_value_t = 0.9)]
        momentum: f64,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 100)]
        batch_size: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "mln_epochs.csv")]
        history_out: PathBuf,
        #[arg(long, default_value = "mln_best.mln")]
        model_out: PathBuf,
    },

    /// Count how often each validation digit is misclassified across seeds
    BiasVariance {
        #[command(flatten)]
        data: SplitDataArgs,
        /// knn | mln
        #[arg(long)]
        algorithm: String,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 3)]
        knn_k: usize,
        #[arg(long, default_value_t = 15)]
        epochs: usize,
        #[arg(long, default_value = "bias_variance.csv")]
        out: PathBuf,
    },

    /// Run KNN and MLN over assembled case datasets
    CompareCases {
        /// Directory holding case-{a,b,c}-{images,labels}.idx
        #[arg(long)]
        cases_dir: PathBuf,
        #[arg(long)]
        val_images: PathBuf,
        #[arg(long)]
        val_labels: PathBuf,
        #[arg(long, default_value_t = 3)]
        knn_k: usize,
        #[arg(long, default_value_t = 15)]
        epochs: usize,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, default_value = "cases.csv")]
        out: PathBuf,
    },

    /// Run the whole experiment from a config file
    Pipeline {},
}

fn resolve(out_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        out_dir.join(path)
    }
}

fn write_text(out_dir: &Path, path: &Path, text: &str) -> Result<PathBuf> {
    let full = resolve(out_dir, path);
    if let Some(parent) = full.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&full, text)?;
    Ok(full)
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .expect("thread pool is built once");
    }
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.clone();
    match cli.command {
        Command::Fit {
            images,
            take,
            threshold,
            k,
            seed,
            max_iter,
            rel_tol,
            out,
        } => {
            let mut set = load_idx_images(&images)?;
            if let Some(n) = take {
                set = set.take(n)?;
            }
            let binary = binarize(&set, threshold);
            let fit = fit_em(
                &binary,
                k,
                seed.unwrap_or(cli.seed),
                &FitConfig { max_iter, rel_tol },
            )?;
            let eta = free_parameters(k, binary.d());
            let loglik = fit.final_loglik();
            let path = resolve(&out_dir, &out);
            write_model(&fit.model, &path)?;
            println!(
                "fit K={k}: loglik={loglik:.3} eta={eta} aic_score={:.3} iterations={} converged={} -> {}",
                aic_score(loglik, eta),
                fit.iterations,
                fit.converged,
                path.display()
            );
        }

        Command::SweepK {
            images,
            take,
            threshold,
            k_grid,
            seeds,
            max_iter,
            rel_tol,
            rule,
            out,
            model_out,
        } => {
            let mut set = load_idx_images(&images)?;
            if let Some(n) = take {
                set = set.take(n)?;
            }
            let binary = binarize(&set, threshold);
            let rule: SelectionRule = rule.parse()?;
            let result = select_k(
                &binary,
                &k_grid,
                &seeds,
                &FitConfig { max_iter, rel_tol },
                rule,
            )?;
            let mut csv = String::from("k,seed,loglik,eta,aic_score\n");
            for e in &result.report.entries {
                writeln!(csv, "{},{},{},{},{}", e.k, e.seed, e.loglik, e.eta, e.aic_score)
                    .unwrap();
            }
            let path = write_text(&out_dir, &out, &csv)?;
            if let Some(model_out) = model_out {
                write_model(&result.best_fit.model, &resolve(&out_dir, &model_out))?;
            }
            println!(
                "sweep-k: best K = {} ({} fits) -> {}",
                result.report.best_k,
                result.report.entries.len(),
                path.display()
            );
        }

        Command::Purity {
            data,
            threshold,
            model,
            out,
            centroids_dir,
        } => {
            let (images, labels) = data.load()?;
            let model = read_model(&model)?;
            let binary = binarize(&images, threshold);
            let gamma = e_step(&binary, &model)?;
            let assignment = hard_assign(&gamma);
            let reports = purity_report(&assignment, &labels, model.k())?;
            let mut csv = String::from(
                "component_id,size,purity,majority_label,count_0,count_1,count_2,count_3,count_4,count_5,count_6,count_7,count_8,count_9\n",
            );
            for r in &reports {
                let purity = r.purity.map_or(String::new(), |p| p.to_string());
                let majority = r.majority_label.map_or(String::new(), |m| m.to_string());
                write!(csv, "{},{},{},{}", r.component_id, r.size, purity, majority).unwrap();
                for c in r.class_counts {
                    write!(csv, ",{c}").unwrap();
                }
                csv.push('\n');
            }
            let path = write_text(&out_dir, &out, &csv)?;
            if let Some(dir) = centroids_dir {
                let dir = resolve(&out_dir, &dir);
                std::fs::create_dir_all(&dir)?;
                for k in 0..model.k() {
                    export_centroid(&model, k, &dir.join(format!("component_{k:04}.pgm")))?;
                }
            }
            println!(
                "purity: {} non-empty components of {} -> {}",
                reports.iter().filter(|r| r.size > 0).count(),
                model.k(),
                path.display()
            );
        }

        Command::Synthesize {
            data,
            threshold,
            model,
            target_label,
            min_purity,
            min_size,
            n_per_sublabel,
            seed,
            out_images,
            out_labels,
            out_provenance,
        } => {
            let (images, labels) = data.load()?;
            let model = read_model(&model)?;
            let binary = binarize(&images, threshold);
            let gamma = e_step(&binary, &model)?;
            let assignment = hard_assign(&gamma);
            let reports = purity_report(&assignment, &labels, model.k())?;
            let strong = strong_sublabels(
                &reports,
                StrongRule {
                    min_purity,
                    min_size,
                    target_label,
                },
            );
            let batch = bootstrap_synthesize(
                &images,
                &labels,
                &assignment,
                &strong,
                n_per_sublabel,
                seed.unwrap_or(cli.seed),
            )?;
            let img_path = resolve(&out_dir, &out_images);
            let lbl_path = resolve(&out_dir, &out_labels);
            std::fs::write(&img_path, serialize_idx_images(&batch.to_image_set()))?;
            std::fs::write(&lbl_path, serialize_idx_labels(&batch.to_label_set()))?;
            let mut csv = String::from("row,sub_label_id,parent_a,parent_b\n");
            for (row, p) in batch.provenance().iter().enumerate() {
                writeln!(csv, "{},{},{},{}", row, p.sub_label_id, p.parent_a, p.parent_b)
                    .unwrap();
            }
            write_text(&out_dir, &out_provenance, &csv)?;
            println!(
                "synthesize: {} strong sub-labels x {} digits = {} -> {}",
                strong.entries.len(),
                n_per_sublabel,
                batch.len(),
                img_path.display()
            );
        }

        Command::AssembleCases {
            data,
            total,
            synth_images,
            synth_labels,
        } => {
            let (images, labels) = data.load()?;
            let pool_images = images.take(total)?;
            let pool_labels = labels.take(total)?;
            let synth_i = load_idx_images(&synth_images)?;
            let synth_l = load_idx_labels(&synth_labels)?;
            // case B: pool + synthetic (already-serialized batch re-attached as real bytes)
            let b_images = pool_images.concat(&synth_i)?;
            let b_labels = pool_labels.concat(&synth_l);
            // case C: pool + same count of held-out real digits
            let need = synth_i.n();
            if images.n() < total + need {
                return Err(Error::InsufficientData {
                    requested: total + need,
                    available: images.n(),
                });
            }
            let extra_idx: Vec<usize> = (total..total + need).collect();
            let c_images = pool_images.concat(&images.gather(&extra_idx))?;
            let c_labels = pool_labels.concat(&labels.gather(&extra_idx));

            let a = assemble_case(CaseId::A, (&pool_images, &pool_labels), None, None)?;
            for (tag, imgs, lbls) in [
                ('a', &a.images, &a.labels),
                ('b', &b_images, &b_labels),
                ('c', &c_images, &c_labels),
            ] {
                let ip = resolve(&out_dir, Path::new(&format!("case-{tag}-images.idx")));
                let lp = resolve(&out_dir, Path::new(&format!("case-{tag}-labels.idx")));
                std::fs::write(&ip, serialize_idx_images(imgs))?;
                std::fs::write(&lp, serialize_idx_labels(lbls))?;
                println!("case {}: {} digits -> {}", tag.to_ascii_uppercase(), imgs.n(), ip.display());
            }
        }

        Command::TrainKnn {
            data,
            k,
            seed,
            k_grid,
            seeds,
            out,
        } => {
            let ((train_i, train_l), (val_i, val_l)) = data.load()?;
            let train_f = normalize(&train_i);
            let val_f = normalize(&val_i);
            if k_grid.is_empty() {
                let model = KnnModel::new(&train_f, train_l.values(), k)?;
                let preds = model.classify_batch(&val_f, seed.unwrap_or(cli.seed))?;
                let errors = preds
                    .iter()
                    .zip(val_l.values())
                    .filter(|(p, t)| p != t)
                    .count();
                println!(
                    "knn k={k}: {errors} errors / {} = {:.4}",
                    val_f.n(),
                    errors as f64 / val_f.n() as f64
                );
            } else {
                let sweep_seeds = if seeds.is_empty() {
                    vec![seed.unwrap_or(cli.seed)]
                } else {
                    seeds
                };
                let report = knn_sweep(
                    (&train_f, train_l.values()),
                    (&val_f, val_l.values()),
                    &k_grid,
                    &sweep_seeds,
                )?;
                let mut csv = String::from("k,seed,errors,error_rate\n");
                for c in &report.cells {
                    writeln!(csv, "{},{},{},{}", c.k, c.seed, c.errors, c.error_rate).unwrap();
                }
                let path = write_text(&out_dir, &out, &csv)?;
                println!("knn sweep: best k = {} -> {}", report.best_k, path.display());
            }
        }

        Command::TrainMln {
            data,
            lr,
            momentum,
            epochs,
            batch_size,
            seed,
            history_out,
            model_out,
        } => {
            let ((train_i, train_l), (val_i, val_l)) = data.load()?;
            let train_f = normalize(&train_i);
            let val_f = normalize(&val_i);
            let seed = seed.unwrap_or(cli.seed);
            let init = mln_init(&PAPER_LAYOUT, derive_seed(seed, 0x101));
            let config = sublabel::classifiers::mln::TrainConfig {
                learning_rate: lr,
                momentum,
                epochs,
                batch_size,
                seed: derive_seed(seed, 0x102),
                ..Default::default()
            };
            let outcome = mln_train(
                &init,
                (&train_f, train_l.values()),
                (&val_f, val_l.values()),
                &config,
            )?;
            let mut csv = String::from("epoch,train_loss,val_error\n");
            for e in &outcome.history.epochs {
                writeln!(csv, "{},{},{}", e.epoch, e.train_loss, e.val_error).unwrap();
            }
            let path = write_text(&out_dir, &history_out, &csv)?;
            write_mln(&outcome.best_model, &resolve(&out_dir, &model_out))?;
            let best = &outcome.history.epochs[outcome.history.best_epoch - 1];
            println!(
                "mln: best epoch {} (val_error {:.4}) -> {}",
                outcome.history.best_epoch, best.val_error, path.display()
            );
        }

        Command::BiasVariance {
            data,
            algorithm,
            seeds,
            knn_k,
            epochs,
            out,
        } => {
            let ((train_i, train_l), (val_i, val_l)) = data.load()?;
            let train_f = normalize(&train_i);
            let val_f = normalize(&val_i);
            let algorithm: Algorithm = algorithm.parse()?;
            let mut params = ClassifierParams {
                knn_k,
                ..Default::default()
            };
            params.mln.epochs = epochs;
            let hist = bias_variance_run(
                algorithm,
                (&train_f, train_l.values()),
                (&val_f, val_l.values()),
                &seeds,
                &params,
            )?;
            let mut csv = String::from("recurrence,digits\n");
            for (r, &count) in hist.buckets.iter().enumerate().skip(1) {
                writeln!(csv, "{r},{count}").unwrap();
            }
            let path = write_text(&out_dir, &out, &csv)?;
            println!(
                "bias-variance ({}): {} distinct misclassified digits over {} seeds -> {}",
                algorithm.name(),
                hist.distinct_misclassified(),
                hist.seeds,
                path.display()
            );
        }

        Command::CompareCases {
            cases_dir,
            val_images,
            val_labels,
            knn_k,
            epochs,
            seeds,
            out,
        } => {
            let mut cases = Vec::new();
            for (tag, case_id) in [('a', CaseId::A), ('b', CaseId::B), ('c', CaseId::C)] {
                let images =
                    load_idx_images(&cases_dir.join(format!("case-{tag}-images.idx")))?;
                let labels =
                    load_idx_labels(&cases_dir.join(format!("case-{tag}-labels.idx")))?;
                let n = images.n();
                cases.push(sublabel::synthesis::CaseDataset {
                    case_id,
                    images,
                    labels,
                    real_count: n,
                    synthetic_count: 0,
                });
            }
            let val_i = load_idx_images(&val_images)?;
            let val_l = load_idx_labels(&val_labels)?;
            let val_f = normalize(&val_i);
            let mut params = ClassifierParams {
                knn_k,
                ..Default::default()
            };
            params.mln.epochs = epochs;
            let run_seeds = if seeds.is_empty() {
                (0..10).collect()
            } else {
                seeds
            };
            let report = case_comparison(
                &cases,
                (&val_f, val_l.values()),
                &[Algorithm::Knn, Algorithm::Mln],
                &run_seeds,
                &params,
            )?;
            let mut csv = String::from(
                "case,algorithm,seed,total_errors,err_0,err_1,err_2,err_3,err_4,err_5,err_6,err_7,err_8,err_9\n",
            );
            for c in &report.cells {
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
            let path = write_text(&out_dir, &out, &csv)?;
            for algorithm in [Algorithm::Knn, Algorithm::Mln] {
                println!(
                    "{}: mean label-8 errors A={:.2} B={:.2} C={:.2}",
                    algorithm.name(),
                    report.mean_label_errors(CaseId::A, algorithm, 8),
                    report.mean_label_errors(CaseId::B, algorithm, 8),
                    report.mean_label_errors(CaseId::C, algorithm, 8),
                );
            }
            println!("compare-cases -> {}", path.display());
        }

        Command::Pipeline {} => {
            let config_path = cli.config.ok_or_else(|| {
                Error::Config("pipeline requires --config <path>".into())
            })?;
            let mut config = PipelineConfig::from_file(&config_path)?;
            if out_dir != Path::new(".") {
                config.out_dir = out_dir.clone();
            }
            let outcome = pipeline_run(&config)?;
            println!(
                "pipeline: K={} | {} strong sub-labels | batch {} | knn best k {} | mln best epoch {}",
                outcome.model.k(),
                outcome.strong.entries.len(),
                outcome.batch_len,
                outcome.knn_sweep.best_k,
                outcome.mln_history.best_epoch,
            );
            for algorithm in [Algorithm::Knn, Algorithm::Mln] {
                println!(
                    "  {}: mean label-8 errors A={:.2} B={:.2} C={:.2}",
                    algorithm.name(),
                    outcome.cases.mean_label_errors(CaseId::A, algorithm, 8),
                    outcome.cases.mean_label_errors(CaseId::B, algorithm, 8),
                    outcome.cases.mean_label_errors(CaseId::C, algorithm, 8),
                );
            }
            println!(
                "  manifest: {}",
                config.out_dir.join("manifest.json").display()
            );
        }
    }
    Ok(())
}
