//! Quick statistics of the generated corpus: binary density, mixture scores
//! over a coarse K grid, classifier error structure. Used to sanity-check
//! generator settings at experiment scale.

use std::time::Instant;

use sublabel::classifiers::knn::knn_sweep;
use sublabel::classifiers::mln::{mln_init, mln_train, TrainConfig, PAPER_LAYOUT};
use sublabel::dataset::{binarize, normalize, subset_split, SplitSpec};
use sublabel::harness::{misclass_share, run_classifier, Algorithm, ClassifierParams};
use sublabel::mixture::{aic_score, fit_em, free_parameters, FitConfig};
use sublabel::seeding::derive_seed;
use sublabel::simulate::{digit_corpus, CorpusConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let stage = args.get(1).map(String::as_str).unwrap_or("all");

    let t0 = Instant::now();
    let (images, labels) = digit_corpus(&CorpusConfig::new(12000, 7));
    println!("corpus: 12000 digits in {:.1?}", t0.elapsed());

    let spec = SplitSpec::head_of_file(10000, 8000, 2000);
    let ((train_i, train_l), (val_i, val_l)) = subset_split(&images, &labels, &spec).unwrap();
    let pool = images.take(10000).unwrap();
    let pool_bin = binarize(&pool, 100);
    let nnz: usize = pool_bin.rows().iter().map(|&b| b as usize).sum();
    println!("binary density: {:.3}", nnz as f64 / (10000.0 * 784.0));

    if stage == "all" || stage == "em" {
        for k in [10usize, 70, 130, 160] {
            let t = Instant::now();
            let fit = fit_em(
                &pool_bin,
                k,
                0,
                &FitConfig {
                    max_iter: 200,
                    rel_tol: 1e-6,
                },
            )
            .unwrap();
            let eta = free_parameters(k, 784);
            let ll = fit.final_loglik();
            println!(
                "K={k:3}  loglik={ll:14.1}  aic={:14.1}  iters={:3} conv={} reseeds={} [{:.1?}]",
                aic_score(ll, eta),
                fit.iterations,
                fit.converged,
                fit.reseeds,
                t.elapsed()
            );
        }
    }

    if stage == "all" || stage == "knn" {
        let train_f = normalize(&train_i);
        let val_f = normalize(&val_i);
        let t = Instant::now();
        let sweep = knn_sweep(
            (&train_f, train_l.values()),
            (&val_f, val_l.values()),
            &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
            &(0..10).collect::<Vec<u64>>(),
        )
        .unwrap();
        println!("knn sweep in {:.1?}: best k = {}", t.elapsed(), sweep.best_k);
        for &(k, rate) in &sweep.mean_error_per_k {
            println!("  k={k:2} mean error {rate:.4}");
        }
        let params = ClassifierParams {
            knn_k: sweep.best_k,
            ..Default::default()
        };
        let preds = run_classifier(
            Algorithm::Knn,
            (&train_f, train_l.values()),
            &val_f,
            val_l.values(),
            0,
            &params,
        )
        .unwrap();
        let share = misclass_share(&preds, val_l.values()).unwrap();
        println!(
            "knn misclass shares (total {}): {:?}",
            share.total,
            share
                .shares
                .map(|s| s.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>())
        );
    }

    if stage == "all" || stage == "mln" {
        let train_f = normalize(&train_i);
        let val_f = normalize(&val_i);
        let t = Instant::now();
        let init = mln_init(&PAPER_LAYOUT, derive_seed(0, 0x101));
        let config = TrainConfig {
            epochs: 40,
            seed: derive_seed(0, 0x102),
            ..TrainConfig::default()
        };
        let outcome = mln_train(
            &init,
            (&train_f, train_l.values()),
            (&val_f, val_l.values()),
            &config,
        )
        .unwrap();
        println!(
            "mln 40 epochs in {:.1?}: best epoch {} err {:.4}",
            t.elapsed(),
            outcome.history.best_epoch,
            outcome.history.epochs[outcome.history.best_epoch - 1].val_error
        );
        for e in outcome.history.epochs.iter().step_by(5) {
            println!("  epoch {:2} loss {:.4} err {:.4}", e.epoch, e.train_loss, e.val_error);
        }
        let preds = outcome.best_model.predict_batch(&val_f).unwrap();
        let share = misclass_share(&preds, val_l.values()).unwrap();
        println!(
            "mln misclass shares (total {}): {:?}",
            share.total,
            share
                .shares
                .map(|s| s.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>())
        );
    }
}
