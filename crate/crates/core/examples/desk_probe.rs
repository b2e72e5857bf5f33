//! Full experiment-scale pipeline dry run on the generated corpus, printing
//! the numbers the acceptance suite asserts on.

use std::time::Instant;

use sublabel::dataset::{serialize_idx_images, serialize_idx_labels};
use sublabel::harness::{pipeline_run, Algorithm, PipelineConfig};
use sublabel::simulate::{digit_corpus, CorpusConfig};
use sublabel::synthesis::CaseId;

fn main() {
    let t0 = Instant::now();
    let dir = std::env::temp_dir().join("sublabel-desk-probe");
    std::fs::create_dir_all(&dir).unwrap();
    let (images, labels) = digit_corpus(&CorpusConfig::new(13_500, 7));
    let images_path = dir.join("digits-images.idx");
    let labels_path = dir.join("digits-labels.idx");
    std::fs::write(&images_path, serialize_idx_images(&images)).unwrap();
    std::fs::write(&labels_path, serialize_idx_labels(&labels)).unwrap();

    let mut config = PipelineConfig::default();
    config.images = images_path;
    config.labels = labels_path;
    config.out_dir = dir.join("out");
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--fast") {
        config.k_grid = vec![40, 70, 100];
        config.case_seeds = (0..4).collect();
        config.case_epochs = 12;
    }
    println!("running pipeline (k_grid {:?})", config.k_grid);
    let outcome = pipeline_run(&config).unwrap();
    println!("pipeline done in {:.1?}", t0.elapsed());

    // criterion 5 shape
    if let Some(selection) = &outcome.selection {
        println!("\n-- aic selection --");
        let means = selection.mean_scores();
        for &(k, score) in &means {
            println!("K={k:3} mean score {score:.1}");
        }
        let best = means
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        println!(
            "best K = {} (score {:.1}); interior = {}",
            selection.best_k,
            best.1,
            selection.best_k != means.first().unwrap().0
                && selection.best_k != means.last().unwrap().0
        );
    }

    // criterion 6
    println!("\n-- strong sub-labels (target 8) --");
    for e in &outcome.strong.entries {
        println!(
            "component {:3} size {:4} purity {:.3}",
            e.component_id, e.size, e.purity
        );
    }
    println!("count = {}", outcome.strong.entries.len());

    // criterion 9
    println!("\n-- knn sweep --");
    for &(k, rate) in &outcome.knn_sweep.mean_error_per_k {
        println!("k={k:2} mean error {rate:.4}");
    }
    println!("best k = {}", outcome.knn_sweep.best_k);

    // criterion 11
    let h = &outcome.mln_history;
    let best = &h.epochs[h.best_epoch - 1];
    println!(
        "\n-- mln -- best epoch {} val_error {:.4}",
        h.best_epoch, best.val_error
    );

    // criterion 12
    println!("\n-- misclass shares --");
    println!(
        "knn total {} shares {:?}",
        outcome.knn_share.total,
        outcome.knn_share.shares.map(|s| s
            .iter()
            .map(|v| (v * 100.0).round() / 100.0)
            .collect::<Vec<_>>())
    );
    println!(
        "mln total {} shares {:?}",
        outcome.mln_share.total,
        outcome.mln_share.shares.map(|s| s
            .iter()
            .map(|v| (v * 100.0).round() / 100.0)
            .collect::<Vec<_>>())
    );

    // criterion 13
    println!("\n-- case comparison (label 8 errors per seed) --");
    for algorithm in [Algorithm::Knn, Algorithm::Mln] {
        let a_cells = outcome.cases.cells_for(CaseId::A, algorithm);
        let b_cells = outcome.cases.cells_for(CaseId::B, algorithm);
        let c_cells = outcome.cases.cells_for(CaseId::C, algorithm);
        let row = |cells: &[&sublabel::harness::CaseCell]| -> Vec<usize> {
            cells.iter().map(|c| c.per_label_errors[8]).collect()
        };
        println!("{} A: {:?}", algorithm.name(), row(&a_cells));
        println!("{} B: {:?}", algorithm.name(), row(&b_cells));
        println!("{} C: {:?}", algorithm.name(), row(&c_cells));
        let improved = outcome
            .cases
            .seeds_improved(CaseId::B, CaseId::A, algorithm, 8);
        println!(
            "{}: B<A in {}/{} seeds; mean A {:.2} B {:.2} C {:.2} (total err A {:.1} B {:.1})",
            algorithm.name(),
            improved,
            a_cells.len(),
            outcome.cases.mean_label_errors(CaseId::A, algorithm, 8),
            outcome.cases.mean_label_errors(CaseId::B, algorithm, 8),
            outcome.cases.mean_label_errors(CaseId::C, algorithm, 8),
            outcome.cases.mean_total_errors(CaseId::A, algorithm),
            outcome.cases.mean_total_errors(CaseId::B, algorithm),
        );
    }
}
