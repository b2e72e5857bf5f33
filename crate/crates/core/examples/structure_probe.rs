//! One-fit structural diagnostic: cluster purity for label 8, KNN curve
//! shape, and the score at a mid-grid K. Much faster than the full pipeline.

use sublabel::classifiers::knn::knn_sweep;
use sublabel::dataset::{binarize, normalize, subset_split, SplitSpec};
use sublabel::mixture::{aic_score, e_step, fit_em, free_parameters, FitConfig};
use sublabel::simulate::{digit_corpus, CorpusConfig};
use sublabel::sublabels::{hard_assign, purity_report, strong_sublabels, StrongRule};

fn main() {
    let (images, labels) = digit_corpus(&CorpusConfig::new(11_000, 7));
    println!("library size: {}", sublabel::simulate::component_library().len());
    let pool = images.take(10_000).unwrap();
    let pool_labels = labels.take(10_000).unwrap();
    let pool_bin = binarize(&pool, 100);

    for k in [115usize, 145] {
        let fit = fit_em(&pool_bin, k, 0, &FitConfig::default()).unwrap();
        let eta = free_parameters(k, 784);
        let gamma = e_step(&pool_bin, &fit.model).unwrap();
        let assignment = hard_assign(&gamma);
        let reports = purity_report(&assignment, &pool_labels, k).unwrap();
        let strong = strong_sublabels(
            &reports,
            StrongRule {
                min_purity: 0.85,
                min_size: 30,
                target_label: Some(8),
            },
        );
        let majority8 = reports
            .iter()
            .filter(|r| r.majority_label == Some(8))
            .count();
        let p85 = reports
            .iter()
            .filter(|r| r.majority_label == Some(8) && r.purity.unwrap_or(0.0) >= 0.85)
            .count();
        println!(
            "K={k}: score {:.1}, strong-8 {}, majority-8 comps {majority8} (purity>=0.85: {p85})",
            aic_score(fit.final_loglik(), eta),
            strong.entries.len(),
        );
        // per-component style histogram for the majority-8 components
        let style_of = |i: usize| -> usize {
            use rand::Rng;
            let mut rng = sublabel::seeding::rng_for_stream(7, i as u64);
            let digit: u8 = rng.gen_range(0..10);
            let styles = sublabel::simulate::glyphs::styles_for(digit);
            let total: f64 = styles.iter().map(|s| s.weight).sum();
            let mut pick = rng.gen_range(0.0..total);
            for (si, s) in styles.iter().enumerate() {
                if pick < s.weight {
                    return si;
                }
                pick -= s.weight;
            }
            styles.len() - 1
        };
        let mut rows: Vec<&sublabel::sublabels::SubLabelReport> = reports
            .iter()
            .filter(|r| r.majority_label == Some(8))
            .collect();
        rows.sort_by(|a, b| b.size.cmp(&a.size));
        for r in rows.iter().take(14) {
            let mut styles = [0usize; 8];
            for i in 0..10_000 {
                if assignment.get(i) == r.component_id && pool_labels.get(i) == 8 {
                    styles[style_of(i).min(7)] += 1;
                }
            }
            println!(
                "  comp {:3} size {:3} purity {:.2} styles {:?} classes {:?}",
                r.component_id,
                r.size,
                r.purity.unwrap_or(0.0),
                styles,
                r.class_counts
            );
        }
    }

    let spec = SplitSpec::head_of_file(10_000, 8_000, 2_000);
    let ((ti, tl), (vi, vl)) = subset_split(&images, &labels, &spec).unwrap();
    let (tf, vf) = (normalize(&ti), normalize(&vi));
    let sweep = knn_sweep(
        (&tf, tl.values()),
        (&vf, vl.values()),
        &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
        &(0..10).collect::<Vec<u64>>(),
    )
    .unwrap();
    print!("knn best k={} curve:", sweep.best_k);
    for &(k, r) in &sweep.mean_error_per_k {
        print!(" {k}:{:.4}", r);
    }
    println!();
    // error counts by true label at selected k values (seed 0)
    use sublabel::classifiers::knn::KnnModel;
    let model = KnnModel::new(&tf, tl.values(), 10).unwrap();
    let lists = model.neighbor_lists(&vf, 10).unwrap();
    for k in [1usize, 3, 5, 7, 9] {
        let mut by_label = [0usize; 10];
        for (qi, neighbors) in lists.iter().enumerate() {
            let pred = sublabel::classifiers::knn::vote_neighbors(
                neighbors, tl.values(), k, 0, qi as u64,
            );
            if pred != vl.get(qi) {
                by_label[vl.get(qi) as usize] += 1;
            }
        }
        println!("k={k}: errors by true label {by_label:?} total {}", by_label.iter().sum::<usize>());
    }
}
