//! What the case-regime MLN gets wrong on label 8, across epochs budgets:
//! which ground-truth components the errors come from, and what the B arm
//! does to them.

use rand::Rng;
use sublabel::classifiers::mln::{mln_init, mln_train, TrainConfig, PAPER_LAYOUT};
use sublabel::dataset::{load_idx_images, load_idx_labels, normalize};
use sublabel::harness::reports::{STREAM_MLN_INIT, STREAM_MLN_SHUFFLE};
use sublabel::seeding::{derive_seed, rng_for_stream};
use sublabel::simulate::component_library;

/// Replays the corpus generator's first draw: the component of digit `i`.
fn component_of(seed: u64, i: usize) -> usize {
    let library = component_library();
    let total: f64 = library.iter().map(|c| c.weight).sum();
    let mut rng = rng_for_stream(seed, i as u64);
    let mut pick = rng.gen_range(0.0..total);
    for (ci, c) in library.iter().enumerate() {
        if pick < c.weight {
            return ci;
        }
        pick -= c.weight;
    }
    library.len() - 1
}

fn main() {
    let dir = std::env::temp_dir().join("sublabel-desk-probe");
    let out = dir.join("out");
    let corpus_images = load_idx_images(&dir.join("digits-images.idx")).unwrap();
    let corpus_labels = load_idx_labels(&dir.join("digits-labels.idx")).unwrap();
    let val_idx: Vec<usize> = (10_800..12_800).collect();
    let val_images = corpus_images.gather(&val_idx);
    let val_labels = corpus_labels.gather(&val_idx);
    let val_f = normalize(&val_images);

    let library = component_library();

    for case in ["a", "b"] {
        let images = load_idx_images(&out.join(format!("case-{case}-images.idx"))).unwrap();
        let labels = load_idx_labels(&out.join(format!("case-{case}-labels.idx"))).unwrap();
        let features = normalize(&images);
        for epochs in [20usize] {
            for seed in [0u64, 1, 2, 3, 4] {
                let init = mln_init(&PAPER_LAYOUT, derive_seed(seed, STREAM_MLN_INIT));
                let config = TrainConfig {
                    epochs,
                    seed: derive_seed(seed, STREAM_MLN_SHUFFLE),
                    ..TrainConfig::default()
                };
                let outcome = mln_train(
                    &init,
                    (&features, labels.values()),
                    (&val_f, val_labels.values()),
                    &config,
                )
                .unwrap();
                let preds = outcome.best_model.predict_batch(&val_f).unwrap();
                let mut label8 = 0usize;
                let mut twin_errors = 0usize;
                let mut total = 0;
                for (qi, (&p, &t)) in preds.iter().zip(val_labels.values()).enumerate() {
                    if p != t {
                        total += 1;
                        if t == 8 {
                            label8 += 1;
                            let comp = component_of(7, 10_800 + qi);
                            if library[comp].label == 8 {
                                twin_errors += 1;
                            }
                        }
                    }
                }
                println!(
                    "case {case} epochs {epochs} seed {seed}: total {total}, label-8 {label8} (twins {twin_errors})"
                );
            }
        }
    }
}
