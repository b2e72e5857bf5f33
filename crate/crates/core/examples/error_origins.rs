//! Traces desk-run KNN errors back to their generator styles and mixture
//! components, and measures how close the synthetic digits come.

use rand::Rng;
use sublabel::dataset::{binarize, load_idx_images, load_idx_labels, normalize};
use sublabel::mixture::{e_step, read_model};
use sublabel::seeding::rng_for_stream;
use sublabel::simulate::glyphs;
use sublabel::sublabels::hard_assign;

/// Replays the corpus generator's draws for digit `i` to find its style.
fn style_of(seed: u64, i: usize) -> (u8, usize) {
    let mut rng = rng_for_stream(seed, i as u64);
    let digit: u8 = rng.gen_range(0..10);
    let styles = glyphs::styles_for(digit);
    let total: f64 = styles.iter().map(|s| s.weight).sum();
    let mut pick = rng.gen_range(0.0..total);
    let mut chosen = styles.len() - 1;
    for (si, s) in styles.iter().enumerate() {
        if pick < s.weight {
            chosen = si;
            break;
        }
        pick -= s.weight;
    }
    (digit, chosen)
}

fn main() {
    let dir = std::env::temp_dir().join("sublabel-desk-probe");
    let out = dir.join("out");
    let corpus_images = load_idx_images(&dir.join("digits-images.idx")).unwrap();
    let corpus_labels = load_idx_labels(&dir.join("digits-labels.idx")).unwrap();
    let model = read_model(&out.join("model.bmm")).unwrap();

    let pool = corpus_images.take(10_000).unwrap();
    let pool_labels = corpus_labels.take(10_000).unwrap();
    let pool_bin = binarize(&pool, 100);
    let gamma = e_step(&pool_bin, &model).unwrap();
    let assignment = hard_assign(&gamma);
    let reports =
        sublabel::sublabels::purity_report(&assignment, &pool_labels, model.k()).unwrap();

    // the known desk errors (validation indices = pool index - 8000)
    let err_val = [22usize, 53, 223, 343, 478, 828, 999, 1085];

    let b_images = load_idx_images(&out.join("case-b-images.idx")).unwrap();
    let b_features = normalize(&b_images);
    let pool_f = normalize(&pool);

    for &v in &err_val {
        let pool_idx = 8000 + v;
        let (digit, style) = style_of(7, pool_idx);
        let comp = assignment.get(pool_idx);
        let report = &reports[comp];
        // nearest synthetic
        let q = pool_f.row(pool_idx);
        let mut best_syn = (f64::INFINITY, 0usize);
        for s in 10_000..b_features.n() {
            let d: f64 = b_features
                .row(s)
                .iter()
                .zip(q)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            if d < best_syn.0 {
                best_syn = (d, s);
            }
        }
        println!(
            "val {v}: digit {digit} style {style} -> comp {comp} (size {}, purity {:?}, majority {:?}); nearest synthetic d2 {:.2}",
            report.size, report.purity.map(|p| (p * 100.0).round() / 100.0), report.majority_label, best_syn.0
        );
    }

    // style histogram of all label-8 pool members and their comp purity
    let mut by_style = std::collections::BTreeMap::<usize, (usize, usize)>::new();
    for i in 0..10_000 {
        if pool_labels.get(i) == 8 {
            let (_, style) = style_of(7, i);
            let comp = assignment.get(i);
            let strongish = reports[comp].purity.unwrap_or(0.0) >= 0.85
                && reports[comp].size >= 30
                && reports[comp].majority_label == Some(8);
            let entry = by_style.entry(style).or_insert((0, 0));
            entry.0 += 1;
            if strongish {
                entry.1 += 1;
            }
        }
    }
    println!("\nlabel-8 pool members by style (total, in-strong-component):");
    for (style, (total, strong)) in by_style {
        println!("  style {style}: {total} total, {strong} in strong comps");
    }
}
