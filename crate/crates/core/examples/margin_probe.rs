//! Measures nearest-neighbor margins: for validation digits, the distance
//! to the nearest same-class vs other-class training digit, by class.

use rayon::prelude::*;
use sublabel::dataset::{normalize, subset_split, SplitSpec};
use sublabel::simulate::{digit_corpus, CorpusConfig};

fn main() {
    let (images, labels) = digit_corpus(&CorpusConfig::new(11_000, 7));
    let spec = SplitSpec::head_of_file(10_000, 8_000, 2_000);
    let ((ti, tl), (vi, vl)) = subset_split(&images, &labels, &spec).unwrap();
    let tf = normalize(&ti);
    let vf = normalize(&vi);

    // per val digit: (own_nn, other_nn, other_label)
    let stats: Vec<(u8, f64, f64, u8)> = (0..vf.n())
        .into_par_iter()
        .map(|q| {
            let truth = vl.get(q);
            let mut own = f64::INFINITY;
            let mut other = f64::INFINITY;
            let mut other_label = 0u8;
            for t in 0..tf.n() {
                let d2: f64 = tf
                    .row(t)
                    .iter()
                    .zip(vf.row(q))
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                if tl.get(t) == truth {
                    if d2 < own {
                        own = d2;
                    }
                } else if d2 < other {
                    other = d2;
                    other_label = tl.get(t);
                }
            }
            (truth, own, other, other_label)
        })
        .collect();

    let mut margins: Vec<f64> = Vec::new();
    let mut per_class_min = [f64::INFINITY; 10];
    let mut negatives = 0;
    for &(truth, own, other, _) in &stats {
        let margin = other - own;
        margins.push(margin);
        if margin < per_class_min[truth as usize] {
            per_class_min[truth as usize] = margin;
        }
        if margin < 0.0 {
            negatives += 1;
        }
    }
    margins.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("negative margins (own NN farther than foreign NN): {negatives}/2000");
    println!(
        "margin quantiles: min {:.2}  p1 {:.2}  p5 {:.2}  p25 {:.2}  median {:.2}",
        margins[0],
        margins[20],
        margins[100],
        margins[500],
        margins[1000]
    );
    println!("per-class minimum margin: {per_class_min:?}");

    // typical within-class NN distance
    let own_mean: f64 = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    println!("mean own-class NN distance^2: {own_mean:.2}");
    let worst: Vec<&(u8, f64, f64, u8)> = {
        let mut v: Vec<&(u8, f64, f64, u8)> = stats.iter().collect();
        v.sort_by(|a, b| (a.2 - a.1).partial_cmp(&(b.2 - b.1)).unwrap());
        v.into_iter().take(10).collect()
    };
    for (truth, own, other, other_label) in worst {
        println!("  class {truth}: own {own:.2} other {other:.2} (-> {other_label})");
    }
}
