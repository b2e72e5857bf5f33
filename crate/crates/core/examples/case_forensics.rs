//! Inspects the case-A KNN errors of a finished desk run: which digits err,
//! what their neighbors are in case A versus case B, and whether synthetic
//! digits ever reach the neighborhood.

use sublabel::dataset::{load_idx_images, load_idx_labels, normalize};
use sublabel::harness::ClassifierParams;

fn main() {
    let dir = std::env::temp_dir().join("sublabel-desk-probe");
    let out = dir.join("out");
    let corpus_images = load_idx_images(&dir.join("digits-images.idx")).unwrap();
    let corpus_labels = load_idx_labels(&dir.join("digits-labels.idx")).unwrap();

    // validation = pool positions 8000..10000 under head-of-file
    let val_idx: Vec<usize> = (8000..10000).collect();
    let val_images = corpus_images.gather(&val_idx);
    let val_labels = corpus_labels.gather(&val_idx);
    let val_f = normalize(&val_images);

    let params = ClassifierParams::default();
    for case in ["a", "b"] {
        let images = load_idx_images(&out.join(format!("case-{case}-images.idx"))).unwrap();
        let labels = load_idx_labels(&out.join(format!("case-{case}-labels.idx"))).unwrap();
        let features = normalize(&images);
        let model = sublabel::classifiers::knn::KnnModel::new(
            &features,
            labels.values(),
            params.knn_k,
        )
        .unwrap();
        let lists = model.neighbor_lists(&val_f, 6).unwrap();

        println!("== case {case} ==");
        let mut label8_errors = 0;
        for (qi, neighbors) in lists.iter().enumerate() {
            let truth = val_labels.get(qi);
            // vote over top-3 (self-match included, mirroring the leak)
            let mut counts = [0usize; 10];
            for &(_, t) in neighbors.iter().take(3) {
                counts[labels.get(t) as usize] += 1;
            }
            let pred = (0..10u8).max_by_key(|&l| counts[l as usize]).unwrap();
            if pred != truth && truth == 8 {
                label8_errors += 1;
                let described: Vec<String> = neighbors
                    .iter()
                    .take(6)
                    .map(|&(d, t)| {
                        let tag = if t >= 10_000 { "SYN" } else { "real" };
                        format!("{}(l{},d{:.2},{})", t, labels.get(t), d, tag)
                    })
                    .collect();
                println!("val {qi} (label 8) -> {pred}: {}", described.join(" "));
            }
        }
        println!("label-8 errors: {label8_errors}");
    }
}
