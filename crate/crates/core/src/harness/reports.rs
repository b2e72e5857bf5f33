//! Experiment reports: seed-recurrence of misclassified digits,
//! per-label misclassification shares, and the case comparison.

use crate::classifiers::knn::KnnModel;
use crate::classifiers::mln::{mln_init, mln_train, TrainConfig, PAPER_LAYOUT};
use crate::dataset::{normalize, FeatureMatrix};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::synthesis::{CaseDataset, CaseId};

/// Seed stream tags, so each consumer of a run seed gets an independent RNG.
pub const STREAM_MLN_INIT: u64 = 0x101;
pub const STREAM_MLN_SHUFFLE: u64 = 0x102;
pub const STREAM_KNN_TIES: u64 = 0x103;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Knn,
    Mln,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::Mln => "mln",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(Algorithm::Knn),
            "mln" => Ok(Algorithm::Mln),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// How often each validation digit was misclassified across seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceHistogram {
    /// Number of seeds evaluated.
    pub seeds: usize,
    /// Per validation digit: seeds in which it was misclassified.
    pub per_digit: Vec<u32>,
    /// `buckets[r]` = digits misclassified in exactly `r` seeds; index 0 unused.
    pub buckets: Vec<usize>,
}

impl RecurrenceHistogram {
    pub fn distinct_misclassified(&self) -> usize {
        self.per_digit.iter().filter(|&&c| c > 0).count()
    }
}

/// Builds the recurrence histogram from per-seed prediction vectors.
pub fn recurrence_histogram(
    truth: &[u8],
    per_seed_predictions: &[Vec<u8>],
) -> Result<RecurrenceHistogram> {
    let seeds = per_seed_predictions.len();
    let mut per_digit = vec![0u32; truth.len()];
    for preds in per_seed_predictions {
        if preds.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: preds.len(),
                right: truth.len(),
            });
        }
        for (i, (&p, &t)) in preds.iter().zip(truth).enumerate() {
            if p != t {
                per_digit[i] += 1;
            }
        }
    }
    let mut buckets = vec![0usize; seeds + 1];
    for &c in &per_digit {
        if c > 0 {
            buckets[c as usize] += 1;
        }
    }
    Ok(RecurrenceHistogram {
        seeds,
        per_digit,
        buckets,
    })
}

/// Parameters shared by every classifier run the harness performs.
#[derive(Debug, Clone)]
pub struct ClassifierParams {
    pub knn_k: usize,
    pub mln_layout: Vec<usize>,
    pub mln: TrainConfig,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            knn_k: 3,
            mln_layout: PAPER_LAYOUT.to_vec(),
            mln: TrainConfig::default(),
        }
    }
}

/// Predictions of one algorithm for one run seed.
pub fn run_classifier(
    algorithm: Algorithm,
    train: (&FeatureMatrix, &[u8]),
    validation: &FeatureMatrix,
    val_labels: &[u8],
    seed: u64,
    params: &ClassifierParams,
) -> Result<Vec<u8>> {
    match algorithm {
        Algorithm::Knn => {
            let model = KnnModel::new(train.0, train.1, params.knn_k)?;
            model.classify_batch(validation, derive_seed(seed, STREAM_KNN_TIES))
        }
        Algorithm::Mln => {
            let init = mln_init(&params.mln_layout, derive_seed(seed, STREAM_MLN_INIT));
            let config = TrainConfig {
                seed: derive_seed(seed, STREAM_MLN_SHUFFLE),
                ..params.mln
            };
            let outcome = mln_train(&init, train, (validation, val_labels), &config)?;
            outcome.best_model.predict_batch(validation)
        }
    }
}

/// Trains and evaluates once per seed, aggregating per-digit
/// misclassification counts.
pub fn bias_variance_run(
    algorithm: Algorithm,
    train: (&FeatureMatrix, &[u8]),
    validation: (&FeatureMatrix, &[u8]),
    seeds: &[u64],
    params: &ClassifierParams,
) -> Result<RecurrenceHistogram> {
    if seeds.len() < 2 {
        return Err(Error::Config(
            "bias-variance analysis needs at least 2 seeds".into(),
        ));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        per_seed.push(run_classifier(
            algorithm,
            train,
            validation.0,
            validation.1,
            seed,
            params,
        )?);
    }
    recurrence_histogram(validation.1, &per_seed)
}

/// Share of total misclassifications attributed to each true label.
#[derive(Debug, Clone, PartialEq)]
pub struct MisclassShareTable {
    pub counts: [usize; 10],
    pub total: usize,
    /// `None` when there were no misclassifications at all.
    pub shares: Option<[f64; 10]>,
}

impl MisclassShareTable {
    /// Labels ranked by share, descending (ties to the lower label).
    pub fn ranking(&self) -> Vec<u8> {
        let mut labels: Vec<u8> = (0..10).collect();
        labels.sort_by(|&a, &b| self.counts[b as usize].cmp(&self.counts[a as usize]));
        labels
    }
}

pub fn misclass_share(predictions: &[u8], truth: &[u8]) -> Result<MisclassShareTable> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    let mut counts = [0usize; 10];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p != t {
            counts[t as usize] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let shares = if total == 0 {
        None
    } else {
        let mut s = [0.0; 10];
        for (i, &c) in counts.iter().enumerate() {
            s[i] = c as f64 / total as f64;
        }
        Some(s)
    };
    Ok(MisclassShareTable {
        counts,
        total,
        shares,
    })
}

/// One factorial cell: (case, algorithm, seed).
#[derive(Debug, Clone, Copy)]
pub struct CaseCell {
    pub case: CaseId,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub total_errors: usize,
    pub per_label_errors: [usize; 10],
}

#[derive(Debug, Clone)]
pub struct CaseComparisonReport {
    pub cells: Vec<CaseCell>,
}

impl CaseComparisonReport {
    pub fn cells_for(&self, case: CaseId, algorithm: Algorithm) -> Vec<&CaseCell> {
        self.cells
            .iter()
            .filter(|c| c.case == case && c.algorithm == algorithm)
            .collect()
    }

    pub fn mean_total_errors(&self, case: CaseId, algorithm: Algorithm) -> f64 {
        let cells = self.cells_for(case, algorithm);
        cells.iter().map(|c| c.total_errors as f64).sum::<f64>() / cells.len() as f64
    }

    pub fn mean_label_errors(&self, case: CaseId, algorithm: Algorithm, label: u8) -> f64 {
        let cells = self.cells_for(case, algorithm);
        cells
            .iter()
            .map(|c| c.per_label_errors[label as usize] as f64)
            .sum::<f64>()
            / cells.len() as f64
    }

    /// Seeds in which `better` has strictly fewer label errors than `worse`.
    pub fn seeds_improved(
        &self,
        better: CaseId,
        worse: CaseId,
        algorithm: Algorithm,
        label: u8,
    ) -> usize {
        let b = self.cells_for(better, algorithm);
        let w = self.cells_for(worse, algorithm);
        b.iter()
            .zip(&w)
            .filter(|(bc, wc)| {
                debug_assert_eq!(bc.seed, wc.seed);
                bc.per_label_errors[label as usize] < wc.per_label_errors[label as usize]
            })
            .count()
    }
}

fn per_label_errors(predictions: &[u8], truth: &[u8]) -> (usize, [usize; 10]) {
    let mut per_label = [0usize; 10];
    let mut total = 0;
    for (&p, &t) in predictions.iter().zip(truth) {
        if p != t {
            per_label[t as usize] += 1;
            total += 1;
        }
    }
    (total, per_label)
}

/// Full factorial case-by-algorithm-by-seed run.
///
/// Cells of the same seed share their MLN initialization across cases, so
/// the A/B/C contrast isolates the training-data effect. KNN neighbor scans
/// are computed once per case and revoted per seed, which is equivalent to
/// independent cells because the scan does not consume randomness.
pub fn case_comparison(
    cases: &[CaseDataset],
    validation: (&FeatureMatrix, &[u8]),
    algorithms: &[Algorithm],
    seeds: &[u64],
    params: &ClassifierParams,
) -> Result<CaseComparisonReport> {
    let (val_x, val_y) = validation;
    let mut cells = Vec::new();
    for case in cases {
        let features = normalize(&case.images);
        let labels = case.labels.values();
        for &algorithm in algorithms {
            match algorithm {
                Algorithm::Knn => {
                    let model = KnnModel::new(&features, labels, params.knn_k)?;
                    let lists = model.neighbor_lists(val_x, params.knn_k)?;
                    for &seed in seeds {
                        let tie_seed = derive_seed(seed, STREAM_KNN_TIES);
                        let preds: Vec<u8> = lists
                            .iter()
                            .enumerate()
                            .map(|(qi, neighbors)| {
                                crate::classifiers::knn::vote_neighbors(
                                    neighbors,
                                    labels,
                                    params.knn_k,
                                    tie_seed,
                                    qi as u64,
                                )
                            })
                            .collect();
                        let (total_errors, per_label) = per_label_errors(&preds, val_y);
                        cells.push(CaseCell {
                            case: case.case_id,
                            algorithm,
                            seed,
                            total_errors,
                            per_label_errors: per_label,
                        });
                    }
                }
                Algorithm::Mln => {
                    for &seed in seeds {
                        let preds = run_classifier(
                            Algorithm::Mln,
                            (&features, labels),
                            val_x,
                            val_y,
                            seed,
                            params,
                        )?;
                        let (total_errors, per_label) = per_label_errors(&preds, val_y);
                        cells.push(CaseCell {
                            case: case.case_id,
                            algorithm,
                            seed,
                            total_errors,
                            per_label_errors: per_label,
                        });
                    }
                }
            }
        }
    }
    Ok(CaseComparisonReport { cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_pure_bias_stub() {
        // misclassifies digits 0 and 3 in every seed
        let truth = vec![1u8, 1, 1, 1, 1];
        let preds: Vec<Vec<u8>> = (0..4)
            .map(|_| vec![0u8, 1, 1, 0, 1])
            .collect();
        let hist = recurrence_histogram(&truth, &preds).unwrap();
        assert_eq!(hist.buckets[4], 2);
        assert_eq!(hist.buckets[1..4].iter().sum::<usize>(), 0);
        assert_eq!(hist.distinct_misclassified(), 2);
    }

    #[test]
    fn recurrence_pure_variance_stub() {
        // a different digit misclassified in each seed
        let truth = vec![1u8, 1, 1, 1];
        let preds = vec![
            vec![0u8, 1, 1, 1],
            vec![1u8, 0, 1, 1],
            vec![1u8, 1, 0, 1],
        ];
        let hist = recurrence_histogram(&truth, &preds).unwrap();
        assert_eq!(hist.buckets[1], 3);
        assert_eq!(hist.buckets[2], 0);
        assert_eq!(hist.buckets[3], 0);
    }

    #[test]
    fn recurrence_bucket_sums_match_distinct_count() {
        let truth = vec![0u8, 1, 2, 3, 4];
        let preds = vec![
            vec![0u8, 0, 2, 0, 4],
            vec![0u8, 1, 0, 0, 4],
        ];
        let hist = recurrence_histogram(&truth, &preds).unwrap();
        let bucket_total: usize = hist.buckets.iter().sum();
        assert_eq!(bucket_total, hist.distinct_misclassified());
    }

    #[test]
    fn misclass_share_all_correct_is_null() {
        let t = misclass_share(&[1, 2, 3], &[1, 2, 3]).unwrap();
        assert_eq!(t.total, 0);
        assert!(t.shares.is_none());
    }

    #[test]
    fn misclass_share_single_label() {
        let truth = vec![8u8; 10];
        let preds = vec![3u8; 10];
        let t = misclass_share(&preds, &truth).unwrap();
        let shares = t.shares.unwrap();
        assert_eq!(shares[8], 1.0);
        assert_eq!(shares.iter().sum::<f64>(), 1.0);
        assert_eq!(t.ranking()[0], 8);
    }

    #[test]
    fn misclass_share_sums_to_one() {
        let truth = vec![0u8, 1, 2, 3, 8, 8, 8, 3];
        let preds = vec![1u8, 1, 0, 8, 3, 3, 8, 3];
        let t = misclass_share(&preds, &truth).unwrap();
        let sum: f64 = t.shares.unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(t.total, 5);
    }

    #[test]
    fn misclass_share_length_mismatch() {
        assert!(matches!(
            misclass_share(&[1, 2], &[1]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
