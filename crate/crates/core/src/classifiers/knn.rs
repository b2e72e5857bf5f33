//! K-nearest-neighbors with an exact brute-force Euclidean scan.
//!
//! Neighbor selection is deterministic: candidates are ordered by
//! `(squared distance, training index)`, so distance ties at the k-th rank
//! resolve to the lowest index. Only majority-vote ties consume randomness,
//! drawn from a stream derived from `(seed, query_index)` so batch
//! classification is order-independent.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::seeding::{rng_for_stream, rng_from_seed};

/// Queries per cache block of the scan kernel.
const QUERY_BLOCK: usize = 32;

/// A fitted (memorized) KNN classifier.
pub struct KnnModel<'a> {
    features: &'a FeatureMatrix,
    labels: &'a [u8],
    k: usize,
}

impl<'a> KnnModel<'a> {
    pub fn new(features: &'a FeatureMatrix, labels: &'a [u8], k: usize) -> Result<Self> {
        if features.n() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if features.n() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.n(),
                right: labels.len(),
            });
        }
        if k == 0 || k > features.n() {
            return Err(Error::Config(format!(
                "k must be in 1..={}, got {k}",
                features.n()
            )));
        }
        Ok(Self {
            features,
            labels,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Classifies one query; `seed` feeds the vote tie-breaker.
    pub fn classify(&self, query: &[f64], seed: u64) -> Result<u8> {
        if query.len() != self.features.d() {
            return Err(Error::DimensionMismatch {
                expected: self.features.d(),
                got: query.len(),
            });
        }
        let neighbors = self.top_neighbors(query, self.k);
        let mut rng = rng_from_seed(seed);
        Ok(vote(&neighbors, self.labels, self.k, &mut rng))
    }

    /// Classifies every row of `queries`; query `i` uses the tie stream
    /// derived from `(seed, i)`.
    pub fn classify_batch(&self, queries: &FeatureMatrix, seed: u64) -> Result<Vec<u8>> {
        let lists = self.neighbor_lists(queries, self.k)?;
        Ok(lists
            .iter()
            .enumerate()
            .map(|(qi, neighbors)| {
                let mut rng = rng_for_stream(seed, qi as u64);
                vote(neighbors, self.labels, self.k, &mut rng)
            })
            .collect())
    }

    /// Sorted `(squared distance, index)` neighbors of one query.
    fn top_neighbors(&self, query: &[f64], k: usize) -> Vec<(f64, usize)> {
        let mut top: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for t in 0..self.features.n() {
            let d2 = squared_distance(query, self.features.row(t));
            push_candidate(&mut top, k, (d2, t));
        }
        top
    }

    /// Per-query sorted top-`k` neighbor lists, blocked for cache reuse.
    pub fn neighbor_lists(
        &self,
        queries: &FeatureMatrix,
        k: usize,
    ) -> Result<Vec<Vec<(f64, usize)>>> {
        if queries.d() != self.features.d() {
            return Err(Error::DimensionMismatch {
                expected: self.features.d(),
                got: queries.d(),
            });
        }
        let blocks: Vec<(usize, usize)> = (0..queries.n())
            .step_by(QUERY_BLOCK)
            .map(|s| (s, (s + QUERY_BLOCK).min(queries.n())))
            .collect();
        let per_block: Vec<Vec<Vec<(f64, usize)>>> = blocks
            .par_iter()
            .map(|&(start, end)| {
                let mut tops: Vec<Vec<(f64, usize)>> =
                    vec![Vec::with_capacity(k + 1); end - start];
                for t in 0..self.features.n() {
                    let row = self.features.row(t);
                    for (slot, q) in (start..end).enumerate() {
                        let d2 = squared_distance(queries.row(q), row);
                        push_candidate(&mut tops[slot], k, (d2, t));
                    }
                }
                tops
            })
            .collect();
        Ok(per_block.into_iter().flatten().collect())
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Inserts a candidate into a sorted top-k list ordered by
/// `(distance, index)`.
fn push_candidate(top: &mut Vec<(f64, usize)>, k: usize, cand: (f64, usize)) {
    let worse = |a: &(f64, usize), b: &(f64, usize)| -> bool {
        a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
    };
    if top.len() == k {
        if let Some(last) = top.last() {
            if !worse(last, &cand) {
                return;
            }
        }
        top.pop();
    }
    let pos = top.partition_point(|e| !worse(e, &cand));
    top.insert(pos, cand);
}

/// Votes on a precomputed neighbor list with the `(tie_seed, query_index)`
/// stream; equivalent to what `classify_batch` does per query.
pub fn vote_neighbors(
    neighbors: &[(f64, usize)],
    labels: &[u8],
    k: usize,
    tie_seed: u64,
    query_index: u64,
) -> u8 {
    let mut rng = rng_for_stream(tie_seed, query_index);
    vote(neighbors, labels, k, &mut rng)
}

/// Majority vote over the neighbor labels; count ties resolve uniformly at
/// random among the tied labels (ascending order indexes the draw).
fn vote(neighbors: &[(f64, usize)], labels: &[u8], k: usize, rng: &mut ChaCha8Rng) -> u8 {
    let mut counts = [0usize; 10];
    for &(_, idx) in neighbors.iter().take(k) {
        counts[labels[idx] as usize] += 1;
    }
    let max = *counts.iter().max().unwrap();
    let tied: Vec<u8> = (0..10u8)
        .filter(|&l| counts[l as usize] == max)
        .collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.gen_range(0..tied.len())]
    }
}

/// One cell of a K sweep.
#[derive(Debug, Clone, Copy)]
pub struct KnnSweepCell {
    pub k: usize,
    pub seed: u64,
    pub errors: usize,
    pub error_rate: f64,
}

/// K-sweep results: per-(k, seed) error rates and the selected k.
#[derive(Debug, Clone)]
pub struct KnnSweepReport {
    pub cells: Vec<KnnSweepCell>,
    pub mean_error_per_k: Vec<(usize, f64)>,
    /// k with the smallest mean error (ties resolve to the smaller k).
    pub best_k: usize,
}

/// Sweeps neighbor counts over seeds, reusing one distance scan.
pub fn knn_sweep(
    train: (&FeatureMatrix, &[u8]),
    validation: (&FeatureMatrix, &[u8]),
    k_grid: &[usize],
    seeds: &[u64],
) -> Result<KnnSweepReport> {
    if k_grid.is_empty() || seeds.is_empty() {
        return Err(Error::Config("k grid and seeds must be non-empty".into()));
    }
    let (train_x, train_y) = train;
    let (val_x, val_y) = validation;
    if val_x.n() != val_y.len() {
        return Err(Error::LengthMismatch {
            left: val_x.n(),
            right: val_y.len(),
        });
    }
    let max_k = *k_grid.iter().max().unwrap();
    let model = KnnModel::new(train_x, train_y, max_k)?;
    let lists = model.neighbor_lists(val_x, max_k)?;

    let mut cells = Vec::with_capacity(k_grid.len() * seeds.len());
    for &k in k_grid {
        for &seed in seeds {
            let mut errors = 0usize;
            for (qi, neighbors) in lists.iter().enumerate() {
                let mut rng = rng_for_stream(seed, qi as u64);
                let pred = vote(neighbors, train_y, k, &mut rng);
                if pred != val_y[qi] {
                    errors += 1;
                }
            }
            cells.push(KnnSweepCell {
                k,
                seed,
                errors,
                error_rate: errors as f64 / val_x.n() as f64,
            });
        }
    }

    let mean_error_per_k: Vec<(usize, f64)> = k_grid
        .iter()
        .map(|&k| {
            let rates: Vec<f64> = cells
                .iter()
                .filter(|c| c.k == k)
                .map(|c| c.error_rate)
                .collect();
            (k, rates.iter().sum::<f64>() / rates.len() as f64)
        })
        .collect();
    let best_k = mean_error_per_k
        .iter()
        .fold((usize::MAX, f64::INFINITY), |acc, &(k, rate)| {
            if rate < acc.1 || (rate == acc.1 && k < acc.0) {
                (k, rate)
            } else {
                acc
            }
        })
        .0;

    Ok(KnnSweepReport {
        cells,
        mean_error_per_k,
        best_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(rows: &[&[f64]]) -> FeatureMatrix {
        let d = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        FeatureMatrix::new(rows.len(), d, flat).unwrap()
    }

    /// Independent oracle: full sort of all distances, then the same vote.
    fn oracle_classify(
        train: &FeatureMatrix,
        labels: &[u8],
        query: &[f64],
        k: usize,
        seed: u64,
    ) -> u8 {
        let mut all: Vec<(f64, usize)> = (0..train.n())
            .map(|t| {
                let d2: f64 = train
                    .row(t)
                    .iter()
                    .zip(query)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                (d2, t)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.truncate(k);
        let mut rng = rng_from_seed(seed);
        vote(&all, labels, k, &mut rng)
    }

    #[test]
    fn exact_match_wins_at_k1() {
        let train = features(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 0.5]]);
        let labels = [3u8, 7, 9];
        let model = KnnModel::new(&train, &labels, 1).unwrap();
        assert_eq!(model.classify(&[1.0, 1.0], 0).unwrap(), 7);
    }

    #[test]
    fn majority_vote() {
        let train = features(&[&[0.0], &[0.1], &[0.2], &[5.0]]);
        let labels = [7u8, 7, 2, 2];
        let model = KnnModel::new(&train, &labels, 3).unwrap();
        assert_eq!(model.classify(&[0.0], 0).unwrap(), 7);
    }

    #[test]
    fn distance_tie_at_kth_takes_lowest_index() {
        // two equidistant points with different labels; k=1 must pick index 0
        let train = features(&[&[1.0], &[-1.0]]);
        let labels = [4u8, 6];
        let model = KnnModel::new(&train, &labels, 1).unwrap();
        for seed in 0..20 {
            assert_eq!(model.classify(&[0.0], seed).unwrap(), 4);
        }
    }

    #[test]
    fn vote_ties_are_seeded_and_cover_both_labels() {
        let train = features(&[&[1.0], &[-1.0]]);
        let labels = [4u8, 6];
        let model = KnnModel::new(&train, &labels, 2).unwrap();
        let picks: Vec<u8> = (0..40)
            .map(|seed| model.classify(&[0.0], seed).unwrap())
            .collect();
        assert!(picks.contains(&4));
        assert!(picks.contains(&6));
        assert_eq!(model.classify(&[0.0], 5).unwrap(), model.classify(&[0.0], 5).unwrap());
    }

    #[test]
    fn agrees_with_full_sort_oracle() {
        use rand::Rng;
        let mut rng = rng_from_seed(2024);
        for trial in 0..30 {
            let n = rng.gen_range(5..120);
            let d = rng.gen_range(1..8);
            let k = rng.gen_range(1..=n.min(9));
            let rows: Vec<f64> = (0..n * d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let train = FeatureMatrix::new(n, d, rows).unwrap();
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..10u8)).collect();
            let query: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let model = KnnModel::new(&train, &labels, k).unwrap();
            let got = model.classify(&query, trial).unwrap();
            let want = oracle_classify(&train, &labels, &query, k, trial);
            assert_eq!(got, want, "trial {trial} n={n} d={d} k={k}");
        }
    }

    #[test]
    fn batch_matches_individual_streams() {
        use rand::Rng;
        let mut rng = rng_from_seed(77);
        let train_rows: Vec<f64> = (0..60).map(|_| rng.gen_range(0.0..1.0)).collect();
        let train = FeatureMatrix::new(20, 3, train_rows).unwrap();
        let labels: Vec<u8> = (0..20).map(|_| rng.gen_range(0..10u8)).collect();
        let q_rows: Vec<f64> = (0..150).map(|_| rng.gen_range(0.0..1.0)).collect();
        let queries = FeatureMatrix::new(50, 3, q_rows).unwrap();
        let model = KnnModel::new(&train, &labels, 4).unwrap();
        let batch = model.classify_batch(&queries, 9).unwrap();
        for qi in 0..queries.n() {
            let mut tie_rng = rng_for_stream(9, qi as u64);
            let neighbors = model.top_neighbors(queries.row(qi), 4);
            let single = vote(&neighbors, &labels, 4, &mut tie_rng);
            assert_eq!(batch[qi], single);
        }
    }

    #[test]
    fn scale_invariance_of_predictions() {
        use rand::Rng;
        let mut rng = rng_from_seed(5);
        let rows: Vec<f64> = (0..90).map(|_| rng.gen_range(0.0..1.0)).collect();
        let train = FeatureMatrix::new(30, 3, rows.clone()).unwrap();
        let scaled_rows: Vec<f64> = rows.iter().map(|&v| v * 7.5).collect();
        let scaled = FeatureMatrix::new(30, 3, scaled_rows).unwrap();
        let labels: Vec<u8> = (0..30).map(|_| rng.gen_range(0..10u8)).collect();
        let q: Vec<f64> = vec![0.4, 0.6, 0.1];
        let q_scaled: Vec<f64> = q.iter().map(|&v| v * 7.5).collect();
        let m1 = KnnModel::new(&train, &labels, 5).unwrap();
        let m2 = KnnModel::new(&scaled, &labels, 5).unwrap();
        assert_eq!(m1.classify(&q, 3).unwrap(), m2.classify(&q_scaled, 3).unwrap());
    }

    #[test]
    fn sweep_zero_error_when_validation_equals_train() {
        let train = features(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let labels = [0u8, 1, 2, 3];
        let report =
            knn_sweep((&train, &labels), (&train, &labels), &[1], &[0, 1, 2]).unwrap();
        assert_eq!(report.best_k, 1);
        assert!(report.cells.iter().all(|c| c.errors == 0));
    }

    #[test]
    fn sweep_repeated_seed_rows_identical() {
        let train = features(&[&[0.0], &[0.5], &[1.0], &[1.5]]);
        let labels = [0u8, 1, 0, 1];
        let val = features(&[&[0.2], &[0.7], &[1.2]]);
        let val_labels = [0u8, 1, 0];
        let report = knn_sweep(
            (&train, &labels),
            (&val, &val_labels),
            &[1, 3],
            &[5, 5],
        )
        .unwrap();
        for k in [1usize, 3] {
            let rows: Vec<_> = report.cells.iter().filter(|c| c.k == k).collect();
            assert_eq!(rows[0].errors, rows[1].errors);
        }
    }

    #[test]
    fn sweep_matches_classify_batch() {
        use rand::Rng;
        let mut rng = rng_from_seed(31);
        let rows: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
        let train = FeatureMatrix::new(50, 4, rows).unwrap();
        let labels: Vec<u8> = (0..50).map(|_| rng.gen_range(0..4u8)).collect();
        let v_rows: Vec<f64> = (0..80).map(|_| rng.gen_range(0.0..1.0)).collect();
        let val = FeatureMatrix::new(20, 4, v_rows).unwrap();
        let val_labels: Vec<u8> = (0..20).map(|_| rng.gen_range(0..4u8)).collect();

        let report = knn_sweep(
            (&train, &labels),
            (&val, &val_labels),
            &[3],
            &[11],
        )
        .unwrap();
        let model = KnnModel::new(&train, &labels, 3).unwrap();
        let preds = model.classify_batch(&val, 11).unwrap();
        let errors = preds
            .iter()
            .zip(&val_labels)
            .filter(|(p, t)| p != t)
            .count();
        assert_eq!(report.cells[0].errors, errors);
    }
}
