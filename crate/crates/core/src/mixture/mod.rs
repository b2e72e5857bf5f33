//! Bernoulli mixture models: likelihood evaluation, EM fitting, AIC scoring,
//! and model-selection sweeps over the component count.
//!
//! All likelihood work happens in the log domain. The per-digit score of
//! component `k` is rearranged as
//!
//! ```text
//! log pi_k + sum_i log(1 - p_ki) + sum_{i : x_i = 1} [log p_ki - log(1 - p_ki)]
//! ```
//!
//! so a pass over a digit touches only its ON pixels. Row passes run in
//! parallel over fixed-size chunks whose partial sums are folded in chunk
//! order, which keeps every result bit-stable regardless of thread count.

mod io;

pub use io::{model_from_bytes, model_to_bytes, read_model, write_model};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::BinaryImageSet;
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

/// Clamping floor for Bernoulli parameters; keeps every log finite.
pub const PARAM_FLOOR: f64 = 1e-6;

/// Soft count below which a component is considered dead and re-seeded.
pub const DEAD_COMPONENT_FLOOR: f64 = 1e-8;

/// Range of the uniform draw used for initial (and re-seeded) parameters.
const INIT_LOW: f64 = 0.25;
const INIT_HIGH: f64 = 0.75;

/// Rows per parallel work unit. Fixed so reductions are schedule-independent.
const ROW_CHUNK: usize = 512;

/// A finite mixture of product-Bernoulli components.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliMixture {
    k: usize,
    d: usize,
    pi: Vec<f64>,
    /// K x D, row-major.
    p: Vec<f64>,
}

impl BernoulliMixture {
    /// Validates mixing weights and parameter bounds.
    pub fn new(pi: Vec<f64>, p: Vec<f64>, d: usize) -> Result<Self> {
        let k = pi.len();
        if k == 0 || d == 0 {
            return Err(Error::InvalidComponentCount);
        }
        if p.len() != k * d {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: k * d,
            });
        }
        let sum: f64 = pi.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || pi.iter().any(|&w| w < 0.0) {
            return Err(Error::BadModelFile(format!(
                "mixing weights must be non-negative and sum to 1 (sum = {sum})"
            )));
        }
        if p.iter().any(|&v| !(PARAM_FLOOR..=1.0 - PARAM_FLOOR).contains(&v)) {
            return Err(Error::BadModelFile(
                "Bernoulli parameters must lie in [1e-6, 1 - 1e-6]".into(),
            ));
        }
        Ok(Self { k, d, pi, p })
    }

    pub(crate) fn from_parts_unchecked(pi: Vec<f64>, p: Vec<f64>, d: usize) -> Self {
        let k = pi.len();
        Self { k, d, pi, p }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Parameter vector of component `k`.
    pub fn component(&self, k: usize) -> &[f64] {
        &self.p[k * self.d..(k + 1) * self.d]
    }

    /// Model with components reordered by `perm` (inverse-free relabeling).
    pub fn permuted(&self, perm: &[usize]) -> BernoulliMixture {
        let mut pi = Vec::with_capacity(self.k);
        let mut p = Vec::with_capacity(self.p.len());
        for &k in perm {
            pi.push(self.pi[k]);
            p.extend_from_slice(self.component(k));
        }
        BernoulliMixture::from_parts_unchecked(pi, p, self.d)
    }
}

/// Posterior membership probabilities, one row per digit.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n: usize,
    k: usize,
    gamma: Vec<f64>,
}

impl Responsibilities {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.k..(i + 1) * self.k]
    }

    pub fn from_rows(n: usize, k: usize, gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != n * k {
            return Err(Error::LengthMismatch {
                left: gamma.len(),
                right: n * k,
            });
        }
        Ok(Self { n, k, gamma })
    }
}

/// EM stopping parameters.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            rel_tol: 1e-6,
        }
    }
}

/// Outcome of one EM run.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: BernoulliMixture,
    /// Log-likelihood after 0, 1, 2, ... M-steps; the last entry is the
    /// log-likelihood of `model`.
    pub loglik_trace: Vec<f64>,
    /// Number of M-steps performed.
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    /// Dead components re-seeded during the run. Monotonicity of the trace is
    /// guaranteed only when this is zero.
    pub reseeds: usize,
}

impl FitResult {
    pub fn final_loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace is never empty")
    }
}

/// How `select_k` aggregates seeds when ranking component counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    #[default]
    MeanOverSeeds,
    BestOverSeeds,
}

impl std::str::FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(SelectionRule::MeanOverSeeds),
            "best" => Ok(SelectionRule::BestOverSeeds),
            other => Err(Error::Config(format!("unknown selection rule `{other}`"))),
        }
    }
}

/// One fitted (K, seed) cell of a selection sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepEntry {
    pub k: usize,
    pub seed: u64,
    pub loglik: f64,
    pub eta: usize,
    pub aic_score: f64,
}

/// Full sweep table plus the selected component count.
#[derive(Debug, Clone)]
pub struct ModelSelectionReport {
    pub entries: Vec<SweepEntry>,
    pub best_k: usize,
    pub rule: SelectionRule,
}

impl ModelSelectionReport {
    /// Mean score per K, in first-seen grid order.
    pub fn mean_scores(&self) -> Vec<(usize, f64)> {
        let mut order: Vec<usize> = Vec::new();
        for e in &self.entries {
            if !order.contains(&e.k) {
                order.push(e.k);
            }
        }
        order
            .into_iter()
            .map(|k| {
                let scores: Vec<f64> = self
                    .entries
                    .iter()
                    .filter(|e| e.k == k)
                    .map(|e| e.aic_score)
                    .collect();
                (k, scores.iter().sum::<f64>() / scores.len() as f64)
            })
            .collect()
    }
}

/// Sweep outcome: the report plus the retained best fit.
#[derive(Debug, Clone)]
pub struct SelectKResult {
    pub report: ModelSelectionReport,
    /// Fit at `best_k` with the best-scoring seed for that K.
    pub best_fit: FitResult,
}

/// Number of free parameters of a K-component model over D binary pixels.
pub fn free_parameters(k: usize, d: usize) -> usize {
    k * (d + 1) - 1
}

/// Selection score `2*loglik - 2*eta`; the best model maximizes it.
pub fn aic_score(loglik: f64, eta: usize) -> f64 {
    2.0 * loglik - 2.0 * (eta as f64)
}

/// Log-probability of a binary vector under a single product-Bernoulli
/// component.
pub fn component_log_pmf(x: &[u8], p_k: &[f64]) -> Result<f64> {
    if x.len() != p_k.len() {
        return Err(Error::DimensionMismatch {
            expected: p_k.len(),
            got: x.len(),
        });
    }
    let mut acc = 0.0;
    for (&xi, &pi) in x.iter().zip(p_k) {
        acc += if xi == 1 { pi.ln() } else { (1.0 - pi).ln() };
    }
    Ok(acc)
}

/// Log-probability of a binary vector under the full mixture
/// (log-sum-exp over components; zero-weight components are skipped).
pub fn mixture_log_pmf(x: &[u8], model: &BernoulliMixture) -> Result<f64> {
    if x.len() != model.d {
        return Err(Error::DimensionMismatch {
            expected: model.d,
            got: x.len(),
        });
    }
    let mut scores = Vec::with_capacity(model.k);
    for k in 0..model.k {
        if model.pi[k] == 0.0 {
            continue;
        }
        scores.push(model.pi[k].ln() + component_log_pmf(x, model.component(k))?);
    }
    Ok(log_sum_exp(&scores))
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + scores.iter().map(|&s| (s - m).exp()).sum::<f64>().ln()
}

/// Sparse on-pixel view of a binary image set (CSR layout).
struct SparseBinary {
    n: usize,
    offsets: Vec<u32>,
    indices: Vec<u32>,
}

impl SparseBinary {
    fn build(x: &BinaryImageSet) -> Self {
        let n = x.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        offsets.push(0u32);
        for i in 0..n {
            for (j, &b) in x.row(i).iter().enumerate() {
                if b == 1 {
                    indices.push(j as u32);
                }
            }
            offsets.push(indices.len() as u32);
        }
        Self {
            n,
            offsets,
            indices,
        }
    }

    fn on(&self, i: usize) -> &[u32] {
        &self.indices[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// Per-component score tables, laid out for contiguous inner loops.
struct ScoreTables {
    k: usize,
    /// `base[k] = log pi_k + sum_i log(1 - p_ki)`; -inf when `pi_k == 0`.
    base: Vec<f64>,
    /// D x K: `wt[i*K + k] = log p_ki - log(1 - p_ki)`.
    wt: Vec<f64>,
}

impl ScoreTables {
    fn build(model: &BernoulliMixture) -> Self {
        let (k, d) = (model.k, model.d);
        let mut base = vec![0.0; k];
        let mut wt = vec![0.0; d * k];
        for kk in 0..k {
            let row = model.component(kk);
            let mut c = 0.0;
            for (i, &p) in row.iter().enumerate() {
                let lp = p.ln();
                let l1p = (1.0 - p).ln();
                c += l1p;
                wt[i * k + kk] = lp - l1p;
            }
            base[kk] = model.pi[kk].ln() + c;
        }
        Self { k, base, wt }
    }

    /// Fills `acc` with the K per-component scores of one digit.
    fn row_scores(&self, on: &[u32], acc: &mut [f64]) {
        acc.copy_from_slice(&self.base);
        for &i in on {
            let w = &self.wt[i as usize * self.k..(i as usize + 1) * self.k];
            for (a, &ww) in acc.iter_mut().zip(w) {
                *a += ww;
            }
        }
    }
}

/// Normalizes scores into responsibilities; returns the row log-likelihood.
fn scores_to_gamma(acc: &mut [f64]) -> f64 {
    let m = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for a in acc.iter_mut() {
        *a = (*a - m).exp();
        sum += *a;
    }
    for a in acc.iter_mut() {
        *a /= sum;
    }
    m + sum.ln()
}

fn fixed_chunks(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .step_by(ROW_CHUNK)
        .map(|s| (s, (s + ROW_CHUNK).min(n)))
        .collect()
}

/// Data log-likelihood: sum of `mixture_log_pmf` over all rows.
pub fn log_likelihood(x: &BinaryImageSet, model: &BernoulliMixture) -> Result<f64> {
    if x.d() != model.d {
        return Err(Error::DimensionMismatch {
            expected: model.d,
            got: x.d(),
        });
    }
    if x.n() == 0 {
        return Ok(0.0);
    }
    let sparse = SparseBinary::build(x);
    let tables = ScoreTables::build(model);
    let partials: Vec<f64> = fixed_chunks(x.n())
        .par_iter()
        .map(|&(start, end)| {
            let mut acc = vec![0.0; tables.k];
            let mut ll = 0.0;
            for i in start..end {
                tables.row_scores(sparse.on(i), &mut acc);
                ll += log_sum_exp_prepared(&acc);
            }
            ll
        })
        .collect();
    Ok(partials.iter().sum())
}

fn log_sum_exp_prepared(acc: &[f64]) -> f64 {
    let m = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + acc.iter().map(|&s| (s - m).exp()).sum::<f64>().ln()
}

/// Posterior membership of every digit in every component.
pub fn e_step(x: &BinaryImageSet, model: &BernoulliMixture) -> Result<Responsibilities> {
    if x.d() != model.d {
        return Err(Error::DimensionMismatch {
            expected: model.d,
            got: x.d(),
        });
    }
    let sparse = SparseBinary::build(x);
    let tables = ScoreTables::build(model);
    let k = model.k;
    let rows: Vec<Vec<f64>> = fixed_chunks(x.n())
        .par_iter()
        .map(|&(start, end)| {
            let mut out = vec![0.0; (end - start) * k];
            for i in start..end {
                let acc = &mut out[(i - start) * k..(i - start + 1) * k];
                tables.row_scores(sparse.on(i), acc);
                scores_to_gamma(acc);
            }
            out
        })
        .collect();
    let mut gamma = Vec::with_capacity(x.n() * k);
    for chunk in rows {
        gamma.extend_from_slice(&chunk);
    }
    Ok(Responsibilities {
        n: x.n(),
        k,
        gamma,
    })
}

/// Accumulated sufficient statistics of one E-step.
struct MStepStats {
    /// Soft counts per component.
    nk: Vec<f64>,
    /// D x K transposed weighted pixel sums.
    at: Vec<f64>,
}

fn accumulate_stats<F>(sparse: &SparseBinary, k: usize, d: usize, gamma_of: F) -> (f64, MStepStats)
where
    F: Fn(usize, &mut [f64]) -> f64 + Sync,
{
    let partials: Vec<(f64, MStepStats)> = fixed_chunks(sparse.n)
        .par_iter()
        .map(|&(start, end)| {
            let mut nk = vec![0.0; k];
            let mut at = vec![0.0; d * k];
            let mut ll = 0.0;
            let mut g = vec![0.0; k];
            for i in start..end {
                ll += gamma_of(i, &mut g);
                for (a, &gk) in nk.iter_mut().zip(&g) {
                    *a += gk;
                }
                for &px in sparse.on(i) {
                    let row = &mut at[px as usize * k..(px as usize + 1) * k];
                    for (a, &gk) in row.iter_mut().zip(&g) {
                        *a += gk;
                    }
                }
            }
            (ll, MStepStats { nk, at })
        })
        .collect();

    let mut ll = 0.0;
    let mut nk = vec![0.0; k];
    let mut at = vec![0.0; d * k];
    for (pll, stats) in partials {
        ll += pll;
        for (a, b) in nk.iter_mut().zip(&stats.nk) {
            *a += b;
        }
        for (a, b) in at.iter_mut().zip(&stats.at) {
            *a += b;
        }
    }
    (ll, MStepStats { nk, at })
}

/// Builds the updated model from sufficient statistics. Dead components are
/// re-seeded from the uniform initializer with weight 1/N, then the weights
/// are renormalized.
fn model_from_stats(
    stats: &MStepStats,
    n: usize,
    k: usize,
    d: usize,
    rng: &mut ChaCha8Rng,
    reseeds: &mut usize,
) -> BernoulliMixture {
    let mut pi = vec![0.0; k];
    let mut p = vec![0.0; k * d];
    for kk in 0..k {
        if stats.nk[kk] < DEAD_COMPONENT_FLOOR {
            *reseeds += 1;
            pi[kk] = 1.0 / n as f64;
            for i in 0..d {
                p[kk * d + i] = rng.gen_range(INIT_LOW..INIT_HIGH);
            }
        } else {
            pi[kk] = stats.nk[kk] / n as f64;
            for i in 0..d {
                let v = stats.at[i * k + kk] / stats.nk[kk];
                p[kk * d + i] = v.clamp(PARAM_FLOOR, 1.0 - PARAM_FLOOR);
            }
        }
    }
    let sum: f64 = pi.iter().sum();
    for w in &mut pi {
        *w /= sum;
    }
    BernoulliMixture::from_parts_unchecked(pi, p, d)
}

/// Weighted-MLE parameter update from explicit responsibilities.
///
/// `rng` supplies replacement parameters for components whose soft count
/// falls below [`DEAD_COMPONENT_FLOOR`].
pub fn m_step(
    x: &BinaryImageSet,
    gamma: &Responsibilities,
    rng: &mut ChaCha8Rng,
) -> Result<BernoulliMixture> {
    if x.n() != gamma.n() {
        return Err(Error::LengthMismatch {
            left: x.n(),
            right: gamma.n(),
        });
    }
    if x.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let (k, d) = (gamma.k, x.d());
    let sparse = SparseBinary::build(x);
    let (_, stats) = accumulate_stats(&sparse, k, d, |i, g| {
        g.copy_from_slice(gamma.row(i));
        0.0
    });
    let mut reseeds = 0;
    Ok(model_from_stats(&stats, x.n(), k, d, rng, &mut reseeds))
}

fn init_model(k: usize, d: usize, rng: &mut ChaCha8Rng) -> BernoulliMixture {
    let pi = vec![1.0 / k as f64; k];
    let mut p = Vec::with_capacity(k * d);
    for _ in 0..k * d {
        p.push(rng.gen_range(INIT_LOW..INIT_HIGH));
    }
    BernoulliMixture::from_parts_unchecked(pi, p, d)
}

/// Fits a K-component mixture by EM from a seeded initialization.
///
/// Stops when the relative log-likelihood change drops below
/// `config.rel_tol` or after `config.max_iter` M-steps. Fully reproducible
/// given `(x, k, seed, config)`.
pub fn fit_em(
    x: &BinaryImageSet,
    k: usize,
    seed: u64,
    config: &FitConfig,
) -> Result<FitResult> {
    if k == 0 {
        return Err(Error::InvalidComponentCount);
    }
    if x.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if x.n() < k {
        eprintln!(
            "warning: fitting K={k} components to only {} rows; components may collapse",
            x.n()
        );
    }
    let (n, d) = (x.n(), x.d());
    let mut rng = rng_from_seed(seed);
    let mut model = init_model(k, d, &mut rng);
    let sparse = SparseBinary::build(x);

    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut reseeds = 0;

    loop {
        let tables = ScoreTables::build(&model);
        let (ll, stats) = accumulate_stats(&sparse, k, d, |i, g| {
            tables.row_scores(sparse.on(i), g);
            scores_to_gamma(g)
        });
        trace.push(ll);

        if trace.len() >= 2 {
            let prev = trace[trace.len() - 2];
            if (ll - prev).abs() <= config.rel_tol * prev.abs() {
                converged = true;
                break;
            }
        }
        if iterations == config.max_iter {
            break;
        }
        model = model_from_stats(&stats, n, k, d, &mut rng, &mut reseeds);
        iterations += 1;
    }

    Ok(FitResult {
        model,
        loglik_trace: trace,
        iterations,
        converged,
        seed,
        reseeds,
    })
}

/// Fits every (K, seed) pair and selects the best component count.
///
/// Ranking uses the mean score across seeds by default; ties resolve to the
/// earlier grid entry. The retained fit is the best-scoring seed at the
/// selected K.
pub fn select_k(
    x: &BinaryImageSet,
    k_grid: &[usize],
    seeds: &[u64],
    config: &FitConfig,
    rule: SelectionRule,
) -> Result<SelectKResult> {
    if k_grid.is_empty() || seeds.is_empty() {
        return Err(Error::Config("k grid and seeds must be non-empty".into()));
    }
    let d = x.d();
    let mut entries = Vec::with_capacity(k_grid.len() * seeds.len());
    let mut best_fit_per_k: Vec<Option<FitResult>> = vec![None; k_grid.len()];

    for (ki, &k) in k_grid.iter().enumerate() {
        for &seed in seeds {
            let fit = fit_em(x, k, seed, config).map_err(|e| Error::SweepFit {
                k,
                seed,
                source: Box::new(e),
            })?;
            let loglik = fit.final_loglik();
            let eta = free_parameters(k, d);
            entries.push(SweepEntry {
                k,
                seed,
                loglik,
                eta,
                aic_score: aic_score(loglik, eta),
            });
            let better = match &best_fit_per_k[ki] {
                None => true,
                Some(prev) => loglik > prev.final_loglik(),
            };
            if better {
                best_fit_per_k[ki] = Some(fit);
            }
        }
    }

    let best_k = match rule {
        SelectionRule::MeanOverSeeds => {
            let mut best = (k_grid[0], f64::NEG_INFINITY);
            for (k, mean) in mean_scores_over(&entries, k_grid) {
                if mean > best.1 {
                    best = (k, mean);
                }
            }
            best.0
        }
        SelectionRule::BestOverSeeds => {
            entries
                .iter()
                .fold((k_grid[0], f64::NEG_INFINITY), |acc, e| {
                    if e.aic_score > acc.1 {
                        (e.k, e.aic_score)
                    } else {
                        acc
                    }
                })
                .0
        }
    };

    let best_idx = k_grid.iter().position(|&k| k == best_k).unwrap();
    let best_fit = best_fit_per_k[best_idx].take().unwrap();
    Ok(SelectKResult {
        report: ModelSelectionReport {
            entries,
            best_k,
            rule,
        },
        best_fit,
    })
}

fn mean_scores_over(entries: &[SweepEntry], k_grid: &[usize]) -> Vec<(usize, f64)> {
    k_grid
        .iter()
        .map(|&k| {
            let scores: Vec<f64> = entries
                .iter()
                .filter(|e| e.k == k)
                .map(|e| e.aic_score)
                .collect();
            (k, scores.iter().sum::<f64>() / scores.len() as f64)
        })
        .collect()
}
