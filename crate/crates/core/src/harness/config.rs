//! Pipeline configuration: a flat `key = value` text format whose keys
//! mirror the CLI flags. Unknown keys are rejected so typos fail loudly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::classifiers::mln::{LossKind, TrainConfig};
use crate::dataset::SplitPolicy;
use crate::error::{Error, Result};
use crate::mixture::SelectionRule;

/// Everything a full pipeline run needs.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub images: PathBuf,
    pub labels: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threshold: u8,
    pub total: usize,
    pub train: usize,
    pub validation: usize,
    pub split_policy: SplitPolicy,
    /// When set, skip the sweep and load this fitted model instead.
    pub model_in: Option<PathBuf>,
    pub k_grid: Vec<usize>,
    pub fit_seeds: Vec<u64>,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub selection_rule: SelectionRule,
    pub target_label: Option<u8>,
    pub min_purity: f64,
    pub min_size: usize,
    pub n_per_sublabel: usize,
    pub synth_seed: u64,
    pub knn_k_grid: Vec<usize>,
    pub knn_seeds: Vec<u64>,
    /// Neighbor count for the case comparison (the selected model of the
    /// neighbor sweep is reported separately).
    pub knn_case_k: usize,
    pub mln_epochs: usize,
    pub mln_learning_rate: f64,
    pub mln_momentum: f64,
    pub mln_batch_size: usize,
    pub mln_seed: u64,
    pub mln_loss: LossKind,
    pub case_epochs: usize,
    pub case_seeds: Vec<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            images: PathBuf::new(),
            labels: PathBuf::new(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            threshold: 100,
            total: 10_000,
            train: 8_000,
            validation: 2_000,
            split_policy: SplitPolicy::HeadOfFile,
            model_in: None,
            k_grid: (1..=11).map(|i| i * 15 - 5).collect(), // 10, 25, ..., 160
            fit_seeds: vec![0],
            max_iter: 200,
            rel_tol: 1e-6,
            selection_rule: SelectionRule::MeanOverSeeds,
            target_label: Some(8),
            min_purity: 0.85,
            min_size: 30,
            n_per_sublabel: 100,
            synth_seed: 0,
            knn_k_grid: (1..=10).collect(),
            knn_seeds: (0..10).collect(),
            knn_case_k: 3,
            mln_epochs: 40,
            mln_learning_rate: 0.07,
            mln_momentum: 0.9,
            mln_batch_size: 100,
            mln_seed: 0,
            mln_loss: LossKind::SquaredError,
            case_epochs: 8,
            case_seeds: (0..10).collect(),
        }
    }
}

impl PipelineConfig {
    pub fn mln_train_config(&self, epochs: usize) -> TrainConfig {
        TrainConfig {
            learning_rate: self.mln_learning_rate,
            momentum: self.mln_momentum,
            epochs,
            batch_size: self.mln_batch_size,
            seed: 0, // stream seed is filled in per run
            loss: self.mln_loss,
        }
    }

    /// Parses the flat key=value format. Lines starting with `#` and blank
    /// lines are ignored.
    pub fn from_str(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_map(&map)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut config = PipelineConfig::default();
        for (key, value) in map {
            config.apply(key, value)?;
        }
        if config.images.as_os_str().is_empty() || config.labels.as_os_str().is_empty() {
            return Err(Error::Config(
                "config must set `images` and `labels`".into(),
            ));
        }
        Ok(config)
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value for `{key}`: `{value}`")))
        }
        fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
            value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Config(format!("bad value for `{key}`: `{s}`")))
                })
                .collect()
        }
        match key {
            "images" => self.images = PathBuf::from(value),
            "labels" => self.labels = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "total" => self.total = num(key, value)?,
            "train" => self.train = num(key, value)?,
            "validation" => self.validation = num(key, value)?,
            "split_policy" => self.split_policy = value.parse()?,
            "model" => self.model_in = Some(PathBuf::from(value)),
            "k_grid" => self.k_grid = list(key, value)?,
            "fit_seeds" => self.fit_seeds = list(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "rel_tol" => self.rel_tol = num(key, value)?,
            "selection_rule" => self.selection_rule = value.parse()?,
            "target_label" => {
                self.target_label = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "min_purity" => self.min_purity = num(key, value)?,
            "min_size" => self.min_size = num(key, value)?,
            "n_per_sublabel" => self.n_per_sublabel = num(key, value)?,
            "synth_seed" => self.synth_seed = num(key, value)?,
            "knn_k_grid" => self.knn_k_grid = list(key, value)?,
            "knn_seeds" => self.knn_seeds = list(key, value)?,
            "knn_case_k" => self.knn_case_k = num(key, value)?,
            "mln_epochs" => self.mln_epochs = num(key, value)?,
            "mln_lr" => self.mln_learning_rate = num(key, value)?,
            "mln_momentum" => self.mln_momentum = num(key, value)?,
            "mln_batch_size" => self.mln_batch_size = num(key, value)?,
            "mln_seed" => self.mln_seed = num(key, value)?,
            "mln_loss" => {
                self.mln_loss = match value {
                    "squared-error" => LossKind::SquaredError,
                    "cross-entropy" => LossKind::CrossEntropy,
                    other => {
                        return Err(Error::Config(format!("unknown mln loss `{other}`")))
                    }
                }
            }
            "case_epochs" => self.case_epochs = num(key, value)?,
            "case_seeds" => self.case_seeds = list(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Canonical echo of the effective configuration, for the manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        fn join<T: std::fmt::Display>(values: &[T]) -> String {
            values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
        let mut map = BTreeMap::new();
        map.insert("images".into(), self.images.display().to_string());
        map.insert("labels".into(), self.labels.display().to_string());
        map.insert("out_dir".into(), self.out_dir.display().to_string());
        map.insert("seed".into(), self.seed.to_string());
        map.insert("threshold".into(), self.threshold.to_string());
        map.insert("total".into(), self.total.to_string());
        map.insert("train".into(), self.train.to_string());
        map.insert("validation".into(), self.validation.to_string());
        map.insert(
            "split_policy".into(),
            match self.split_policy {
                SplitPolicy::HeadOfFile => "head-of-file".into(),
                SplitPolicy::SeededRandom => "seeded-random".into(),
            },
        );
        if let Some(model) = &self.model_in {
            map.insert("model".into(), model.display().to_string());
        }
        map.insert("k_grid".into(), join(&self.k_grid));
        map.insert("fit_seeds".into(), join(&self.fit_seeds));
        map.insert("max_iter".into(), self.max_iter.to_string());
        map.insert("rel_tol".into(), self.rel_tol.to_string());
        map.insert(
            "selection_rule".into(),
            match self.selection_rule {
                SelectionRule::MeanOverSeeds => "mean".into(),
                SelectionRule::BestOverSeeds => "best".into(),
            },
        );
        map.insert(
            "target_label".into(),
            self.target_label
                .map_or("none".into(), |l| l.to_string()),
        );
        map.insert("min_purity".into(), self.min_purity.to_string());
        map.insert("min_size".into(), self.min_size.to_string());
        map.insert("n_per_sublabel".into(), self.n_per_sublabel.to_string());
        map.insert("synth_seed".into(), self.synth_seed.to_string());
        map.insert("knn_k_grid".into(), join(&self.knn_k_grid));
        map.insert("knn_seeds".into(), join(&self.knn_seeds));
        map.insert("knn_case_k".into(), self.knn_case_k.to_string());
        map.insert("mln_epochs".into(), self.mln_epochs.to_string());
        map.insert("mln_lr".into(), self.mln_learning_rate.to_string());
        map.insert("mln_momentum".into(), self.mln_momentum.to_string());
        map.insert("mln_batch_size".into(), self.mln_batch_size.to_string());
        map.insert("mln_seed".into(), self.mln_seed.to_string());
        map.insert(
            "mln_loss".into(),
            match self.mln_loss {
                LossKind::SquaredError => "squared-error".into(),
                LossKind::CrossEntropy => "cross-entropy".into(),
            },
        );
        map.insert("case_epochs".into(), self.case_epochs.to_string());
        map.insert("case_seeds".into(), join(&self.case_seeds));
        map
    }
}
