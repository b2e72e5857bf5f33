//! Bernoulli-mixture sub-label discovery and bootstrap augmentation for
//! handwritten digits.
//!
//! The library fits finite mixtures of product-Bernoulli distributions to
//! binarized digits with EM, selects the component count by an information
//! score, interprets high-purity components as sub-labels of the original
//! classes, synthesizes extra training digits by averaging bootstrap pairs
//! inside strong sub-labels, and measures the accuracy effect on KNN and
//! multilayer-network classifiers.
//!
//! ```
//! use sublabel::dataset::BinaryImageSet;
//! use sublabel::mixture::{fit_em, FitConfig};
//!
//! let rows = vec![
//!     1, 1, 0, 0,
//!     1, 1, 0, 0,
//!     0, 0, 1, 1,
//!     0, 0, 1, 1,
//! ];
//! let x = BinaryImageSet::from_rows(4, 4, rows).unwrap();
//! let fit = fit_em(&x, 2, 0, &FitConfig::default()).unwrap();
//! assert!(fit.converged);
//! ```

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod mixture;
pub mod seeding;
pub mod simulate;
pub mod sublabels;
pub mod synthesis;

pub use error::{Error, Result};
