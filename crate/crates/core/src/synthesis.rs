//! Synthetic digit generation by bootstrap pair-averaging inside strong
//! sub-labels, and assembly of the augmented case datasets.
//!
//! Parents are always drawn from the ORIGINAL grayscale digits; the binary
//! view exists only to fit the mixture that defines the sub-labels.

use rand::Rng;

use crate::dataset::{ImageSet, LabelSet};
use crate::error::{Error, Result};
use crate::seeding::rng_for_stream;
use crate::sublabels::{Assignment, StrongSubLabelSet};

/// Origin of one synthetic digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub sub_label_id: usize,
    pub parent_a: usize,
    pub parent_b: usize,
}

/// A batch of synthetic digits with real-valued pixels in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBatch {
    d: usize,
    width: usize,
    height: usize,
    rows: Vec<f64>,
    labels: Vec<u8>,
    provenance: Vec<Provenance>,
    pub seed: u64,
}

impl SyntheticBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Pixels rounded half-up to integers, as an [`ImageSet`].
    pub fn to_image_set(&self) -> ImageSet {
        let pixels: Vec<u8> = self
            .rows
            .iter()
            .map(|&v| (v + 0.5).floor().min(255.0) as u8)
            .collect();
        ImageSet::new(self.labels.len(), self.width, self.height, pixels)
            .expect("batch geometry is consistent")
    }

    pub fn to_label_set(&self) -> LabelSet {
        LabelSet::new(self.labels.clone()).expect("labels validated at generation")
    }
}

/// One of the three training-set arms of the augmentation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    A,
    B,
    C,
}

impl CaseId {
    pub fn letter(&self) -> char {
        match self {
            CaseId::A => 'A',
            CaseId::B => 'B',
            CaseId::C => 'C',
        }
    }
}

/// A fully assembled case training set.
#[derive(Debug, Clone)]
pub struct CaseDataset {
    pub case_id: CaseId,
    pub images: ImageSet,
    pub labels: LabelSet,
    pub real_count: usize,
    pub synthetic_count: usize,
}

/// Generates `n_per_sublabel` synthetic digits for every strong sub-label.
///
/// Each draw picks two distinct member digits uniformly at random (members
/// are reusable across draws) from the sub-label's majority-label members,
/// and averages their grayscale pixels. Each sub-label consumes an
/// independent RNG stream derived from `(seed, component_id)`, so the batch
/// is reproducible and insensitive to sub-label processing order.
pub fn bootstrap_synthesize(
    train_gray: &ImageSet,
    train_labels: &LabelSet,
    assignment: &Assignment,
    strong: &StrongSubLabelSet,
    n_per_sublabel: usize,
    seed: u64,
) -> Result<SyntheticBatch> {
    if train_gray.n() != train_labels.n() {
        return Err(Error::LengthMismatch {
            left: train_gray.n(),
            right: train_labels.n(),
        });
    }
    if train_gray.n() != assignment.n() {
        return Err(Error::LengthMismatch {
            left: train_gray.n(),
            right: assignment.n(),
        });
    }
    let d = train_gray.d();
    let mut rows = Vec::with_capacity(strong.entries.len() * n_per_sublabel * d);
    let mut labels = Vec::with_capacity(strong.entries.len() * n_per_sublabel);
    let mut provenance = Vec::with_capacity(strong.entries.len() * n_per_sublabel);

    for entry in &strong.entries {
        // only majority-label members may become parents
        let members: Vec<usize> = (0..train_gray.n())
            .filter(|&i| {
                assignment.get(i) == entry.component_id
                    && train_labels.get(i) == entry.majority_label
            })
            .collect();
        if members.len() < 2 {
            return Err(Error::TooFewMembers {
                component_id: entry.component_id,
                members: members.len(),
            });
        }
        let mut rng = rng_for_stream(seed, entry.component_id as u64);
        for _ in 0..n_per_sublabel {
            let a = rng.gen_range(0..members.len());
            let mut b = rng.gen_range(0..members.len() - 1);
            if b >= a {
                b += 1;
            }
            let (pa, pb) = (members[a], members[b]);
            let ra = train_gray.row(pa);
            let rb = train_gray.row(pb);
            for i in 0..d {
                rows.push((f64::from(ra[i]) + f64::from(rb[i])) / 2.0);
            }
            labels.push(entry.majority_label);
            provenance.push(Provenance {
                sub_label_id: entry.component_id,
                parent_a: pa,
                parent_b: pb,
            });
        }
    }

    Ok(SyntheticBatch {
        d,
        width: train_gray.width(),
        height: train_gray.height(),
        rows,
        labels,
        provenance,
        seed,
    })
}

/// Builds one case training set.
///
/// Case A is the real training set alone; case B appends the synthetic
/// batch (pixels rounded half-up to integers); case C appends `extra_real`,
/// which must mirror the batch size when the batch is supplied.
pub fn assemble_case(
    case_id: CaseId,
    real_train: (&ImageSet, &LabelSet),
    batch: Option<&SyntheticBatch>,
    extra_real: Option<(&ImageSet, &LabelSet)>,
) -> Result<CaseDataset> {
    let (images, labels) = real_train;
    if images.n() != labels.n() {
        return Err(Error::LengthMismatch {
            left: images.n(),
            right: labels.n(),
        });
    }
    match case_id {
        CaseId::A => Ok(CaseDataset {
            case_id,
            images: images.clone(),
            labels: labels.clone(),
            real_count: images.n(),
            synthetic_count: 0,
        }),
        CaseId::B => {
            let batch = batch.ok_or(Error::MissingComponent {
                case: 'B',
                what: "synthetic batch",
            })?;
            let synth_images = batch.to_image_set();
            Ok(CaseDataset {
                case_id,
                images: images.concat(&synth_images)?,
                labels: labels.concat(&batch.to_label_set()),
                real_count: images.n(),
                synthetic_count: batch.len(),
            })
        }
        CaseId::C => {
            let (extra_images, extra_labels) = extra_real.ok_or(Error::MissingComponent {
                case: 'C',
                what: "extra real digits",
            })?;
            if extra_images.n() != extra_labels.n() {
                return Err(Error::LengthMismatch {
                    left: extra_images.n(),
                    right: extra_labels.n(),
                });
            }
            if let Some(batch) = batch {
                if extra_images.n() != batch.len() {
                    return Err(Error::LengthMismatch {
                        left: extra_images.n(),
                        right: batch.len(),
                    });
                }
            }
            Ok(CaseDataset {
                case_id,
                images: images.concat(extra_images)?,
                labels: labels.concat(extra_labels),
                real_count: images.n() + extra_images.n(),
                synthetic_count: 0,
            })
        }
    }
}
