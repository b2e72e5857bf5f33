//! Sub-label analysis: hard assignment of digits to mixture components,
//! purity reporting against the original class labels, strong sub-label
//! selection, and centroid image export.

use std::io::Write;
use std::path::Path;

use crate::dataset::LabelSet;
use crate::error::{Error, Result};
use crate::mixture::{BernoulliMixture, Responsibilities};

/// Per-digit component membership after argmax over responsibilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    component_of: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(component_of: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = component_of.iter().find(|&&c| c >= k) {
            return Err(Error::BadComponentId { id: bad, k });
        }
        Ok(Self { component_of, k })
    }

    pub fn n(&self) -> usize {
        self.component_of.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn component_of(&self) -> &[usize] {
        &self.component_of
    }

    pub fn get(&self, i: usize) -> usize {
        self.component_of[i]
    }
}

/// Class histogram and purity of one mixture component.
#[derive(Debug, Clone, PartialEq)]
pub struct SubLabelReport {
    pub component_id: usize,
    pub size: usize,
    pub class_counts: [usize; 10],
    /// `None` for empty components (purity is undefined, never 0).
    pub purity: Option<f64>,
    pub majority_label: Option<u8>,
}

/// Thresholds for admitting a component as a strong sub-label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongRule {
    pub min_purity: f64,
    pub min_size: usize,
    pub target_label: Option<u8>,
}

impl Default for StrongRule {
    fn default() -> Self {
        Self {
            min_purity: 0.85,
            min_size: 30,
            target_label: None,
        }
    }
}

/// One admitted strong sub-label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongSubLabel {
    pub component_id: usize,
    pub majority_label: u8,
    pub size: usize,
    pub purity: f64,
}

/// Components passing the selection rule, sorted by purity then size
/// descending.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongSubLabelSet {
    pub entries: Vec<StrongSubLabel>,
    pub rule: StrongRule,
}

/// Argmax over each responsibility row; exact ties resolve to the lowest
/// component index.
pub fn hard_assign(gamma: &Responsibilities) -> Assignment {
    let mut component_of = Vec::with_capacity(gamma.n());
    for i in 0..gamma.n() {
        let row = gamma.row(i);
        let mut best = 0usize;
        for (k, &g) in row.iter().enumerate() {
            if g > row[best] {
                best = k;
            }
        }
        component_of.push(best);
    }
    Assignment {
        component_of,
        k: gamma.k(),
    }
}

/// One report per component id in `0..k`, empty components included.
pub fn purity_report(
    assignment: &Assignment,
    labels: &LabelSet,
    k: usize,
) -> Result<Vec<SubLabelReport>> {
    if assignment.n() != labels.n() {
        return Err(Error::LengthMismatch {
            left: assignment.n(),
            right: labels.n(),
        });
    }
    let mut counts = vec![[0usize; 10]; k];
    for (i, &c) in assignment.component_of.iter().enumerate() {
        counts[c][labels.get(i) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(component_id, class_counts)| {
            let size: usize = class_counts.iter().sum();
            if size == 0 {
                SubLabelReport {
                    component_id,
                    size,
                    class_counts,
                    purity: None,
                    majority_label: None,
                }
            } else {
                // majority ties break toward the lower label
                let mut majority = 0usize;
                for (label, &c) in class_counts.iter().enumerate() {
                    if c > class_counts[majority] {
                        majority = label;
                    }
                }
                SubLabelReport {
                    component_id,
                    size,
                    class_counts,
                    purity: Some(class_counts[majority] as f64 / size as f64),
                    majority_label: Some(majority as u8),
                }
            }
        })
        .collect())
}

/// Filters reports by the rule; result is sorted by purity descending, then
/// size descending, then component id ascending.
pub fn strong_sublabels(reports: &[SubLabelReport], rule: StrongRule) -> StrongSubLabelSet {
    let mut entries: Vec<StrongSubLabel> = reports
        .iter()
        .filter_map(|r| {
            let purity = r.purity?;
            let majority_label = r.majority_label?;
            if purity < rule.min_purity || r.size < rule.min_size {
                return None;
            }
            if let Some(target) = rule.target_label {
                if majority_label != target {
                    return None;
                }
            }
            Some(StrongSubLabel {
                component_id: r.component_id,
                majority_label,
                size: r.size,
                purity,
            })
        })
        .collect();
    entries.sort_by(|a, b| {
        b.purity
            .partial_cmp(&a.purity)
            .unwrap()
            .then(b.size.cmp(&a.size))
            .then(a.component_id.cmp(&b.component_id))
    });
    StrongSubLabelSet { entries, rule }
}

/// Renders a component's parameter vector as binary PGM bytes (P5, maxval
/// 255), pixel = round-half-up of `255 * p`.
pub fn centroid_pgm(model: &BernoulliMixture, component_id: usize) -> Result<Vec<u8>> {
    if component_id >= model.k() {
        return Err(Error::BadComponentId {
            id: component_id,
            k: model.k(),
        });
    }
    let d = model.d();
    let side = (d as f64).sqrt().round() as usize;
    let (w, h) = if side * side == d { (side, side) } else { (d, 1) };
    let mut out = Vec::with_capacity(32 + d);
    write!(out, "P5\n{w} {h}\n255\n")?;
    for &p in model.component(component_id) {
        out.push((p * 255.0 + 0.5).floor() as u8);
    }
    Ok(out)
}

/// Writes the centroid image of one component to `path`.
pub fn export_centroid(model: &BernoulliMixture, component_id: usize, path: &Path) -> Result<()> {
    let bytes = centroid_pgm(model, component_id)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::PARAM_FLOOR;

    fn gamma_from(rows: &[&[f64]]) -> Responsibilities {
        let k = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Responsibilities::from_rows(rows.len(), k, flat).unwrap()
    }

    #[test]
    fn hard_assign_argmax_and_ties() {
        let gamma = gamma_from(&[&[0.1, 0.7, 0.2], &[0.5, 0.5, 0.0], &[0.2, 0.2, 0.6]]);
        let a = hard_assign(&gamma);
        assert_eq!(a.component_of(), &[1, 0, 2]);
    }

    #[test]
    fn hard_assign_single_component() {
        let gamma = gamma_from(&[&[1.0], &[1.0]]);
        assert_eq!(hard_assign(&gamma).component_of(), &[0, 0]);
    }

    #[test]
    fn purity_report_table_row() {
        // component with 101 eights and 3 others: size 104, purity ~0.97
        let mut assignment = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..101 {
            assignment.push(0usize);
            labels.push(8u8);
        }
        for l in [1u8, 2, 3] {
            assignment.push(0);
            labels.push(l);
        }
        let a = Assignment::new(assignment, 2).unwrap();
        let reports = purity_report(&a, &LabelSet::new(labels).unwrap(), 2).unwrap();
        let r = &reports[0];
        assert_eq!(r.size, 104);
        assert_eq!(r.majority_label, Some(8));
        assert!((r.purity.unwrap() - 101.0 / 104.0).abs() < 1e-12);
        assert!((r.purity.unwrap() - 0.97).abs() < 0.005);
        // the unused component is reported empty with undefined purity
        assert_eq!(reports[1].size, 0);
        assert_eq!(reports[1].purity, None);
    }

    #[test]
    fn purity_one_for_homogeneous_component() {
        let a = Assignment::new(vec![0, 0, 0], 1).unwrap();
        let labels = LabelSet::new(vec![4, 4, 4]).unwrap();
        let reports = purity_report(&a, &labels, 1).unwrap();
        assert_eq!(reports[0].purity, Some(1.0));
    }

    #[test]
    fn purity_majority_tie_takes_lower_label() {
        let a = Assignment::new(vec![0; 10], 1).unwrap();
        let labels = LabelSet::new(vec![3, 3, 3, 3, 3, 8, 8, 8, 8, 8]).unwrap();
        let reports = purity_report(&a, &labels, 1).unwrap();
        assert_eq!(reports[0].purity, Some(0.5));
        assert_eq!(reports[0].majority_label, Some(3));
    }

    #[test]
    fn purity_sizes_partition_n() {
        let a = Assignment::new(vec![0, 1, 1, 2, 0, 1], 4).unwrap();
        let labels = LabelSet::new(vec![1, 2, 2, 3, 1, 9]).unwrap();
        let reports = purity_report(&a, &labels, 4).unwrap();
        let total: usize = reports.iter().map(|r| r.size).sum();
        assert_eq!(total, 6);
    }

    fn sample_reports() -> Vec<SubLabelReport> {
        let mk = |id: usize, eights: usize, threes: usize| {
            let mut class_counts = [0usize; 10];
            class_counts[8] = eights;
            class_counts[3] = threes;
            let size = eights + threes;
            let majority = if eights >= threes { 8 } else { 3 };
            SubLabelReport {
                component_id: id,
                size,
                class_counts,
                purity: Some(class_counts[majority as usize] as f64 / size as f64),
                majority_label: Some(majority),
            }
        };
        vec![
            mk(0, 101, 3),
            mk(1, 40, 3),
            mk(2, 98, 0),
            mk(3, 20, 2),
            mk(4, 5, 95),
        ]
    }

    #[test]
    fn strong_sublabels_filters_and_sorts() {
        let set = strong_sublabels(
            &sample_reports(),
            StrongRule {
                min_purity: 0.85,
                min_size: 30,
                target_label: Some(8),
            },
        );
        let ids: Vec<usize> = set.entries.iter().map(|e| e.component_id).collect();
        // sorted purity desc: comp 2 (1.0), comp 0 (0.971), comp 1 (0.930)
        assert_eq!(ids, vec![2, 0, 1]);
        assert!(set.entries.iter().all(|e| e.purity >= 0.85));
        assert!(set.entries.iter().all(|e| e.majority_label == 8));
    }

    #[test]
    fn strong_sublabels_unsatisfiable_rule_is_empty() {
        let set = strong_sublabels(
            &sample_reports(),
            StrongRule {
                min_purity: 1.01,
                min_size: 0,
                target_label: None,
            },
        );
        assert!(set.entries.is_empty());
    }

    #[test]
    fn strong_sublabels_admit_all_when_rule_is_trivial() {
        let rule = StrongRule {
            min_purity: 0.0,
            min_size: 0,
            target_label: None,
        };
        let set = strong_sublabels(&sample_reports(), rule);
        assert_eq!(set.entries.len(), 5);
    }

    #[test]
    fn strong_sublabels_idempotent() {
        let rule = StrongRule {
            min_purity: 0.9,
            min_size: 10,
            target_label: None,
        };
        let once = strong_sublabels(&sample_reports(), rule);
        // re-filter the filtered entries through equivalent reports
        let as_reports: Vec<SubLabelReport> = once
            .entries
            .iter()
            .map(|e| {
                let mut class_counts = [0usize; 10];
                class_counts[e.majority_label as usize] =
                    (e.purity * e.size as f64).round() as usize;
                class_counts[0] += e.size - class_counts[e.majority_label as usize];
                SubLabelReport {
                    component_id: e.component_id,
                    size: e.size,
                    class_counts,
                    purity: Some(e.purity),
                    majority_label: Some(e.majority_label),
                }
            })
            .collect();
        let twice = strong_sublabels(&as_reports, rule);
        assert_eq!(once.entries, twice.entries);
    }

    #[test]
    fn centroid_pgm_uniform_gray() {
        let model = BernoulliMixture::new(vec![1.0], vec![0.5; 4], 4).unwrap();
        let bytes = centroid_pgm(&model, 0).unwrap();
        let header_end = bytes.len() - 4;
        assert_eq!(&bytes[..header_end], b"P5\n2 2\n255\n");
        assert!(bytes[header_end..].iter().all(|&b| b == 128));
    }

    #[test]
    fn centroid_pgm_black_at_floor() {
        let model = BernoulliMixture::new(vec![1.0], vec![PARAM_FLOOR; 4], 4).unwrap();
        let bytes = centroid_pgm(&model, 0).unwrap();
        assert!(bytes[bytes.len() - 4..].iter().all(|&b| b == 0));
    }

    #[test]
    fn centroid_round_trip_pixels() {
        let p = vec![0.1, 0.52, 0.9, 1.0 - PARAM_FLOOR];
        let model = BernoulliMixture::new(vec![1.0], p.clone(), 4).unwrap();
        let bytes = centroid_pgm(&model, 0).unwrap();
        let pixels = &bytes[bytes.len() - 4..];
        for (i, &v) in p.iter().enumerate() {
            assert_eq!(pixels[i], (v * 255.0 + 0.5).floor() as u8);
        }
    }

    #[test]
    fn centroid_rejects_bad_component() {
        let model = BernoulliMixture::new(vec![1.0], vec![0.5], 1).unwrap();
        assert!(matches!(
            centroid_pgm(&model, 1),
            Err(Error::BadComponentId { id: 1, k: 1 })
        ));
    }
}
