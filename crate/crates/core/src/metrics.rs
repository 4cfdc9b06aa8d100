//! Binned marginal calibration errors.
//!
//! All errors are l2 (root-mean-square) over equal-count bins: with bins `b`
//! of the `N` scores under evaluation, `sqrt(sum_b |b|/N * (q̄_b - p̄_b)^2)`.
//! SMCE pools every tag, GMCE restricts to one frequency group (with `N`
//! taken over that group alone), and the per-class error averages the
//! squared error of each tag's own binning.

use std::collections::BTreeMap;

use crate::binning::{adaptive_bins, BinPartition};
use crate::data::{CalibrationDataset, ScoredLabel};
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;

/// Smallest bin population considered reliable for evaluation.
pub const RECOMMENDED_MIN_BIN_SIZE: usize = 200;

/// A binned error together with the binning it was computed on.
#[derive(Debug, Clone)]
pub struct BinnedError {
    /// `sum_b |b|/N * (q̄_b - p̄_b)^2`
    pub squared: f64,
    pub partition: BinPartition,
}

impl BinnedError {
    pub fn value(&self) -> f64 {
        self.squared.sqrt()
    }

    /// Size of the least populated bin.
    pub fn min_bin_size(&self) -> usize {
        self.partition.sizes().iter().copied().min().unwrap_or(0)
    }
}

/// Adaptive binning of `items` and its `|b|/N`-weighted mean squared gap
/// between bin confidence and bin accuracy.
pub fn binned_error(items: &[ScoredLabel], bins: usize) -> Result<BinnedError> {
    let partition = adaptive_bins(items, bins)?;
    let n = partition.item_count() as f64;
    let squared = partition
        .sizes()
        .iter()
        .zip(partition.mean_confidence())
        .zip(partition.positive_rate())
        .map(|((&size, q), p)| {
            let gap = q.expect("adaptive bin") - p.expect("adaptive bin");
            size as f64 / n * gap * gap
        })
        .sum();
    Ok(BinnedError { squared, partition })
}

/// Shared marginal calibration error over all records.
pub fn smce(dataset: &CalibrationDataset, bins: usize) -> Result<f64> {
    smce_detailed(dataset, bins).map(|e| e.value())
}

pub fn smce_detailed(dataset: &CalibrationDataset, bins: usize) -> Result<BinnedError> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    binned_error(&dataset.scored_labels(), bins)
}

fn group_items(
    dataset: &CalibrationDataset,
    partition: &GroupPartition,
    group: usize,
) -> Vec<ScoredLabel> {
    dataset
        .records()
        .iter()
        .filter(|r| partition.assign_group(&r.tag) == group)
        .map(|r| r.scored_label())
        .collect()
}

/// Grouped marginal calibration error of one frequency group.
pub fn gmce(
    dataset: &CalibrationDataset,
    partition: &GroupPartition,
    group: usize,
    bins: usize,
) -> Result<f64> {
    gmce_detailed(dataset, partition, group, bins).map(|e| e.value())
}

pub fn gmce_detailed(
    dataset: &CalibrationDataset,
    partition: &GroupPartition,
    group: usize,
    bins: usize,
) -> Result<BinnedError> {
    if group >= partition.num_groups() {
        return Err(Error::GroupCount {
            groups: partition.num_groups(),
            reason: format!("group index {group} out of range"),
        });
    }
    let items = group_items(dataset, partition, group);
    if items.len() < bins.max(1) {
        return Err(Error::GroupTooSmall {
            group,
            records: items.len(),
            bins,
        });
    }
    binned_error(&items, bins)
}

/// Per-class marginal calibration error: each tag is binned on its own
/// records and the squared errors are averaged with equal weight per tag.
///
/// Every tag needs at least `bins` records, which real sparse tagsets rarely
/// satisfy.
pub fn per_class_mce(dataset: &CalibrationDataset, bins: usize) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut by_tag: BTreeMap<&str, Vec<ScoredLabel>> = BTreeMap::new();
    for r in dataset.records() {
        by_tag.entry(&r.tag).or_default().push(r.scored_label());
    }
    let sparse: Vec<String> = by_tag
        .iter()
        .filter(|(_, items)| items.len() < bins.max(1))
        .map(|(t, _)| t.to_string())
        .collect();
    if !sparse.is_empty() {
        return Err(Error::SparseClasses {
            bins,
            classes: sparse,
        });
    }
    let mut total = 0.0;
    for items in by_tag.values() {
        total += binned_error(items, bins)?.squared;
    }
    Ok((total / by_tag.len() as f64).sqrt())
}

/// Relative change from `before` to `after`, in percent.
pub fn relative_delta(before: f64, after: f64) -> Result<f64> {
    if before.is_nan() || before <= 0.0 {
        return Err(Error::ZeroBaseline { before });
    }
    Ok(100.0 * (after - before) / before)
}
