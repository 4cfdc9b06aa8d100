//! Equal-count (adaptive) and fixed-width binning of scored labels.
//!
//! Bins are half-open `[low, high)` intervals with the last bin closed; a
//! score equal to a boundary belongs to the higher bin. Scores outside the
//! fitted range are clamped to the first or last bin.

use serde::{Deserialize, Serialize};

use crate::data::ScoredLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BinPartitionRepr")]
pub struct BinPartition {
    bin_count: usize,
    members: Vec<Vec<ScoredLabel>>,
    boundaries: Vec<f64>,
    mean_confidence: Vec<Option<f64>>,
    positive_rate: Vec<Option<f64>>,
    sizes: Vec<usize>,
}

#[derive(Deserialize)]
struct BinPartitionRepr {
    bin_count: usize,
    members: Vec<Vec<ScoredLabel>>,
    boundaries: Vec<f64>,
    mean_confidence: Vec<Option<f64>>,
    positive_rate: Vec<Option<f64>>,
    sizes: Vec<usize>,
}

impl TryFrom<BinPartitionRepr> for BinPartition {
    type Error = Error;

    fn try_from(r: BinPartitionRepr) -> Result<Self> {
        let rebuilt = BinPartition::from_members(r.members, r.boundaries)?;
        if rebuilt.bin_count != r.bin_count
            || rebuilt.sizes != r.sizes
            || !same_bits(&rebuilt.mean_confidence, &r.mean_confidence)
            || !same_bits(&rebuilt.positive_rate, &r.positive_rate)
        {
            return Err(Error::invariant(
                "bin statistics derive from members",
                "stored statistics disagree with bin members",
            ));
        }
        Ok(rebuilt)
    }
}

fn same_bits(a: &[Option<f64>], b: &[Option<f64>]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.map(f64::to_bits) == y.map(f64::to_bits))
}

impl BinPartition {
    fn from_members(members: Vec<Vec<ScoredLabel>>, boundaries: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invariant("bin_count >= 1", "no bins"));
        }
        if boundaries.len() + 1 != members.len() {
            return Err(Error::invariant(
                "B - 1 boundaries",
                format!("{} bins but {} boundaries", members.len(), boundaries.len()),
            ));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) || boundaries.iter().any(|b| b.is_nan()) {
            return Err(Error::invariant(
                "boundaries strictly increasing",
                format!("{boundaries:?}"),
            ));
        }
        let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
        let mean_confidence = members
            .iter()
            .map(|bin| {
                (!bin.is_empty())
                    .then(|| bin.iter().map(|&(c, _)| c).sum::<f64>() / bin.len() as f64)
            })
            .collect();
        let positive_rate = members
            .iter()
            .map(|bin| {
                (!bin.is_empty())
                    .then(|| bin.iter().filter(|&&(_, l)| l).count() as f64 / bin.len() as f64)
            })
            .collect();
        Ok(BinPartition {
            bin_count: members.len(),
            members,
            boundaries,
            mean_confidence,
            positive_rate,
            sizes,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn members(&self) -> &[Vec<ScoredLabel>] {
        &self.members
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// q̄ per bin; `None` for an empty (fixed-width) bin.
    pub fn mean_confidence(&self) -> &[Option<f64>] {
        &self.mean_confidence
    }

    /// p̄ per bin; `None` for an empty (fixed-width) bin.
    pub fn positive_rate(&self) -> &[Option<f64>] {
        &self.positive_rate
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Total number of binned items.
    pub fn item_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn locate(&self, score: f64) -> usize {
        locate_bin(&self.boundaries, score)
    }
}

/// Index of the bin containing `score` given ascending cut points.
///
/// A score equal to a boundary goes to the higher bin; scores beyond either
/// end clamp to the first or last bin.
pub fn locate_bin(boundaries: &[f64], score: f64) -> usize {
    boundaries.partition_point(|&b| b <= score)
}

/// Stable ascending sort by confidence.
pub(crate) fn sort_by_confidence(items: &[ScoredLabel]) -> Vec<ScoredLabel> {
    let mut sorted = items.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted
}

/// Cut point between two adjacent distinct scores `lo < hi`.
///
/// The midpoint, unless rounding pulls it down onto `lo`, in which case `hi`
/// itself is used so that `lo` still falls in the lower bin.
fn cut_between(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

/// Partitions the sorted scores into `bins` runs of equal count.
///
/// Run sizes differ by at most one, with the remainder going to the lowest
/// bins. A cut that would separate equal scores is moved up to the end of the
/// tie run; cuts that then coincide (or reach the end) are dropped, so the
/// resulting bin count can be smaller than requested.
pub fn adaptive_bins(items: &[ScoredLabel], bins: usize) -> Result<BinPartition> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bins == 0 || bins > items.len() {
        return Err(Error::BinCount {
            bins,
            items: items.len(),
        });
    }
    let sorted = sort_by_confidence(items);
    let n = sorted.len();

    let base = n / bins;
    let extra = n % bins;
    let mut cuts = Vec::with_capacity(bins - 1);
    let mut start = 0;
    for b in 0..bins - 1 {
        start += base + usize::from(b < extra);
        let mut cut = start;
        while cut < n && sorted[cut - 1].0 == sorted[cut].0 {
            cut += 1;
        }
        if cut < n && cuts.last().map_or(true, |&last| cut > last) {
            cuts.push(cut);
        }
    }

    let boundaries = cuts
        .iter()
        .map(|&c| cut_between(sorted[c - 1].0, sorted[c].0))
        .collect();
    let mut members = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0;
    for &c in cuts.iter().chain(std::iter::once(&n)) {
        members.push(sorted[lo..c].to_vec());
        lo = c;
    }
    BinPartition::from_members(members, boundaries)
}

/// Partitions `[lo, hi]` into `bins` intervals of equal width.
///
/// Empty bins are kept; their statistics are `None`.
pub fn fixed_width_bins(
    items: &[ScoredLabel],
    bins: usize,
    lo: f64,
    hi: f64,
) -> Result<BinPartition> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::Range { lo, hi });
    }
    if bins == 0 {
        return Err(Error::BinCount {
            bins,
            items: items.len(),
        });
    }
    let width = hi - lo;
    let boundaries: Vec<f64> = (1..bins)
        .map(|k| lo + width * k as f64 / bins as f64)
        .collect();
    let mut members = vec![Vec::new(); bins];
    for &item in &sort_by_confidence(items) {
        members[locate_bin(&boundaries, item.0)].push(item);
    }
    BinPartition::from_members(members, boundaries)
}
