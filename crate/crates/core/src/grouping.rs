//! Tag frequency grouping.
//!
//! Tags are ordered by descending training frequency (ties broken by tag
//! string) and packed greedily into groups holding at least `ceil(total / G)`
//! training instances each; whatever remains goes to the last group. A single
//! group is the shared (pooled) case.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{CalibrationDataset, TagCountTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GroupPartitionRepr")]
pub struct GroupPartition {
    num_groups: usize,
    groups: Vec<Vec<String>>,
    cumulative_counts: Vec<u64>,
    tag_counts: BTreeMap<String, u64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl PartialEq for GroupPartition {
    fn eq(&self, other: &Self) -> bool {
        self.groups == other.groups && self.tag_counts == other.tag_counts
    }
}

#[derive(Deserialize)]
struct GroupPartitionRepr {
    num_groups: usize,
    groups: Vec<Vec<String>>,
    cumulative_counts: Vec<u64>,
    tag_counts: BTreeMap<String, u64>,
}

impl TryFrom<GroupPartitionRepr> for GroupPartition {
    type Error = Error;

    fn try_from(r: GroupPartitionRepr) -> Result<Self> {
        let partition = GroupPartition::new(r.groups, &TagCountTable::new(r.tag_counts))?;
        if partition.num_groups != r.num_groups
            || partition.cumulative_counts != r.cumulative_counts
        {
            return Err(Error::invariant(
                "stored group totals match members",
                "num_groups or cumulative_counts disagree with the group members",
            ));
        }
        Ok(partition)
    }
}

fn target_size(total: u64, groups: usize) -> u64 {
    total.div_ceil(groups as u64)
}

/// Descending count, then ascending tag.
fn frequency_order(counts: &TagCountTable) -> Vec<(&str, u64)> {
    let mut tags: Vec<_> = counts.positive_tags().collect();
    tags.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    tags
}

impl GroupPartition {
    /// Validates an explicit grouping of the positive-count tags of `counts`.
    ///
    /// The concatenated groups must list the tags in frequency order, every
    /// group must be non-empty, and every group but the last must reach the
    /// `ceil(total / G)` target.
    pub fn new(groups: Vec<Vec<String>>, counts: &TagCountTable) -> Result<Self> {
        let num_groups = groups.len();
        if num_groups == 0 {
            return Err(Error::invariant("G >= 1", "no groups"));
        }
        if let Some(g) = groups.iter().position(Vec::is_empty) {
            return Err(Error::invariant(
                "every group non-empty",
                format!("group {g} is empty"),
            ));
        }
        let listed: Vec<&str> = groups.iter().flatten().map(String::as_str).collect();
        let expected: Vec<&str> = frequency_order(counts)
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        if listed != expected {
            let listed_set: BTreeSet<_> = listed.iter().collect();
            let invariant = if listed_set.len() != listed.len() {
                "groups pairwise disjoint"
            } else if listed_set != expected.iter().collect() {
                "groups cover exactly the positive-count tags"
            } else {
                "groups in descending frequency order"
            };
            return Err(Error::invariant(invariant, format!("{groups:?}")));
        }

        let cumulative_counts: Vec<u64> = groups
            .iter()
            .map(|g| g.iter().map(|t| counts.count(t)).sum())
            .collect();
        let target = target_size(counts.total(), num_groups);
        if let Some(g) = cumulative_counts[..num_groups - 1]
            .iter()
            .position(|&c| c < target)
        {
            return Err(Error::invariant(
                "cumulative count >= ceil(total / G) for all but the last group",
                format!(
                    "group {g} holds {} of the {target} required",
                    cumulative_counts[g]
                ),
            ));
        }

        let tag_counts = counts
            .positive_tags()
            .map(|(t, c)| (t.to_string(), c))
            .collect();
        let index = groups
            .iter()
            .enumerate()
            .flat_map(|(g, tags)| tags.iter().map(move |t| (t.clone(), g)))
            .collect();
        Ok(GroupPartition {
            num_groups,
            groups,
            cumulative_counts,
            tag_counts,
            index,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn cumulative_counts(&self) -> &[u64] {
        &self.cumulative_counts
    }

    pub fn total(&self) -> u64 {
        self.cumulative_counts.iter().sum()
    }

    /// Training instances each group (but the last) must reach.
    pub fn target(&self) -> u64 {
        target_size(self.total(), self.num_groups)
    }

    /// True when the last group holds less than half the per-group target.
    pub fn last_group_undersized(&self) -> bool {
        let last = *self.cumulative_counts.last().expect("at least one group");
        self.num_groups > 1 && last * 2 < self.target()
    }

    /// Group of `tag`. Tags without training occurrences go to the last
    /// (rarest) group.
    pub fn assign_group(&self, tag: &str) -> usize {
        self.index.get(tag).copied().unwrap_or(self.num_groups - 1)
    }

    /// `tag<TAB>group_index` lines in group order, with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("tag\tgroup_index\n");
        for (g, tags) in self.groups.iter().enumerate() {
            for t in tags {
                let _ = writeln!(out, "{t}\t{g}");
            }
        }
        out
    }
}

/// Builds `G` frequency groups from training gold counts.
pub fn build_tfg(counts: &TagCountTable, num_groups: usize) -> Result<GroupPartition> {
    if num_groups == 0 {
        return Err(Error::GroupCount {
            groups: 0,
            reason: "at least one group is required".into(),
        });
    }
    if counts.total() == 0 {
        return Err(Error::GroupCount {
            groups: num_groups,
            reason: "the training count table is empty".into(),
        });
    }
    let ordered = frequency_order(counts);
    if ordered.len() < num_groups {
        return Err(Error::GroupCount {
            groups: num_groups,
            reason: format!("only {} tags have a positive training count", ordered.len()),
        });
    }

    let target = target_size(counts.total(), num_groups);
    let mut groups: Vec<Vec<String>> = Vec::with_capacity(num_groups);
    let mut current = Vec::new();
    let mut filled = 0;
    for (tag, count) in ordered {
        current.push(tag.to_string());
        filled += count;
        if filled >= target && groups.len() < num_groups - 1 {
            groups.push(std::mem::take(&mut current));
            filled = 0;
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    if groups.len() < num_groups {
        return Err(Error::GroupCount {
            groups: num_groups,
            reason: format!(
                "greedy filling to {target} instances per group leaves only {} non-empty groups",
                groups.len()
            ),
        });
    }
    GroupPartition::new(groups, counts)
}

/// Per-group summary of an evaluation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStatistics {
    pub group: usize,
    /// Above-threshold scores routed to the group.
    #[serde(rename = "N")]
    pub records: usize,
    /// Distinct tags with any above-threshold score.
    pub tag_types: usize,
    /// Smallest training relative frequency among those tags.
    pub min_train_freq: f64,
    pub max_train_freq: f64,
    /// Distinct instances with any above-threshold score in the group.
    pub tokens: usize,
}

pub fn group_statistics(
    partition: &GroupPartition,
    dataset: &CalibrationDataset,
    counts: &TagCountTable,
) -> Vec<GroupStatistics> {
    let g = partition.num_groups();
    let mut records = vec![0usize; g];
    let mut tags: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); g];
    let mut tokens: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); g];
    for r in dataset.records() {
        let idx = partition.assign_group(&r.tag);
        records[idx] += 1;
        tags[idx].insert(&r.tag);
        tokens[idx].insert(&r.instance_id);
    }
    (0..g)
        .map(|idx| {
            let freqs = tags[idx].iter().map(|t| counts.relative_frequency(t));
            let (min, max) = freqs
                .fold(None, |acc: Option<(f64, f64)>, f| {
                    Some(acc.map_or((f, f), |(lo, hi)| (lo.min(f), hi.max(f))))
                })
                .unwrap_or((0.0, 0.0));
            GroupStatistics {
                group: idx,
                records: records[idx],
                tag_types: tags[idx].len(),
                min_train_freq: min,
                max_train_freq: max,
                tokens: tokens[idx].len(),
            }
        })
        .collect()
}
