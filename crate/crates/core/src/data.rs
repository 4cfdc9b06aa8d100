//! Shared domain types: scored records, thresholded datasets and training
//! tag counts.
//!
//! Every constructor validates its invariants and reports the violated rule
//! by name. Deserialization goes through the same constructors, so a file can
//! never produce a value that could not have been built in memory.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `(confidence, label)` observation stripped of its identifiers.
pub type ScoredLabel = (f64, bool);

/// One `(instance, tag, confidence, label)` observation.
///
/// `label` is true iff `tag` is the gold tag of `instance_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScoreRecordRepr")]
pub struct ScoreRecord {
    pub instance_id: String,
    pub tag: String,
    pub confidence: f64,
    #[serde(with = "binary_label")]
    pub label: bool,
}

#[derive(Deserialize)]
struct ScoreRecordRepr {
    instance_id: String,
    tag: String,
    confidence: f64,
    #[serde(with = "binary_label")]
    label: bool,
}

impl TryFrom<ScoreRecordRepr> for ScoreRecord {
    type Error = Error;

    fn try_from(r: ScoreRecordRepr) -> Result<Self> {
        ScoreRecord::new(r.instance_id, r.tag, r.confidence, r.label)
    }
}

impl ScoreRecord {
    pub fn new(
        instance_id: impl Into<String>,
        tag: impl Into<String>,
        confidence: f64,
        label: bool,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::invariant(
                "0 <= confidence <= 1",
                format!("confidence {confidence}"),
            ));
        }
        Ok(ScoreRecord {
            instance_id: instance_id.into(),
            tag: tag.into(),
            confidence,
            label,
        })
    }

    pub fn scored_label(&self) -> ScoredLabel {
        (self.confidence, self.label)
    }
}

/// Labels are written as `0`/`1`.
mod binary_label {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(label: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*label))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(D::Error::custom(format!(
                "label must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// The above-threshold records of one data split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr")]
pub struct CalibrationDataset {
    records: Vec<ScoreRecord>,
    threshold: f64,
    tag_universe: BTreeSet<String>,
}

#[derive(Deserialize)]
struct DatasetRepr {
    records: Vec<ScoreRecord>,
    threshold: f64,
    #[serde(default)]
    tag_universe: Option<BTreeSet<String>>,
}

impl TryFrom<DatasetRepr> for CalibrationDataset {
    type Error = Error;

    fn try_from(r: DatasetRepr) -> Result<Self> {
        let ds = CalibrationDataset::new(r.records, r.threshold)?;
        if let Some(universe) = r.tag_universe {
            if universe != ds.tag_universe {
                return Err(Error::invariant(
                    "tag_universe = tags of records",
                    "stored tag universe does not match the records",
                ));
            }
        }
        Ok(ds)
    }
}

impl CalibrationDataset {
    pub fn new(records: Vec<ScoreRecord>, threshold: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&threshold) {
            return Err(Error::invariant(
                "0 <= threshold < 1",
                format!("threshold {threshold}"),
            ));
        }
        let mut positives = HashSet::new();
        for r in &records {
            if r.confidence < threshold {
                return Err(Error::invariant(
                    "confidence >= threshold",
                    format!(
                        "record ({}, {}) has confidence {} below threshold {threshold}",
                        r.instance_id, r.tag, r.confidence
                    ),
                ));
            }
            if r.label && !positives.insert(r.instance_id.as_str()) {
                return Err(Error::invariant(
                    "at most one positive label per instance",
                    format!("instance `{}` has several positive records", r.instance_id),
                ));
            }
        }
        let tag_universe = records.iter().map(|r| r.tag.clone()).collect();
        Ok(CalibrationDataset {
            records,
            threshold,
            tag_universe,
        })
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn tag_universe(&self) -> &BTreeSet<String> {
        &self.tag_universe
    }

    /// N, the number of records.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scored_labels(&self) -> Vec<ScoredLabel> {
        self.records.iter().map(ScoreRecord::scored_label).collect()
    }
}

/// Gold-tag frequencies in the training data.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TagCountRepr")]
pub struct TagCountTable {
    counts: BTreeMap<String, u64>,
    total: u64,
}

#[derive(Deserialize)]
struct TagCountRepr {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TryFrom<TagCountRepr> for TagCountTable {
    type Error = Error;

    fn try_from(r: TagCountRepr) -> Result<Self> {
        let table = TagCountTable::new(r.counts);
        if table.total != r.total {
            return Err(Error::invariant(
                "total = sum of counts",
                format!("stored total {} but counts sum to {}", r.total, table.total),
            ));
        }
        Ok(table)
    }
}

impl TagCountTable {
    pub fn new(counts: BTreeMap<String, u64>) -> Self {
        let total = counts.values().sum();
        TagCountTable { counts, total }
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Training count of `tag`; zero when the tag never occurs.
    pub fn count(&self, tag: &str) -> u64 {
        self.counts.get(tag).copied().unwrap_or(0)
    }

    /// Share of training instances whose gold tag is `tag`.
    pub fn relative_frequency(&self, tag: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(tag) as f64 / self.total as f64
        }
    }

    pub fn positive_tags(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(t, &c)| (t.as_str(), c))
    }
}

impl FromIterator<(String, u64)> for TagCountTable {
    fn from_iter<I: IntoIterator<Item = (String, u64)>>(iter: I) -> Self {
        TagCountTable::new(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: &str, t: &str, c: f64, l: bool) -> ScoreRecord {
        ScoreRecord::new(i, t, c, l).unwrap()
    }

    #[test]
    fn confidence_out_of_range_is_rejected() {
        let err = ScoreRecord::new("i1", "N", 1.2, false).unwrap_err();
        assert!(err.to_string().contains("0 <= confidence <= 1"), "{err}");
        assert!(ScoreRecord::new("i1", "N", f64::NAN, false).is_err());
        assert!(ScoreRecord::new("i1", "N", -0.1, false).is_err());
    }

    #[test]
    fn dataset_rejects_below_threshold_records() {
        let err = CalibrationDataset::new(vec![rec("i1", "N", 0.005, false)], 0.01).unwrap_err();
        assert!(err.to_string().contains("confidence >= threshold"), "{err}");
    }

    #[test]
    fn dataset_rejects_two_positives_for_one_instance() {
        let err = CalibrationDataset::new(
            vec![rec("i1", "N", 0.5, true), rec("i1", "NP", 0.4, true)],
            0.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("one positive"), "{err}");
    }

    #[test]
    fn dataset_rejects_threshold_of_one() {
        assert!(CalibrationDataset::new(vec![], 1.0).is_err());
    }

    #[test]
    fn dataset_tracks_tag_universe() {
        let ds = CalibrationDataset::new(
            vec![
                rec("i1", "N", 0.5, true),
                rec("i1", "NP", 0.4, false),
                rec("i2", "N", 0.9, false),
            ],
            0.0,
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(
            ds.tag_universe().iter().cloned().collect::<Vec<_>>(),
            vec!["N".to_string(), "NP".to_string()]
        );
    }

    #[test]
    fn dataset_json_round_trip_is_exact() {
        let ds = CalibrationDataset::new(
            vec![
                rec("i1", "N", 0.1 + 0.2, true),
                rec("i2", "NP", 1.0 / 3.0, false),
            ],
            0.01,
        )
        .unwrap();
        let json = serde_json::to_string(&ds).unwrap();
        assert!(json.contains("\"label\":1"));
        let back: CalibrationDataset = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ds);
        assert_eq!(
            back.records()[0].confidence.to_bits(),
            (0.1f64 + 0.2).to_bits()
        );
    }

    #[test]
    fn deserializing_an_invalid_dataset_fails() {
        let json = r#"{"records":[{"instance_id":"i","tag":"t","confidence":0.001,"label":0}],"threshold":0.01}"#;
        assert!(serde_json::from_str::<CalibrationDataset>(json).is_err());
        let json = r#"{"records":[{"instance_id":"i","tag":"t","confidence":0.5,"label":2}],"threshold":0.01}"#;
        assert!(serde_json::from_str::<CalibrationDataset>(json).is_err());
    }

    #[test]
    fn tag_count_total() {
        let table: TagCountTable = [("N".to_string(), 9), ("NP".to_string(), 3)]
            .into_iter()
            .collect();
        assert_eq!(table.total(), 12);
        assert_eq!(table.count("missing"), 0);
        assert_eq!(table.relative_frequency("N"), 0.75);
        assert_eq!(TagCountTable::default().total(), 0);

        let bad = r#"{"counts":{"N":9},"total":10}"#;
        assert!(serde_json::from_str::<TagCountTable>(bad).is_err());
    }
}
