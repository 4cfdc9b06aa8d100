//! Post-hoc recalibrators: histogram binning, isotonic regression and
//! scaling binning, fitted either on all tags at once or per frequency group.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binning::{adaptive_bins, locate_bin, sort_by_confidence};
use crate::data::{CalibrationDataset, ScoredLabel};
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Histogram,
    Isotonic,
    ScalingBinning,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ScalingBinning, Method::Isotonic, Method::Histogram];

    pub fn name(self) -> &'static str {
        match self {
            Method::Histogram => "histogram",
            Method::Isotonic => "isotonic",
            Method::ScalingBinning => "scaling-binning",
        }
    }

    /// Whether the method uses a bin count.
    pub fn uses_bins(self) -> bool {
        !matches!(self, Method::Isotonic)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "histogram" | "hist" | "hb" => Ok(Method::Histogram),
            "isotonic" | "ir" => Ok(Method::Isotonic),
            "scaling-binning" | "scaling" | "sb" => Ok(Method::ScalingBinning),
            other => Err(Error::Model(format!("unknown method `{other}`"))),
        }
    }
}

/// One fitted calibration map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibrator {
    /// Step function: a score maps to the output of the bin it falls in.
    Binned {
        boundaries: Vec<f64>,
        outputs: Vec<f64>,
    },
    /// Non-decreasing piecewise-linear map, constant beyond the end points.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Calibrator {
    pub fn apply(&self, score: f64) -> f64 {
        match self {
            Calibrator::Binned {
                boundaries,
                outputs,
            } => outputs[locate_bin(boundaries, score)],
            Calibrator::PiecewiseLinear {
                breakpoints,
                values,
            } => interpolate(breakpoints, values, score),
        }
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |v: &[f64]| v.iter().all(|x| (0.0..=1.0).contains(x));
        let increasing =
            |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| !x.is_nan());
        match self {
            Calibrator::Binned {
                boundaries,
                outputs,
            } => {
                if outputs.len() != boundaries.len() + 1 {
                    return Err(Error::Model(format!(
                        "{} bin outputs for {} boundaries",
                        outputs.len(),
                        boundaries.len()
                    )));
                }
                if !increasing(boundaries) {
                    return Err(Error::Model(
                        "bin boundaries are not strictly increasing".into(),
                    ));
                }
                if !in_unit(outputs) {
                    return Err(Error::Model("bin outputs outside [0, 1]".into()));
                }
            }
            Calibrator::PiecewiseLinear {
                breakpoints,
                values,
            } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return Err(Error::Model(format!(
                        "{} breakpoints for {} values",
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if !increasing(breakpoints) {
                    return Err(Error::Model(
                        "breakpoints are not strictly increasing".into(),
                    ));
                }
                if values.windows(2).any(|w| w[0] > w[1]) || !in_unit(values) {
                    return Err(Error::Model(
                        "isotonic values must be non-decreasing within [0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn interpolate(xs: &[f64], ys: &[f64], score: f64) -> f64 {
    let last = xs.len() - 1;
    if score <= xs[0] {
        return ys[0];
    }
    if score >= xs[last] {
        return ys[last];
    }
    // xs[i] <= score < xs[i + 1]
    let i = xs.partition_point(|&x| x <= score) - 1;
    let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
    let t = (score - x0) / (x1 - x0);
    (y0 + (y1 - y0) * t).clamp(y0, y1)
}

/// Pool-adjacent-violators block: `positives` of `count` labels.
#[derive(Clone, Copy)]
struct Block {
    positives: u64,
    count: u64,
    /// Number of distinct scores pooled into the block.
    span: usize,
}

impl Block {
    fn value(self) -> f64 {
        self.positives as f64 / self.count as f64
    }

    /// Exact `self.mean > other.mean` via cross-multiplication.
    fn exceeds(self, other: Block) -> bool {
        u128::from(self.positives) * u128::from(other.count)
            > u128::from(other.positives) * u128::from(self.count)
    }
}

/// Least-squares non-decreasing fit of binary labels ordered by score.
///
/// Records sharing a score are pooled first, so the result is a function of
/// the score. Returns the distinct scores and the fitted value at each.
pub fn isotonic_fit(dev: &[ScoredLabel]) -> Result<(Vec<f64>, Vec<f64>)> {
    if dev.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sorted = sort_by_confidence(dev);
    let mut scores: Vec<f64> = Vec::new();
    let mut stack: Vec<Block> = Vec::new();
    for (i, &(score, label)) in sorted.iter().enumerate() {
        let positives = u64::from(label);
        if i > 0 && sorted[i - 1].0 == score {
            // pool ties into the open block before any comparison
            let top = stack.last_mut().expect("tie follows an earlier record");
            top.positives += positives;
            top.count += 1;
        } else {
            scores.push(score);
            stack.push(Block {
                positives,
                count: 1,
                span: 1,
            });
        }
        // Merging is deferred until the tie run is complete.
        let run_ends = sorted.get(i + 1).map_or(true, |next| next.0 != score);
        if run_ends {
            while stack.len() >= 2 && stack[stack.len() - 2].exceeds(stack[stack.len() - 1]) {
                let top = stack.pop().expect("len >= 2");
                let below = stack.last_mut().expect("len >= 2");
                below.positives += top.positives;
                below.count += top.count;
                below.span += top.span;
            }
        }
    }
    let values = stack
        .iter()
        .flat_map(|b| std::iter::repeat(b.value()).take(b.span))
        .collect();
    Ok((scores, values))
}

/// Drops interior points of constant runs; the interpolated map is unchanged.
fn compress(xs: Vec<f64>, ys: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let keep: Vec<usize> = (0..n)
        .filter(|&i| i == 0 || i == n - 1 || ys[i - 1] != ys[i] || ys[i] != ys[i + 1])
        .collect();
    (
        keep.iter().map(|&i| xs[i]).collect(),
        keep.iter().map(|&i| ys[i]).collect(),
    )
}

pub fn fit_isotonic(dev: &[ScoredLabel]) -> Result<Calibrator> {
    let (xs, ys) = isotonic_fit(dev)?;
    let (breakpoints, values) = compress(xs, ys);
    Ok(Calibrator::PiecewiseLinear {
        breakpoints,
        values,
    })
}

/// Each bin outputs its empirical positive rate.
pub fn fit_histogram(dev: &[ScoredLabel], bins: usize) -> Result<Calibrator> {
    let partition = adaptive_bins(dev, bins)?;
    Ok(Calibrator::Binned {
        boundaries: partition.boundaries().to_vec(),
        outputs: partition
            .positive_rate()
            .iter()
            .map(|p| p.expect("adaptive bins are never empty"))
            .collect(),
    })
}

/// Each bin outputs the mean of the isotonic map over its dev scores.
pub fn fit_scaling_binning(dev: &[ScoredLabel], bins: usize) -> Result<Calibrator> {
    let scaler = fit_isotonic(dev)?;
    let partition = adaptive_bins(dev, bins)?;
    let outputs = partition
        .members()
        .iter()
        .map(|bin| bin.iter().map(|&(s, _)| scaler.apply(s)).sum::<f64>() / bin.len() as f64)
        .collect();
    Ok(Calibrator::Binned {
        boundaries: partition.boundaries().to_vec(),
        outputs,
    })
}

pub fn fit_calibrator(method: Method, dev: &[ScoredLabel], bins: usize) -> Result<Calibrator> {
    match method {
        Method::Histogram => fit_histogram(dev, bins),
        Method::Isotonic => fit_isotonic(dev),
        Method::ScalingBinning => fit_scaling_binning(dev, bins),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "partition", rename_all = "snake_case")]
pub enum Scope {
    /// One calibrator for all tags.
    Shared,
    /// One calibrator per frequency group.
    Grouped(GroupPartition),
}

/// A fitted recalibrator, immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr")]
pub struct RecalibratorModel {
    method: Method,
    scope: Scope,
    threshold: f64,
    #[serde(rename = "B")]
    bins: Option<usize>,
    parameters: Vec<Calibrator>,
}

#[derive(Deserialize)]
struct ModelRepr {
    method: Method,
    scope: Scope,
    threshold: f64,
    #[serde(rename = "B")]
    bins: Option<usize>,
    parameters: Vec<Calibrator>,
}

impl TryFrom<ModelRepr> for RecalibratorModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        RecalibratorModel::new(r.method, r.scope, r.threshold, r.bins, r.parameters)
    }
}

impl RecalibratorModel {
    pub fn new(
        method: Method,
        scope: Scope,
        threshold: f64,
        bins: Option<usize>,
        parameters: Vec<Calibrator>,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&threshold) {
            return Err(Error::Model(format!(
                "threshold {threshold} outside [0, 1)"
            )));
        }
        let expected = match &scope {
            Scope::Shared => 1,
            Scope::Grouped(p) => p.num_groups(),
        };
        if parameters.len() != expected {
            return Err(Error::Model(format!(
                "{} sub-models for a scope of {expected} groups",
                parameters.len()
            )));
        }
        if method.uses_bins() != bins.is_some() {
            return Err(Error::Model(format!(
                "bin count {bins:?} does not fit method {method}"
            )));
        }
        for c in &parameters {
            let kind_ok = matches!(
                (method, c),
                (Method::Isotonic, Calibrator::PiecewiseLinear { .. })
                    | (
                        Method::Histogram | Method::ScalingBinning,
                        Calibrator::Binned { .. }
                    )
            );
            if !kind_ok {
                return Err(Error::Model(format!(
                    "sub-model kind does not match method {method}"
                )));
            }
            c.validate()?;
        }
        Ok(RecalibratorModel {
            method,
            scope,
            threshold,
            bins,
            parameters,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn bins(&self) -> Option<usize> {
        self.bins
    }

    pub fn parameters(&self) -> &[Calibrator] {
        &self.parameters
    }

    /// Sub-model index used for `tag`.
    pub fn route(&self, tag: &str) -> usize {
        match &self.scope {
            Scope::Shared => 0,
            Scope::Grouped(p) => p.assign_group(tag),
        }
    }

    /// Calibrated score for `tag`, always within `[0, 1]`.
    pub fn apply(&self, tag: &str, score: f64) -> f64 {
        self.parameters[self.route(tag)].apply(score)
    }

    /// Copy of `dataset` with every confidence replaced by its calibrated
    /// value. The threshold is reset to zero since calibrated scores may fall
    /// below the original cut.
    pub fn calibrate_dataset(&self, dataset: &CalibrationDataset) -> Result<CalibrationDataset> {
        let records = dataset
            .records()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.confidence = self.apply(&r.tag, r.confidence);
                r
            })
            .collect();
        CalibrationDataset::new(records, 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

fn bins_for(method: Method, bins: usize) -> Option<usize> {
    method.uses_bins().then_some(bins)
}

/// Fits one calibrator on every record of `dev` (the pooled case).
pub fn fit_shared(
    dev: &CalibrationDataset,
    method: Method,
    bins: usize,
) -> Result<RecalibratorModel> {
    let calibrator = fit_calibrator(method, &dev.scored_labels(), bins)?;
    RecalibratorModel::new(
        method,
        Scope::Shared,
        dev.threshold(),
        bins_for(method, bins),
        vec![calibrator],
    )
}

/// Fits one calibrator per group of `partition` on that group's records.
pub fn fit_grouped(
    dev: &CalibrationDataset,
    partition: &GroupPartition,
    method: Method,
    bins: usize,
) -> Result<RecalibratorModel> {
    let mut per_group: Vec<Vec<ScoredLabel>> = vec![Vec::new(); partition.num_groups()];
    for r in dev.records() {
        per_group[partition.assign_group(&r.tag)].push(r.scored_label());
    }
    let parameters = per_group
        .iter()
        .enumerate()
        .map(|(group, items)| {
            if items.is_empty() {
                return Err(Error::EmptyGroup { group });
            }
            if method.uses_bins() && bins > items.len() {
                return Err(Error::GroupTooSmall {
                    group,
                    records: items.len(),
                    bins,
                });
            }
            fit_calibrator(method, items, bins)
        })
        .collect::<Result<Vec<_>>>()?;
    RecalibratorModel::new(
        method,
        Scope::Grouped(partition.clone()),
        dev.threshold(),
        bins_for(method, bins),
        parameters,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ScoreRecord, TagCountTable};
    use crate::grouping::build_tfg;
    use proptest::prelude::*;

    fn pairs(scores: &[f64], labels: &[u8]) -> Vec<ScoredLabel> {
        scores
            .iter()
            .zip(labels)
            .map(|(&s, &l)| (s, l == 1))
            .collect()
    }

    fn outputs(c: &Calibrator) -> &[f64] {
        match c {
            Calibrator::Binned { outputs, .. } => outputs,
            Calibrator::PiecewiseLinear { values, .. } => values,
        }
    }

    /// Minimum SSE over all splits of `ys` into contiguous blocks with
    /// non-decreasing pooled means.
    fn brute_force_sse(ys: &[f64]) -> f64 {
        let n = ys.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << (n - 1)) {
            let mut means = Vec::new();
            let mut sse = 0.0;
            let mut start = 0;
            for end in 1..=n {
                if end == n || mask & (1 << (end - 1)) != 0 {
                    let block = &ys[start..end];
                    let mean = block.iter().sum::<f64>() / block.len() as f64;
                    sse += block.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>();
                    means.push(mean);
                    start = end;
                }
            }
            if means.windows(2).all(|w| w[0] <= w[1] + 1e-12) {
                best = best.min(sse);
            }
        }
        best
    }

    #[test]
    fn histogram_examples() {
        let c = fit_histogram(&pairs(&[0.2, 0.4, 0.6, 0.8], &[0, 0, 1, 1]), 2).unwrap();
        assert_eq!(
            c,
            Calibrator::Binned {
                boundaries: vec![0.5],
                outputs: vec![0.0, 1.0]
            }
        );
        assert_eq!(c.apply(0.3), 0.0);

        let c = fit_histogram(&pairs(&[0.1, 0.5, 0.7, 0.9], &[1, 1, 1, 1]), 2).unwrap();
        assert_eq!(outputs(&c), &[1.0, 1.0]);

        let c = fit_histogram(&pairs(&[0.6, 0.7, 0.8, 0.9], &[1, 0, 1, 1]), 2).unwrap();
        assert_eq!(outputs(&c), &[0.5, 1.0]);
    }

    #[test]
    fn isotonic_examples() {
        let dev = pairs(&[0.1, 0.2, 0.3], &[1, 0, 1]);
        let (_, fitted) = isotonic_fit(&dev).unwrap();
        assert_eq!(fitted, vec![0.5, 0.5, 1.0]);
        let sse: f64 = fitted
            .iter()
            .zip([1.0, 0.0, 1.0])
            .map(|(f, y)| (f - y) * (f - y))
            .sum();
        assert!((sse - brute_force_sse(&[1.0, 0.0, 1.0])).abs() < 1e-12);

        let c = fit_isotonic(&dev).unwrap();
        assert_eq!(c.apply(0.25), 0.75);
        assert_eq!(c.apply(0.01), 0.5);
        assert_eq!(c.apply(0.99), 1.0);

        let c = fit_isotonic(&[(0.7, true)]).unwrap();
        assert_eq!(c.apply(0.0), 1.0);
        assert_eq!(c.apply(1.0), 1.0);

        let (_, fitted) = isotonic_fit(&pairs(&[0.1, 0.2, 0.3, 0.3], &[0, 0, 1, 0])).unwrap();
        assert_eq!(fitted, vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn isotonic_feasible_labels_are_kept() {
        let (xs, fitted) = isotonic_fit(&pairs(&[0.4, 0.1, 0.3, 0.2], &[1, 0, 1, 0])).unwrap();
        assert_eq!(xs, vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(fitted, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn isotonic_ties_pool_before_fitting() {
        // two records at 0.5 disagree; order must not matter
        let a = isotonic_fit(&pairs(&[0.5, 0.5, 0.9], &[1, 0, 1])).unwrap();
        let b = isotonic_fit(&pairs(&[0.5, 0.5, 0.9], &[0, 1, 1])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1, vec![0.5, 1.0]);
    }

    #[test]
    fn scaling_binning_examples() {
        let dev = pairs(&[0.1, 0.2, 0.3], &[1, 0, 1]);
        let c = fit_scaling_binning(&dev, 1).unwrap();
        assert!((outputs(&c)[0] - 2.0 / 3.0).abs() < 1e-15);

        let c = fit_scaling_binning(&pairs(&[0.2, 0.5, 0.9], &[0, 0, 0]), 2).unwrap();
        assert_eq!(outputs(&c), &[0.0, 0.0]);

        let iso = fit_isotonic(&dev).unwrap();
        let c = fit_scaling_binning(&dev, 3).unwrap();
        let expected: Vec<f64> = [0.1, 0.2, 0.3].iter().map(|&s| iso.apply(s)).collect();
        assert_eq!(outputs(&c), expected.as_slice());
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_isotonic(&[]), Err(Error::EmptyInput)));
        assert!(matches!(fit_histogram(&[], 2), Err(Error::EmptyInput)));
        assert!(matches!(
            fit_histogram(&[(0.5, true)], 0),
            Err(Error::BinCount { .. })
        ));
    }

    fn rec(i: &str, t: &str, s: f64, l: bool) -> ScoreRecord {
        ScoreRecord::new(i, t, s, l).unwrap()
    }

    fn two_group_setup() -> (CalibrationDataset, GroupPartition) {
        let counts: TagCountTable = [("A".to_string(), 10), ("B".to_string(), 10)]
            .into_iter()
            .collect();
        let partition = build_tfg(&counts, 2).unwrap();
        let mut records = Vec::new();
        for k in 0..10 {
            records.push(rec(
                &format!("a{k}"),
                "A",
                0.5 + k as f64 / 25.0,
                k % 2 == 0,
            ));
            records.push(rec(&format!("b{k}"), "B", 0.05 + k as f64 / 40.0, k >= 7));
        }
        (CalibrationDataset::new(records, 0.01).unwrap(), partition)
    }

    #[test]
    fn grouped_fit_routes_each_group_separately() {
        let (ds, partition) = two_group_setup();
        let model = fit_grouped(&ds, &partition, Method::Histogram, 2).unwrap();
        let a: Vec<_> = ds
            .records()
            .iter()
            .filter(|r| r.tag == "A")
            .map(|r| r.scored_label())
            .collect();
        let b: Vec<_> = ds
            .records()
            .iter()
            .filter(|r| r.tag == "B")
            .map(|r| r.scored_label())
            .collect();
        assert_eq!(model.parameters()[0], fit_histogram(&a, 2).unwrap());
        assert_eq!(model.parameters()[1], fit_histogram(&b, 2).unwrap());
        assert_eq!(model.apply("B", 0.3), 0.6);
        assert_eq!(model.apply("A", 0.3), model.parameters()[0].apply(0.3));
        // unseen tags use the last group
        assert_eq!(model.apply("Z", 0.3), model.apply("B", 0.3));
    }

    #[test]
    fn grouped_fit_rejects_empty_and_small_groups() {
        let (ds, partition) = two_group_setup();
        let only_a = CalibrationDataset::new(
            ds.records()
                .iter()
                .filter(|r| r.tag == "A")
                .cloned()
                .collect(),
            0.01,
        )
        .unwrap();
        let err = fit_grouped(&only_a, &partition, Method::Isotonic, 10).unwrap_err();
        assert!(matches!(err, Error::EmptyGroup { group: 1 }), "{err}");
        let err = fit_grouped(&ds, &partition, Method::Histogram, 11).unwrap_err();
        assert!(
            matches!(
                err,
                Error::GroupTooSmall {
                    group: 0,
                    records: 10,
                    bins: 11
                }
            ),
            "{err}"
        );
        // isotonic has no bin requirement
        assert!(fit_grouped(&ds, &partition, Method::Isotonic, 11).is_ok());
    }

    #[test]
    fn single_group_matches_shared_fit() {
        let (ds, _) = two_group_setup();
        let counts: TagCountTable = [("A".to_string(), 10), ("B".to_string(), 10)]
            .into_iter()
            .collect();
        let one = build_tfg(&counts, 1).unwrap();
        for method in Method::ALL {
            let shared = fit_shared(&ds, method, 4).unwrap();
            let grouped = fit_grouped(&ds, &one, method, 4).unwrap();
            assert_eq!(shared.parameters(), grouped.parameters());
        }
    }

    #[test]
    fn model_json_round_trip_and_validation() {
        let (ds, partition) = two_group_setup();
        for method in Method::ALL {
            let model = fit_grouped(&ds, &partition, method, 3).unwrap();
            let json = model.to_json().unwrap();
            assert!(json.contains("\"B\""));
            let back = RecalibratorModel::from_json(&json).unwrap();
            assert_eq!(back, model);
            assert_eq!(back.to_json().unwrap(), json);
        }
        let model = fit_shared(&ds, Method::Isotonic, 3).unwrap();
        assert_eq!(model.bins(), None);
        let json = model.to_json().unwrap();
        let broken = json.replacen(
            "\"kind\": \"shared\"",
            "\"kind\": \"grouped\", \"partition\": null",
            1,
        );
        assert!(RecalibratorModel::from_json(&broken).is_err());
        let wrong_method = json.replacen("\"isotonic\"", "\"histogram\"", 1);
        assert!(RecalibratorModel::from_json(&wrong_method).is_err());
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("hist".parse::<Method>().unwrap(), Method::Histogram);
        assert_eq!("scaling".parse::<Method>().unwrap(), Method::ScalingBinning);
        assert!("platt".parse::<Method>().is_err());
    }

    fn dev_sets() -> impl Strategy<Value = Vec<ScoredLabel>> {
        prop::collection::vec(
            ((0u32..=40).prop_map(|k| k as f64 / 40.0), any::<bool>()),
            1..120,
        )
    }

    proptest! {
        #[test]
        fn pava_matches_brute_force(labels in prop::collection::vec(any::<bool>(), 1..=10)) {
            let dev: Vec<_> = labels.iter().enumerate().map(|(i, &l)| ((i + 1) as f64 / 16.0, l)).collect();
            let (_, fitted) = isotonic_fit(&dev).unwrap();
            let ys: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
            let sse: f64 = fitted.iter().zip(&ys).map(|(f, y)| (f - y) * (f - y)).sum();
            prop_assert!((sse - brute_force_sse(&ys)).abs() < 1e-9);
        }

        #[test]
        fn isotonic_map_is_monotone(dev in dev_sets(), a in -0.1f64..1.1, b in -0.1f64..1.1) {
            let c = fit_isotonic(&dev).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(c.apply(lo) <= c.apply(hi));
        }

        #[test]
        fn outputs_stay_in_unit_interval(dev in dev_sets(), s in 0.0f64..=1.0) {
            let bins = dev.len().min(10);
            for method in Method::ALL {
                let c = fit_calibrator(method, &dev, bins).unwrap();
                let v = c.apply(s);
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn histogram_reproduces_bin_rates_on_dev(dev in dev_sets()) {
            let bins = dev.len().min(10);
            let c = fit_histogram(&dev, bins).unwrap();
            let p = adaptive_bins(&dev, bins).unwrap();
            for (b, members) in p.members().iter().enumerate() {
                for &(s, _) in members {
                    prop_assert_eq!(c.apply(s).to_bits(), p.positive_rate()[b].unwrap().to_bits());
                }
            }
        }
    }
}
