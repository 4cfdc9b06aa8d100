//! Fit on one split, evaluate on another, for every (method, G) condition.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{CalibrationDataset, TagCountTable};
use crate::error::{Error, Result};
use crate::grouping::{build_tfg, group_statistics, GroupPartition};
use crate::ingest::{self, DEFAULT_THRESHOLD};
use crate::metrics::{gmce_detailed, relative_delta, smce_detailed, RECOMMENDED_MIN_BIN_SIZE};
use crate::recalibrate::{fit_grouped, fit_shared, Method, RecalibratorModel};
use crate::report::{ConditionFailure, ConditionRow, EvaluationReport, OverallStatistics};

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_GROUPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub threshold: f64,
    pub bins: usize,
    /// Group counts to fit recalibrators with; `1` is the pooled fit.
    pub fit_groups: Vec<usize>,
    /// Groups used for GMCE, independent of the fitting groups.
    pub eval_groups: usize,
    pub methods: Vec<Method>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            threshold: DEFAULT_THRESHOLD,
            bins: DEFAULT_BINS,
            fit_groups: vec![1, DEFAULT_GROUPS],
            eval_groups: DEFAULT_GROUPS,
            methods: Method::ALL.to_vec(),
        }
    }
}

/// File inputs of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_counts: PathBuf,
    pub dev_scores: PathBuf,
    pub dev_gold: PathBuf,
    pub test_scores: PathBuf,
    pub test_gold: PathBuf,
    /// Separate recalibration split; the dev split is used when absent.
    pub recal: Option<(PathBuf, PathBuf)>,
    pub settings: ExperimentSettings,
}

#[derive(Debug, Clone)]
pub struct FittedCondition {
    pub method: Method,
    pub groups: usize,
    pub model: RecalibratorModel,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: EvaluationReport,
    pub models: Vec<FittedCondition>,
}

/// SMCE and per-group GMCE of one set of scores.
#[derive(Debug, Clone)]
struct Evaluation {
    smce: f64,
    gmce: Vec<f64>,
    min_bin: usize,
}

fn evaluate(
    dataset: &CalibrationDataset,
    partition: &GroupPartition,
    bins: usize,
) -> Result<Evaluation> {
    let overall = smce_detailed(dataset, bins)?;
    let mut min_bin = overall.min_bin_size();
    let mut gmce = Vec::with_capacity(partition.num_groups());
    for g in 0..partition.num_groups() {
        let e = gmce_detailed(dataset, partition, g, bins)?;
        min_bin = min_bin.min(e.min_bin_size());
        gmce.push(e.value());
    }
    Ok(Evaluation {
        smce: overall.value(),
        gmce,
        min_bin,
    })
}

fn fit(
    dev: &CalibrationDataset,
    counts: &TagCountTable,
    method: Method,
    groups: usize,
    bins: usize,
) -> Result<RecalibratorModel> {
    if groups == 1 {
        fit_shared(dev, method, bins)
    } else {
        fit_grouped(dev, &build_tfg(counts, groups)?, method, bins)
    }
}

fn label(method: Option<Method>) -> String {
    method.map_or("none".to_string(), |m| m.name().to_string())
}

fn delta(before: Option<f64>, after: f64) -> Option<f64> {
    before.and_then(|b| relative_delta(b, after).ok())
}

struct Builder<'a> {
    partition: GroupPartition,
    test: &'a CalibrationDataset,
    counts: &'a TagCountTable,
    settings: &'a ExperimentSettings,
    baseline: Option<Evaluation>,
    rows: Vec<ConditionRow>,
    failures: Vec<ConditionFailure>,
    warnings: Vec<String>,
}

impl<'a> Builder<'a> {
    fn new(
        counts: &'a TagCountTable,
        test: &'a CalibrationDataset,
        settings: &'a ExperimentSettings,
    ) -> Result<Self> {
        if settings.bins == 0 {
            return Err(Error::BinCount {
                bins: 0,
                items: test.len(),
            });
        }
        let partition = build_tfg(counts, settings.eval_groups)?;
        let mut warnings = Vec::new();
        if partition.last_group_undersized() {
            warnings.push(format!(
                "the last evaluation group holds {} training instances, under half the per-group target of {}",
                partition.cumulative_counts()[partition.num_groups() - 1],
                partition.target()
            ));
        }
        Ok(Builder {
            partition,
            test,
            counts,
            settings,
            baseline: None,
            rows: Vec::new(),
            failures: Vec::new(),
            warnings,
        })
    }

    fn push(&mut self, method: Option<Method>, groups: Option<usize>, result: Result<Evaluation>) {
        let name = label(method);
        let eval = match result {
            Ok(e) => e,
            Err(e) => {
                self.failures.push(ConditionFailure {
                    method: name,
                    groups,
                    error: e.to_string(),
                });
                return;
            }
        };
        if eval.min_bin < RECOMMENDED_MIN_BIN_SIZE {
            let g = groups.map_or("—".to_string(), |g| g.to_string());
            self.warnings.push(format!(
                "{name} (G = {g}): smallest evaluation bin holds {} scores, fewer than the recommended {RECOMMENDED_MIN_BIN_SIZE}",
                eval.min_bin
            ));
        }
        let base = self.baseline.as_ref();
        let row = ConditionRow {
            method: name,
            groups,
            smce: eval.smce,
            smce_delta: method.and_then(|_| delta(base.map(|b| b.smce), eval.smce)),
            gmce_delta: eval
                .gmce
                .iter()
                .enumerate()
                .map(|(g, &v)| method.and_then(|_| delta(base.map(|b| b.gmce[g]), v)))
                .collect(),
            gmce: eval.gmce.clone(),
        };
        if method.is_none() {
            self.baseline = Some(eval);
        }
        self.rows.push(row);
    }

    fn baseline(&mut self) {
        let eval = evaluate(self.test, &self.partition, self.settings.bins);
        self.push(None, None, eval);
    }

    fn model(&mut self, model: &RecalibratorModel, groups: usize) {
        let eval = model
            .calibrate_dataset(self.test)
            .and_then(|calibrated| evaluate(&calibrated, &self.partition, self.settings.bins));
        self.push(Some(model.method()), Some(groups), eval);
    }

    fn finish(self) -> EvaluationReport {
        let records = self.test.records();
        let overall = OverallStatistics {
            records: records.len(),
            tag_types: self.test.tag_universe().len(),
            tokens: records
                .iter()
                .map(|r| r.instance_id.as_str())
                .collect::<BTreeSet<_>>()
                .len(),
        };
        let unseen = self
            .test
            .tag_universe()
            .iter()
            .filter(|t| self.counts.count(t) == 0)
            .count();
        let mut notes = vec![
            format!(
                "scores below the threshold {} are dropped before fitting and evaluation",
                self.settings.threshold
            ),
            "GMCE weights each bin by its share of the group's own scores".to_string(),
            "tags without training occurrences (including any UNK tag) belong to the last group"
                .to_string(),
        ];
        if unseen > 0 {
            notes.push(format!(
                "{unseen} evaluated tag types have no training occurrences"
            ));
        }
        EvaluationReport {
            threshold: self.settings.threshold,
            bins: self.settings.bins,
            eval_groups: self.partition.num_groups(),
            notes,
            rows: self.rows,
            failures: self.failures,
            overall,
            group_statistics: group_statistics(&self.partition, self.test, self.counts),
            warnings: self.warnings,
        }
    }
}

/// Runs every configured condition on in-memory splits.
///
/// A condition that fails to fit or evaluate is recorded in
/// `report.failures`; the others still run. Conditions are fitted in
/// parallel and reported in configuration order.
pub fn run_experiment_on(
    counts: &TagCountTable,
    fit_set: &CalibrationDataset,
    test: &CalibrationDataset,
    settings: &ExperimentSettings,
) -> Result<ExperimentOutput> {
    let mut builder = Builder::new(counts, test, settings)?;
    builder.baseline();

    let conditions: Vec<(Method, usize)> = settings
        .methods
        .iter()
        .flat_map(|&m| settings.fit_groups.iter().map(move |&g| (m, g)))
        .collect();
    let fitted: Vec<Result<RecalibratorModel>> = std::thread::scope(|scope| {
        let handles: Vec<_> = conditions
            .iter()
            .map(|&(method, groups)| {
                scope.spawn(move || fit(fit_set, counts, method, groups, settings.bins))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fitting thread panicked"))
            .collect()
    });

    let mut models = Vec::new();
    for ((method, groups), model) in conditions.into_iter().zip(fitted) {
        match model {
            Ok(model) => {
                builder.model(&model, groups);
                models.push(FittedCondition {
                    method,
                    groups,
                    model,
                });
            }
            Err(e) => builder.push(Some(method), Some(groups), Err(e)),
        }
    }
    Ok(ExperimentOutput {
        report: builder.finish(),
        models,
    })
}

/// Loads the configured files and runs [`run_experiment_on`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let t = config.settings.threshold;
    let counts = ingest::load_tag_counts(&config.train_counts)?;
    let (fit_scores, fit_gold) = match &config.recal {
        Some((s, g)) => (s, g),
        None => (&config.dev_scores, &config.dev_gold),
    };
    let fit_set = ingest::load_dataset(fit_scores, fit_gold, t)?;
    let test = ingest::load_dataset(&config.test_scores, &config.test_gold, t)?;
    run_experiment_on(&counts, &fit_set, &test, &config.settings)
}

/// Report for a single split: the uncalibrated row, plus the row of `model`
/// when given. Fails when either row cannot be evaluated.
pub fn evaluate_split(
    counts: &TagCountTable,
    test: &CalibrationDataset,
    model: Option<&RecalibratorModel>,
    settings: &ExperimentSettings,
) -> Result<EvaluationReport> {
    let mut builder = Builder::new(counts, test, settings)?;
    builder.baseline();
    if let Some(model) = model {
        let groups = match model.scope() {
            crate::recalibrate::Scope::Shared => 1,
            crate::recalibrate::Scope::Grouped(p) => p.num_groups(),
        };
        builder.model(model, groups);
    }
    if let Some(f) = builder.failures.first() {
        return Err(Error::Model(format!(
            "evaluation of {} failed: {}",
            f.method, f.error
        )));
    }
    Ok(builder.finish())
}
