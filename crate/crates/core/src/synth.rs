//! Synthetic sparse-tagset score data with a known reliability map.
//!
//! Gold tags follow a Zipf law over `K` tags. Each instance gets one gold
//! record; `c · n` distractor records (`c = beta / alpha`) are drawn with
//! tags from the same Zipf law and attached to random instances that do not
//! already carry that tag. Latent gold scores follow `Beta(alpha + 1, beta)`
//! and distractor scores `Beta(alpha, beta + 1)`, which makes every tag
//! calibrated by construction: among records of a given tag with latent score
//! `s`, a fraction `s` are gold. Distractors of a tag that already appears
//! on every instance are dropped, which leaves such a dominant tag
//! underconfident.
//!
//! A [`Distortion`] then warps the observed scores per frequency band, where
//! bands are tag frequency groups of the training counts. The training counts
//! are the expected Zipf counts for `n` instances, so splits generated with
//! different seeds share them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Beta;
use serde::{Deserialize, Serialize};

use crate::data::{CalibrationDataset, TagCountTable};
use crate::error::{Error, Result};
use crate::grouping::{build_tfg, GroupPartition};
use crate::ingest::{self, apply_threshold, GoldMap, RawScoreRow};

pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3) seeded with seed_from_u64";

/// How observed scores deviate from the calibrated latent score.
#[derive(Debug, Clone, PartialEq)]
pub enum Distortion {
    Identity,
    /// `s -> s^gamma` on the listed bands (all bands when `None`).
    Power {
        gamma: f64,
        bands: Option<Vec<usize>>,
    },
}

impl Distortion {
    /// Exponent applied to scores of `band`.
    pub fn gamma_for(&self, band: usize) -> f64 {
        match self {
            Distortion::Identity => 1.0,
            Distortion::Power { gamma, bands } => match bands {
                Some(b) if !b.contains(&band) => 1.0,
                _ => *gamma,
            },
        }
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distortion::Identity => f.write_str("identity"),
            Distortion::Power { gamma, bands: None } => write!(f, "power:{gamma}"),
            Distortion::Power {
                gamma,
                bands: Some(b),
            } => {
                let list: Vec<String> = b.iter().map(usize::to_string).collect();
                write!(f, "power:{gamma}@{}", list.join(","))
            }
        }
    }
}

/// Parses `identity`, `power:GAMMA` or `power:GAMMA@B1,B2,...` (zero-based
/// bands).
impl FromStr for Distortion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "identity" {
            return Ok(Distortion::Identity);
        }
        let bad = || Error::Synth(format!("unknown distortion `{s}`"));
        let spec = s.strip_prefix("power:").ok_or_else(bad)?;
        let (gamma, bands) = match spec.split_once('@') {
            Some((g, b)) => {
                let bands = b
                    .split(',')
                    .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                (g, Some(bands))
            }
            None => (spec, None),
        };
        let gamma: f64 = gamma.parse().map_err(|_| bad())?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Synth(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Distortion::Power { gamma, bands })
    }
}

impl Serialize for Distortion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Distortion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_tags: usize,
    pub num_instances: usize,
    pub zipf_exponent: f64,
    pub distortion: Distortion,
    pub seed: u64,
    /// Number of frequency bands the distortion is defined over.
    pub bands: usize,
    /// Latent score shape; distractors per instance is `beta / alpha`.
    pub latent_alpha: f64,
    pub latent_beta: f64,
}

impl SynthConfig {
    pub fn new(
        num_tags: usize,
        num_instances: usize,
        zipf_exponent: f64,
        distortion: Distortion,
        seed: u64,
    ) -> Self {
        SynthConfig {
            num_tags,
            num_instances,
            zipf_exponent,
            distortion,
            seed,
            bands: 5,
            latent_alpha: 1.0,
            latent_beta: 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Synth(m));
        if self.num_tags < 2 {
            return fail(format!("need at least 2 tags, got {}", self.num_tags));
        }
        if self.num_instances < 1 {
            return fail("need at least 1 instance".into());
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return fail(format!("invalid Zipf exponent {}", self.zipf_exponent));
        }
        if !(self.latent_alpha > 0.0 && self.latent_beta > 0.0) {
            return fail("latent Beta parameters must be positive".into());
        }
        if self.bands < 1 {
            return fail("need at least one band".into());
        }
        if let Distortion::Power { bands: Some(b), .. } = &self.distortion {
            if let Some(&bad) = b.iter().find(|&&x| x >= self.bands) {
                return fail(format!("band {bad} out of range for {} bands", self.bands));
            }
        }
        Ok(())
    }

    pub fn tag_name(&self, rank: usize) -> String {
        let width = (self.num_tags - 1).to_string().len();
        format!("T{rank:0width$}")
    }
}

/// Zipf probabilities `p_k ∝ (k + 1)^-exponent` for ranks `0..num_tags`.
pub fn zipf_probabilities(num_tags: usize, exponent: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=num_tags).map(|r| (r as f64).powf(-exponent)).collect();
    let norm: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / norm).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandManifest {
    pub band: usize,
    pub tags: Vec<String>,
    pub gamma: f64,
    /// True probability of correctness for observed score `v`.
    pub reliability: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SynthConfig,
    pub rng: String,
    /// Distractor records placed.
    pub distractors: usize,
    pub tag_probabilities: BTreeMap<String, f64>,
    pub bands: Vec<BandManifest>,
}

impl Manifest {
    /// True reliability of an observed score of a tag in `band`.
    pub fn reliability(&self, band: usize, observed: f64) -> f64 {
        observed.powf(1.0 / self.bands[band].gamma)
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub scores: Vec<RawScoreRow>,
    pub gold: GoldMap,
    pub counts: TagCountTable,
    pub bands: GroupPartition,
    pub manifest: Manifest,
}

impl SynthData {
    pub fn dataset(&self, threshold: f64) -> Result<CalibrationDataset> {
        apply_threshold(&self.scores, &self.gold, threshold)
    }

    /// Writes `scores.tsv`, `gold.tsv`, `counts.tsv` and `manifest.json`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        ingest::write_scores(dir.join("scores.tsv"), &self.scores)?;
        ingest::write_gold(
            dir.join("gold.tsv"),
            self.gold.iter().map(|(i, t)| (i.as_str(), t.as_str())),
        )?;
        ingest::write_tag_counts(dir.join("counts.tsv"), &self.counts)?;
        let manifest = serde_json::to_string_pretty(&self.manifest)? + "\n";
        let path = dir.join("manifest.json");
        std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let n = config.num_instances;
    let probs = zipf_probabilities(config.num_tags, config.zipf_exponent);
    let names: Vec<String> = (0..config.num_tags).map(|k| config.tag_name(k)).collect();

    let counts: TagCountTable = names
        .iter()
        .zip(&probs)
        .map(|(t, &p)| (t.clone(), (p * n as f64).round() as u64))
        .collect();
    let bands = build_tfg(&counts, config.bands)
        .map_err(|e| Error::Synth(format!("cannot form {} frequency bands: {e}", config.bands)))?;
    let band_of: Vec<usize> = names.iter().map(|t| bands.assign_group(t)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tag_dist = WeightedIndex::new(&probs).map_err(|e| Error::Synth(e.to_string()))?;
    let (a, b) = (config.latent_alpha, config.latent_beta);
    let beta = |x: f64, y: f64| Beta::new(x, y).map_err(|e| Error::Synth(e.to_string()));
    let gold_scores = beta(a + 1.0, b)?;
    let distractor_scores = beta(a, b + 1.0)?;
    let pick_instance = Uniform::new(0, n);

    let warp = |tag: usize, s: f64| -> f64 {
        let gamma = config.distortion.gamma_for(band_of[tag]);
        if gamma == 1.0 {
            s
        } else {
            s.powf(gamma)
        }
    };

    let mut per_instance: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut present: Vec<HashSet<usize>> = Vec::with_capacity(n);
    for _ in 0..n {
        let tag = tag_dist.sample(&mut rng);
        let s = gold_scores.sample(&mut rng);
        per_instance.push(vec![(tag, warp(tag, s))]);
        present.push(HashSet::from([tag]));
    }
    let requested = (b / a * n as f64).round() as usize;
    let mut distractors = 0;
    // instances below a tag's cursor already carry that tag
    let mut cursor = vec![0usize; config.num_tags];
    for _ in 0..requested {
        let tag = tag_dist.sample(&mut rng);
        let s = distractor_scores.sample(&mut rng);
        if cursor[tag] == n {
            continue;
        }
        // a handful of random probes, then the first free instance
        let mut slot = None;
        for _ in 0..64 {
            let i = pick_instance.sample(&mut rng);
            if !present[i].contains(&tag) {
                slot = Some(i);
                break;
            }
        }
        let slot = slot.or_else(|| {
            while cursor[tag] < n && present[cursor[tag]].contains(&tag) {
                cursor[tag] += 1;
            }
            (cursor[tag] < n).then_some(cursor[tag])
        });
        let Some(i) = slot else {
            continue;
        };
        present[i].insert(tag);
        per_instance[i].push((tag, warp(tag, s)));
        distractors += 1;
    }

    let width = (n - 1).to_string().len();
    let mut scores = Vec::with_capacity(n + distractors);
    let mut gold = GoldMap::new();
    for (i, candidates) in per_instance.iter_mut().enumerate() {
        let instance_id = format!("i{i:0width$}");
        gold.insert(instance_id.clone(), names[candidates[0].0].clone());
        candidates.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        for &(tag, score) in candidates.iter() {
            scores.push(RawScoreRow {
                instance_id: instance_id.clone(),
                tag: names[tag].clone(),
                score,
            });
        }
    }

    let manifest = Manifest {
        config: config.clone(),
        rng: RNG_ALGORITHM.to_string(),
        distractors,
        tag_probabilities: names.iter().cloned().zip(probs.iter().copied()).collect(),
        bands: (0..bands.num_groups())
            .map(|band| {
                let gamma = config.distortion.gamma_for(band);
                BandManifest {
                    band,
                    tags: names
                        .iter()
                        .zip(&band_of)
                        .filter(|(_, &b)| b == band)
                        .map(|(t, _)| t.clone())
                        .collect(),
                    gamma,
                    reliability: if gamma == 1.0 {
                        "v".to_string()
                    } else {
                        format!("v^(1/{gamma})")
                    },
                }
            })
            .collect(),
    };
    Ok(SynthData {
        scores,
        gold,
        counts,
        bands,
        manifest,
    })
}
