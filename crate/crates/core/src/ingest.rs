//! Readers and writers for score, gold and training-count files.
//!
//! All files are UTF-8 with `\n` line ends and a header row:
//!
//! | file   | header                      |
//! |--------|-----------------------------|
//! | scores | `instance_id\ttag\tscore`   |
//! | gold   | `instance_id\tgold_tag`     |
//! | counts | `tag\tcount`                |
//!
//! Scores may also be given as JSON lines with the keys `instance_id`, `tag`
//! and `score`. Blank lines are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{CalibrationDataset, ScoreRecord, TagCountTable};
use crate::error::{Error, Result};

pub const SCORES_HEADER: &str = "instance_id\ttag\tscore";
pub const GOLD_HEADER: &str = "instance_id\tgold_tag";
pub const COUNTS_HEADER: &str = "tag\tcount";

/// Default score threshold; lower scores are dropped.
pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawScoreRow {
    pub instance_id: String,
    pub tag: String,
    pub score: f64,
}

pub type GoldMap = BTreeMap<String, String>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Numbered non-blank lines, with `\r` stripped.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Checks the header and yields the tab-split fields of each data row.
fn tsv_rows<'a>(
    text: &'a str,
    path: &'a Path,
    header: &'static str,
) -> Result<impl Iterator<Item = Result<(usize, Vec<&'a str>)>> + 'a> {
    let mut rows = lines(text);
    match rows.next() {
        Some((_, first)) if first == header => {}
        Some((line, first)) => {
            return Err(parse_error(
                path,
                line,
                format!(
                    "expected header `{}`, found `{first}`",
                    header.replace('\t', "<TAB>")
                ),
            ))
        }
        None => return Err(parse_error(path, 1, "missing header row")),
    }
    let width = header.split('\t').count();
    Ok(rows.map(move |(line, l)| {
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != width {
            return Err(parse_error(
                path,
                line,
                format!(
                    "expected {width} tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        Ok((line, fields))
    }))
}

fn parse_score(path: &Path, line: usize, raw: &str) -> Result<f64> {
    let score: f64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("score `{raw}` is not a number")))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(parse_error(
            path,
            line,
            format!("score {score} outside [0, 1]"),
        ));
    }
    Ok(score)
}

/// Parses a scores file already read into memory.
///
/// `path` is used for diagnostics and to pick the format: a `.jsonl`
/// extension or a first line starting with `{` selects JSON lines.
pub fn parse_scores(text: &str, path: &Path) -> Result<Vec<RawScoreRow>> {
    let jsonl = path.extension().is_some_and(|e| e == "jsonl")
        || lines(text)
            .next()
            .is_some_and(|(_, l)| l.trim_start().starts_with('{'));

    #[derive(Deserialize)]
    struct JsonRow {
        instance_id: String,
        tag: String,
        score: serde_json::Value,
    }

    let mut rows = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let mut push = |line: usize, instance_id: String, tag: String, score: f64| -> Result<()> {
        if let Some(first) = seen.insert((instance_id.clone(), tag.clone()), line) {
            return Err(parse_error(
                path,
                line,
                format!("duplicate score for ({instance_id}, {tag}); first given on line {first}"),
            ));
        }
        rows.push(RawScoreRow {
            instance_id,
            tag,
            score,
        });
        Ok(())
    };

    if jsonl {
        for (line, l) in lines(text) {
            let row: JsonRow = serde_json::from_str(l)
                .map_err(|e| parse_error(path, line, format!("invalid JSON row: {e}")))?;
            let score = match &row.score {
                serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| {
                    parse_error(path, line, format!("score `{n}` is not a number"))
                })?,
                other => {
                    return Err(parse_error(
                        path,
                        line,
                        format!("score `{other}` is not a number"),
                    ))
                }
            };
            if !(0.0..=1.0).contains(&score) {
                return Err(parse_error(
                    path,
                    line,
                    format!("score {score} outside [0, 1]"),
                ));
            }
            push(line, row.instance_id, row.tag, score)?;
        }
    } else {
        for row in tsv_rows(text, path, SCORES_HEADER)? {
            let (line, f) = row?;
            let score = parse_score(path, line, f[2])?;
            push(line, f[0].to_string(), f[1].to_string(), score)?;
        }
    }
    Ok(rows)
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<RawScoreRow>> {
    let path = path.as_ref();
    parse_scores(&read(path)?, path)
}

pub fn parse_gold(text: &str, path: &Path) -> Result<GoldMap> {
    let mut gold = GoldMap::new();
    for row in tsv_rows(text, path, GOLD_HEADER)? {
        let (line, f) = row?;
        if gold.insert(f[0].to_string(), f[1].to_string()).is_some() {
            return Err(parse_error(
                path,
                line,
                format!("duplicate gold entry for instance `{}`", f[0]),
            ));
        }
    }
    Ok(gold)
}

pub fn load_gold(path: impl AsRef<Path>) -> Result<GoldMap> {
    let path = path.as_ref();
    parse_gold(&read(path)?, path)
}

pub fn parse_tag_counts(text: &str, path: &Path) -> Result<TagCountTable> {
    let mut counts = BTreeMap::new();
    for row in tsv_rows(text, path, COUNTS_HEADER)? {
        let (line, f) = row?;
        let raw = f[1].trim();
        let count: u64 = raw.parse().map_err(|_| {
            if raw.starts_with('-') {
                parse_error(
                    path,
                    line,
                    format!("negative count {raw} for tag `{}`", f[0]),
                )
            } else {
                parse_error(
                    path,
                    line,
                    format!("count `{raw}` is not a non-negative integer"),
                )
            }
        })?;
        if counts.insert(f[0].to_string(), count).is_some() {
            return Err(parse_error(path, line, format!("duplicate tag `{}`", f[0])));
        }
    }
    Ok(TagCountTable::new(counts))
}

pub fn load_tag_counts(path: impl AsRef<Path>) -> Result<TagCountTable> {
    let path = path.as_ref();
    parse_tag_counts(&read(path)?, path)
}

/// Keeps rows scoring at least `threshold` and labels each by its gold tag.
///
/// Row order is preserved. Every row's instance must have a gold tag, even
/// when the row itself is dropped.
pub fn apply_threshold(
    rows: &[RawScoreRow],
    gold: &GoldMap,
    threshold: f64,
) -> Result<CalibrationDataset> {
    let mut records = Vec::new();
    for row in rows {
        let gold_tag = gold
            .get(&row.instance_id)
            .ok_or_else(|| Error::MissingGold {
                instance_id: row.instance_id.clone(),
            })?;
        if row.score < threshold {
            continue;
        }
        records.push(ScoreRecord::new(
            row.instance_id.clone(),
            row.tag.clone(),
            row.score,
            &row.tag == gold_tag,
        )?);
    }
    CalibrationDataset::new(records, threshold)
}

/// Loads a scores file and its gold file and thresholds them.
pub fn load_dataset(
    scores: impl AsRef<Path>,
    gold: impl AsRef<Path>,
    threshold: f64,
) -> Result<CalibrationDataset> {
    apply_threshold(&load_scores(scores)?, &load_gold(gold)?, threshold)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn scores_tsv(rows: &[RawScoreRow]) -> String {
    let mut out = format!("{SCORES_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}", r.instance_id, r.tag, r.score);
    }
    out
}

pub fn gold_tsv<'a>(gold: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = format!("{GOLD_HEADER}\n");
    for (instance, tag) in gold {
        let _ = writeln!(out, "{instance}\t{tag}");
    }
    out
}

pub fn counts_tsv(counts: &TagCountTable) -> String {
    let mut out = format!("{COUNTS_HEADER}\n");
    for (tag, count) in counts.counts() {
        let _ = writeln!(out, "{tag}\t{count}");
    }
    out
}

pub fn write_scores(path: impl AsRef<Path>, rows: &[RawScoreRow]) -> Result<()> {
    write(path.as_ref(), &scores_tsv(rows))
}

pub fn write_gold<'a>(
    path: impl AsRef<Path>,
    gold: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<()> {
    write(path.as_ref(), &gold_tsv(gold))
}

pub fn write_tag_counts(path: impl AsRef<Path>, counts: &TagCountTable) -> Result<()> {
    write(path.as_ref(), &counts_tsv(counts))
}
