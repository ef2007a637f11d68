//! Publication records and the corpus relation papers × venues × years.
//!
//! Input is line-delimited JSON, one object per paper with the keys
//! `id`, `title`, `abstract`, `venue` and `year`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub venue: String,
    pub year: i32,
}

/// A set of papers, each with exactly one venue and one year.
///
/// Records keep their input order; every aggregate computed from the corpus
/// is independent of that order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PublicationCorpus {
    records: Vec<PublicationRecord>,
}

impl PublicationCorpus {
    /// Builds a corpus, rejecting duplicate ids, empty ids and non-positive years.
    pub fn from_records(records: Vec<PublicationRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            validate_record(r, i + 1)?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: r.id.clone(),
                    line: i + 1,
                });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[PublicationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn venues(&self) -> BTreeSet<String> {
        self.records.iter().map(|r| r.venue.clone()).collect()
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.records.iter().map(|r| r.year).collect()
    }

    pub fn contains_venue(&self, venue: &str) -> bool {
        self.records.iter().any(|r| r.venue == venue)
    }

    pub fn get(&self, id: &str) -> Option<&PublicationRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Writes the corpus back out in the JSONL input format.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.push(b'\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&out).map_err(|e| Error::io(path, e))
    }
}

fn validate_record(r: &PublicationRecord, line: usize) -> Result<()> {
    if r.id.is_empty() {
        return Err(Error::Schema {
            line,
            message: "id must be non-empty".into(),
        });
    }
    if r.year <= 0 {
        return Err(Error::Schema {
            line,
            message: format!("year must be positive, got {}", r.year),
        });
    }
    Ok(())
}

pub fn load_corpus(path: &Path) -> Result<PublicationCorpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text)
}

/// Parses JSONL text. Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_jsonl(text: &str) -> Result<PublicationCorpus> {
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let record = record_from_value(&value, line_no)?;
        validate_record(&record, line_no)?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId {
                id: record.id,
                line: line_no,
            });
        }
        records.push(record);
    }
    Ok(PublicationCorpus { records })
}

fn record_from_value(value: &Value, line: usize) -> Result<PublicationRecord> {
    let obj = value.as_object().ok_or_else(|| Error::Schema {
        line,
        message: "expected a JSON object".into(),
    })?;
    let text_field = |key: &str| -> Result<String> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::Schema {
                line,
                message: format!("key {key:?} must be a string"),
            }),
            None => Err(Error::Schema {
                line,
                message: format!("missing required key {key:?}"),
            }),
        }
    };
    let year = match obj.get("year") {
        Some(v) => v
            .as_i64()
            .and_then(|y| i32::try_from(y).ok())
            .ok_or_else(|| Error::Schema {
                line,
                message: "key \"year\" must be an integer".into(),
            })?,
        None => {
            return Err(Error::Schema {
                line,
                message: "missing required key \"year\"".into(),
            })
        }
    };
    Ok(PublicationRecord {
        id: text_field("id")?,
        title: text_field("title")?,
        abstract_text: text_field("abstract")?,
        venue: text_field("venue")?,
        year,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterOptions {
    pub min_year: Option<i32>,
    pub max_year: Option<i32>,
    pub venue_allowlist: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub removed_missing_abstract: usize,
    pub removed_title_heuristic: usize,
    pub removed_by_year_or_venue: usize,
    pub kept: usize,
}

impl FilterReport {
    pub fn removed(&self) -> usize {
        self.removed_missing_abstract + self.removed_title_heuristic + self.removed_by_year_or_venue
    }
}

/// True for titles of proceedings front matter: a first word equal to
/// "Publication", or the substrings "Introduction" or "pecial" (which catches
/// both "Special" and "special").
pub fn is_front_matter_title(title: &str) -> bool {
    title.split_whitespace().next() == Some("Publication")
        || title.contains("Introduction")
        || title.contains("pecial")
}

pub fn filter_corpus(
    corpus: &PublicationCorpus,
    options: &FilterOptions,
) -> (PublicationCorpus, FilterReport) {
    let mut report = FilterReport::default();
    let mut kept = Vec::with_capacity(corpus.len());
    for r in &corpus.records {
        if r.abstract_text.trim().is_empty() {
            report.removed_missing_abstract += 1;
        } else if is_front_matter_title(&r.title) {
            report.removed_title_heuristic += 1;
        } else if options.min_year.is_some_and(|y| r.year < y)
            || options.max_year.is_some_and(|y| r.year > y)
            || options
                .venue_allowlist
                .as_ref()
                .is_some_and(|allow| !allow.contains(&r.venue))
        {
            report.removed_by_year_or_venue += 1;
        } else {
            kept.push(r.clone());
        }
    }
    report.kept = kept.len();
    (PublicationCorpus { records: kept }, report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VenueYearCount {
    pub venue: String,
    pub year: i32,
    pub count: usize,
}

/// Papers per (venue, year), sorted by venue then year.
pub fn corpus_stats(corpus: &PublicationCorpus) -> Vec<VenueYearCount> {
    let mut counts: BTreeMap<(&str, i32), usize> = BTreeMap::new();
    for r in &corpus.records {
        *counts.entry((r.venue.as_str(), r.year)).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((venue, year), count)| VenueYearCount {
            venue: venue.to_string(),
            year,
            count,
        })
        .collect()
}

pub fn write_stats_csv(rows: &[VenueYearCount], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["venue", "year", "count"])?;
    for r in rows {
        w.write_record([r.venue.clone(), r.year.to_string(), r.count.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
