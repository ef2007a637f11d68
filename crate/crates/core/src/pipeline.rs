//! File-based orchestration of ingest, fit and analyze.
//!
//! All three commands share one output directory. `ingest` writes
//! `corpus.jsonl`, `fit` reads it and writes `model.json`, `analyze` reads
//! both. Every SVG is accompanied by a CSV holding exactly the plotted data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coherence::{
    self, model_coherence, select_topic_number, CoherenceParams, SweepConfig, WindowIndex,
};
use crate::corpus::{corpus_stats, filter_corpus, load_corpus, write_stats_csv, FilterOptions, PublicationCorpus};
use crate::error::{Error, Result};
use crate::geometry::{
    default_bandwidth_grid, kde_density_grid, kde_fit, log_space, mds, padded_bounds, pairwise_distances,
    sample_papers, MdsOptions,
};
use crate::nmf::{factorize, load_model, save_model, top_terms, NmfOptions, TopicModel};
use crate::plot::{PlotData, PlotSpec};
use crate::text::{
    abstract_length_stats, rank_streams, tfidf_matrix, tokenize_corpus, zipf_slope, LengthStats, Stopwords,
    Vocabulary,
};
use crate::trajectory::{
    diversity_over_time, diversity_ranking, project_trajectory, relevant_topics, topic_similarity_matrix,
    venue_embeddings, venue_trajectory, yearly_topic_importances, EmbeddedCorpus, ImportanceMode,
    RelevanceMeasure, TopicTrajectory,
};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const MODEL_FILE: &str = "model.json";
const LOCK_FILE: &str = ".lock";
const TOP_TERMS_EXPORTED: usize = 10;
const DENSITY_PAD_BANDWIDTHS: f64 = 3.0;

/// Inclusive range of topic counts, written `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TopicRange {
    pub lo: usize,
    pub hi: usize,
}

impl TopicRange {
    pub fn values(&self) -> Vec<usize> {
        (self.lo..=self.hi).collect()
    }
}

impl FromStr for TopicRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("topic range {s:?} must look like lo:hi"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidParameter(format!("topic range {s:?} needs 1 <= lo <= hi")));
        }
        Ok(Self { lo, hi })
    }
}

impl TryFrom<String> for TopicRange {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TopicRange> for String {
    fn from(r: TopicRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for TopicRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Topics,
    Similarities,
    Importances,
    Map,
    Trajectories,
    Heatmaps,
    Diversity,
    Density,
}

impl Analysis {
    pub const ALL: [Analysis; 8] = [
        Analysis::Topics,
        Analysis::Similarities,
        Analysis::Importances,
        Analysis::Map,
        Analysis::Trajectories,
        Analysis::Heatmaps,
        Analysis::Diversity,
        Analysis::Density,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Analysis::Topics => "topics",
            Analysis::Similarities => "similarities",
            Analysis::Importances => "importances",
            Analysis::Map => "map",
            Analysis::Trajectories => "trajectories",
            Analysis::Heatmaps => "heatmaps",
            Analysis::Diversity => "diversity",
            Analysis::Density => "density",
        }
    }
}

impl FromStr for Analysis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown analysis {s:?}")))
    }
}

/// Every parameter of a run. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Raw JSONL input of `ingest`.
    pub corpus: Option<PathBuf>,
    /// One term per line; the built-in English list when absent.
    pub stopwords: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub min_year: Option<i32>,
    pub max_year: Option<i32>,
    /// Allowlist at ingest, selector at analyze.
    pub venues: Option<Vec<String>>,
    pub min_count: usize,
    pub topics: Option<usize>,
    pub topic_range: Option<TopicRange>,
    pub seeds_per_t: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub cv_n: usize,
    pub cv_window: usize,
    pub cv_gamma: f64,
    pub min_papers: usize,
    pub mds_n_init: usize,
    pub mds_max_iter: usize,
    pub mds_tol: f64,
    pub kde_folds: usize,
    /// Explicit bandwidths; otherwise `kde_grid_size` log-spaced values over
    /// [0.01 R, R] with R the RMS pairwise distance of the samples.
    pub kde_grid: Option<Vec<f64>>,
    pub kde_grid_size: usize,
    pub density_resolution: usize,
    pub sample_cap: usize,
    pub analyses: Vec<Analysis>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let nmf = NmfOptions::default();
        let mds = MdsOptions::default();
        Self {
            corpus: None,
            stopwords: None,
            out: PathBuf::from("out"),
            seed: 0,
            min_year: None,
            max_year: None,
            venues: None,
            min_count: crate::text::DEFAULT_MIN_COUNT,
            topics: None,
            topic_range: None,
            seeds_per_t: 3,
            max_iter: nmf.max_iter,
            rel_tol: nmf.rel_tol,
            cv_n: coherence::DEFAULT_TOP_N,
            cv_window: coherence::DEFAULT_WINDOW,
            cv_gamma: coherence::DEFAULT_GAMMA,
            min_papers: crate::trajectory::DEFAULT_MIN_PAPERS,
            mds_n_init: mds.n_init,
            mds_max_iter: mds.max_iter,
            mds_tol: mds.tol,
            kde_folds: 5,
            kde_grid: None,
            kde_grid_size: 20,
            density_resolution: 100,
            sample_cap: 1000,
            analyses: Analysis::ALL.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::InvalidParameter(msg.into())) };
        check(self.min_count >= 1, "min_count must be at least 1")?;
        check(self.topics != Some(0), "topics must be at least 1")?;
        check(
            !(self.topics.is_some() && self.topic_range.is_some()),
            "give either topics or topic_range, not both",
        )?;
        if let Some(r) = self.topic_range {
            check(r.lo >= 1 && r.lo <= r.hi, "topic_range needs 1 <= lo <= hi")?;
        }
        check(self.seeds_per_t >= 1, "seeds_per_t must be at least 1")?;
        check(self.max_iter >= 1, "max_iter must be at least 1")?;
        check(self.rel_tol >= 0.0 && self.rel_tol.is_finite(), "rel_tol must be finite and non-negative")?;
        check(self.cv_n >= 1, "cv_n must be at least 1")?;
        check(self.cv_window >= 1, "cv_window must be at least 1")?;
        check(self.cv_gamma > 0.0 && self.cv_gamma.is_finite(), "cv_gamma must be positive")?;
        check(self.min_papers >= 1, "min_papers must be at least 1")?;
        check(self.mds_n_init >= 1 && self.mds_max_iter >= 1, "MDS restarts and iterations must be positive")?;
        check(self.mds_tol >= 0.0 && self.mds_tol.is_finite(), "mds_tol must be finite and non-negative")?;
        check(self.kde_folds >= 2, "kde_folds must be at least 2")?;
        check(self.kde_grid_size >= 1, "kde_grid_size must be at least 1")?;
        if let Some(g) = &self.kde_grid {
            check(!g.is_empty() && g.iter().all(|h| *h > 0.0 && h.is_finite()), "kde_grid must hold positive bandwidths")?;
        }
        check(self.density_resolution >= 2, "density_resolution must be at least 2")?;
        check(self.sample_cap >= 1, "sample_cap must be at least 1")?;
        if let (Some(lo), Some(hi)) = (self.min_year, self.max_year) {
            check(lo <= hi, "min_year must not exceed max_year")?;
        }
        Ok(())
    }

    pub fn coherence_params(&self) -> CoherenceParams {
        CoherenceParams {
            n: self.cv_n,
            sw: self.cv_window,
            gamma: self.cv_gamma,
            ..CoherenceParams::default()
        }
    }

    pub fn nmf_options(&self) -> NmfOptions {
        NmfOptions {
            seed: self.seed,
            max_iter: self.max_iter,
            rel_tol: self.rel_tol,
        }
    }

    pub fn mds_options(&self) -> MdsOptions {
        MdsOptions {
            seed: self.seed,
            n_init: self.mds_n_init,
            max_iter: self.mds_max_iter,
            tol: self.mds_tol,
        }
    }

    fn load_stopwords(&self) -> Result<Stopwords> {
        match &self.stopwords {
            Some(p) if !p.exists() => Err(Error::MissingArtifact(p.clone())),
            Some(p) => Stopwords::from_file(p),
            None => Ok(Stopwords::builtin()),
        }
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(path)),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Paths written by one command, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    /// Analyses or venues skipped, with the reason.
    pub notes: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Outputs,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            outputs: Outputs::default(),
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.outputs.files.push(p.clone());
        p
    }

    fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    fn svg(&mut self, name: &str, spec: &PlotSpec) -> Result<()> {
        let path = self.path(name);
        spec.write(&path)
    }

    fn note(&mut self, note: String) {
        self.outputs.notes.push(note);
    }
}

fn header(fixed: &[&str], topics: usize) -> Vec<String> {
    fixed
        .iter()
        .map(|s| s.to_string())
        .chain((0..topics).map(|k| format!("topic_{k}")))
        .collect()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn nums(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().map(|&x| num(x))
}

/// Filesystem-safe file stems for venue names, unique within the set.
pub fn venue_file_stems<'v>(venues: impl IntoIterator<Item = &'v str>) -> BTreeMap<String, String> {
    let mut taken = BTreeSet::new();
    let mut out = BTreeMap::new();
    for venue in venues {
        let base: String = venue
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let base = if base.is_empty() { "venue".to_string() } else { base };
        let mut stem = base.clone();
        let mut k = 2;
        while !taken.insert(stem.clone()) {
            stem = format!("{base}_{k}");
            k += 1;
        }
        out.insert(venue.to_string(), stem);
    }
    out
}

#[derive(Serialize)]
struct LengthSummary {
    mean: f64,
    median: f64,
    stddev: f64,
}

#[derive(Serialize)]
struct TextSummary {
    length_before_stopwords: LengthSummary,
    length_after_stopwords: LengthSummary,
    zipf_slope_before_stopwords: Option<f64>,
    zipf_slope_after_stopwords: Option<f64>,
}

fn summary(s: &LengthStats) -> LengthSummary {
    LengthSummary {
        mean: s.mean,
        median: s.median,
        stddev: s.stddev,
    }
}

/// Loads and filters the raw corpus, then writes it with its report and
/// descriptive statistics. Re-running on its own output changes nothing.
pub fn cmd_ingest(config: &RunConfig) -> Result<Outputs> {
    config.validate()?;
    let input = config
        .corpus
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("ingest needs a corpus path".into()))?;
    if !input.exists() {
        return Err(Error::MissingArtifact(input.clone()));
    }
    let stopwords = config.load_stopwords()?;
    let raw = load_corpus(input)?;
    let opts = FilterOptions {
        min_year: config.min_year,
        max_year: config.max_year,
        venue_allowlist: config.venues.as_ref().map(|v| v.iter().cloned().collect()),
    };
    let (corpus, report) = filter_corpus(&raw, &opts);

    let _lock = OutputLock::acquire(&config.out)?;
    let mut w = Writer::new(&config.out);
    let path = w.path(CORPUS_FILE);
    corpus.write_jsonl(&path)?;
    w.json("filter_report.json", &report)?;

    let stats = corpus_stats(&corpus);
    let path = w.path("corpus_stats.csv");
    write_stats_csv(&stats, &path)?;
    let years: Vec<i32> = corpus.years().into_iter().collect();
    let venues: Vec<String> = corpus.venues().into_iter().collect();
    let mut counts = vec![vec![0.0; venues.len()]; years.len()];
    for row in &stats {
        let y = years.binary_search(&row.year).expect("year present");
        let v = venues.binary_search(&row.venue).expect("venue present");
        counts[y][v] = row.count as f64;
    }
    w.svg(
        "corpus_stats.svg",
        &PlotSpec::new(
            "Papers per year",
            "year",
            "papers",
            PlotData::StackedBars {
                categories: years.iter().map(|y| y.to_string()).collect(),
                series: venues,
                values: counts,
            },
        ),
    )?;

    let before = abstract_length_stats(&corpus, &stopwords, false, crate::text::DEFAULT_BIN_WIDTH)?;
    let after = abstract_length_stats(&corpus, &stopwords, true, crate::text::DEFAULT_BIN_WIDTH)?;
    let mut rows = Vec::new();
    for (stage, s) in [("before", &before), ("after", &after)] {
        for b in &s.bins {
            rows.push(vec![stage.to_string(), b.lower.to_string(), b.count.to_string()]);
        }
    }
    w.csv("abstract_lengths.csv", &header(&["stage", "lower", "count"], 0), rows)?;
    for (stage, s) in [("before", &before), ("after", &after)] {
        let bins = s.bins.iter().map(|b| (b.lower as f64, s.bin_width as f64, b.count)).collect();
        w.svg(
            &format!("abstract_lengths_{stage}.svg"),
            &PlotSpec::new(
                format!("Abstract lengths ({stage} stopword removal)"),
                "words",
                "papers",
                PlotData::Histogram { bins },
            ),
        )?;
    }

    let rank_before = rank_streams(&tokenize_corpus(&corpus, &Stopwords::empty()));
    let rank_after = rank_streams(&tokenize_corpus(&corpus, &stopwords));
    let mut rows = Vec::new();
    for (stage, ranking) in [("before", &rank_before), ("after", &rank_after)] {
        for r in ranking {
            rows.push(vec![stage.to_string(), r.rank.to_string(), r.term.clone(), r.frequency.to_string()]);
        }
    }
    w.csv("term_frequencies.csv", &header(&["stage", "rank", "term", "frequency"], 0), rows)?;
    for (stage, ranking) in [("before", &rank_before), ("after", &rank_after)] {
        let points = ranking.iter().map(|r| (r.rank as f64, r.frequency as f64)).collect();
        w.svg(
            &format!("term_frequencies_{stage}.svg"),
            &PlotSpec::new(
                format!("Term frequency by rank ({stage} stopword removal)"),
                "rank",
                "frequency",
                PlotData::LogLog { points },
            ),
        )?;
    }
    w.json(
        "text_summary.json",
        &TextSummary {
            length_before_stopwords: summary(&before),
            length_after_stopwords: summary(&after),
            zipf_slope_before_stopwords: zipf_slope(&rank_before),
            zipf_slope_after_stopwords: zipf_slope(&rank_after),
        },
    )?;
    Ok(w.outputs)
}

fn load_ingested(out: &Path) -> Result<PublicationCorpus> {
    let path = out.join(CORPUS_FILE);
    if !path.exists() {
        return Err(Error::MissingArtifact(path));
    }
    load_corpus(&path)
}

#[derive(Serialize)]
struct FitSummary {
    t: usize,
    seed: u64,
    iterations: usize,
    converged: bool,
    reconstruction_error: f64,
    relative_error: f64,
    coherence: f64,
    vocabulary_size: usize,
    documents: usize,
    dropped_documents: usize,
}

/// Fits a model on the ingested corpus, sweeping the topic count when a range is given.
pub fn cmd_fit(config: &RunConfig) -> Result<Outputs> {
    config.validate()?;
    if config.topics.is_none() && config.topic_range.is_none() {
        return Err(Error::InvalidParameter("fit needs topics or topic_range".into()));
    }
    let corpus = load_ingested(&config.out)?;
    let stopwords = config.load_stopwords()?;
    let streams = tokenize_corpus(&corpus, &stopwords);
    let vocab = Vocabulary::from_streams(&streams, config.min_count)?;
    let tfidf = tfidf_matrix(&corpus, &streams, &vocab)?;
    let v = &tfidf.matrix;
    let params = config.coherence_params();
    let index = WindowIndex::build(&streams, params.sw)?;

    let _lock = OutputLock::acquire(&config.out)?;
    let mut w = Writer::new(&config.out);
    let v_norm = v.frobenius_norm_sq().sqrt();

    let (model, converged, error) = match (config.topics, config.topic_range) {
        (Some(t), _) => {
            let (model, trace) = factorize(v, &vocab, t, &config.nmf_options())?;
            for stale in ["sweep.csv", "coherence_curve.csv", "coherence_curve.svg", "error_curve.csv", "error_curve.svg"] {
                let p = config.out.join(stale);
                if p.exists() {
                    fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
                }
            }
            (model, trace.converged, trace.final_error())
        }
        (None, Some(range)) => {
            let sweep = select_topic_number(
                v,
                &vocab,
                &index,
                &SweepConfig {
                    t_values: range.values(),
                    seeds_per_t: config.seeds_per_t,
                    base_seed: config.seed,
                    nmf: config.nmf_options(),
                    coherence: params,
                },
            )?;
            let rows = sweep.runs.iter().map(|r| match &r.outcome {
                Ok(s) => vec![
                    r.t.to_string(),
                    r.seed.to_string(),
                    num(s.coherence),
                    num(s.reconstruction_error),
                    num(s.relative_error),
                ],
                Err(_) => vec![r.t.to_string(), r.seed.to_string(), "failed".into(), "failed".into(), "failed".into()],
            });
            w.csv(
                "sweep.csv",
                &header(&["t", "seed", "coherence", "reconstruction_error", "relative_error"], 0),
                rows,
            )?;
            for (s, r) in sweep.runs.iter().filter_map(|r| r.outcome.as_ref().err().map(|e| (r, e))) {
                w.note(format!("t={} seed={} failed: {r}", s.t, s.seed));
            }
            let curve = &sweep.curve;
            w.csv(
                "coherence_curve.csv",
                &header(&["t", "best_coherence"], 0),
                curve.iter().map(|c| vec![c.t.to_string(), num(c.best_coherence)]),
            )?;
            w.svg(
                "coherence_curve.svg",
                &PlotSpec::new(
                    "C_V coherence by topic count",
                    "topics",
                    "coherence",
                    PlotData::Curve {
                        series: vec![("coherence".into(), curve.iter().map(|c| (c.t as f64, c.best_coherence)).collect())],
                    },
                ),
            )?;
            w.csv(
                "error_curve.csv",
                &header(&["t", "mean_error", "mean_relative_error"], 0),
                curve
                    .iter()
                    .map(|c| vec![c.t.to_string(), num(c.mean_error), num(c.mean_relative_error)]),
            )?;
            w.svg(
                "error_curve.svg",
                &PlotSpec::new(
                    "Reconstruction error by topic count",
                    "topics",
                    "relative error",
                    PlotData::Curve {
                        series: vec![(
                            "relative error".into(),
                            curve.iter().map(|c| (c.t as f64, c.mean_relative_error)).collect(),
                        )],
                    },
                ),
            )?;
            let best = sweep
                .runs
                .iter()
                .find_map(|r| match &r.outcome {
                    Ok(s) if r.t == sweep.best_t && r.seed == sweep.best_model.seed() => Some(s.reconstruction_error),
                    _ => None,
                })
                .expect("best model has a run");
            let converged = sweep.best_model.iterations() < config.max_iter;
            (sweep.best_model, converged, best)
        }
        (None, None) => unreachable!("checked above"),
    };

    let path = w.path(MODEL_FILE);
    save_model(&model, &path)?;
    let coh = model_coherence(&model, &index, &params)?;
    w.csv(
        "coherence.csv",
        &header(&["topic", "label", "coherence", "truncated"], 0),
        (0..model.t()).map(|k| {
            vec![k.to_string(), model.topic_label(k), num(coh.per_topic[k]), coh.truncated[k].to_string()]
        }),
    )?;
    w.csv("dropped_documents.csv", &header(&["doc_id"], 0), tfidf.dropped.iter().map(|id| vec![id.clone()]))?;
    w.json(
        "fit_summary.json",
        &FitSummary {
            t: model.t(),
            seed: model.seed(),
            iterations: model.iterations(),
            converged,
            reconstruction_error: error,
            relative_error: if v_norm > 0.0 { error / v_norm } else { 0.0 },
            coherence: coh.model_coherence,
            vocabulary_size: vocab.len(),
            documents: v.d(),
            dropped_documents: tfidf.dropped.len(),
        },
    )?;
    Ok(w.outputs)
}

/// Runs the configured analyses on a fitted model.
pub fn cmd_analyze(config: &RunConfig) -> Result<Outputs> {
    config.validate()?;
    let model_path = config.out.join(MODEL_FILE);
    let model = load_model(&model_path)?;
    let corpus = load_ingested(&config.out)?;
    let emb = EmbeddedCorpus::new(&model, &corpus);
    let present: BTreeSet<&str> = emb.papers().iter().map(|p| p.venue.as_str()).collect();
    let selected: Vec<String> = match &config.venues {
        Some(list) => {
            let mut sel = BTreeSet::new();
            for v in list {
                if !present.contains(v.as_str()) {
                    return Err(Error::UnknownVenue(v.clone()));
                }
                sel.insert(v.clone());
            }
            sel.into_iter().collect()
        }
        None => present.iter().map(|s| s.to_string()).collect(),
    };
    let stems = venue_file_stems(selected.iter().map(String::as_str));
    let analyses: BTreeSet<Analysis> = config.analyses.iter().copied().collect();

    let _lock = OutputLock::acquire(&config.out)?;
    let mut w = Writer::new(&config.out);
    let ctx = Context {
        config,
        model: &model,
        emb: &emb,
        selected: &selected,
        stems: &stems,
    };
    for a in analyses {
        match a {
            Analysis::Topics => ctx.topics(&mut w)?,
            Analysis::Similarities => ctx.similarities(&mut w)?,
            Analysis::Importances => ctx.importances(&mut w)?,
            Analysis::Map => ctx.map(&mut w)?,
            Analysis::Trajectories => ctx.trajectories(&mut w)?,
            Analysis::Heatmaps => ctx.heatmaps(&mut w)?,
            Analysis::Diversity => ctx.diversity(&mut w)?,
            Analysis::Density => ctx.density(&mut w)?,
        }
    }
    Ok(w.outputs)
}

struct Context<'a> {
    config: &'a RunConfig,
    model: &'a TopicModel,
    emb: &'a EmbeddedCorpus,
    selected: &'a [String],
    stems: &'a BTreeMap<String, String>,
}

impl Context<'_> {
    fn t(&self) -> usize {
        self.model.t()
    }

    fn topic_names(&self) -> Vec<String> {
        (0..self.t()).map(|k| format!("topic_{k}")).collect()
    }

    fn topics(&self, w: &mut Writer) -> Result<()> {
        let mut rows = Vec::new();
        let mut table = Vec::new();
        for k in 0..self.t() {
            let terms = top_terms(self.model, k, TOP_TERMS_EXPORTED)?;
            for (rank, (term, weight)) in terms.iter().enumerate() {
                rows.push(vec![k.to_string(), (rank + 1).to_string(), term.clone(), num(*weight)]);
            }
            let words: Vec<&str> = terms.iter().map(|(t, _)| t.as_str()).collect();
            table.push(vec![format!("topic_{k}"), words.join(" ")]);
        }
        w.csv("topics.csv", &header(&["topic", "rank", "term", "weight"], 0), rows)?;
        w.svg(
            "topics.svg",
            &PlotSpec::new(
                "Top terms per topic",
                "",
                "",
                PlotData::Table {
                    header: vec!["topic".into(), "top terms".into()],
                    rows: table,
                },
            ),
        )
    }

    fn similarities(&self, w: &mut Writer) -> Result<()> {
        let sim = topic_similarity_matrix(self.model)?;
        w.csv(
            "similarities.csv",
            &header(&["topic"], self.t()),
            sim.iter().enumerate().map(|(k, row)| {
                std::iter::once(format!("topic_{k}")).chain(nums(row)).collect()
            }),
        )?;
        w.svg(
            "similarities.svg",
            &PlotSpec::new(
                "Topic cosine similarity",
                "topic",
                "topic",
                PlotData::Heatmap {
                    rows: self.topic_names(),
                    columns: self.topic_names(),
                    values: sim.iter().map(|r| r.iter().map(|&x| Some(x)).collect()).collect(),
                },
            ),
        )
    }

    fn importances(&self, w: &mut Writer) -> Result<()> {
        let modes = [ImportanceMode::Normalized, ImportanceMode::Absolute];
        let per_mode: Vec<_> = modes.iter().map(|&m| (m, yearly_topic_importances(self.emb, m))).collect();
        let mut rows = Vec::new();
        for (mode, years) in &per_mode {
            for y in years {
                rows.push(
                    [y.year.to_string(), mode.as_str().to_string()]
                        .into_iter()
                        .chain(nums(&y.values))
                        .collect(),
                );
            }
        }
        w.csv("importances.csv", &header(&["year", "mode"], self.t()), rows)?;
        for (mode, years) in &per_mode {
            w.svg(
                &format!("importances_{}.svg", mode.as_str()),
                &PlotSpec::new(
                    format!("Topic importance per year ({})", mode.as_str()),
                    "year",
                    "importance",
                    PlotData::StackedBars {
                        categories: years.iter().map(|y| y.year.to_string()).collect(),
                        series: (0..self.t()).map(|k| self.model.topic_label(k)).collect(),
                        values: years.iter().map(|y| y.values.clone()).collect(),
                    },
                ),
            )?;
        }
        Ok(())
    }

    fn map(&self, w: &mut Writer) -> Result<()> {
        let venues: Vec<_> = venue_embeddings(self.emb, self.config.min_papers)?
            .into_iter()
            .filter(|v| self.selected.contains(&v.venue))
            .collect();
        let points: Vec<(String, f64, f64)> = match venues.len() {
            0 => {
                w.note(format!("map: no venue has {} papers", self.config.min_papers));
                Vec::new()
            }
            1 => vec![(venues[0].venue.clone(), 0.0, 0.0)],
            _ => {
                let centroids: Vec<Vec<f64>> = venues.iter().map(|v| v.centroid.clone()).collect();
                let layout = mds(&pairwise_distances(&centroids)?, &self.config.mds_options())?;
                venues
                    .iter()
                    .zip(&layout.points)
                    .map(|(v, p)| (v.venue.clone(), p[0], p[1]))
                    .collect()
            }
        };
        w.csv(
            "map.csv",
            &header(&["label", "x", "y"], 0),
            points.iter().map(|(l, x, y)| vec![l.clone(), num(*x), num(*y)]),
        )?;
        w.svg(
            "map.svg",
            &PlotSpec::new("Topical map of venues", "MDS 1", "MDS 2", PlotData::ScatterMap { points }),
        )
    }

    fn selected_trajectories(&self) -> Result<Vec<TopicTrajectory>> {
        self.selected
            .iter()
            .map(|v| venue_trajectory(self.emb, v, self.config.min_papers))
            .collect()
    }

    fn trajectories(&self, w: &mut Writer) -> Result<()> {
        let trajs = self.selected_trajectories()?;
        let mut rows = Vec::new();
        for tr in &trajs {
            for p in &tr.points {
                rows.push(
                    [tr.venue.clone(), p.year.to_string(), p.paper_count.to_string()]
                        .into_iter()
                        .chain(nums(&p.centroid))
                        .collect(),
                );
            }
        }
        w.csv("trajectories.csv", &header(&["venue", "year", "paper_count"], self.t()), rows)?;
        for tr in &trajs {
            let stem = &self.stems[&tr.venue];
            if tr.is_empty() || self.t() < 2 {
                w.note(format!("trajectory projection skipped for {}: no year with enough papers or t < 2", tr.venue));
                continue;
            }
            let top = relevant_topics(tr, 2, RelevanceMeasure::Mean)?;
            let (i, j) = (top[0], top[1]);
            let proj = project_trajectory(tr, i, j)?;
            w.csv(
                &format!("trajectory_{stem}.csv"),
                &[String::from("year"), format!("topic_{i}"), format!("topic_{j}")],
                proj.iter().map(|p| vec![p.year.to_string(), num(p.x), num(p.y)]),
            )?;
            w.svg(
                &format!("trajectory_{stem}.svg"),
                &PlotSpec::new(
                    format!("Topic space trajectory of {}", tr.venue),
                    self.model.topic_label(i),
                    self.model.topic_label(j),
                    PlotData::TrajectoryPath {
                        points: proj.iter().map(|p| (p.year.to_string(), p.x, p.y)).collect(),
                    },
                ),
            )?;
        }
        Ok(())
    }

    fn heatmaps(&self, w: &mut Writer) -> Result<()> {
        for tr in self.selected_trajectories()? {
            let stem = &self.stems[&tr.venue];
            if tr.is_empty() {
                w.note(format!("heatmap skipped for {}: no year with enough papers", tr.venue));
                continue;
            }
            w.csv(
                &format!("heatmap_{stem}.csv"),
                &header(&["year", "paper_count"], self.t()),
                tr.points.iter().map(|p| {
                    [p.year.to_string(), p.paper_count.to_string()]
                        .into_iter()
                        .chain(nums(&p.centroid))
                        .collect()
                }),
            )?;
            w.svg(
                &format!("heatmap_{stem}.svg"),
                &PlotSpec::new(
                    format!("Topic space trajectory of {}", tr.venue),
                    "year",
                    "topic",
                    PlotData::Heatmap {
                        rows: (0..self.t()).map(|k| self.model.topic_label(k)).collect(),
                        columns: tr.points.iter().map(|p| p.year.to_string()).collect(),
                        values: (0..self.t())
                            .map(|k| tr.points.iter().map(|p| Some(p.centroid[k])).collect())
                            .collect(),
                    },
                ),
            )?;
        }
        Ok(())
    }

    fn diversity(&self, w: &mut Writer) -> Result<()> {
        let ranking: Vec<(String, f64)> = diversity_ranking(self.emb, self.config.min_papers)?
            .into_iter()
            .filter(|(v, _)| self.selected.contains(v))
            .collect();
        w.csv(
            "diversity.csv",
            &header(&["venue", "ens"], 0),
            ranking.iter().map(|(v, e)| vec![v.clone(), num(*e)]),
        )?;
        w.svg(
            "diversity.svg",
            &PlotSpec::new(
                "Venue diversity (effective number of topics)",
                "",
                "",
                PlotData::Table {
                    header: vec!["venue".into(), "ENS".into()],
                    rows: ranking.iter().map(|(v, e)| vec![v.clone(), format!("{e:.2}")]).collect(),
                },
            ),
        )?;
        let grid = diversity_over_time(self.emb, self.config.min_papers)?;
        let rows: Vec<&(String, Vec<Option<f64>>)> =
            grid.rows.iter().filter(|(v, _)| self.selected.contains(v)).collect();
        let mut csv_rows = Vec::new();
        for (venue, cells) in &rows {
            for (year, cell) in grid.years.iter().zip(cells) {
                csv_rows.push(vec![
                    venue.clone(),
                    year.to_string(),
                    cell.map_or_else(|| "missing".to_string(), num),
                ]);
            }
        }
        w.csv("diversity_grid.csv", &header(&["venue", "year", "ens"], 0), csv_rows)?;
        w.svg(
            "diversity_grid.svg",
            &PlotSpec::new(
                "Diversity over time",
                "year",
                "venue",
                PlotData::Heatmap {
                    rows: rows.iter().map(|(v, _)| v.clone()).collect(),
                    columns: grid.years.iter().map(|y| y.to_string()).collect(),
                    values: rows.iter().map(|(_, c)| c.clone()).collect(),
                },
            ),
        )
    }

    fn density(&self, w: &mut Writer) -> Result<()> {
        for venue in self.selected {
            let stem = &self.stems[venue];
            let papers: Vec<_> = self.emb.papers().iter().filter(|p| &p.venue == venue).collect();
            if papers.len() < self.config.min_papers.max(self.config.kde_folds) {
                w.note(format!("density skipped for {venue}: only {} papers", papers.len()));
                continue;
            }
            let ids: Vec<String> = papers.iter().map(|p| p.id.clone()).collect();
            let sample = sample_papers(&ids, self.config.sample_cap, self.config.seed)?;
            let keep: BTreeSet<&str> = sample.iter().map(String::as_str).collect();
            let chosen: Vec<_> = papers.iter().filter(|p| keep.contains(p.id.as_str())).collect();
            let vectors: Vec<Vec<f64>> = chosen.iter().map(|p| p.embedding.clone()).collect();
            let layout = mds(&pairwise_distances(&vectors)?, &self.config.mds_options())?;
            let points = layout.points;
            let grid = match &self.config.kde_grid {
                Some(g) => g.clone(),
                None => {
                    let base = default_bandwidth_grid(&points);
                    match base {
                        Ok(g) if g.len() == self.config.kde_grid_size => g,
                        Ok(g) => log_space(g[0], g[g.len() - 1], self.config.kde_grid_size),
                        Err(e) => {
                            w.note(format!("density skipped for {venue}: {e}"));
                            continue;
                        }
                    }
                }
            };
            let model = match kde_fit(&points, &grid, self.config.kde_folds, self.config.seed) {
                Ok(m) => m,
                Err(Error::DegenerateData(msg)) => {
                    w.note(format!("density skipped for {venue}: {msg}"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let (xr, yr) = padded_bounds(&points, DENSITY_PAD_BANDWIDTHS * model.bandwidth);
            let dens = kde_density_grid(&model, xr, yr, self.config.density_resolution)?;
            let mut rows = Vec::new();
            for (iy, y) in dens.ys.iter().enumerate() {
                for (ix, x) in dens.xs.iter().enumerate() {
                    rows.push(vec![num(*x), num(*y), num(dens.values[iy][ix])]);
                }
            }
            w.csv(&format!("density_{stem}.csv"), &header(&["x", "y", "density"], 0), rows)?;
            w.csv(
                &format!("density_{stem}_samples.csv"),
                &header(&["doc_id", "x", "y"], 0),
                chosen.iter().zip(&points).map(|(p, z)| vec![p.id.clone(), num(z[0]), num(z[1])]),
            )?;
            w.csv(
                &format!("density_{stem}_bandwidth.csv"),
                &header(&["bandwidth", "cv_score", "chosen"], 0),
                model
                    .cv_scores
                    .iter()
                    .map(|&(h, s)| vec![num(h), num(s), (h == model.bandwidth).to_string()]),
            )?;
            w.svg(
                &format!("density_{stem}.svg"),
                &PlotSpec::new(
                    format!("Topic density of {venue}"),
                    "MDS 1",
                    "MDS 2",
                    PlotData::DensityMap {
                        xs: dens.xs,
                        ys: dens.ys,
                        values: dens.values,
                        samples: points,
                    },
                ),
            )?;
        }
        Ok(())
    }
}
