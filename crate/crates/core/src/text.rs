//! Tokenization, vocabulary pruning and the tf-idf term-document matrix.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::PublicationCorpus;
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

pub const DEFAULT_MIN_COUNT: usize = 10;
pub const DEFAULT_BIN_WIDTH: usize = 10;

/// A fixed set of lowercase terms removed before modelling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The list shipped with the crate (`data/stopwords.txt`).
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// One term per line; blank lines are ignored and terms are lowercased.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<String>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases, splits on every non-alphanumeric character and drops
/// stopwords and single-character tokens.
pub fn tokenize(text: &str, stopwords: &Stopwords) -> TokenStream {
    let lower = text.to_lowercase();
    let tokens = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some() && !stopwords.contains(t))
        .map(str::to_string)
        .collect();
    TokenStream { tokens }
}

/// Tokenizes every abstract, in corpus order.
pub fn tokenize_corpus(corpus: &PublicationCorpus, stopwords: &Stopwords) -> Vec<TokenStream> {
    corpus
        .records()
        .par_iter()
        .map(|r| tokenize(&r.abstract_text, stopwords))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    corpus_frequency: Vec<usize>,
}

impl Vocabulary {
    /// Keeps the terms occurring at least `min_count` times, sorted lexicographically.
    pub fn from_streams(streams: &[TokenStream], min_count: usize) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::InvalidParameter("min_count must be at least 1".into()));
        }
        // (corpus frequency, document frequency); merging is associative so
        // the result does not depend on how rayon splits the work.
        let counts = streams
            .par_iter()
            .map(|s| {
                let mut local: HashMap<&str, (usize, usize)> = HashMap::new();
                for t in &s.tokens {
                    local.entry(t.as_str()).or_default().0 += 1;
                }
                for v in local.values_mut() {
                    v.1 = 1;
                }
                local
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, (cf, df)) in b {
                    let e = a.entry(k).or_default();
                    e.0 += cf;
                    e.1 += df;
                }
                a
            });
        let kept: BTreeMap<&str, (usize, usize)> = counts
            .into_iter()
            .filter(|(_, (cf, _))| *cf >= min_count)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        Ok(Self::from_sorted(kept))
    }

    fn from_sorted(kept: BTreeMap<&str, (usize, usize)>) -> Self {
        let mut terms = Vec::with_capacity(kept.len());
        let mut corpus_frequency = Vec::with_capacity(kept.len());
        let mut document_frequency = Vec::with_capacity(kept.len());
        for (term, (cf, df)) in kept {
            terms.push(term.to_string());
            corpus_frequency.push(cf);
            document_frequency.push(df);
        }
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            terms,
            index,
            document_frequency,
            corpus_frequency,
        }
    }

    /// Rebuilds a vocabulary from stored terms, e.g. from a saved model.
    /// Frequencies are unknown and reported as zero.
    pub fn from_terms(terms: Vec<String>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let n = terms.len();
        Self {
            terms,
            index,
            document_frequency: vec![0; n],
            corpus_frequency: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn document_frequency(&self, index: usize) -> usize {
        self.document_frequency[index]
    }

    pub fn corpus_frequency(&self, index: usize) -> usize {
        self.corpus_frequency[index]
    }
}

pub fn build_vocabulary(
    corpus: &PublicationCorpus,
    min_count: usize,
    stopwords: &Stopwords,
) -> Result<Vocabulary> {
    Vocabulary::from_streams(&tokenize_corpus(corpus, stopwords), min_count)
}

/// Sparse vector with strictly increasing indices and positive values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// Builds from a dense vector, keeping strictly positive entries.
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut v = Self::default();
        for (i, &x) in dense.iter().enumerate() {
            if x > 0.0 {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v
    }
}

/// Non-negative n × d word-document matrix stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocumentMatrix {
    n: usize,
    columns: Vec<SparseVector>,
    doc_ids: Vec<String>,
}

impl TermDocumentMatrix {
    pub fn new(n: usize, columns: Vec<SparseVector>, doc_ids: Vec<String>) -> Result<Self> {
        if columns.len() != doc_ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} columns but {} document ids",
                columns.len(),
                doc_ids.len()
            )));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.indices.len() != c.values.len()
                || c.indices.windows(2).any(|w| w[0] >= w[1])
                || c.indices.last().is_some_and(|&i| i >= n)
            {
                return Err(Error::ShapeMismatch(format!("column {j} has invalid indices")));
            }
            if c.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::NonFinite(format!("column {j} has a negative or non-finite weight")));
            }
        }
        Ok(Self { n, columns, doc_ids })
    }

    /// Dense row-major input; rows are terms, columns documents. Zero entries are not stored.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch("ragged dense matrix".into()));
        }
        let columns = (0..d)
            .map(|j| SparseVector::from_dense(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
            .collect();
        let doc_ids = (0..d).map(|j| format!("doc{j}")).collect();
        Self::new(n, columns, doc_ids)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseVector::nnz).sum()
    }

    pub fn columns(&self) -> &[SparseVector] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &SparseVector {
        &self.columns[j]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.columns.iter().map(SparseVector::norm_sq).sum()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let c = &self.columns[col];
        match c.indices.binary_search(&row) {
            Ok(k) => c.values[k],
            Err(_) => 0.0,
        }
    }

    /// Row-wise view: for each term, the (document, weight) pairs in document order.
    pub fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.n];
        for (j, c) in self.columns.iter().enumerate() {
            for (i, v) in c.iter() {
                rows[i].push((j, v));
            }
        }
        rows
    }

    /// Coordinate-format text: a header `n d nnz`, then one `row col value` per entry.
    pub fn write_coordinate(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.n, self.d(), self.nnz())?;
        for (j, c) in self.columns.iter().enumerate() {
            for (i, v) in c.iter() {
                writeln!(out, "{i} {j} {v:e}")?;
            }
        }
        Ok(())
    }
}

/// Output of [`tfidf_matrix`]: the matrix plus the ids of documents left out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfOutput {
    pub matrix: TermDocumentMatrix,
    pub dropped: Vec<String>,
}

/// tf · ln(d_total / df) weights, each column scaled to unit Euclidean length.
///
/// `d_total` is the number of corpus documents. A document without any
/// in-vocabulary token, or whose every term has zero idf, is dropped.
pub fn tfidf_matrix(
    corpus: &PublicationCorpus,
    streams: &[TokenStream],
    vocab: &Vocabulary,
) -> Result<TfidfOutput> {
    if streams.len() != corpus.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} token streams for {} documents",
            streams.len(),
            corpus.len()
        )));
    }
    let d_total = corpus.len() as f64;
    let idf: Vec<f64> = (0..vocab.len())
        .map(|i| (d_total / vocab.document_frequency(i) as f64).ln())
        .collect();
    let columns: Vec<Option<SparseVector>> = streams
        .par_iter()
        .map(|s| {
            let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
            for t in &s.tokens {
                if let Some(i) = vocab.index_of(t) {
                    *tf.entry(i).or_default() += 1;
                }
            }
            let mut col = SparseVector::default();
            for (i, count) in tf {
                let w = count as f64 * idf[i];
                if w > 0.0 {
                    col.indices.push(i);
                    col.values.push(w);
                }
            }
            let norm = col.norm_sq().sqrt();
            if norm == 0.0 {
                return None;
            }
            col.values.iter_mut().for_each(|v| *v /= norm);
            Some(col)
        })
        .collect();
    let mut kept = Vec::new();
    let mut ids = Vec::new();
    let mut dropped = Vec::new();
    for (col, r) in columns.into_iter().zip(corpus.records()) {
        match col {
            Some(c) => {
                kept.push(c);
                ids.push(r.id.clone());
            }
            None => dropped.push(r.id.clone()),
        }
    }
    Ok(TfidfOutput {
        matrix: TermDocumentMatrix::new(vocab.len(), kept, ids)?,
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lower: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthStats {
    pub bin_width: usize,
    pub bins: Vec<HistogramBin>,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

/// Abstract lengths in words, counted before or after stopword removal.
pub fn abstract_length_stats(
    corpus: &PublicationCorpus,
    stopwords: &Stopwords,
    after_stopword_removal: bool,
    bin_width: usize,
) -> Result<LengthStats> {
    if bin_width == 0 {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let empty = Stopwords::empty();
    let sw = if after_stopword_removal { stopwords } else { &empty };
    let mut lengths: Vec<usize> = tokenize_corpus(corpus, sw).iter().map(TokenStream::len).collect();
    lengths.sort_unstable();
    Ok(summarize_lengths(&lengths, bin_width))
}

fn summarize_lengths(sorted: &[usize], bin_width: usize) -> LengthStats {
    if sorted.is_empty() {
        return LengthStats {
            bin_width,
            bins: Vec::new(),
            mean: 0.0,
            median: 0.0,
            stddev: 0.0,
        };
    }
    let m = sorted.len();
    let mean = sorted.iter().sum::<usize>() as f64 / m as f64;
    let median = if m % 2 == 1 {
        sorted[m / 2] as f64
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) as f64 / 2.0
    };
    let var = sorted.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / m as f64;
    let n_bins = sorted[m - 1] / bin_width + 1;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|b| HistogramBin {
            lower: b * bin_width,
            count: 0,
        })
        .collect();
    for &l in sorted {
        bins[l / bin_width].count += 1;
    }
    LengthStats {
        bin_width,
        bins,
        mean,
        median,
        stddev: var.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedTerm {
    pub rank: usize,
    pub term: String,
    pub frequency: usize,
}

/// Terms by descending corpus frequency (ties lexicographic), ranks from 1.
pub fn term_frequency_ranking(
    corpus: &PublicationCorpus,
    stopwords: &Stopwords,
    after_stopword_removal: bool,
) -> Vec<RankedTerm> {
    let empty = Stopwords::empty();
    let sw = if after_stopword_removal { stopwords } else { &empty };
    rank_streams(&tokenize_corpus(corpus, sw))
}

pub fn rank_streams(streams: &[TokenStream]) -> Vec<RankedTerm> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in streams {
        for t in &s.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut sorted: Vec<(&str, usize)> = counts.into_iter().collect();
    sorted.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, (term, frequency))| RankedTerm {
            rank: i + 1,
            term: term.to_string(),
            frequency,
        })
        .collect()
}

/// Least-squares slope of ln(frequency) against ln(rank); `None` for fewer than two ranks.
pub fn zipf_slope(ranking: &[RankedTerm]) -> Option<f64> {
    if ranking.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = ranking
        .iter()
        .map(|r| ((r.rank as f64).ln(), (r.frequency as f64).ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
