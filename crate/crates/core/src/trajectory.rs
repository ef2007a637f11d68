//! Venue and venue-year centroids in topic space, trajectories, topic
//! importances, topic similarities and diversity.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::PublicationCorpus;
use crate::error::{Error, Result};
use crate::nmf::TopicModel;

pub const DEFAULT_MIN_PAPERS: usize = 10;

/// One embedded paper joined with its venue and year.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPaper {
    pub id: String,
    pub venue: String,
    pub year: i32,
    pub embedding: Vec<f64>,
}

/// The papers of a corpus that have an embedding in a model, sorted by id so
/// that every aggregate is independent of input order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCorpus {
    t: usize,
    papers: Vec<EmbeddedPaper>,
    venues: BTreeSet<String>,
}

impl EmbeddedCorpus {
    pub fn new(model: &TopicModel, corpus: &PublicationCorpus) -> Self {
        let by_id: HashMap<&str, usize> = model
            .doc_ids()
            .iter()
            .enumerate()
            .map(|(j, id)| (id.as_str(), j))
            .collect();
        let mut papers: Vec<EmbeddedPaper> = corpus
            .records()
            .iter()
            .filter_map(|r| {
                by_id.get(r.id.as_str()).map(|&j| EmbeddedPaper {
                    id: r.id.clone(),
                    venue: r.venue.clone(),
                    year: r.year,
                    embedding: model.document_embedding(j),
                })
            })
            .collect();
        papers.sort_by(|a, b| a.id.cmp(&b.id));
        Self {
            t: model.t(),
            papers,
            venues: corpus.venues(),
        }
    }

    /// Builds directly from papers; `venues` defaults to those present.
    pub fn from_papers(t: usize, mut papers: Vec<EmbeddedPaper>) -> Result<Self> {
        if let Some(p) = papers.iter().find(|p| p.embedding.len() != t) {
            return Err(Error::ShapeMismatch(format!(
                "paper {} has {} components, expected {t}",
                p.id,
                p.embedding.len()
            )));
        }
        papers.sort_by(|a, b| a.id.cmp(&b.id));
        let venues = papers.iter().map(|p| p.venue.clone()).collect();
        Ok(Self { t, papers, venues })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn papers(&self) -> &[EmbeddedPaper] {
        &self.papers
    }

    pub fn venues(&self) -> &BTreeSet<String> {
        &self.venues
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.papers.iter().map(|p| p.year).collect()
    }

    fn require_venue(&self, venue: &str) -> Result<()> {
        if self.venues.contains(venue) {
            Ok(())
        } else {
            Err(Error::UnknownVenue(venue.to_string()))
        }
    }

    /// Embeddings grouped by (venue, year).
    fn by_venue_year(&self) -> BTreeMap<(&str, i32), Vec<&[f64]>> {
        let mut groups: BTreeMap<(&str, i32), Vec<&[f64]>> = BTreeMap::new();
        for p in &self.papers {
            groups.entry((p.venue.as_str(), p.year)).or_default().push(&p.embedding);
        }
        groups
    }
}

fn mean_of(vectors: &[&[f64]]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::EmptyInput("centroid of an empty set".into()))?;
    let t = first.len();
    let mut sum = vec![0.0; t];
    for v in vectors {
        if v.len() != t {
            return Err(Error::ShapeMismatch("vectors of different lengths".into()));
        }
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += x;
        }
    }
    let m = vectors.len() as f64;
    Ok(sum.into_iter().map(|s| s / m).collect())
}

/// Component-wise arithmetic mean of simplex vectors.
pub fn centroid(embeddings: &[Vec<f64>]) -> Result<Vec<f64>> {
    let views: Vec<&[f64]> = embeddings.iter().map(Vec::as_slice).collect();
    mean_of(&views)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YearScope {
    AllYears,
    Year(i32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VenueEmbedding {
    pub venue: String,
    pub centroid: Vec<f64>,
    pub paper_count: usize,
    pub year_scope: YearScope,
}

/// All-years centroid of every venue with at least `min_papers` embedded papers.
pub fn venue_embeddings(emb: &EmbeddedCorpus, min_papers: usize) -> Result<Vec<VenueEmbedding>> {
    let mut groups: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
    for p in &emb.papers {
        groups.entry(p.venue.as_str()).or_default().push(&p.embedding);
    }
    groups
        .into_iter()
        .filter(|(_, v)| v.len() >= min_papers.max(1))
        .map(|(venue, v)| {
            Ok(VenueEmbedding {
                venue: venue.to_string(),
                centroid: mean_of(&v)?,
                paper_count: v.len(),
                year_scope: YearScope::AllYears,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub year: i32,
    pub centroid: Vec<f64>,
    pub paper_count: usize,
}

/// Yearly centroids of one venue in ascending year order.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicTrajectory {
    pub venue: String,
    pub points: Vec<TrajectoryPoint>,
}

impl TopicTrajectory {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weight of one topic at every point, in year order.
    pub fn topic_series(&self, topic: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.centroid[topic]).collect()
    }
}

/// One point per year in which the venue has at least `min_papers` embedded papers.
pub fn venue_trajectory(emb: &EmbeddedCorpus, venue: &str, min_papers: usize) -> Result<TopicTrajectory> {
    emb.require_venue(venue)?;
    let mut by_year: BTreeMap<i32, Vec<&[f64]>> = BTreeMap::new();
    for p in emb.papers.iter().filter(|p| p.venue == venue) {
        by_year.entry(p.year).or_default().push(&p.embedding);
    }
    let points = by_year
        .into_iter()
        .filter(|(_, v)| v.len() >= min_papers.max(1))
        .map(|(year, v)| {
            Ok(TrajectoryPoint {
                year,
                centroid: mean_of(&v)?,
                paper_count: v.len(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TopicTrajectory {
        venue: venue.to_string(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportanceMode {
    /// Per-year centroid over all papers.
    Normalized,
    /// Per-year sum of document embeddings.
    Absolute,
}

impl ImportanceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ImportanceMode::Normalized => "normalized",
            ImportanceMode::Absolute => "absolute",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearImportance {
    pub year: i32,
    pub paper_count: usize,
    pub values: Vec<f64>,
}

pub fn yearly_topic_importances(emb: &EmbeddedCorpus, mode: ImportanceMode) -> Vec<YearImportance> {
    let mut by_year: BTreeMap<i32, (usize, Vec<f64>)> = BTreeMap::new();
    for p in &emb.papers {
        let e = by_year.entry(p.year).or_insert_with(|| (0, vec![0.0; emb.t]));
        e.0 += 1;
        for (s, x) in e.1.iter_mut().zip(&p.embedding) {
            *s += x;
        }
    }
    by_year
        .into_iter()
        .map(|(year, (count, sum))| {
            let values = match mode {
                ImportanceMode::Absolute => sum,
                ImportanceMode::Normalized => sum.into_iter().map(|s| s / count as f64).collect(),
            };
            YearImportance {
                year,
                paper_count: count,
                values,
            }
        })
        .collect()
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Cosine similarities between all pairs of topic vectors; exactly symmetric.
pub fn topic_similarity_matrix(model: &TopicModel) -> Result<Vec<Vec<f64>>> {
    let t = model.t();
    let topics: Vec<Vec<f64>> = (0..t).map(|k| model.topic_vector(k)).collect();
    if let Some(k) = topics.iter().position(|v| v.iter().all(|&x| x == 0.0)) {
        return Err(Error::DegenerateTopic { topic: k });
    }
    let mut s = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in i..t {
            let c = cosine_similarity(&topics[i], &topics[j]).clamp(0.0, 1.0);
            s[i][j] = c;
            s[j][i] = c;
        }
    }
    Ok(s)
}

/// Shannon entropy −Σ p ln p with 0·ln 0 = 0.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// exp of the Shannon entropy, kept within [1, len].
pub fn effective_number_of_species(p: &[f64]) -> f64 {
    shannon_entropy(p).exp().clamp(1.0, p.len().max(1) as f64)
}

pub fn venue_diversity(embedding: &VenueEmbedding) -> f64 {
    effective_number_of_species(&embedding.centroid)
}

/// Venues ranked by the diversity of their all-years centroid, most diverse first.
pub fn diversity_ranking(emb: &EmbeddedCorpus, min_papers: usize) -> Result<Vec<(String, f64)>> {
    let mut rows: Vec<(String, f64)> = venue_embeddings(emb, min_papers)?
        .into_iter()
        .map(|v| {
            let ens = venue_diversity(&v);
            (v.venue, ens)
        })
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(rows)
}

/// Diversity per venue and year; `None` where fewer than `min_papers` papers exist.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityGrid {
    pub years: Vec<i32>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
    /// Mean over the venues present in each year.
    pub average: Vec<Option<f64>>,
}

pub fn diversity_over_time(emb: &EmbeddedCorpus, min_papers: usize) -> Result<DiversityGrid> {
    let groups = emb.by_venue_year();
    let years: Vec<i32> = emb.years().into_iter().collect();
    let venues: BTreeSet<&str> = emb.papers.iter().map(|p| p.venue.as_str()).collect();
    let mut rows = Vec::with_capacity(venues.len());
    for venue in venues {
        let cells = years
            .iter()
            .map(|&y| match groups.get(&(venue, y)) {
                Some(v) if v.len() >= min_papers.max(1) => {
                    mean_of(v).map(|c| Some(effective_number_of_species(&c)))
                }
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((venue.to_string(), cells));
    }
    let average = (0..years.len())
        .map(|k| {
            let present: Vec<f64> = rows.iter().filter_map(|(_, c)| c[k]).collect();
            if present.is_empty() {
                None
            } else {
                Some(present.iter().sum::<f64>() / present.len() as f64)
            }
        })
        .collect();
    Ok(DiversityGrid { years, rows, average })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelevanceMeasure {
    /// Average weight over the trajectory.
    Mean,
    /// Maximum weight over the trajectory.
    Max,
    /// Maximum minus minimum weight.
    Span,
}

/// Topic relevance scores of a trajectory under the given measure.
pub fn relevance_scores(trajectory: &TopicTrajectory, measure: RelevanceMeasure) -> Result<Vec<f64>> {
    let first = trajectory
        .points
        .first()
        .ok_or_else(|| Error::EmptyInput(format!("trajectory of {} has no points", trajectory.venue)))?;
    let t = first.centroid.len();
    Ok((0..t)
        .map(|k| {
            let series = trajectory.topic_series(k);
            let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = series.iter().copied().fold(f64::INFINITY, f64::min);
            match measure {
                RelevanceMeasure::Mean => series.iter().sum::<f64>() / series.len() as f64,
                RelevanceMeasure::Max => max,
                RelevanceMeasure::Span => max - min,
            }
        })
        .collect())
}

/// The `k` most relevant topics, highest score first, ties to the lower index.
pub fn relevant_topics(trajectory: &TopicTrajectory, k: usize, measure: RelevanceMeasure) -> Result<Vec<usize>> {
    let scores = relevance_scores(trajectory, measure)?;
    if k > scores.len() {
        return Err(Error::InvalidParameter(format!(
            "asked for {k} topics out of {}",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub year: i32,
    pub x: f64,
    pub y: f64,
}

/// The trajectory as a year-ordered polyline in the plane of two topics.
pub fn project_trajectory(trajectory: &TopicTrajectory, topic_x: usize, topic_y: usize) -> Result<Vec<ProjectedPoint>> {
    if topic_x == topic_y {
        return Err(Error::InvalidParameter("projection needs two distinct topics".into()));
    }
    let t = trajectory.points.first().map_or(0, |p| p.centroid.len());
    for &k in &[topic_x, topic_y] {
        if k >= t && !trajectory.points.is_empty() {
            return Err(Error::IndexOutOfRange { index: k, len: t });
        }
    }
    Ok(trajectory
        .points
        .iter()
        .map(|p| ProjectedPoint {
            year: p.year,
            x: p.centroid[topic_x],
            y: p.centroid[topic_y],
        })
        .collect())
}
