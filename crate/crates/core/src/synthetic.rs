//! Seeded generators for corpora with known structure.
//!
//! Planted topics are disjoint word groups `g{group}w{index}`. Within a group,
//! word `i` is drawn with weight `1 / (i + 1)^zipf_exponent`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{PublicationCorpus, PublicationRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedTopics {
    pub groups: usize,
    pub words_per_group: usize,
    pub doc_len: usize,
    /// Probability that a token's group is drawn uniformly instead of from the mixture.
    pub noise: f64,
    pub zipf_exponent: f64,
}

impl Default for PlantedTopics {
    fn default() -> Self {
        Self {
            groups: 4,
            words_per_group: 20,
            doc_len: 40,
            noise: 0.2,
            zipf_exponent: 1.0,
        }
    }
}

pub fn group_word(group: usize, index: usize) -> String {
    format!("g{group}w{index:02}")
}

/// Planted group of a generated word.
pub fn word_group(word: &str) -> Option<usize> {
    let rest = word.strip_prefix('g')?;
    let (g, _) = rest.split_once('w')?;
    g.parse().ok()
}

/// Draws documents from mixtures over the planted groups.
pub struct Generator {
    spec: PlantedTopics,
    words: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(spec: PlantedTopics, seed: u64) -> Result<Self> {
        if spec.groups == 0 || spec.words_per_group == 0 || spec.doc_len == 0 {
            return Err(Error::InvalidParameter("groups, words and length must be positive".into()));
        }
        if !(0.0..=1.0).contains(&spec.noise) {
            return Err(Error::InvalidParameter("noise must lie in [0, 1]".into()));
        }
        let weights: Vec<f64> = (0..spec.words_per_group)
            .map(|i| ((i + 1) as f64).powf(-spec.zipf_exponent))
            .collect();
        let words = WeightedIndex::new(weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self {
            spec,
            words,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// One abstract whose tokens follow `mixture` (length `groups`, non-negative).
    pub fn document(&mut self, mixture: &[f64]) -> Result<String> {
        if mixture.len() != self.spec.groups {
            return Err(Error::ShapeMismatch(format!(
                "mixture of length {} for {} groups",
                mixture.len(),
                self.spec.groups
            )));
        }
        let groups = WeightedIndex::new(mixture).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let tokens: Vec<String> = (0..self.spec.doc_len)
            .map(|_| {
                let g = if self.rng.random::<f64>() < self.spec.noise {
                    self.rng.random_range(0..self.spec.groups)
                } else {
                    groups.sample(&mut self.rng)
                };
                group_word(g, self.words.sample(&mut self.rng))
            })
            .collect();
        Ok(tokens.join(" "))
    }
}

pub fn one_hot(len: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[k] = 1.0;
    v
}

/// `docs` papers of one venue and year, paper `i` drawn purely from group `i % groups`.
pub fn planted_corpus(spec: PlantedTopics, docs: usize, seed: u64) -> Result<PublicationCorpus> {
    let mut gen = Generator::new(spec, seed)?;
    let records = (0..docs)
        .map(|i| {
            Ok(PublicationRecord {
                id: format!("p{i:05}"),
                title: format!("Paper {i}"),
                abstract_text: gen.document(&one_hot(spec.groups, i % spec.groups))?,
                venue: "V".into(),
                year: 2000,
            })
        })
        .collect::<Result<_>>()?;
    PublicationCorpus::from_records(records)
}

/// Venue `name` publishes `per_year` papers in each listed year, drawn from
/// the mixture returned by `mixture(year_index)`.
pub struct VenueSpec<'a> {
    pub name: String,
    pub years: Vec<i32>,
    pub per_year: usize,
    pub mixture: Box<dyn Fn(usize) -> Vec<f64> + 'a>,
}

pub fn venue_corpus(spec: PlantedTopics, venues: &[VenueSpec<'_>], seed: u64) -> Result<PublicationCorpus> {
    let mut gen = Generator::new(spec, seed)?;
    let mut records = Vec::new();
    for v in venues {
        for (k, &year) in v.years.iter().enumerate() {
            let mix = (v.mixture)(k);
            for i in 0..v.per_year {
                records.push(PublicationRecord {
                    id: format!("{}-{year}-{i:04}", v.name),
                    title: format!("Paper {i} of {} {year}", v.name),
                    abstract_text: gen.document(&mix)?,
                    venue: v.name.clone(),
                    year,
                });
            }
        }
    }
    PublicationCorpus::from_records(records)
}

/// `docs` abstracts of `doc_len` tokens drawn from `vocab` words with
/// probability proportional to `1 / rank^exponent`.
pub fn zipf_corpus(vocab: usize, exponent: f64, docs: usize, doc_len: usize, seed: u64) -> Result<PublicationCorpus> {
    if vocab == 0 {
        return Err(Error::InvalidParameter("vocabulary must be non-empty".into()));
    }
    let weights: Vec<f64> = (1..=vocab).map(|r| (r as f64).powf(-exponent)).collect();
    let dist = WeightedIndex::new(weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..docs)
        .map(|i| {
            let tokens: Vec<String> = (0..doc_len).map(|_| format!("z{:05}", dist.sample(&mut rng))).collect();
            PublicationRecord {
                id: format!("z{i:05}"),
                title: format!("Paper {i}"),
                abstract_text: tokens.join(" "),
                venue: "Z".into(),
                year: 2000,
            }
        })
        .collect();
    PublicationCorpus::from_records(records)
}
