//! C_V topic coherence from sliding-window co-occurrence statistics.
//!
//! Every position of a window of `sw` tokens (step 1) over every document is a
//! pseudo-document. Word and pair probabilities are the fractions of
//! pseudo-documents containing the word or both words. A document of at most
//! `sw` tokens contributes exactly one pseudo-document, the whole document.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nmf::{factorize, NmfOptions, TopicModel};
use crate::text::{TermDocumentMatrix, TokenStream, Vocabulary};

pub const DEFAULT_TOP_N: usize = 20;
pub const DEFAULT_WINDOW: usize = 110;
pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceParams {
    /// Number of top terms per topic.
    pub n: usize,
    /// Sliding window size.
    pub sw: usize,
    pub gamma: f64,
    pub eps: f64,
}

impl Default for CoherenceParams {
    fn default() -> Self {
        Self {
            n: DEFAULT_TOP_N,
            sw: DEFAULT_WINDOW,
            gamma: DEFAULT_GAMMA,
            eps: DEFAULT_EPSILON,
        }
    }
}

/// Inverted index from term to the sorted ids of the pseudo-documents containing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowIndex {
    sw: usize,
    total_windows: usize,
    postings: HashMap<String, Vec<u32>>,
    fingerprint: u64,
}

impl WindowIndex {
    pub fn build(streams: &[TokenStream], sw: usize) -> Result<Self> {
        if sw == 0 {
            return Err(Error::InvalidParameter("window size must be at least 1".into()));
        }
        let mut hasher = DefaultHasher::new();
        sw.hash(&mut hasher);
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        let mut offset: usize = 0;
        for s in streams {
            s.tokens.hash(&mut hasher);
            let len = s.tokens.len();
            if len == 0 {
                continue;
            }
            let windows = if len > sw { len - sw + 1 } else { 1 };
            let mut positions: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (p, t) in s.tokens.iter().enumerate() {
                positions.entry(t.as_str()).or_default().push(p);
            }
            for (term, pos) in positions {
                let list = postings.entry(term.to_string()).or_default();
                // window s covers positions s..s+sw-1; merge the covering intervals
                let mut next_free = 0usize;
                for p in pos {
                    let lo = (p + 1).saturating_sub(sw).max(next_free);
                    let hi = p.min(windows - 1);
                    for w in lo..=hi {
                        list.push((offset + w) as u32);
                    }
                    next_free = next_free.max(hi + 1);
                }
            }
            offset += windows;
        }
        if u32::try_from(offset).is_err() {
            return Err(Error::InvalidParameter("more than 2^32 pseudo-documents".into()));
        }
        Ok(Self {
            sw,
            total_windows: offset,
            postings,
            fingerprint: hasher.finish(),
        })
    }

    pub fn sw(&self) -> usize {
        self.sw
    }

    pub fn total_windows(&self) -> usize {
        self.total_windows
    }

    /// Hash of the window size and token streams the index was built from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// An index without pseudo-documents cannot produce probabilities.
    pub fn is_usable(&self) -> bool {
        self.total_windows > 0
    }

    pub fn contains(&self, term: &str) -> bool {
        self.postings.contains_key(term)
    }

    fn posting(&self, term: &str) -> Result<&[u32]> {
        self.postings
            .get(term)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))
    }

    pub fn window_count(&self, term: &str) -> Result<usize> {
        Ok(self.posting(term)?.len())
    }

    pub fn joint_window_count(&self, w: &str, v: &str) -> Result<usize> {
        Ok(intersection_size(self.posting(w)?, self.posting(v)?))
    }

    pub fn probability(&self, term: &str) -> Result<f64> {
        self.require_usable()?;
        Ok(self.window_count(term)? as f64 / self.total_windows as f64)
    }

    pub fn joint_probability(&self, w: &str, v: &str) -> Result<f64> {
        self.require_usable()?;
        Ok(self.joint_window_count(w, v)? as f64 / self.total_windows as f64)
    }

    fn require_usable(&self) -> Result<()> {
        if self.is_usable() {
            Ok(())
        } else {
            Err(Error::EmptyInput("window index has no pseudo-documents".into()))
        }
    }
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

pub fn build_window_index(streams: &[TokenStream], sw: usize) -> Result<WindowIndex> {
    WindowIndex::build(streams, sw)
}

/// Normalized pointwise mutual information with natural logarithms:
/// ln((p(w,v)+ε) / (p(w)p(v))) / −ln(p(w,v)+ε).
pub fn npmi(w: &str, v: &str, index: &WindowIndex, eps: f64) -> Result<f64> {
    let pw = index.probability(w)?;
    let pv = index.probability(v)?;
    let pwv = index.joint_probability(w, v)?;
    Ok(npmi_from_probabilities(pw, pv, pwv, eps))
}

pub fn npmi_from_probabilities(pw: f64, pv: f64, pwv: f64, eps: f64) -> f64 {
    ((pwv + eps) / (pw * pv)).ln() / -(pwv + eps).ln()
}

/// sign(x)·|x|^γ, which is plain x^γ for γ = 1 and for non-negative x.
pub fn signed_power(x: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        x
    } else {
        x.signum() * x.abs().powf(gamma)
    }
}

pub fn context_vector(word: &str, top_terms: &[String], index: &WindowIndex, gamma: f64, eps: f64) -> Result<Vec<f64>> {
    if !top_terms.iter().any(|t| t == word) {
        return Err(Error::InvalidParameter(format!("{word:?} is not among the top terms")));
    }
    top_terms
        .iter()
        .map(|t| npmi(word, t, index, eps).map(|x| signed_power(x, gamma)))
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some((dot / (na * nb)).clamp(-1.0, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicCoherence {
    pub value: f64,
    /// Fewer than `n` terms were available.
    pub truncated: bool,
    /// Number of context vectors (or the centroid) that were all zero and scored 0.
    pub zero_vectors: usize,
}

/// Mean cosine similarity between each top term's context vector and the sum of all of them.
pub fn topic_coherence_cv(top_terms: &[String], index: &WindowIndex, params: &CoherenceParams) -> Result<TopicCoherence> {
    if params.n == 0 {
        return Err(Error::InvalidParameter("number of top terms must be at least 1".into()));
    }
    if top_terms.is_empty() {
        return Err(Error::EmptyInput("topic has no terms".into()));
    }
    let truncated = top_terms.len() < params.n;
    let terms = &top_terms[..top_terms.len().min(params.n)];
    let k = terms.len();

    let probs: Vec<f64> = terms.iter().map(|t| index.probability(t)).collect::<Result<_>>()?;
    let mut vectors = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let pij = index.joint_probability(&terms[i], &terms[j])?;
            let x = signed_power(npmi_from_probabilities(probs[i], probs[j], pij, params.eps), params.gamma);
            vectors[i][j] = x;
            vectors[j][i] = x;
        }
    }
    let mut centroid = vec![0.0; k];
    for v in &vectors {
        for (c, x) in centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    let mut zero_vectors = 0;
    let mut total = 0.0;
    for v in &vectors {
        match cosine(v, &centroid) {
            Some(s) => total += s,
            None => zero_vectors += 1,
        }
    }
    Ok(TopicCoherence {
        value: total / k as f64,
        truncated,
        zero_vectors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceResult {
    pub per_topic: Vec<f64>,
    pub truncated: Vec<bool>,
    pub model_coherence: f64,
    pub params: CoherenceParams,
}

/// Top `n` terms of a topic restricted to positive weights.
pub fn coherence_terms(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>> {
    Ok(crate::nmf::top_terms(model, topic, n)?
        .into_iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(t, _)| t)
        .collect())
}

pub fn model_coherence(model: &TopicModel, index: &WindowIndex, params: &CoherenceParams) -> Result<CoherenceResult> {
    let scored: Vec<TopicCoherence> = (0..model.t())
        .map(|j| topic_coherence_cv(&coherence_terms(model, j, params.n)?, index, params))
        .collect::<Result<_>>()?;
    let per_topic: Vec<f64> = scored.iter().map(|s| s.value).collect();
    let model_coherence = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceResult {
        truncated: scored.iter().map(|s| s.truncated).collect(),
        per_topic,
        model_coherence,
        params: *params,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub t: usize,
    pub seed: u64,
    /// `Err` holds the training or scoring failure message.
    pub outcome: std::result::Result<SweepScore, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepScore {
    pub coherence: f64,
    pub reconstruction_error: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: usize,
    pub best_coherence: f64,
    pub mean_error: f64,
    pub mean_relative_error: f64,
}

/// Seeds `base_seed..base_seed + seeds_per_t` are trained for every topic count.
/// The seed inside `nmf` is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub t_values: Vec<usize>,
    pub seeds_per_t: usize,
    pub base_seed: u64,
    pub nmf: NmfOptions,
    pub coherence: CoherenceParams,
}

#[derive(Debug, Clone)]
pub struct TopicSweep {
    pub best_t: usize,
    /// Highest-coherence model at `best_t`.
    pub best_model: TopicModel,
    pub runs: Vec<SweepRun>,
    pub curve: Vec<CurvePoint>,
}

/// Trains `seeds_per_t` models for every topic count, keeps the most coherent
/// one per count and picks the count with the highest coherence (ties to the
/// smaller count). Failed (t, seed) pairs are recorded and skipped.
pub fn select_topic_number(
    v: &TermDocumentMatrix,
    vocab: &Vocabulary,
    index: &WindowIndex,
    config: &SweepConfig,
) -> Result<TopicSweep> {
    let SweepConfig {
        t_values,
        seeds_per_t,
        base_seed,
        nmf,
        coherence: params,
    } = config;
    let (seeds_per_t, base_seed) = (*seeds_per_t, *base_seed);
    if t_values.is_empty() || t_values.contains(&0) {
        return Err(Error::InvalidParameter("topic counts must be non-empty and at least 1".into()));
    }
    if seeds_per_t == 0 {
        return Err(Error::InvalidParameter("seeds_per_t must be at least 1".into()));
    }
    let v_norm = v.frobenius_norm_sq().sqrt();
    let mut runs = Vec::new();
    let mut curve = Vec::new();
    let mut best: Option<(f64, usize, TopicModel)> = None;

    for &t in t_values.iter() {
        let fits: Vec<(SweepRun, Option<TopicModel>)> = (0..seeds_per_t as u64)
            .into_par_iter()
            .map(|k| {
                let seed = base_seed.wrapping_add(k);
                let opts = NmfOptions { seed, ..*nmf };
                let scored = factorize(v, vocab, t, &opts).and_then(|(model, trace)| {
                    let c = model_coherence(&model, index, params)?;
                    let err = trace.final_error();
                    let score = SweepScore {
                        coherence: c.model_coherence,
                        reconstruction_error: err,
                        relative_error: if v_norm > 0.0 { err / v_norm } else { 0.0 },
                    };
                    Ok((score, model))
                });
                match scored {
                    Ok((score, model)) => (SweepRun { t, seed, outcome: Ok(score) }, Some(model)),
                    Err(e) => (SweepRun { t, seed, outcome: Err(e.to_string()) }, None),
                }
            })
            .collect();

        let mut best_here: Option<(f64, TopicModel)> = None;
        let mut errs = Vec::new();
        for (run, model) in fits {
            if let (Ok(score), Some(model)) = (&run.outcome, model) {
                errs.push((score.reconstruction_error, score.relative_error));
                if best_here.as_ref().is_none_or(|(c, _)| score.coherence > *c) {
                    best_here = Some((score.coherence, model));
                }
            }
            runs.push(run);
        }
        if let Some((c, model)) = best_here {
            let m = errs.len() as f64;
            curve.push(CurvePoint {
                t,
                best_coherence: c,
                mean_error: errs.iter().map(|e| e.0).sum::<f64>() / m,
                mean_relative_error: errs.iter().map(|e| e.1).sum::<f64>() / m,
            });
            let better = match &best {
                None => true,
                Some((bc, bt, _)) => c > *bc || (c == *bc && t < *bt),
            };
            if better {
                best = Some((c, t, model));
            }
        }
    }

    let (_, best_t, best_model) = best.ok_or(Error::AllFitsFailed)?;
    Ok(TopicSweep {
        best_t,
        best_model,
        runs,
        curve,
    })
}
