//! Library results checked against independent recomputations and planted data.

mod common;

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use topic_space::coherence::{topic_coherence_cv, CoherenceParams, WindowIndex};
use topic_space::corpus::{corpus_stats, PublicationCorpus, PublicationRecord};
use topic_space::geometry::{kde_fit, log_space, pairwise_distances};
use topic_space::nmf::{embed_document, factorize, reconstruction_error, top_terms, NmfOptions};
use topic_space::synthetic::{self, one_hot, word_group, PlantedTopics, VenueSpec};
use topic_space::text::{
    tfidf_matrix, tokenize_corpus, SparseVector, Stopwords, TermDocumentMatrix, TokenStream, Vocabulary,
};
use topic_space::trajectory::{centroid, venue_trajectory, EmbeddedCorpus};

fn planted(groups: usize, docs: usize, seed: u64) -> (PublicationCorpus, Vocabulary, TermDocumentMatrix) {
    let spec = PlantedTopics {
        groups,
        noise: 0.05,
        ..PlantedTopics::default()
    };
    let corpus = synthetic::planted_corpus(spec, docs, seed).unwrap();
    let streams = tokenize_corpus(&corpus, &Stopwords::builtin());
    let vocab = Vocabulary::from_streams(&streams, 10).unwrap();
    let v = tfidf_matrix(&corpus, &streams, &vocab).unwrap().matrix;
    (corpus, vocab, v)
}

#[test]
fn stats_of_regular_generator() {
    let mut records = Vec::new();
    for venue in ["A", "B", "C"] {
        for year in 2000..2004 {
            for i in 0..7 {
                records.push(PublicationRecord {
                    id: format!("{venue}{year}{i}"),
                    title: "t".into(),
                    abstract_text: "x".into(),
                    venue: venue.into(),
                    year,
                });
            }
        }
    }
    let stats = corpus_stats(&PublicationCorpus::from_records(records).unwrap());
    assert_eq!(stats.len(), 12);
    assert!(stats.iter().all(|r| r.count == 7));
}

#[test]
fn vocabulary_frequencies_match_recount() {
    let corpus = synthetic::zipf_corpus(80, 1.0, 60, 30, 3).unwrap();
    let streams = tokenize_corpus(&corpus, &Stopwords::builtin());
    let vocab = Vocabulary::from_streams(&streams, 10).unwrap();
    let mut cf: HashMap<&str, usize> = HashMap::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for s in &streams {
        let mut seen = HashSet::new();
        for tok in &s.tokens {
            *cf.entry(tok).or_default() += 1;
            if seen.insert(tok) {
                *df.entry(tok).or_default() += 1;
            }
        }
    }
    let expected: Vec<&str> = {
        let mut v: Vec<&str> = cf.iter().filter(|(_, &c)| c >= 10).map(|(t, _)| *t).collect();
        v.sort();
        v
    };
    assert_eq!(vocab.terms().iter().map(String::as_str).collect::<Vec<_>>(), expected);
    for (i, term) in vocab.terms().iter().enumerate() {
        assert_eq!(vocab.corpus_frequency(i), cf[term.as_str()]);
        assert_eq!(vocab.document_frequency(i), df[term.as_str()]);
    }
}

/// Top singular value of a non-negative matrix by power iteration on VᵀV.
fn top_singular_value(rows: &[Vec<f64>]) -> f64 {
    let d = rows[0].len();
    let mut x = vec![1.0; d];
    let mut sigma = 0.0;
    for _ in 0..2000 {
        let vx: Vec<f64> = rows.iter().map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let mut y = vec![0.0; d];
        for (r, s) in rows.iter().zip(&vx) {
            for (yj, a) in y.iter_mut().zip(r) {
                *yj += a * s;
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.iter().map(|v| v / norm).collect();
        sigma = norm.sqrt();
    }
    sigma
}

#[test]
fn rank_one_fit_matches_power_iteration_residual() {
    let rows = common::random_sparse(30, 20, 0.5, 12);
    let v = TermDocumentMatrix::from_dense(&rows).unwrap();
    let vocab = Vocabulary::from_terms((0..30).map(|i| format!("w{i}")).collect());
    let opts = NmfOptions {
        seed: 1,
        max_iter: 2000,
        rel_tol: 1e-12,
    };
    let (model, trace) = factorize(&v, &vocab, 1, &opts).unwrap();
    let sigma = top_singular_value(&rows);
    let oracle = (v.frobenius_norm_sq() - sigma * sigma).max(0.0).sqrt();
    let got = trace.final_error();
    assert!((got - oracle).abs() <= 0.01 * oracle, "nmf {got}, oracle {oracle}");
    assert_eq!(model.t(), 1);
    assert!(model.w().iter().all(|&x| x >= 0.0));
}

#[test]
fn planted_topics_have_pure_top_terms() {
    let (_, vocab, v) = planted(3, 150, 21);
    let (model, _) = factorize(&v, &vocab, 3, &NmfOptions::with_seed(2)).unwrap();
    let mut owners = HashSet::new();
    for k in 0..3 {
        let groups: HashSet<usize> = top_terms(&model, k, 8)
            .unwrap()
            .iter()
            .map(|(t, _)| word_group(t).unwrap())
            .collect();
        assert_eq!(groups.len(), 1, "topic {k} mixes groups {groups:?}");
        owners.extend(groups);
    }
    assert_eq!(owners.len(), 3);
}

#[test]
fn re_embedding_training_documents() {
    let (_, vocab, v) = planted(3, 150, 5);
    let opts = NmfOptions {
        seed: 0,
        max_iter: 2000,
        rel_tol: 1e-12,
    };
    let (model, _) = factorize(&v, &vocab, 3, &opts).unwrap();
    for j in [0, 17, 101] {
        let e = embed_document(&model, v.column(j), 5000, 1e-14).unwrap();
        let stored = model.document_embedding(j);
        let l1: f64 = e.iter().zip(&stored).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 <= 1e-3, "doc {j}: {e:?} vs {stored:?}");
    }
    for k in 0..3 {
        let doc = SparseVector::from_dense(&model.topic_vector(k));
        let e = embed_document(&model, &doc, 2000, 1e-12).unwrap();
        assert!(e[k] >= 0.9, "topic {k}: {e:?}");
    }
}

#[test]
fn reconstruction_error_matches_dense_recount() {
    let (_, vocab, v) = planted(3, 60, 8);
    let (model, _) = factorize(&v, &vocab, 3, &NmfOptions::with_seed(4)).unwrap();
    let (w, h) = (model.w(), model.h());
    let mut sq = 0.0;
    for i in 0..v.n() {
        for j in 0..v.d() {
            let wh: f64 = (0..3).map(|k| w[[i, k]] * h[[k, j]]).sum();
            sq += (v.get(i, j) - wh).powi(2);
        }
    }
    let got = reconstruction_error(&v, w, h).unwrap();
    assert!((got - sq.sqrt()).abs() <= 1e-10 * (1.0 + got));
}

#[test]
fn coherence_on_tiny_corpus_matches_brute_force() {
    let vocab: Vec<String> = (0..8).map(|i| format!("term{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let docs: Vec<Vec<String>> = (0..6)
        .map(|_| (0..rng.random_range(3..15)).map(|_| vocab[rng.random_range(0..8)].clone()).collect())
        .collect();
    let streams: Vec<TokenStream> = docs.iter().map(|d| TokenStream { tokens: d.clone() }).collect();
    let seen: HashSet<&String> = docs.iter().flatten().collect();
    let present: Vec<String> = vocab.iter().filter(|t| seen.contains(t)).cloned().collect();
    let terms = &present[..3];
    for sw in [2, 4, 110] {
        let index = WindowIndex::build(&streams, sw).unwrap();
        let params = CoherenceParams {
            n: 3,
            sw,
            ..CoherenceParams::default()
        };
        let got = topic_coherence_cv(terms, &index, &params).unwrap().value;
        let want = common::brute_force_cv(&docs, sw, terms, 1.0, params.eps);
        assert!((got - want).abs() <= 1e-10, "sw {sw}: {got} vs {want}");
    }
}

#[test]
fn centroid_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let vectors: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            let raw: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let c = centroid(&vectors).unwrap();
    for k in 0..5 {
        let direct = (vectors[0][k] + vectors[1][k] + vectors[2][k]) / 3.0;
        assert!((c[k] - direct).abs() <= 1e-12);
    }
}

#[test]
fn drifting_venue_centroid_component_decreases() {
    let venues = [VenueSpec {
        name: "D".into(),
        years: (2000..2005).collect(),
        per_year: 40,
        mixture: Box::new(|k| {
            let s = k as f64 / 4.0;
            vec![1.0 - s, s, 0.0]
        }),
    }];
    let spec = PlantedTopics {
        groups: 3,
        noise: 0.05,
        ..PlantedTopics::default()
    };
    let corpus = synthetic::venue_corpus(spec, &venues, 3).unwrap();
    let streams = tokenize_corpus(&corpus, &Stopwords::builtin());
    let vocab = Vocabulary::from_streams(&streams, 10).unwrap();
    let v = tfidf_matrix(&corpus, &streams, &vocab).unwrap().matrix;
    let (model, _) = factorize(&v, &vocab, 3, &NmfOptions::with_seed(0)).unwrap();
    let source = (0..3)
        .find(|&k| {
            let tops = top_terms(&model, k, 5).unwrap();
            tops.iter().all(|(t, _)| word_group(t) == Some(0))
        })
        .expect("a learned topic for the first planted group");
    let emb = EmbeddedCorpus::new(&model, &corpus);
    let tr = venue_trajectory(&emb, "D", 10).unwrap();
    let series = tr.topic_series(source);
    assert_eq!(series.len(), 5);
    assert!(series.windows(2).all(|w| w[1] < w[0]), "{series:?}");
}

#[test]
fn pairwise_distances_match_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let vectors: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
    let d = pairwise_distances(&vectors).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let mut s = 0.0;
            for k in 0..4 {
                s += (vectors[i][k] - vectors[j][k]) * (vectors[i][k] - vectors[j][k]);
            }
            assert!((d.get(i, j) - s.sqrt()).abs() <= 1e-12);
        }
    }
}

#[test]
fn cv_bandwidth_near_silverman() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let points: Vec<[f64; 2]> = (0..500)
        .map(|_| [rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)])
        .collect();
    let sd = |k: usize| {
        let m = points.iter().map(|p| p[k]).sum::<f64>() / 500.0;
        (points.iter().map(|p| (p[k] - m).powi(2)).sum::<f64>() / 499.0).sqrt()
    };
    // Two dimensions: h = n^(-1/6) · mean standard deviation.
    let silverman = 500f64.powf(-1.0 / 6.0) * (sd(0) + sd(1)) / 2.0;
    let model = kde_fit(&points, &log_space(0.05, 1.0, 20), 5, 0).unwrap();
    let ratio = model.bandwidth / silverman;
    assert!((0.5..=2.0).contains(&ratio), "h {} vs silverman {silverman}", model.bandwidth);
}

#[test]
fn generated_venue_grid_counts() {
    let venues: Vec<VenueSpec> = ["A", "B"]
        .iter()
        .map(|v| VenueSpec {
            name: v.to_string(),
            years: vec![2001, 2002],
            per_year: 4,
            mixture: Box::new(|_| one_hot(4, 0)),
        })
        .collect();
    let corpus = synthetic::venue_corpus(PlantedTopics::default(), &venues, 0).unwrap();
    let counts: BTreeMap<(String, i32), usize> =
        corpus_stats(&corpus).into_iter().map(|r| ((r.venue, r.year), r.count)).collect();
    assert_eq!(counts.len(), 4);
    assert!(counts.values().all(|&c| c == 4));
}
