//! Non-negative matrix factorization V ≈ WH by Frobenius multiplicative updates.
//!
//! W is n × t (one topic vector per column) and H is t × d (one document
//! embedding per column). After fitting, both factors are rescaled so that
//! every column of W and every column of H sums to one; each document is then
//! a point on the (t−1)-simplex, i.e. a convex combination of the topics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::text::{SparseVector, TermDocumentMatrix, Vocabulary};

/// Guard added to every multiplicative-update denominator.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmfOptions {
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the relative error improvement of one iteration drops below this.
    pub rel_tol: f64,
}

impl Default for NmfOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iter: 400,
            rel_tol: 1e-5,
        }
    }
}

impl NmfOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Reconstruction error before the first update, then after every iteration.
    pub errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

impl FitTrace {
    pub fn final_error(&self) -> f64 {
        *self.errors.last().expect("trace always holds the initial error")
    }
}

/// A finalized topic model: simplex-normalized topic vectors and document embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    w: Array2<f64>,
    h: Array2<f64>,
    vocab: Vocabulary,
    doc_ids: Vec<String>,
    seed: u64,
    iterations: usize,
}

impl TopicModel {
    /// Finalizes raw factors into a model. See [`finalize_factors`].
    pub fn from_factors(
        w: Array2<f64>,
        h: Array2<f64>,
        vocab: Vocabulary,
        doc_ids: Vec<String>,
        seed: u64,
        iterations: usize,
    ) -> Result<Self> {
        if w.nrows() != vocab.len() || h.ncols() != doc_ids.len() || w.ncols() != h.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "W {:?}, H {:?}, {} terms, {} documents",
                w.dim(),
                h.dim(),
                vocab.len(),
                doc_ids.len()
            )));
        }
        let (w, h) = finalize_factors(w, h)?;
        Ok(Self {
            w,
            h,
            vocab,
            doc_ids,
            seed,
            iterations,
        })
    }

    pub fn t(&self) -> usize {
        self.w.ncols()
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn d(&self) -> usize {
        self.h.ncols()
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn h(&self) -> &Array2<f64> {
        &self.h
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn topic_vector(&self, topic: usize) -> Vec<f64> {
        self.w.column(topic).to_vec()
    }

    pub fn document_embedding(&self, doc: usize) -> Vec<f64> {
        self.h.column(doc).to_vec()
    }

    /// Label of the form `topic_<index>: <first> <second>` built from the top two terms.
    pub fn topic_label(&self, topic: usize) -> String {
        let terms = top_terms(self, topic, 2).unwrap_or_default();
        let words: Vec<&str> = terms.iter().map(|(t, _)| t.as_str()).collect();
        format!("topic_{topic}: {}", words.join(" "))
    }
}

/// Step one of finalization: scale every W column to unit sum and push the
/// scale into the matching H row, leaving WH unchanged.
pub fn normalize_topics(mut w: Array2<f64>, mut h: Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    for k in 0..w.ncols() {
        let s: f64 = w.column(k).sum();
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::DegenerateTopic { topic: k });
        }
        w.column_mut(k).mapv_inplace(|x| x / s);
        h.row_mut(k).mapv_inplace(|x| x * s);
    }
    Ok((w, h))
}

/// Step two: scale every H column to unit sum. Returns the per-document scales removed.
pub fn normalize_documents(h: &mut Array2<f64>) -> Result<Vec<f64>> {
    let mut scales = Vec::with_capacity(h.ncols());
    for (j, mut col) in h.axis_iter_mut(Axis(1)).enumerate() {
        let s: f64 = col.sum();
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::DegenerateData(format!("document {j} has an all-zero embedding")));
        }
        col.mapv_inplace(|x| x / s);
        scales.push(s);
    }
    Ok(scales)
}

pub fn finalize_factors(w: Array2<f64>, h: Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    if w.iter().chain(h.iter()).any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::NonFinite("factors must be finite and non-negative".into()));
    }
    let (w, mut h) = normalize_topics(w, h)?;
    normalize_documents(&mut h)?;
    Ok((w, h))
}

/// Wᵀ V as a dense t × d matrix.
fn wt_v(w: &Array2<f64>, v: &TermDocumentMatrix) -> Array2<f64> {
    let t = w.ncols();
    let cols: Vec<Array1<f64>> = v
        .columns()
        .par_iter()
        .map(|c| {
            let mut acc = Array1::<f64>::zeros(t);
            for (i, x) in c.iter() {
                acc.scaled_add(x, &w.row(i));
            }
            acc
        })
        .collect();
    let mut out = Array2::zeros((t, v.d()));
    for (j, c) in cols.into_iter().enumerate() {
        out.column_mut(j).assign(&c);
    }
    out
}

/// V Hᵀ as a dense n × t matrix, from the row view of V.
fn v_ht(rows: &[Vec<(usize, f64)>], h: &Array2<f64>) -> Array2<f64> {
    let t = h.nrows();
    let out_rows: Vec<Array1<f64>> = rows
        .par_iter()
        .map(|row| {
            let mut acc = Array1::<f64>::zeros(t);
            for &(j, x) in row {
                acc.scaled_add(x, &h.column(j));
            }
            acc
        })
        .collect();
    let mut out = Array2::zeros((rows.len(), t));
    for (i, r) in out_rows.into_iter().enumerate() {
        out.row_mut(i).assign(&r);
    }
    out
}

/// ‖V − WH‖_F from ‖V‖², ⟨WᵀV, H⟩ and ⟨WᵀW, HHᵀ⟩, without forming WH.
fn error_from_gram(v_norm_sq: f64, wtv: &Array2<f64>, h: &Array2<f64>, wtw: &Array2<f64>, hht: &Array2<f64>) -> f64 {
    let cross: f64 = wtv.iter().zip(h.iter()).map(|(a, b)| a * b).sum();
    let quad: f64 = wtw.iter().zip(hht.iter()).map(|(a, b)| a * b).sum();
    (v_norm_sq - 2.0 * cross + quad).max(0.0).sqrt()
}

fn multiplicative_step(base: &mut Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>) {
    ndarray::Zip::from(base)
        .and(numer)
        .and(denom)
        .for_each(|b, &n, &d| *b *= n / (d + DENOMINATOR_GUARD));
}

fn check_input(v: &TermDocumentMatrix, t: usize, max_iter: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidParameter("topic count must be at least 1".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    if t >= v.n().min(v.d()) {
        return Err(Error::Dimension(format!(
            "topic count {t} must be below min(n, d) = min({}, {})",
            v.n(),
            v.d()
        )));
    }
    if let Some(j) = v.columns().iter().position(|c| c.values.iter().all(|&x| x == 0.0)) {
        return Err(Error::ZeroColumn { column: j });
    }
    Ok(())
}

/// Raw (unnormalized) factors and their trace.
#[derive(Debug, Clone)]
pub struct RawFactors {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    pub trace: FitTrace,
}

/// Runs the alternating H/W multiplicative updates from a seeded uniform(0,1) start.
pub fn factorize_raw(v: &TermDocumentMatrix, t: usize, opts: &NmfOptions) -> Result<RawFactors> {
    check_input(v, t, opts.max_iter)?;
    let (n, d) = (v.n(), v.d());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut w = Array2::from_shape_simple_fn((n, t), || rng.random::<f64>());
    let mut h = Array2::from_shape_simple_fn((t, d), || rng.random::<f64>());

    let rows = v.rows();
    let v_norm_sq = v.frobenius_norm_sq();
    let mut wtv = wt_v(&w, v);
    let mut wtw = w.t().dot(&w);
    let mut hht = h.dot(&h.t());
    let mut errors = vec![error_from_gram(v_norm_sq, &wtv, &h, &wtw, &hht)];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iter {
        let denom_h = wtw.dot(&h);
        multiplicative_step(&mut h, &wtv, &denom_h);

        hht = h.dot(&h.t());
        let vht = v_ht(&rows, &h);
        let denom_w = w.dot(&hht);
        multiplicative_step(&mut w, &vht, &denom_w);

        wtv = wt_v(&w, v);
        wtw = w.t().dot(&w);
        let err = error_from_gram(v_norm_sq, &wtv, &h, &wtw, &hht);
        let prev = *errors.last().unwrap();
        errors.push(err);
        iterations += 1;
        if err == 0.0 || (prev - err) / prev < opts.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(RawFactors {
        w,
        h,
        trace: FitTrace {
            errors,
            iterations,
            converged,
            seed: opts.seed,
        },
    })
}

/// Fits a topic model with `t` topics and finalizes it onto the simplex.
pub fn factorize(
    v: &TermDocumentMatrix,
    vocab: &Vocabulary,
    t: usize,
    opts: &NmfOptions,
) -> Result<(TopicModel, FitTrace)> {
    if vocab.len() != v.n() {
        return Err(Error::ShapeMismatch(format!(
            "vocabulary has {} terms, matrix has {} rows",
            vocab.len(),
            v.n()
        )));
    }
    let raw = factorize_raw(v, t, opts)?;
    let model = TopicModel::from_factors(
        raw.w,
        raw.h,
        vocab.clone(),
        v.doc_ids().to_vec(),
        opts.seed,
        raw.trace.iterations,
    )?;
    Ok((model, raw.trace))
}

/// ‖V − WH‖_F, accumulated column by column.
pub fn reconstruction_error(v: &TermDocumentMatrix, w: &Array2<f64>, h: &Array2<f64>) -> Result<f64> {
    if w.nrows() != v.n() || h.ncols() != v.d() || w.ncols() != h.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "V is {}×{}, W is {:?}, H is {:?}",
            v.n(),
            v.d(),
            w.dim(),
            h.dim()
        )));
    }
    let per_col: Vec<f64> = (0..v.d())
        .into_par_iter()
        .map(|j| {
            let mut approx = w.dot(&h.column(j));
            for (i, x) in v.column(j).iter() {
                approx[i] -= x;
            }
            approx.iter().map(|r| r * r).sum::<f64>()
        })
        .collect();
    Ok(per_col.iter().sum::<f64>().sqrt())
}

/// The `k` heaviest terms of a topic, by descending weight with ties broken
/// lexicographically. `k` is clamped to the vocabulary size.
pub fn top_terms(model: &TopicModel, topic: usize, k: usize) -> Result<Vec<(String, f64)>> {
    if topic >= model.t() {
        return Err(Error::IndexOutOfRange {
            index: topic,
            len: model.t(),
        });
    }
    let col = model.w.column(topic);
    let vocab = &model.vocab;
    let mut order: Vec<usize> = (0..model.n()).collect();
    order.sort_by(|&a, &b| {
        col[b]
            .total_cmp(&col[a])
            .then_with(|| vocab.term(a).cmp(vocab.term(b)))
    });
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| (vocab.term(i).to_string(), col[i]))
        .collect())
}

/// Embeds a held-out document (indexed by the model vocabulary) by running the
/// H update with W fixed from the uniform start 1/t, then L1-normalizing.
pub fn embed_document(model: &TopicModel, doc: &SparseVector, max_iter: usize, rel_tol: f64) -> Result<Vec<f64>> {
    if doc.values.iter().all(|&x| x == 0.0) {
        return Err(Error::EmptyInput("document vector is all zero".into()));
    }
    if let Some(&i) = doc.indices.iter().find(|&&i| i >= model.n()) {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: model.n(),
        });
    }
    if doc.values.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::NonFinite("document weights must be finite and non-negative".into()));
    }
    let t = model.t();
    let mut wtv = Array1::<f64>::zeros(t);
    for (i, x) in doc.iter() {
        wtv.scaled_add(x, &model.w.row(i));
    }
    let wtw = model.w.t().dot(&model.w);
    let v_norm_sq = doc.norm_sq();
    let objective = |h: &Array1<f64>| v_norm_sq - 2.0 * h.dot(&wtv) + h.dot(&wtw.dot(h));

    let mut h = Array1::from_elem(t, 1.0 / t as f64);
    let mut prev = objective(&h);
    for _ in 0..max_iter.max(1) {
        let denom = wtw.dot(&h);
        ndarray::Zip::from(&mut h)
            .and(&wtv)
            .and(&denom)
            .for_each(|x, &num, &den| *x *= num / (den + DENOMINATOR_GUARD));
        let cur = objective(&h);
        if prev <= 0.0 || (prev - cur) / prev.abs() < rel_tol {
            break;
        }
        prev = cur;
    }
    let s = h.sum();
    if s <= 0.0 || !s.is_finite() {
        return Err(Error::DegenerateData("document has no support on any topic".into()));
    }
    Ok(h.iter().map(|x| x / s).collect())
}

fn push_float_array(out: &mut String, values: impl Iterator<Item = f64>) {
    out.push('[');
    for (i, x) in values.enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{x:.16e}").unwrap();
    }
    out.push(']');
}

fn push_matrix_columns(out: &mut String, m: &Array2<f64>) {
    out.push('[');
    for (j, col) in m.axis_iter(Axis(1)).enumerate() {
        if j > 0 {
            out.push(',');
        }
        push_float_array(out, col.iter().copied());
    }
    out.push(']');
}

/// Serializes the model as one JSON document. W and H are stored column by
/// column (`W[j]` is topic j, `H[i]` is document i) with 17 significant digits.
pub fn model_to_json(model: &TopicModel) -> String {
    let mut s = String::new();
    write!(
        s,
        "{{\"t\":{},\"n\":{},\"d\":{},\"terms\":{},\"doc_ids\":{},\"W\":",
        model.t(),
        model.n(),
        model.d(),
        serde_json::to_string(model.vocab.terms()).unwrap(),
        serde_json::to_string(&model.doc_ids).unwrap()
    )
    .unwrap();
    push_matrix_columns(&mut s, &model.w);
    s.push_str(",\"H\":");
    push_matrix_columns(&mut s, &model.h);
    write!(s, ",\"seed\":{},\"iterations\":{}}}", model.seed, model.iterations).unwrap();
    s.push('\n');
    s
}

#[derive(Deserialize)]
struct ModelFile {
    t: usize,
    n: usize,
    d: usize,
    terms: Vec<String>,
    doc_ids: Vec<String>,
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
    seed: u64,
    iterations: usize,
}

fn columns_to_array(cols: &[Vec<f64>], rows: usize, name: &str) -> Result<Array2<f64>> {
    if cols.iter().any(|c| c.len() != rows) {
        return Err(Error::ShapeMismatch(format!("{name} columns must have length {rows}")));
    }
    Ok(Array2::from_shape_fn((rows, cols.len()), |(i, j)| cols[j][i]))
}

pub fn model_from_json(text: &str) -> Result<TopicModel> {
    let f: ModelFile = serde_json::from_str(text)?;
    if f.terms.len() != f.n || f.doc_ids.len() != f.d || f.w.len() != f.t || f.h.len() != f.d {
        return Err(Error::ShapeMismatch("model header disagrees with its arrays".into()));
    }
    let w = columns_to_array(&f.w, f.n, "W")?;
    let h = columns_to_array(&f.h, f.t, "H")?;
    if w.iter().chain(h.iter()).any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::NonFinite("stored factors must be finite and non-negative".into()));
    }
    Ok(TopicModel {
        w,
        h,
        vocab: Vocabulary::from_terms(f.terms),
        doc_ids: f.doc_ids,
        seed: f.seed,
        iterations: f.iterations,
    })
}

pub fn save_model(model: &TopicModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TopicModel> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
