//! LDA topic modeling by collapsed Gibbs sampling, plus the downstream
//! topic-level views: dominant topics, top keywords, token shares,
//! inter-topic Jensen-Shannon distances, and a classical MDS projection.
//!
//! The sampler is deliberately single-threaded: the sequential resampling
//! order (documents in corpus order, positions in ascending token id order)
//! is part of the result definition, so a fixed corpus, config, and seed
//! reproduce assignments bit for bit.

pub mod mds;
pub mod persist;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::{BowDoc, Vocabulary};

pub use mds::mds_project;
pub use persist::{
    load_model, save_model, write_coordinates, write_distance_matrix, write_topic_summary,
};

/// How phi/theta point estimates are taken from the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    /// Posterior means from the final sweep's counts.
    #[default]
    FinalSweep,
    /// Average the per-sweep posterior means over all post-burn-in sweeps.
    /// Reduces chain variance at the cost of extra arithmetic.
    AverageAfterBurnIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    /// Topic count.
    pub k: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub beta: f64,
    /// Total Gibbs sweeps.
    pub iterations: usize,
    /// Sweeps discarded before estimation (only consulted when averaging).
    pub burn_in: usize,
    pub seed: u64,
    pub estimate: EstimateMode,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 6,
            alpha: 0.1,
            beta: 0.01,
            iterations: 1000,
            burn_in: 800,
            seed: 0,
            estimate: EstimateMode::FinalSweep,
        }
    }
}

/// A trained topic model. Count matrices are flat row-major:
/// `n_kw[k * v + w]`, `n_dk[d * k + t]`, `phi[k * v + w]`, `theta[d * k + t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub config: LdaConfig,
    /// Hash of the vocabulary the model was trained over.
    pub vocab_hash: u64,
    /// Vocabulary size V.
    pub v: usize,
    /// Document count D.
    pub d: usize,
    /// Training document ids, parallel to theta rows.
    pub doc_ids: Vec<String>,
    /// K x V topic-word counts.
    pub n_kw: Vec<u32>,
    /// D x K document-topic counts.
    pub n_dk: Vec<u32>,
    /// Per-topic token totals.
    pub n_k: Vec<u32>,
    /// Final topic assignment per token, per document. Positions enumerate
    /// the bag in ascending token id order with repeats adjacent.
    pub z: Vec<Vec<u32>>,
    /// K x V topic-word distributions.
    pub phi: Vec<f64>,
    /// D x K document-topic distributions.
    pub theta: Vec<f64>,
}

impl LdaModel {
    pub fn phi_row(&self, topic: usize) -> &[f64] {
        &self.phi[topic * self.v..(topic + 1) * self.v]
    }

    pub fn theta_row(&self, doc: usize) -> &[f64] {
        let k = self.config.k;
        &self.theta[doc * k..(doc + 1) * k]
    }

    /// Total assigned tokens.
    pub fn total_tokens(&self) -> u64 {
        self.n_k.iter().map(|&c| c as u64).sum()
    }
}

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("no trainable tokens")]
    NoTrainableTokens,
    #[error("more topics ({k}) than tokens ({tokens})")]
    TooManyTopics { k: usize, tokens: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("zero tokens")]
    ZeroTokens,
    #[error("corpus has {got} docs but the model was trained on {expected}")]
    DocCountMismatch { expected: usize, got: usize },
    #[error("cannot access model file {path}: {message}")]
    Io { path: String, message: String },
    #[error("model file {path} is malformed: {message}")]
    Malformed { path: String, message: String },
    #[error("unsupported model format version {got} (expected {expected})")]
    Version { expected: u32, got: u32 },
    #[error("vocabulary mismatch: model hash {model_hash:#018x}, vocabulary hash {vocab_hash:#018x}")]
    VocabMismatch { model_hash: u64, vocab_hash: u64 },
}

/// Mid-training snapshot handed to sweep observers.
pub struct SweepView<'a> {
    /// 0-based sweep just completed.
    pub sweep: usize,
    pub n_kw: &'a [u32],
    pub n_dk: &'a [u32],
    pub n_k: &'a [u32],
    /// Token count per document.
    pub doc_len: &'a [u32],
}

fn expand_bow(bow: &BowDoc) -> Vec<u32> {
    let mut out = Vec::with_capacity(bow.total() as usize);
    for (&w, &c) in &bow.counts {
        for _ in 0..c {
            out.push(w);
        }
    }
    out
}

fn validate_config(config: &LdaConfig) -> Result<(), TopicError> {
    if config.k < 1 {
        return Err(TopicError::InvalidConfig("k must be at least 1".into()));
    }
    if !(config.alpha > 0.0) {
        return Err(TopicError::InvalidConfig("alpha must be positive".into()));
    }
    if !(config.beta > 0.0) {
        return Err(TopicError::InvalidConfig("beta must be positive".into()));
    }
    if config.iterations == 0 {
        return Err(TopicError::InvalidConfig("iterations must be at least 1".into()));
    }
    if config.burn_in >= config.iterations {
        return Err(TopicError::InvalidConfig(
            "burn_in must be less than iterations".into(),
        ));
    }
    Ok(())
}

/// Train a topic model. See [`train_lda_observed`] for the observer variant.
pub fn train_lda(
    bows: &[BowDoc],
    vocab: &Vocabulary,
    config: &LdaConfig,
) -> Result<LdaModel, TopicError> {
    train_lda_observed(bows, vocab, config, |_| {})
}

/// Train a topic model, calling `observer` with the count state after every
/// completed sweep.
///
/// Assignments initialize uniformly at random from the seeded stream; each
/// sweep resamples every token in (document, position) order, decrementing
/// its counts before the draw and incrementing after.
pub fn train_lda_observed(
    bows: &[BowDoc],
    vocab: &Vocabulary,
    config: &LdaConfig,
    mut observer: impl FnMut(SweepView<'_>),
) -> Result<LdaModel, TopicError> {
    validate_config(config)?;
    let k = config.k;
    let v = vocab.len();

    let docs: Vec<Vec<u32>> = bows.iter().map(expand_bow).collect();
    let total: usize = docs.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(TopicError::NoTrainableTokens);
    }
    if k > total {
        return Err(TopicError::TooManyTopics { k, tokens: total });
    }
    for tokens in &docs {
        for &w in tokens {
            debug_assert!((w as usize) < v, "token id {w} outside vocabulary");
        }
    }
    let d = docs.len();
    let doc_len: Vec<u32> = docs.iter().map(|t| t.len() as u32).collect();

    let mut n_kw = vec![0u32; k * v];
    let mut n_dk = vec![0u32; d * k];
    let mut n_k = vec![0u32; k];
    let mut z: Vec<Vec<u32>> = docs.iter().map(|t| vec![0u32; t.len()]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for (di, tokens) in docs.iter().enumerate() {
        for (pos, &w) in tokens.iter().enumerate() {
            let t = rng.random_range(0..k);
            z[di][pos] = t as u32;
            n_kw[t * v + w as usize] += 1;
            n_dk[di * k + t] += 1;
            n_k[t] += 1;
        }
    }

    let vbeta = v as f64 * config.beta;
    let averaging = config.estimate == EstimateMode::AverageAfterBurnIn;
    let mut phi_acc = if averaging { vec![0.0f64; k * v] } else { Vec::new() };
    let mut theta_acc = if averaging { vec![0.0f64; d * k] } else { Vec::new() };
    let mut cum = vec![0.0f64; k];

    for sweep in 0..config.iterations {
        for (di, tokens) in docs.iter().enumerate() {
            let base = di * k;
            for (pos, &w) in tokens.iter().enumerate() {
                let w = w as usize;
                let old = z[di][pos] as usize;
                n_kw[old * v + w] -= 1;
                n_dk[base + old] -= 1;
                n_k[old] -= 1;

                let mut acc = 0.0;
                for t in 0..k {
                    acc += (n_dk[base + t] as f64 + config.alpha)
                        * (n_kw[t * v + w] as f64 + config.beta)
                        / (n_k[t] as f64 + vbeta);
                    cum[t] = acc;
                }
                let u: f64 = rng.random::<f64>() * acc;
                let mut new = k - 1;
                for (t, &c) in cum.iter().enumerate() {
                    if u < c {
                        new = t;
                        break;
                    }
                }

                z[di][pos] = new as u32;
                n_kw[new * v + w] += 1;
                n_dk[base + new] += 1;
                n_k[new] += 1;
            }
        }
        if averaging && sweep >= config.burn_in {
            accumulate_estimates(
                &mut phi_acc,
                &mut theta_acc,
                &n_kw,
                &n_dk,
                &n_k,
                &doc_len,
                config,
                v,
            );
        }
        observer(SweepView { sweep, n_kw: &n_kw, n_dk: &n_dk, n_k: &n_k, doc_len: &doc_len });
    }

    let (phi, theta) = if averaging {
        let n_est = (config.iterations - config.burn_in) as f64;
        for x in &mut phi_acc {
            *x /= n_est;
        }
        for x in &mut theta_acc {
            *x /= n_est;
        }
        (phi_acc, theta_acc)
    } else {
        estimates_from_counts(&n_kw, &n_dk, &n_k, &doc_len, config, v)
    };

    Ok(LdaModel {
        config: config.clone(),
        vocab_hash: vocab.content_hash(),
        v,
        d,
        doc_ids: bows.iter().map(|b| b.doc_id.clone()).collect(),
        n_kw,
        n_dk,
        n_k,
        z,
        phi,
        theta,
    })
}

fn estimates_from_counts(
    n_kw: &[u32],
    n_dk: &[u32],
    n_k: &[u32],
    doc_len: &[u32],
    config: &LdaConfig,
    v: usize,
) -> (Vec<f64>, Vec<f64>) {
    let k = config.k;
    let vbeta = v as f64 * config.beta;
    let kalpha = k as f64 * config.alpha;
    let mut phi = vec![0.0; k * v];
    for t in 0..k {
        let denom = n_k[t] as f64 + vbeta;
        for w in 0..v {
            phi[t * v + w] = (n_kw[t * v + w] as f64 + config.beta) / denom;
        }
    }
    let mut theta = vec![0.0; doc_len.len() * k];
    for (di, &len) in doc_len.iter().enumerate() {
        let denom = len as f64 + kalpha;
        for t in 0..k {
            theta[di * k + t] = (n_dk[di * k + t] as f64 + config.alpha) / denom;
        }
    }
    (phi, theta)
}

#[allow(clippy::too_many_arguments)]
fn accumulate_estimates(
    phi_acc: &mut [f64],
    theta_acc: &mut [f64],
    n_kw: &[u32],
    n_dk: &[u32],
    n_k: &[u32],
    doc_len: &[u32],
    config: &LdaConfig,
    v: usize,
) {
    let (phi, theta) = estimates_from_counts(n_kw, n_dk, n_k, doc_len, config, v);
    for (a, x) in phi_acc.iter_mut().zip(phi) {
        *a += x;
    }
    for (a, x) in theta_acc.iter_mut().zip(theta) {
        *a += x;
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_topic(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Dominant topic of a training document.
pub fn dominant_topic(model: &LdaModel, doc_index: usize) -> usize {
    assert!(doc_index < model.d, "doc_index {doc_index} out of range ({})", model.d);
    argmax_topic(model.theta_row(doc_index))
}

/// The `n` highest-phi tokens of a topic with their phi values. Ties break
/// by ascending token id; asking for more than V returns all V.
pub fn top_keywords(
    model: &LdaModel,
    vocab: &Vocabulary,
    topic: usize,
    n: usize,
) -> Vec<(String, f64)> {
    assert!(topic < model.config.k, "topic {topic} out of range");
    assert_eq!(
        vocab.content_hash(),
        model.vocab_hash,
        "vocabulary does not match the one the model was trained over"
    );
    let row = model.phi_row(topic);
    let mut order: Vec<u32> = (0..model.v as u32).collect();
    order.sort_by(|&a, &b| {
        row[b as usize]
            .partial_cmp(&row[a as usize])
            .expect("phi is finite")
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(n)
        .map(|w| (vocab.token(w).to_owned(), row[w as usize]))
        .collect()
}

/// Fraction of corpus tokens finally assigned to each topic.
pub fn topic_token_share(model: &LdaModel) -> Vec<f64> {
    let total = model.total_tokens() as f64;
    model.n_k.iter().map(|&c| c as f64 / total).collect()
}

/// Jensen-Shannon divergence with natural log; range [0, ln 2]. Exact zero
/// for identical inputs, clamped to the analytic range against rounding.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must have equal support");
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let m = 0.5 * (pi + qi);
        if pi > 0.0 {
            acc += 0.5 * pi * (pi / m).ln();
        }
        if qi > 0.0 {
            acc += 0.5 * qi * (qi / m).ln();
        }
    }
    acc.clamp(0.0, std::f64::consts::LN_2)
}

/// K x K symmetric matrix of pairwise JSD between topic-word distributions.
pub fn topic_distance_matrix(model: &LdaModel) -> Vec<f64> {
    let k = model.config.k;
    let mut dist = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = jensen_shannon(model.phi_row(i), model.phi_row(j));
            dist[i * k + j] = d;
            dist[j * k + i] = d;
        }
    }
    dist
}

/// Model perplexity on its own training corpus (documents matched to theta
/// rows by position): exp of the negative per-token log likelihood.
pub fn perplexity(model: &LdaModel, bows: &[BowDoc]) -> Result<f64, TopicError> {
    if bows.len() != model.d {
        return Err(TopicError::DocCountMismatch { expected: model.d, got: bows.len() });
    }
    let thetas: Vec<&[f64]> = (0..model.d).map(|d| model.theta_row(d)).collect();
    perplexity_with(&model.phi, model.v, &thetas, bows)
}

/// Perplexity of explicit phi/theta estimates over a corpus. Used both by
/// [`perplexity`] and for held-out documents whose theta comes from fold-in.
pub fn perplexity_with(
    phi: &[f64],
    v: usize,
    thetas: &[&[f64]],
    bows: &[BowDoc],
) -> Result<f64, TopicError> {
    assert_eq!(thetas.len(), bows.len(), "one theta row per document");
    let mut log_lik = 0.0;
    let mut total = 0u64;
    for (theta, bow) in thetas.iter().zip(bows) {
        for (&w, &count) in &bow.counts {
            let w = w as usize;
            assert!(w < v, "token id {w} outside vocabulary");
            let p_w: f64 = theta.iter().enumerate().map(|(t, &th)| th * phi[t * v + w]).sum();
            log_lik += count as f64 * p_w.ln();
            total += count as u64;
        }
    }
    if total == 0 {
        return Err(TopicError::ZeroTokens);
    }
    Ok((-log_lik / total as f64).exp())
}

/// Gibbs fold-in: sample topic assignments for a held-out document against
/// frozen topic-word counts and return its theta row.
///
/// Only the document's own counts move; the model is untouched. An empty
/// document gets the prior (uniform) mixture.
pub fn fold_in_doc(model: &LdaModel, bow: &BowDoc, sweeps: usize, seed: u64) -> Vec<f64> {
    let k = model.config.k;
    let v = model.v;
    let alpha = model.config.alpha;
    let beta = model.config.beta;
    let vbeta = v as f64 * beta;

    let tokens = expand_bow(bow);
    if tokens.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    for &w in &tokens {
        assert!((w as usize) < v, "token id {w} outside vocabulary");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_dk = vec![0u32; k];
    let mut z: Vec<usize> = tokens
        .iter()
        .map(|_| {
            let t = rng.random_range(0..k);
            n_dk[t] += 1;
            t
        })
        .collect();

    let mut cum = vec![0.0f64; k];
    for _ in 0..sweeps {
        for (pos, &w) in tokens.iter().enumerate() {
            let w = w as usize;
            let old = z[pos];
            n_dk[old] -= 1;
            let mut acc = 0.0;
            for t in 0..k {
                acc += (n_dk[t] as f64 + alpha) * (model.n_kw[t * v + w] as f64 + beta)
                    / (model.n_k[t] as f64 + vbeta);
                cum[t] = acc;
            }
            let u: f64 = rng.random::<f64>() * acc;
            let mut new = k - 1;
            for (t, &c) in cum.iter().enumerate() {
                if u < c {
                    new = t;
                    break;
                }
            }
            z[pos] = new;
            n_dk[new] += 1;
        }
    }

    let denom = tokens.len() as f64 + k as f64 * alpha;
    n_dk.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

/// Map documents into two groups by dominant topic and measure agreement
/// with planted labels under the best topic-to-group assignment. Used by
/// separability checks; returns the best achievable agreement fraction.
pub fn best_label_agreement(dominant: &[usize], labels: &[usize], k: usize) -> f64 {
    assert_eq!(dominant.len(), labels.len());
    assert!(!dominant.is_empty());
    let perms = permutations(k);
    let mut best = 0usize;
    for perm in &perms {
        let hits = dominant
            .iter()
            .zip(labels)
            .filter(|&(&t, &l)| perm[t] == l)
            .count();
        best = best.max(hits);
    }
    best as f64 / dominant.len() as f64
}

/// All permutations of 0..k in lexicographic order. Intended for small k
/// (topic-count scale); k! grows fast.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    let mut used = vec![false; k];
    fn rec(
        k: usize,
        depth: usize,
        current: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == k {
            out.push(current.clone());
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                current[depth] = i;
                rec(k, depth + 1, current, used, out);
                used[i] = false;
            }
        }
    }
    rec(k, 0, &mut current, &mut used, &mut out);
    out
}

/// Best topic-to-topic matching between two models of equal K: the
/// permutation of the second model's topics minimizing mean pairwise JSD
/// against the first. Returns (permutation, mean JSD under it).
pub fn match_topics(a: &LdaModel, b: &LdaModel) -> (Vec<usize>, f64) {
    let k = a.config.k;
    assert_eq!(k, b.config.k, "models must have equal topic counts");
    assert_eq!(a.v, b.v, "models must share a vocabulary");
    let mut cost = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            cost[i * k + j] = jensen_shannon(a.phi_row(i), b.phi_row(j));
        }
    }
    let mut best_perm = Vec::new();
    let mut best_cost = f64::INFINITY;
    for perm in permutations(k) {
        let total: f64 = (0..k).map(|i| cost[i * k + perm[i]]).sum();
        if total < best_cost {
            best_cost = total;
            best_perm = perm;
        }
    }
    (best_perm, best_cost / k as f64)
}

/// Expand bags back to token-id lists, ascending id, repeats adjacent; the
/// position order the sampler and persisted z assignments use.
pub fn bow_positions(bow: &BowDoc) -> Vec<u32> {
    expand_bow(bow)
}

#[allow(dead_code)]
fn _assert_send_sync(m: LdaModel) -> impl Send + Sync {
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::build_vocabulary;
    use crate::textprep::TokenizedDoc;
    use proptest::prelude::*;
    use std::collections::BTreeMap;
    use std::f64::consts::LN_2;

    fn doc(id: &str, tokens: &[&str]) -> TokenizedDoc {
        TokenizedDoc {
            doc_id: id.to_owned(),
            author: "a".to_owned(),
            subreddit: "s".to_owned(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn quick_config(k: usize, iterations: usize, seed: u64) -> LdaConfig {
        LdaConfig { k, iterations, burn_in: iterations.saturating_sub(1), seed, ..LdaConfig::default() }
    }

    /// 20 docs over two disjoint 10-token vocabularies, 10 docs per group.
    fn separability_fixture() -> (Vec<BowDoc>, Vocabulary, Vec<usize>) {
        let group_a: Vec<String> = (0..10).map(|i| format!("aaa{i}")).collect();
        let group_b: Vec<String> = (0..10).map(|i| format!("bbb{i}")).collect();
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for d in 0..10 {
            let tokens: Vec<&str> =
                (0..30).map(|i| group_a[(d + i * 3) % 10].as_str()).collect();
            docs.push(doc(&format!("a{d}"), &tokens));
            labels.push(0);
        }
        for d in 0..10 {
            let tokens: Vec<&str> =
                (0..30).map(|i| group_b[(d + i * 7) % 10].as_str()).collect();
            docs.push(doc(&format!("b{d}"), &tokens));
            labels.push(1);
        }
        let vocab = build_vocabulary(&docs, 1, 1.0);
        let bows: Vec<BowDoc> = docs.iter().map(|d| crate::textprep::to_bow(d, &vocab)).collect();
        (bows, vocab, labels)
    }

    #[test]
    fn single_doc_single_topic_is_analytic() {
        let d0 = doc("d0", &["trade", "trade", "war"]);
        let vocab = build_vocabulary(&[d0.clone()], 1, 1.0);
        let bows = vec![crate::textprep::to_bow(&d0, &vocab)];
        let config = quick_config(1, 5, 7);
        let model = train_lda(&bows, &vocab, &config).unwrap();

        assert_eq!(model.theta, vec![1.0]);
        let beta = config.beta;
        let denom = 3.0 + 2.0 * beta;
        // vocab order: trade, war
        let expected = [(2.0 + beta) / denom, (1.0 + beta) / denom];
        for (got, want) in model.phi.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn separability_fixture_recovers_groups() {
        let (bows, vocab, labels) = separability_fixture();
        let config = quick_config(2, 200, 42);
        let model = train_lda(&bows, &vocab, &config).unwrap();
        let dominant: Vec<usize> = (0..model.d).map(|d| dominant_topic(&model, d)).collect();
        let agreement = best_label_agreement(&dominant, &labels, 2);
        assert_eq!(agreement, 1.0, "dominant topics must partition the groups");
    }

    #[test]
    fn counts_conserved_after_every_sweep() {
        let (bows, vocab, _) = separability_fixture();
        let config = quick_config(3, 40, 9);
        let mut sweeps_seen = 0;
        train_lda_observed(&bows, &vocab, &config, |view| {
            sweeps_seen += 1;
            for (d, &len) in view.doc_len.iter().enumerate() {
                let sum: u32 = view.n_dk[d * 3..(d + 1) * 3].iter().sum();
                assert_eq!(sum, len, "doc {d} count drift at sweep {}", view.sweep);
            }
            for t in 0..3 {
                let sum: u32 = view.n_kw[t * vocab.len()..(t + 1) * vocab.len()].iter().sum();
                assert_eq!(sum, view.n_k[t], "topic {t} count drift at sweep {}", view.sweep);
            }
        })
        .unwrap();
        assert_eq!(sweeps_seen, 40);
    }

    #[test]
    fn training_is_deterministic() {
        let (bows, vocab, _) = separability_fixture();
        let config = quick_config(2, 60, 5);
        let m1 = train_lda(&bows, &vocab, &config).unwrap();
        let m2 = train_lda(&bows, &vocab, &config).unwrap();
        assert_eq!(m1.z, m2.z);
        assert_eq!(m1.phi, m2.phi);
        assert_eq!(m1.theta, m2.theta);

        // Seeds must matter. Converged chains on separable data can land on
        // identical assignments, so compare right after initialization.
        let early = quick_config(2, 1, 5);
        let e1 = train_lda(&bows, &vocab, &early).unwrap();
        let e2 = train_lda(&bows, &vocab, &LdaConfig { seed: 6, ..early }).unwrap();
        assert_ne!(e1.z, e2.z, "different seeds should start different chains");
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let vocab = build_vocabulary(&[], 1, 1.0);
        let err = train_lda(&[], &vocab, &quick_config(2, 10, 0)).unwrap_err();
        assert_eq!(err.to_string(), "no trainable tokens");
    }

    #[test]
    fn more_topics_than_tokens_is_rejected() {
        let d0 = doc("d0", &["china", "trade"]);
        let vocab = build_vocabulary(&[d0.clone()], 1, 1.0);
        let bows = vec![crate::textprep::to_bow(&d0, &vocab)];
        let err = train_lda(&bows, &vocab, &quick_config(3, 10, 0)).unwrap_err();
        assert!(matches!(err, TopicError::TooManyTopics { k: 3, tokens: 2 }));
    }

    #[test]
    fn config_invariants_are_enforced() {
        let d0 = doc("d0", &["china", "trade"]);
        let vocab = build_vocabulary(&[d0.clone()], 1, 1.0);
        let bows = vec![crate::textprep::to_bow(&d0, &vocab)];
        for bad in [
            LdaConfig { k: 0, ..LdaConfig::default() },
            LdaConfig { alpha: 0.0, ..LdaConfig::default() },
            LdaConfig { beta: -0.5, ..LdaConfig::default() },
            LdaConfig { burn_in: 1000, iterations: 1000, ..LdaConfig::default() },
        ] {
            assert!(matches!(
                train_lda(&bows, &vocab, &bad),
                Err(TopicError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn sweep_averaging_still_yields_distributions() {
        let (bows, vocab, _) = separability_fixture();
        let config = LdaConfig {
            k: 2,
            iterations: 50,
            burn_in: 30,
            seed: 3,
            estimate: EstimateMode::AverageAfterBurnIn,
            ..LdaConfig::default()
        };
        let model = train_lda(&bows, &vocab, &config).unwrap();
        for t in 0..2 {
            let sum: f64 = model.phi_row(t).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        for d in 0..model.d {
            let sum: f64 = model.theta_row(d).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dominant_topic_argmax_and_ties() {
        assert_eq!(argmax_topic(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax_topic(&[0.5, 0.5]), 0);
        assert_eq!(argmax_topic(&[0.2, 0.3, 0.3, 0.2]), 1);
    }

    #[test]
    fn top_keywords_order_and_clamping() {
        let d0 = doc("d0", &["china", "china", "china", "trade", "trade", "war", "tax"]);
        let vocab = build_vocabulary(&[d0.clone()], 1, 1.0);
        let bows = vec![crate::textprep::to_bow(&d0, &vocab)];
        let model = train_lda(&bows, &vocab, &quick_config(1, 5, 1)).unwrap();

        let kw = top_keywords(&model, &vocab, 0, 10);
        assert_eq!(kw.len(), 4, "n past V clamps to V");
        assert_eq!(kw[0].0, "china");
        // trade(2) then tax/war tied at 1, broken by token id (tax < war).
        assert_eq!(kw[1].0, "trade");
        assert_eq!(kw[2].0, "tax");
        assert_eq!(kw[3].0, "war");

        assert!(top_keywords(&model, &vocab, 0, 0).is_empty());
    }

    #[test]
    fn planted_dominant_token_is_first_keyword() {
        // Group A docs are 90% "china"; group B uses unrelated tokens.
        let mut docs = Vec::new();
        for d in 0..8 {
            let mut tokens = vec!["china"; 18];
            tokens.push("trade");
            tokens.push("tariff");
            docs.push(doc(&format!("a{d}"), &tokens));
        }
        for d in 0..8 {
            let tokens = vec!["cat", "dog", "bird", "fish", "cat", "dog", "bird", "fish"];
            docs.push(doc(&format!("b{d}"), &tokens));
        }
        let vocab = build_vocabulary(&docs, 1, 1.0);
        let bows: Vec<BowDoc> = docs.iter().map(|d| crate::textprep::to_bow(d, &vocab)).collect();
        let model = train_lda(&bows, &vocab, &quick_config(2, 150, 11)).unwrap();

        // Find the topic matched to group A by its dominant docs.
        let topic_a = dominant_topic(&model, 0);
        let kw = top_keywords(&model, &vocab, topic_a, 3);
        assert_eq!(kw[0].0, "china");
    }

    #[test]
    fn token_share_sums_and_degenerate_case() {
        let d0 = doc("d0", &["china", "trade", "war"]);
        let vocab = build_vocabulary(&[d0.clone()], 1, 1.0);
        let bows = vec![crate::textprep::to_bow(&d0, &vocab)];
        let model = train_lda(&bows, &vocab, &quick_config(1, 5, 0)).unwrap();
        assert_eq!(topic_token_share(&model), vec![1.0]);
    }

    #[test]
    fn token_share_forced_ratio() {
        let (bows, vocab, _) = separability_fixture();
        let mut model = train_lda(&bows, &vocab, &quick_config(2, 10, 0)).unwrap();
        // Force final counts to a known ratio; share depends only on n_k.
        model.n_k = vec![300, 700];
        let shares = topic_token_share(&model);
        assert_eq!(shares, vec![0.3, 0.7]);
    }

    #[test]
    fn jsd_identity_is_exact_zero() {
        let p = [0.2, 0.5, 0.3];
        assert_eq!(jensen_shannon(&p, &p), 0.0);
    }

    #[test]
    fn jsd_disjoint_support_is_ln2() {
        let d = jensen_shannon(&[1.0, 0.0], &[0.0, 1.0]);
        assert!((d - LN_2).abs() < 1e-12, "{d}");
    }

    #[test]
    fn distance_matrix_symmetric_zero_diagonal() {
        let (bows, vocab, _) = separability_fixture();
        let model = train_lda(&bows, &vocab, &quick_config(3, 30, 2)).unwrap();
        let k = 3;
        let dist = topic_distance_matrix(&model);
        for i in 0..k {
            assert_eq!(dist[i * k + i], 0.0);
            for j in 0..k {
                assert_eq!(dist[i * k + j], dist[j * k + i], "transpose must match exactly");
                assert!(dist[i * k + j] >= 0.0 && dist[i * k + j] <= LN_2);
            }
        }
    }

    #[test]
    fn perplexity_uniform_model_equals_vocab_size() {
        let d0 = doc("d0", &["a0", "b1", "c2", "d3"]);
        let vocab = build_vocabulary(&[d0.clone()], 1, 1.0);
        let v = vocab.len();
        let bows = vec![crate::textprep::to_bow(&d0, &vocab)];
        let k = 2;
        let uniform = LdaModel {
            config: LdaConfig { k, ..LdaConfig::default() },
            vocab_hash: vocab.content_hash(),
            v,
            d: 1,
            doc_ids: vec!["d0".to_owned()],
            n_kw: vec![0; k * v],
            n_dk: vec![0; k],
            n_k: vec![0; k],
            z: vec![vec![]],
            phi: vec![1.0 / v as f64; k * v],
            theta: vec![1.0 / k as f64; k],
        };
        let p = perplexity(&uniform, &bows).unwrap();
        assert!((p - v as f64).abs() < 1e-9, "{p} vs {v}");
    }

    #[test]
    fn perplexity_single_token_vocab_is_one() {
        let d0 = doc("d0", &["china", "china"]);
        let vocab = build_vocabulary(&[d0.clone()], 1, 1.0);
        let bows = vec![crate::textprep::to_bow(&d0, &vocab)];
        let model = train_lda(&bows, &vocab, &quick_config(1, 5, 0)).unwrap();
        let p = perplexity(&model, &bows).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perplexity_beats_uniform_on_separable_data() {
        let (bows, vocab, _) = separability_fixture();
        let model = train_lda(&bows, &vocab, &quick_config(2, 100, 8)).unwrap();
        let p = perplexity(&model, &bows).unwrap();
        assert!(p >= 1.0);
        assert!(p <= vocab.len() as f64, "trained {p} must beat uniform {}", vocab.len());
    }

    #[test]
    fn perplexity_rejects_empty() {
        let d0 = doc("d0", &["china"]);
        let vocab = build_vocabulary(&[d0.clone()], 1, 1.0);
        let bows = vec![crate::textprep::to_bow(&d0, &vocab)];
        let model = train_lda(&bows, &vocab, &quick_config(1, 5, 0)).unwrap();
        let empty = BowDoc { doc_id: "e".into(), counts: BTreeMap::new() };
        assert!(matches!(
            perplexity_with(&model.phi, model.v, &[&model.theta_row(0)], &[empty]),
            Err(TopicError::ZeroTokens)
        ));
    }

    #[test]
    fn fold_in_assigns_held_out_doc_to_its_group() {
        let (bows, vocab, labels) = separability_fixture();
        let model = train_lda(&bows, &vocab, &quick_config(2, 200, 42)).unwrap();
        let topic_of_a = dominant_topic(&model, 0);
        assert_eq!(labels[0], 0);

        // Held-out doc drawn from group A's vocabulary.
        let held = doc("h0", &["aaa1", "aaa2", "aaa3", "aaa1", "aaa5", "aaa7", "aaa2"]);
        let bow = crate::textprep::to_bow(&held, &vocab);
        let theta = fold_in_doc(&model, &bow, 50, 77);
        assert_eq!(argmax_topic(&theta), topic_of_a);

        let again = fold_in_doc(&model, &bow, 50, 77);
        assert_eq!(theta, again, "fold-in must be seed-deterministic");
        let sum: f64 = theta.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fold_in_empty_doc_is_uniform() {
        let (bows, vocab, _) = separability_fixture();
        let model = train_lda(&bows, &vocab, &quick_config(2, 20, 1)).unwrap();
        let empty = BowDoc { doc_id: "e".into(), counts: BTreeMap::new() };
        assert_eq!(fold_in_doc(&model, &empty, 50, 0), vec![0.5, 0.5]);
    }

    #[test]
    fn permutations_enumerate_k_factorial() {
        assert_eq!(permutations(1), vec![vec![0]]);
        assert_eq!(permutations(3).len(), 6);
        let perms = permutations(3);
        assert_eq!(perms[0], vec![0, 1, 2], "lexicographic order starts at identity");
    }

    #[test]
    fn match_topics_on_permuted_model_finds_low_cost() {
        let (bows, vocab, _) = separability_fixture();
        let m1 = train_lda(&bows, &vocab, &quick_config(2, 200, 42)).unwrap();
        let m2 = train_lda(&bows, &vocab, &quick_config(2, 200, 43)).unwrap();
        let (perm, mean_jsd) = match_topics(&m1, &m2);
        assert_eq!(perm.len(), 2);
        assert!(mean_jsd < 0.15, "seeds on separable data must agree, got {mean_jsd}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn rows_are_distributions(seed in 0u64..1000, k in 1usize..4) {
            let (bows, vocab, _) = separability_fixture();
            let model = train_lda(&bows, &vocab, &quick_config(k, 15, seed)).unwrap();
            for t in 0..k {
                let s: f64 = model.phi_row(t).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
                prop_assert!(model.phi_row(t).iter().all(|&x| x >= 0.0));
            }
            for d in 0..model.d {
                let s: f64 = model.theta_row(d).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
            let shares = topic_token_share(&model);
            let s: f64 = shares.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn jsd_bounds_and_symmetry(
            p in proptest::collection::vec(1e-6f64..1.0, 4),
            q in proptest::collection::vec(1e-6f64..1.0, 4),
        ) {
            let np: f64 = p.iter().sum();
            let nq: f64 = q.iter().sum();
            let p: Vec<f64> = p.iter().map(|x| x / np).collect();
            let q: Vec<f64> = q.iter().map(|x| x / nq).collect();
            let d1 = jensen_shannon(&p, &q);
            let d2 = jensen_shannon(&q, &p);
            prop_assert!((d1 - d2).abs() < 1e-12);
            prop_assert!((0.0..=LN_2).contains(&d1));
        }

        #[test]
        fn dominant_topic_in_range(seed in 0u64..100) {
            let (bows, vocab, _) = separability_fixture();
            let model = train_lda(&bows, &vocab, &quick_config(3, 10, seed)).unwrap();
            for d in 0..model.d {
                prop_assert!(dominant_topic(&model, d) < 3);
            }
        }
    }
}
