//! Lexicon-based post sentiment, user-topic aggregation, dual/global
//! baselines, and outlier group detection.
//!
//! Scoring runs on the lightly tokenized stream *before* stopword removal
//! and lemmatization: negators ("not") are stopwords, and suffix stripping
//! would break lexicon surface forms. Held-out posts get a dominant topic
//! by folding into a trained model; all-OOV posts are excluded and counted
//! rather than defaulted to a topic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PostRecord;
use crate::seed::derive_seed;
use crate::textprep::{tokenize, BowDoc, Vocabulary};
use crate::topics::{argmax_topic, fold_in_doc, LdaModel};

/// Embedded default lexicon, tab-separated `token<TAB>polarity` lines.
pub const DEFAULT_LEXICON: &str = include_str!("../data/sentiment_lexicon.tsv");

/// Gibbs sweeps used to fold a held-out document into a trained model.
pub const FOLD_IN_SWEEPS: usize = 50;

const DEFAULT_NEGATORS: &[&str] = &[
    "not", "no", "never", "cannot", "dont", "cant", "wont", "isnt", "arent", "wasnt", "werent",
];

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("lexicon line {line}: {message}")]
    LexiconLine { line: usize, message: String },
    #[error("lexicon: {0}")]
    InvalidLexicon(String),
    #[error("model was trained on a different vocabulary (hash mismatch)")]
    VocabMismatch,
    #[error("{posts} scored posts but {bows} bag-of-words docs")]
    LengthMismatch { posts: usize, bows: usize },
}

/// Token polarity table plus negation handling parameters.
///
/// Entries map lowercase surface forms to polarities in [-1, 1]. A matched
/// token's contribution is multiplied by `negation_multiplier` when any
/// negator occurs within `negation_window` tokens before it. Negators are
/// disjoint from the entry set.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, f64>,
    negators: BTreeSet<String>,
    negation_multiplier: f64,
    negation_window: usize,
}

impl SentimentLexicon {
    /// Build a lexicon with the default negator set, multiplier -0.5 and
    /// window 1.
    pub fn new(entries: BTreeMap<String, f64>) -> Result<Self, SentimentError> {
        let negators = DEFAULT_NEGATORS.iter().map(|s| (*s).to_owned()).collect();
        Self::with_negation(entries, negators, -0.5, 1)
    }

    pub fn with_negation(
        entries: BTreeMap<String, f64>,
        negators: BTreeSet<String>,
        negation_multiplier: f64,
        negation_window: usize,
    ) -> Result<Self, SentimentError> {
        for (token, pol) in &entries {
            if !pol.is_finite() || !(-1.0..=1.0).contains(pol) {
                return Err(SentimentError::InvalidLexicon(format!(
                    "polarity {pol} for {token:?} outside [-1, 1]"
                )));
            }
            if negators.contains(token) {
                return Err(SentimentError::InvalidLexicon(format!(
                    "negator {token:?} also appears as an entry"
                )));
            }
        }
        // |multiplier| <= 1 keeps every contribution, and hence the mean,
        // inside [-1, 1].
        if !negation_multiplier.is_finite() || negation_multiplier.abs() > 1.0 {
            return Err(SentimentError::InvalidLexicon(format!(
                "negation multiplier {negation_multiplier} outside [-1, 1]"
            )));
        }
        Ok(SentimentLexicon { entries, negators, negation_multiplier, negation_window })
    }

    /// Parse `token<TAB>polarity` lines. `#` starts a comment, blank lines
    /// are skipped, duplicate tokens are rejected.
    pub fn parse(text: &str) -> Result<Self, SentimentError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((token, pol_str)) = trimmed.split_once('\t') else {
                return Err(SentimentError::LexiconLine {
                    line,
                    message: "expected token<TAB>polarity".to_owned(),
                });
            };
            let token = token.trim().to_owned();
            let polarity: f64 = pol_str.trim().parse().map_err(|_| SentimentError::LexiconLine {
                line,
                message: format!("bad polarity {:?}", pol_str.trim()),
            })?;
            if entries.insert(token.clone(), polarity).is_some() {
                return Err(SentimentError::LexiconLine {
                    line,
                    message: format!("duplicate token {token:?}"),
                });
            }
        }
        Self::new(entries)
    }

    pub fn from_file(path: &Path) -> Result<Self, SentimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| SentimentError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// The embedded default lexicon (~2,500 surface forms).
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("embedded lexicon is well-formed")
    }

    /// Render entries in the same TSV form `parse` accepts. Negation
    /// settings are not part of the file format and are not emitted.
    pub fn to_tsv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for (token, polarity) in &self.entries {
            writeln!(out, "{token}\t{polarity:+.2}").expect("string write");
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn polarity(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(t, p)| (t.as_str(), *p))
    }

    pub fn negation_multiplier(&self) -> f64 {
        self.negation_multiplier
    }

    pub fn negation_window(&self) -> usize {
        self.negation_window
    }
}

/// Score a token stream: each lexicon match contributes its polarity,
/// negated matches are scaled by the multiplier, and the score is the
/// arithmetic mean of contributions. Returns (polarity, matched_terms);
/// zero matches score 0.
pub fn score_text(tokens: &[String], lexicon: &SentimentLexicon) -> (f64, usize) {
    let mut sum = 0.0;
    let mut matched = 0usize;
    for (i, token) in tokens.iter().enumerate() {
        let Some(pol) = lexicon.polarity(token) else { continue };
        let negated = tokens[i.saturating_sub(lexicon.negation_window)..i]
            .iter()
            .any(|t| lexicon.is_negator(t));
        sum += if negated { pol * lexicon.negation_multiplier } else { pol };
        matched += 1;
    }
    if matched == 0 {
        (0.0, 0)
    } else {
        (sum / matched as f64, matched)
    }
}

/// A post with its lexicon polarity and (once assigned) dominant topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPost {
    pub doc_id: String,
    pub author: String,
    pub subreddit: String,
    pub polarity: f64,
    pub matched_terms: usize,
    pub dominant_topic: Option<usize>,
}

/// Score every record's full text (title + body) on the pre-stopword
/// token stream. Topics start unassigned.
pub fn score_posts(records: &[PostRecord], lexicon: &SentimentLexicon) -> Vec<ScoredPost> {
    records
        .iter()
        .map(|r| {
            let tokens = tokenize(&r.full_text());
            let (polarity, matched_terms) = score_text(&tokens, lexicon);
            ScoredPost {
                doc_id: r.id.clone(),
                author: r.author.clone(),
                subreddit: r.subreddit.clone(),
                polarity,
                matched_terms,
                dominant_topic: None,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssignStats {
    pub assigned: usize,
    pub excluded_all_oov: usize,
}

/// Assign each post's dominant topic by folding its bag-of-words into a
/// trained model (fixed sweep count, per-document seed). Posts with zero
/// in-vocabulary tokens are left unassigned and counted. `bows` runs
/// parallel to `posts` and must be encoded against `vocab`, which must be
/// the vocabulary the model was trained on.
pub fn assign_topics(
    posts: &mut [ScoredPost],
    bows: &[BowDoc],
    model: &LdaModel,
    vocab: &Vocabulary,
    stage_seed: u64,
) -> Result<AssignStats, SentimentError> {
    if vocab.content_hash() != model.vocab_hash {
        return Err(SentimentError::VocabMismatch);
    }
    if posts.len() != bows.len() {
        return Err(SentimentError::LengthMismatch { posts: posts.len(), bows: bows.len() });
    }
    // Per-document seeds make the parallel schedule irrelevant to output.
    let dominants: Vec<Option<usize>> = posts
        .par_iter()
        .zip(bows.par_iter())
        .map(|(post, bow)| {
            if bow.counts.is_empty() {
                return None;
            }
            let seed = derive_seed(stage_seed, &post.doc_id);
            let theta = fold_in_doc(model, bow, FOLD_IN_SWEEPS, seed);
            Some(argmax_topic(&theta))
        })
        .collect();
    let mut stats = AssignStats::default();
    for (post, dom) in posts.iter_mut().zip(dominants) {
        post.dominant_topic = dom;
        match dom {
            Some(_) => stats.assigned += 1,
            None => stats.excluded_all_oov += 1,
        }
    }
    Ok(stats)
}

/// Which user population a matrix was aggregated over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Dual,
    Global,
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cohort::Dual => "dual",
            Cohort::Global => "global",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mean_polarity: f64,
    pub n_posts: usize,
}

/// Mean post polarity per (user, topic), restricted to one cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTopicMatrix {
    pub cohort: Cohort,
    cells: BTreeMap<(String, usize), Cell>,
}

impl UserTopicMatrix {
    pub fn cell(&self, user: &str, topic: usize) -> Option<&Cell> {
        self.cells.get(&(user.to_owned(), topic))
    }

    pub fn cells(&self) -> impl Iterator<Item = (&str, usize, &Cell)> {
        self.cells.iter().map(|((u, t), c)| (u.as_str(), *t, c))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn users(&self) -> BTreeSet<&str> {
        self.cells.keys().map(|(u, _)| u.as_str()).collect()
    }
}

/// Aggregate assigned posts into per-(user, topic) mean polarities.
/// `users` restricts to a cohort; `None` keeps every author. Posts without
/// a dominant topic never enter the matrix.
pub fn build_matrix(
    posts: &[ScoredPost],
    cohort: Cohort,
    users: Option<&BTreeSet<String>>,
) -> UserTopicMatrix {
    let mut acc: BTreeMap<(String, usize), (f64, usize)> = BTreeMap::new();
    for post in posts {
        let Some(topic) = post.dominant_topic else { continue };
        if let Some(set) = users {
            if !set.contains(&post.author) {
                continue;
            }
        }
        let slot = acc.entry((post.author.clone(), topic)).or_insert((0.0, 0));
        slot.0 += post.polarity;
        slot.1 += 1;
    }
    let cells = acc
        .into_iter()
        .map(|(key, (sum, n))| (key, Cell { mean_polarity: sum / n as f64, n_posts: n }))
        .collect();
    UserTopicMatrix { cohort, cells }
}

/// Per-topic post-level mean polarities for the dual cohort and for all
/// posts. A topic with no posts in a cohort has no entry on that side.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Baselines {
    pub dual_mean: BTreeMap<usize, f64>,
    pub global_mean: BTreeMap<usize, f64>,
}

fn topic_means(posts: &[ScoredPost]) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for post in posts {
        let Some(topic) = post.dominant_topic else { continue };
        let slot = acc.entry(topic).or_insert((0.0, 0));
        slot.0 += post.polarity;
        slot.1 += 1;
    }
    acc.into_iter().map(|(t, (sum, n))| (t, sum / n as f64)).collect()
}

/// Post-level (not user-level) means per topic for both cohorts.
pub fn compute_baselines(global_posts: &[ScoredPost], dual_posts: &[ScoredPost]) -> Baselines {
    Baselines { dual_mean: topic_means(dual_posts), global_mean: topic_means(global_posts) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutlierThresholds {
    /// Minimum positive deviation from the global baseline.
    pub tau_pos: f64,
    /// Minimum magnitude of negative deviation.
    pub tau_neg: f64,
    /// Std ceiling under which a multi-topic user counts as low-variance.
    pub sigma_min: f64,
    /// Cells with fewer posts are ignored entirely.
    pub min_posts_per_cell: usize,
    /// Minimum distinct topics before variance is considered.
    pub min_topics_for_variance: usize,
}

impl Default for OutlierThresholds {
    fn default() -> Self {
        OutlierThresholds {
            tau_pos: 0.10,
            tau_neg: 0.10,
            sigma_min: 0.05,
            min_posts_per_cell: 1,
            min_topics_for_variance: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierGroup {
    LowVariance,
    NegOutlier,
    PosOutlier,
}

impl OutlierGroup {
    /// Display label used in the report export.
    pub fn label(self) -> &'static str {
        match self {
            OutlierGroup::LowVariance => "Low Variance Users",
            OutlierGroup::NegOutlier => "Neg. Sent. Outliers",
            OutlierGroup::PosOutlier => "Pos. Sent. Outliers",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRow {
    pub group: OutlierGroup,
    pub topic: usize,
    /// Sorted usernames contributing to this row.
    pub users: Vec<String>,
    /// Mean of the member users' cell means in this topic.
    pub avg_sentiment: f64,
    pub global_avg: f64,
    pub deviation: f64,
}

impl OutlierRow {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }
}

/// Rows ordered by (group, topic); a user may appear in several rows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutlierReport {
    pub rows: Vec<OutlierRow>,
}

impl OutlierReport {
    /// All users belonging to `group` in any topic.
    pub fn members(&self, group: OutlierGroup) -> BTreeSet<&str> {
        self.rows
            .iter()
            .filter(|r| r.group == group)
            .flat_map(|r| r.users.iter().map(String::as_str))
            .collect()
    }
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n >= 2, "std needs at least two values");
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    var.sqrt()
}

/// Classify matrix cells against the global baseline.
///
/// Per cell, deviation = cell mean - global mean; a cell joins pos_outlier
/// at deviation >= tau_pos and neg_outlier at deviation <= -tau_neg. A user
/// whose cell means across enough topics have sample std below sigma_min is
/// low-variance and contributes a row for every topic it has a cell in.
/// Baselines must cover every topic present in the matrix.
pub fn detect_outliers(
    matrix: &UserTopicMatrix,
    baselines: &Baselines,
    thresholds: &OutlierThresholds,
) -> OutlierReport {
    assert!(
        thresholds.tau_pos > 0.0
            && thresholds.tau_neg > 0.0
            && thresholds.sigma_min > 0.0
            && thresholds.min_posts_per_cell > 0
            && thresholds.min_topics_for_variance > 0,
        "thresholds must be positive"
    );
    let global_for = |topic: usize| -> f64 {
        *baselines
            .global_mean
            .get(&topic)
            .unwrap_or_else(|| panic!("no global baseline for topic {topic}"))
    };

    let eligible: Vec<(&str, usize, f64)> = matrix
        .cells()
        .filter(|(_, _, c)| c.n_posts >= thresholds.min_posts_per_cell)
        .map(|(u, t, c)| (u, t, c.mean_polarity))
        .collect();

    let mut members: BTreeMap<(OutlierGroup, usize), BTreeSet<&str>> = BTreeMap::new();
    for &(user, topic, mean) in &eligible {
        let dev = mean - global_for(topic);
        if dev >= thresholds.tau_pos {
            members.entry((OutlierGroup::PosOutlier, topic)).or_default().insert(user);
        }
        if dev <= -thresholds.tau_neg {
            members.entry((OutlierGroup::NegOutlier, topic)).or_default().insert(user);
        }
    }

    let mut per_user: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for &(user, topic, mean) in &eligible {
        per_user.entry(user).or_default().push((topic, mean));
    }
    for (user, cells) in &per_user {
        // Sample std needs two points, so a single-topic user can never be
        // low-variance even with the minimum configured below 2.
        if cells.len() < thresholds.min_topics_for_variance.max(2) {
            continue;
        }
        let means: Vec<f64> = cells.iter().map(|(_, m)| *m).collect();
        if sample_std(&means) < thresholds.sigma_min {
            for (topic, _) in cells {
                members.entry((OutlierGroup::LowVariance, *topic)).or_default().insert(user);
            }
        }
    }

    let rows = members
        .into_iter()
        .map(|((group, topic), users)| {
            let avg_sentiment = users
                .iter()
                .map(|u| matrix.cell(u, topic).expect("member has cell").mean_polarity)
                .sum::<f64>()
                / users.len() as f64;
            let global_avg = global_for(topic);
            OutlierRow {
                group,
                topic,
                users: users.into_iter().map(str::to_owned).collect(),
                avg_sentiment,
                global_avg,
                deviation: avg_sentiment - global_avg,
            }
        })
        .collect();
    OutlierReport { rows }
}

/// Matrix export: columns user, topic, mean_polarity, n_posts.
pub fn write_matrix_csv<W: Write>(matrix: &UserTopicMatrix, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user", "topic", "mean_polarity", "n_posts"])?;
    for (user, topic, cell) in matrix.cells() {
        w.write_record([
            user.to_owned(),
            topic.to_string(),
            cell.mean_polarity.to_string(),
            cell.n_posts.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Baseline export: one row per topic present in either cohort; a missing
/// cohort mean renders as an empty field.
pub fn write_baselines_csv<W: Write>(baselines: &Baselines, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["topic", "dual_mean", "global_mean"])?;
    let topics: BTreeSet<usize> = baselines
        .dual_mean
        .keys()
        .chain(baselines.global_mean.keys())
        .copied()
        .collect();
    for topic in topics {
        let fmt = |m: Option<&f64>| m.map(|v| format!("{v:.6}")).unwrap_or_default();
        w.write_record([
            topic.to_string(),
            fmt(baselines.dual_mean.get(&topic)),
            fmt(baselines.global_mean.get(&topic)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outlier report export with the summary-table column set, 3 decimals.
pub fn write_outlier_csv<W: Write>(report: &OutlierReport, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "Group",
        "Topic",
        "Num Users",
        "Avg Sentiment",
        "Global Avg Sentiment",
        "Sentiment Deviation",
    ])?;
    for row in &report.rows {
        w.write_record([
            row.group.label().to_owned(),
            row.topic.to_string(),
            row.n_users().to_string(),
            format!("{:.3}", row.avg_sentiment),
            format!("{:.3}", row.global_avg),
            format!("{:.3}", row.deviation),
        ])?;
    }
    w.flush()?;
    Ok(())
}
