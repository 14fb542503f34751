//! Synthetic corpus generator with planted anomaly cohorts.
//!
//! Generation is a seeded topic-model sampler: per-topic word distributions
//! and per-document topic mixtures are Dirichlet draws, document lengths are
//! Poisson with a hard floor, and every draw comes from one sequential
//! ChaCha8 stream so a spec and seed pin the corpus byte for byte. Planted
//! cohorts add users whose records or metadata violate one detector each;
//! the truth ledger records who was planted and which mixture produced each
//! document, so detector output can be scored with `evaluate_detection`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorProfile, Flag};
use crate::ingest::{Corpus, PostRecord, RecordKind, UserMeta};
use crate::sentiment::{OutlierGroup, OutlierReport, SentimentLexicon};

/// Positive planting token; polarity +1.00 in the companion lexicon.
pub const SENT_POS_TOKEN: &str = "brightglow";
/// Negative planting token; polarity -1.00 in the companion lexicon.
pub const SENT_NEG_TOKEN: &str = "darkmurk";
/// Neutral filler token; polarity 0.00 in the companion lexicon.
pub const SENT_NEUTRAL_TOKEN: &str = "evenkeel";

/// Scored tokens appended to each sentiment-planted document. The planted
/// polarity is quantized to steps of 1/SENT_TOKENS_PER_POST, so per-post
/// error is at most half a step (0.025), inside the 0.05 contract.
const SENT_TOKENS_PER_POST: usize = 20;

/// Poisson document lengths are clamped below at this many tokens.
const MIN_DOC_TOKENS: usize = 5;

/// Fixed metadata snapshot instant for generated users.
const SNAPSHOT_UTC: i64 = 1_750_000_000;

/// First record timestamp; records are spaced one minute apart.
const BASE_CREATED_UTC: i64 = 1_700_000_000;

const CLEAN_ACCOUNT_AGE_DAYS: i64 = 900;
const CLEAN_LINK_KARMA: i64 = 400;
const CLEAN_COMMENT_KARMA: i64 = 900;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
}

/// Anomaly cohort families. Each maps to one detector signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortKind {
    SentimentOffset,
    LowDiversity,
    KarmaAnomaly,
    DualPoster,
}

impl CohortKind {
    pub fn code(&self) -> &'static str {
        match self {
            CohortKind::SentimentOffset => "sentiment_offset",
            CohortKind::LowDiversity => "low_diversity",
            CohortKind::KarmaAnomaly => "karma_anomaly",
            CohortKind::DualPoster => "dual_poster",
        }
    }

    fn slug(&self) -> &'static str {
        match self {
            CohortKind::SentimentOffset => "sent",
            CohortKind::LowDiversity => "lowdiv",
            CohortKind::KarmaAnomaly => "karma",
            CohortKind::DualPoster => "dual",
        }
    }
}

impl std::fmt::Display for CohortKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// One planted cohort: a kind, a user count, and kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantedCohort {
    /// Users whose posts carry a mean polarity offset of `offset` relative
    /// to the (zero-scoring) background, measured by this crate's scorer
    /// against the companion `test_lexicon`.
    SentimentOffset { n_users: usize, offset: f64, posts_per_user: usize },
    /// Users who post nothing but repetitions of a fixed template of
    /// `template_len` distinct tokens.
    LowDiversity {
        n_users: usize,
        template_len: usize,
        tokens_per_post: usize,
        posts_per_user: usize,
    },
    /// Users with ordinary posts but metadata karma set to the given values.
    KarmaAnomaly {
        n_users: usize,
        link_karma: i64,
        comment_karma: i64,
        posts_per_user: usize,
    },
    /// Users guaranteed `posts_per_community` records in each of the first
    /// two configured communities.
    DualPoster { n_users: usize, posts_per_community: usize },
}

impl PlantedCohort {
    pub fn kind(&self) -> CohortKind {
        match self {
            PlantedCohort::SentimentOffset { .. } => CohortKind::SentimentOffset,
            PlantedCohort::LowDiversity { .. } => CohortKind::LowDiversity,
            PlantedCohort::KarmaAnomaly { .. } => CohortKind::KarmaAnomaly,
            PlantedCohort::DualPoster { .. } => CohortKind::DualPoster,
        }
    }

    pub fn n_users(&self) -> usize {
        match *self {
            PlantedCohort::SentimentOffset { n_users, .. }
            | PlantedCohort::LowDiversity { n_users, .. }
            | PlantedCohort::KarmaAnomaly { n_users, .. }
            | PlantedCohort::DualPoster { n_users, .. } => n_users,
        }
    }

    fn validate(&self, index: usize) -> Result<(), SynthError> {
        let err = |msg: String| Err(SynthError::InvalidSpec(format!("planted[{index}]: {msg}")));
        if self.n_users() == 0 {
            return err("n_users must be positive".into());
        }
        match *self {
            PlantedCohort::SentimentOffset { offset, posts_per_user, .. } => {
                if !offset.is_finite() || offset == 0.0 {
                    return err(format!("offset {offset} must be finite and nonzero"));
                }
                if offset.abs() > 1.0 {
                    return err(format!("offset {offset} exceeds the polarity range [-1, 1]"));
                }
                if posts_per_user == 0 {
                    return err("posts_per_user must be positive".into());
                }
            }
            PlantedCohort::LowDiversity { template_len, tokens_per_post, posts_per_user, .. } => {
                if template_len == 0 || template_len > 99 {
                    return err(format!("template_len {template_len} must be in 1..=99"));
                }
                if tokens_per_post == 0 {
                    return err("tokens_per_post must be positive".into());
                }
                if posts_per_user == 0 {
                    return err("posts_per_user must be positive".into());
                }
            }
            PlantedCohort::KarmaAnomaly { posts_per_user, .. } => {
                if posts_per_user == 0 {
                    return err("posts_per_user must be positive".into());
                }
            }
            PlantedCohort::DualPoster { posts_per_community, .. } => {
                if posts_per_community == 0 {
                    return err("posts_per_community must be positive".into());
                }
            }
        }
        Ok(())
    }
}

/// Full description of a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    /// Number of generator topics.
    pub k: usize,
    pub vocab_size: usize,
    /// Background documents; planted cohorts add their own on top.
    pub n_docs: usize,
    /// Poisson mean document length in tokens (floor 5).
    pub doc_length: f64,
    /// Dirichlet concentration for document-topic mixtures.
    pub alpha: f64,
    /// Dirichlet concentration for topic-word distributions.
    pub beta: f64,
    /// Background users; each background document picks one uniformly.
    pub n_users: usize,
    pub communities: Vec<String>,
    pub planted: Vec<PlantedCohort>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            k: 4,
            vocab_size: 400,
            n_docs: 400,
            doc_length: 40.0,
            alpha: 0.2,
            beta: 0.05,
            n_users: 40,
            communities: vec!["north".to_string(), "south".to_string()],
            planted: Vec::new(),
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.k == 0 {
            return err("k must be positive".into());
        }
        if self.vocab_size == 0 || self.vocab_size > 99_999 {
            return err(format!("vocab_size {} must be in 1..=99999", self.vocab_size));
        }
        if self.n_docs == 0 {
            return err("n_docs must be positive".into());
        }
        if !(self.doc_length > 0.0) || !self.doc_length.is_finite() {
            return err(format!("doc_length {} must be a positive finite mean", self.doc_length));
        }
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return err("alpha and beta must be positive".into());
        }
        if self.n_users == 0 || self.n_users > 9_999 {
            return err(format!("n_users {} must be in 1..=9999", self.n_users));
        }
        if self.communities.len() < 2 {
            return err("at least two communities are required".into());
        }
        let mut seen = BTreeSet::new();
        for name in &self.communities {
            if name.is_empty() {
                return err("community names must be non-empty".into());
            }
            if !seen.insert(name.as_str()) {
                return err(format!("duplicate community {name:?}"));
            }
        }
        for (i, cohort) in self.planted.iter().enumerate() {
            cohort.validate(i)?;
        }
        Ok(())
    }
}

/// How a document's tokens were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DocTruth {
    /// Sampled from the generator topics with this mixture (length k).
    Mixture { theta: Vec<f64> },
    /// Repetitions of a low-diversity template; no topic mixture exists.
    Template,
}

/// Ground truth for one generated corpus: every planted user with its
/// cohort parameters, every document with its generating mixture, and the
/// generator's topic-word distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthLedger {
    pub planted: BTreeMap<String, PlantedCohort>,
    pub docs: BTreeMap<String, DocTruth>,
    /// One row per generator topic over the generator vocabulary
    /// (`w00000`..), each a probability distribution.
    pub topics: Vec<Vec<f64>>,
}

impl TruthLedger {
    /// Planted usernames of one kind.
    pub fn planted_users(&self, kind: CohortKind) -> BTreeSet<&str> {
        self.planted
            .iter()
            .filter(|(_, c)| c.kind() == kind)
            .map(|(u, _)| u.as_str())
            .collect()
    }

    /// Kinds present in the ledger, each with at least one user.
    pub fn kinds(&self) -> BTreeSet<CohortKind> {
        self.planted.values().map(PlantedCohort::kind).collect()
    }
}

/// Generator output. Records and users are in generation order, which is
/// fixed by the spec and seed.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub records: Vec<PostRecord>,
    pub users: Vec<UserMeta>,
    pub truth: TruthLedger,
}

impl SynthOutput {
    /// Assemble the records and metadata into a corpus, as if the emitted
    /// files had been read back.
    pub fn corpus(&self) -> Corpus {
        let users = self.users.iter().map(|u| (u.username.clone(), u.clone())).collect();
        Corpus::new(self.records.clone(), users, vec!["synthetic".to_string()], 0)
    }
}

/// The three-token lexicon sentiment planting is calibrated against.
pub fn test_lexicon() -> SentimentLexicon {
    let mut entries = BTreeMap::new();
    entries.insert(SENT_POS_TOKEN.to_string(), 1.0);
    entries.insert(SENT_NEG_TOKEN.to_string(), -1.0);
    entries.insert(SENT_NEUTRAL_TOKEN.to_string(), 0.0);
    SentimentLexicon::new(entries).expect("fixed entries are in range")
}

/// Normalized Gamma draws; the zero-sum guard only matters for
/// concentrations small enough to underflow every draw.
fn dirichlet(rng: &mut ChaCha8Rng, concentration: f64, dim: usize) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive shape");
    let mut draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if sum <= 0.0 {
        return vec![1.0 / dim as f64; dim];
    }
    for d in &mut draws {
        *d /= sum;
    }
    draws
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut u: f64 = rng.random();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

fn clean_meta(username: &str) -> UserMeta {
    UserMeta {
        username: username.to_string(),
        account_created_utc: Some(SNAPSHOT_UTC - CLEAN_ACCOUNT_AGE_DAYS * 86_400),
        link_karma: Some(CLEAN_LINK_KARMA),
        comment_karma: Some(CLEAN_COMMENT_KARMA),
        has_verified_email: Some(true),
        is_suspended: Some(false),
        snapshot_utc: Some(SNAPSHOT_UTC),
    }
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    rng: ChaCha8Rng,
    vocab: Vec<String>,
    phi: Vec<Vec<f64>>,
    poisson: Poisson<f64>,
    records: Vec<PostRecord>,
    users: Vec<UserMeta>,
    truth: TruthLedger,
    next_doc: usize,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let vocab: Vec<String> = (0..spec.vocab_size).map(|i| format!("w{i:05}")).collect();
        let phi: Vec<Vec<f64>> =
            (0..spec.k).map(|_| dirichlet(&mut rng, spec.beta, spec.vocab_size)).collect();
        Generator {
            spec,
            rng,
            vocab,
            phi,
            poisson: Poisson::new(spec.doc_length).expect("positive mean"),
            records: Vec::new(),
            users: Vec::new(),
            truth: TruthLedger {
                planted: BTreeMap::new(),
                docs: BTreeMap::new(),
                topics: Vec::new(),
            },
            next_doc: 0,
        }
    }

    fn sample_length(&mut self) -> usize {
        (self.poisson.sample(&mut self.rng) as usize).max(MIN_DOC_TOKENS)
    }

    /// Sample one document body from the topic model and return its theta.
    fn sample_mixture_body(&mut self) -> (Vec<f64>, String) {
        let theta = dirichlet(&mut self.rng, self.spec.alpha, self.spec.k);
        let len = self.sample_length();
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let z = sample_categorical(&mut self.rng, &theta);
            let w = sample_categorical(&mut self.rng, &self.phi[z]);
            tokens.push(self.vocab[w].as_str());
        }
        (theta, tokens.join(" "))
    }

    fn push_record(&mut self, author: &str, subreddit: &str, body: String, truth: DocTruth) {
        let idx = self.next_doc;
        self.next_doc += 1;
        let id = format!("syn{idx:06}");
        self.records.push(PostRecord {
            id: id.clone(),
            author: author.to_string(),
            subreddit: subreddit.to_string(),
            created_utc: BASE_CREATED_UTC + idx as i64 * 60,
            kind: RecordKind::Comment,
            title: None,
            body,
            score: 1,
        });
        self.truth.docs.insert(id, truth);
    }

    fn background(&mut self) {
        let user_names: Vec<String> =
            (0..self.spec.n_users).map(|i| format!("user{i:04}")).collect();
        for name in &user_names {
            self.users.push(clean_meta(name));
        }
        for _ in 0..self.spec.n_docs {
            let author = user_names[self.rng.random_range(0..user_names.len())].clone();
            let sub = self.spec.communities[self.rng.random_range(0..self.spec.communities.len())]
                .clone();
            let (theta, body) = self.sample_mixture_body();
            self.push_record(&author, &sub, body, DocTruth::Mixture { theta });
        }
    }

    fn planted(&mut self) {
        for (ci, cohort) in self.spec.planted.iter().cloned().enumerate() {
            for j in 0..cohort.n_users() {
                let name = format!("planted_{}{ci}_{j:02}", cohort.kind().slug());
                self.truth.planted.insert(name.clone(), cohort.clone());
                match cohort {
                    PlantedCohort::SentimentOffset { offset, posts_per_user, .. } => {
                        self.users.push(clean_meta(&name));
                        let strong = (offset.abs() * SENT_TOKENS_PER_POST as f64).round() as usize;
                        let strong_tok =
                            if offset > 0.0 { SENT_POS_TOKEN } else { SENT_NEG_TOKEN };
                        for p in 0..posts_per_user {
                            let (theta, mut body) = self.sample_mixture_body();
                            for i in 0..SENT_TOKENS_PER_POST {
                                body.push(' ');
                                body.push_str(if i < strong {
                                    strong_tok
                                } else {
                                    SENT_NEUTRAL_TOKEN
                                });
                            }
                            let sub = self.spec.communities[p % 2].clone();
                            self.push_record(&name, &sub, body, DocTruth::Mixture { theta });
                        }
                    }
                    PlantedCohort::LowDiversity {
                        template_len,
                        tokens_per_post,
                        posts_per_user,
                        ..
                    } => {
                        self.users.push(clean_meta(&name));
                        let body: String = (0..tokens_per_post)
                            .map(|t| format!("loop{:02}", t % template_len))
                            .collect::<Vec<_>>()
                            .join(" ");
                        for p in 0..posts_per_user {
                            let sub = self.spec.communities[p % 2].clone();
                            self.push_record(&name, &sub, body.clone(), DocTruth::Template);
                        }
                    }
                    PlantedCohort::KarmaAnomaly {
                        link_karma,
                        comment_karma,
                        posts_per_user,
                        ..
                    } => {
                        let mut meta = clean_meta(&name);
                        meta.link_karma = Some(link_karma);
                        meta.comment_karma = Some(comment_karma);
                        self.users.push(meta);
                        for p in 0..posts_per_user {
                            let (theta, body) = self.sample_mixture_body();
                            let sub = self.spec.communities[p % 2].clone();
                            self.push_record(&name, &sub, body, DocTruth::Mixture { theta });
                        }
                    }
                    PlantedCohort::DualPoster { posts_per_community, .. } => {
                        self.users.push(clean_meta(&name));
                        for c in 0..2 {
                            for _ in 0..posts_per_community {
                                let (theta, body) = self.sample_mixture_body();
                                let sub = self.spec.communities[c].clone();
                                self.push_record(&name, &sub, body, DocTruth::Mixture { theta });
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Generate a corpus from the spec. Deterministic: the same spec (seed
/// included) produces byte-identical records, metadata, and ledger.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let mut g = Generator::new(spec);
    g.background();
    g.planted();
    let mut truth = g.truth;
    truth.topics = g.phi;
    Ok(SynthOutput { records: g.records, users: g.users, truth })
}

/// Detector output gathered from a pipeline run over a synthetic corpus.
pub struct DetectorOutput<'a> {
    pub outliers: &'a OutlierReport,
    pub profiles: &'a [BehaviorProfile],
    /// Users selected as active in both focal communities.
    pub dual_users: &'a BTreeSet<String>,
}

/// Precision/recall for one planted kind. Precision is absent when the
/// detector flagged nobody (0/0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionScore {
    pub planted: usize,
    pub detected: usize,
    pub true_positives: usize,
    pub precision: Option<f64>,
    pub recall: f64,
}

fn score_sets(planted: &BTreeSet<&str>, detected: &BTreeSet<&str>) -> DetectionScore {
    let tp = planted.intersection(detected).count();
    DetectionScore {
        planted: planted.len(),
        detected: detected.len(),
        true_positives: tp,
        precision: if detected.is_empty() { None } else { Some(tp as f64 / detected.len() as f64) },
        recall: tp as f64 / planted.len() as f64,
    }
}

/// Score detector output against the ledger, one entry per planted kind.
/// Each kind is matched to its own signal: sentiment offsets against the
/// sign-matching outlier groups, low diversity against F_LEX, karma
/// anomalies against F_KARMA, and dual posters against dual selection.
pub fn evaluate_detection(
    truth: &TruthLedger,
    output: &DetectorOutput<'_>,
) -> BTreeMap<CohortKind, DetectionScore> {
    let flagged_with = |flag: Flag| -> BTreeSet<&str> {
        output
            .profiles
            .iter()
            .filter(|p| p.flags.contains(&flag))
            .map(|p| p.username.as_str())
            .collect()
    };
    let mut scores = BTreeMap::new();
    for kind in truth.kinds() {
        let planted = truth.planted_users(kind);
        let detected: BTreeSet<&str> = match kind {
            CohortKind::SentimentOffset => {
                let mut groups = BTreeSet::new();
                for cohort in truth.planted.values() {
                    if let PlantedCohort::SentimentOffset { offset, .. } = cohort {
                        groups.insert(if *offset > 0.0 {
                            OutlierGroup::PosOutlier
                        } else {
                            OutlierGroup::NegOutlier
                        });
                    }
                }
                groups.into_iter().flat_map(|g| output.outliers.members(g)).collect()
            }
            CohortKind::LowDiversity => flagged_with(Flag::Lex),
            CohortKind::KarmaAnomaly => flagged_with(Flag::Karma),
            CohortKind::DualPoster => output.dual_users.iter().map(String::as_str).collect(),
        };
        scores.insert(kind, score_sets(&planted, &detected));
    }
    scores
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{compute_profile, mattr, shipped_profiles, BehaviorConfig};
    use crate::ingest::{select_dual_users, write_records, write_user_meta};
    use crate::sentiment::{
        build_matrix, compute_baselines, detect_outliers, score_posts, score_text, Cohort,
        OutlierRow, OutlierThresholds,
    };
    use crate::textprep::tokenize;
    use proptest::prelude::*;

    fn spec_with_all_kinds(seed: u64) -> SynthSpec {
        SynthSpec {
            k: 3,
            vocab_size: 120,
            n_docs: 80,
            doc_length: 25.0,
            n_users: 12,
            seed,
            planted: vec![
                PlantedCohort::SentimentOffset { n_users: 3, offset: 0.4, posts_per_user: 6 },
                PlantedCohort::SentimentOffset { n_users: 2, offset: -0.3, posts_per_user: 6 },
                PlantedCohort::LowDiversity {
                    n_users: 2,
                    template_len: 5,
                    tokens_per_post: 150,
                    posts_per_user: 3,
                },
                PlantedCohort::KarmaAnomaly {
                    n_users: 2,
                    link_karma: 3,
                    comment_karma: 2_000,
                    posts_per_user: 4,
                },
                PlantedCohort::DualPoster { n_users: 2, posts_per_community: 4 },
            ],
            ..SynthSpec::default()
        }
    }

    fn ndjson_bytes(out: &SynthOutput) -> (Vec<u8>, Vec<u8>, String) {
        let mut records = Vec::new();
        write_records(&out.records, &mut records).unwrap();
        let mut users = Vec::new();
        write_user_meta(&out.users, &mut users).unwrap();
        let truth = serde_json::to_string(&out.truth).unwrap();
        (records, users, truth)
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let spec = spec_with_all_kinds(31);
        let a = ndjson_bytes(&generate(&spec).unwrap());
        let b = ndjson_bytes(&generate(&spec).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate(&spec_with_all_kinds(31)).unwrap();
        let b = generate(&spec_with_all_kinds(32)).unwrap();
        assert_ne!(
            a.records.iter().map(|r| &r.body).collect::<Vec<_>>(),
            b.records.iter().map(|r| &r.body).collect::<Vec<_>>()
        );
    }

    #[test]
    fn doc_length_mean_tracks_poisson_mean() {
        let spec = SynthSpec {
            k: 2,
            vocab_size: 60,
            n_docs: 1_000,
            doc_length: 50.0,
            n_users: 20,
            ..SynthSpec::default()
        };
        let out = generate(&spec).unwrap();
        assert_eq!(out.records.len(), 1_000);
        let total: usize = out.records.iter().map(|r| r.body.split_whitespace().count()).sum();
        let mean = total as f64 / out.records.len() as f64;
        assert!((mean - 50.0).abs() < 2.0, "mean length {mean}");
    }

    #[test]
    fn doc_length_floor_is_five() {
        let spec = SynthSpec {
            k: 2,
            vocab_size: 60,
            n_docs: 300,
            doc_length: 1.0,
            n_users: 10,
            ..SynthSpec::default()
        };
        let out = generate(&spec).unwrap();
        assert!(out.records.iter().all(|r| r.body.split_whitespace().count() >= 5));
    }

    #[test]
    fn low_diversity_template_pins_mattr() {
        let spec = spec_with_all_kinds(5);
        let out = generate(&spec).unwrap();
        let lowdiv = out.truth.planted_users(CohortKind::LowDiversity);
        assert_eq!(lowdiv.len(), 2);
        for user in lowdiv {
            let mut tokens = Vec::new();
            for r in out.records.iter().filter(|r| r.author == user) {
                tokens.extend(tokenize(&r.full_text()));
            }
            // 5 distinct tokens cycled through 100-token windows.
            let m = mattr(&tokens, 100).unwrap();
            assert!((m - 0.05).abs() < 1e-12, "mattr {m}");
        }
    }

    #[test]
    fn ledger_covers_docs_and_planted_users_exactly() {
        let out = generate(&spec_with_all_kinds(9)).unwrap();
        let record_ids: BTreeSet<&str> = out.records.iter().map(|r| r.id.as_str()).collect();
        let ledger_ids: BTreeSet<&str> = out.truth.docs.keys().map(String::as_str).collect();
        assert_eq!(record_ids, ledger_ids);
        assert_eq!(record_ids.len(), out.records.len(), "record ids are unique");

        let meta_names: BTreeSet<&str> = out.users.iter().map(|u| u.username.as_str()).collect();
        assert_eq!(meta_names.len(), out.users.len(), "usernames are unique");
        let planted: BTreeSet<&str> = out.truth.planted.keys().map(String::as_str).collect();
        let background: BTreeSet<&str> =
            meta_names.iter().copied().filter(|n| n.starts_with("user")).collect();
        assert_eq!(background.len(), 12);
        assert!(planted.is_disjoint(&background));
        assert_eq!(
            planted.union(&background).copied().collect::<BTreeSet<_>>(),
            meta_names,
            "every user is background or planted"
        );
        for user in &planted {
            assert!(out.records.iter().any(|r| r.author == *user), "{user} has records");
        }
        let authors: BTreeSet<&str> = out.records.iter().map(|r| r.author.as_str()).collect();
        assert!(authors.is_subset(&meta_names), "every author has metadata");
    }

    #[test]
    fn mixtures_are_valid_distributions() {
        let spec = spec_with_all_kinds(13);
        let out = generate(&spec).unwrap();
        assert_eq!(out.truth.topics.len(), spec.k);
        for row in &out.truth.topics {
            assert_eq!(row.len(), spec.vocab_size);
            assert!(row.iter().all(|p| *p >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let mut mixtures = 0;
        for truth in out.truth.docs.values() {
            if let DocTruth::Mixture { theta } = truth {
                mixtures += 1;
                assert_eq!(theta.len(), spec.k);
                assert!(theta.iter().all(|p| *p >= 0.0));
                assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        // Only low-diversity docs lack a mixture: 2 users x 3 posts.
        assert_eq!(mixtures, out.records.len() - 6);
    }

    #[test]
    fn sentiment_offset_hits_target_within_tolerance() {
        let out = generate(&spec_with_all_kinds(17)).unwrap();
        let lexicon = test_lexicon();
        for (user, cohort) in &out.truth.planted {
            let PlantedCohort::SentimentOffset { offset, posts_per_user, .. } = cohort else {
                continue;
            };
            let posts: Vec<&PostRecord> =
                out.records.iter().filter(|r| &r.author == user).collect();
            assert_eq!(posts.len(), *posts_per_user);
            let mut mean = 0.0;
            for r in &posts {
                let (pol, matched) = score_text(&tokenize(&r.full_text()), &lexicon);
                assert_eq!(matched, 20);
                mean += pol;
            }
            mean /= posts.len() as f64;
            assert!((mean - offset).abs() <= 0.05, "user {user}: mean {mean} target {offset}");
        }
        // Background posts carry no lexicon tokens at all.
        for r in out.records.iter().filter(|r| r.author.starts_with("user")) {
            let (pol, matched) = score_text(&tokenize(&r.full_text()), &lexicon);
            assert_eq!((pol, matched), (0.0, 0));
        }
    }

    #[test]
    fn dual_posters_are_selected_as_dual() {
        let out = generate(&spec_with_all_kinds(21)).unwrap();
        let corpus = out.corpus();
        let dual = select_dual_users(&corpus, "north", "south", 4);
        for user in out.truth.planted_users(CohortKind::DualPoster) {
            assert!(dual.contains(user), "{user} missing from dual selection");
            let north = out
                .records
                .iter()
                .filter(|r| r.author == user && r.subreddit == "north")
                .count();
            let south = out
                .records
                .iter()
                .filter(|r| r.author == user && r.subreddit == "south")
                .count();
            assert_eq!((north, south), (4, 4));
        }
    }

    #[test]
    fn karma_cohort_trips_the_karma_flag() {
        let out = generate(&spec_with_all_kinds(23)).unwrap();
        let config = BehaviorConfig::default();
        let profiles = shipped_profiles();
        for user in out.truth.planted_users(CohortKind::KarmaAnomaly) {
            let meta = out.users.iter().find(|u| u.username == user).unwrap();
            assert_eq!((meta.link_karma, meta.comment_karma), (Some(3), Some(2_000)));
            let records: Vec<PostRecord> =
                out.records.iter().filter(|r| r.author == user).cloned().collect();
            let mut tokens = Vec::new();
            for r in &records {
                tokens.extend(tokenize(&r.full_text()));
            }
            let profile = compute_profile(meta, &records, &tokens, &profiles, &config);
            assert!(profile.flags.contains(&Flag::Karma), "{user}: {:?}", profile.flags);
        }
    }

    #[test]
    fn rejects_infeasible_specs() {
        let base = SynthSpec::default();
        let cases: Vec<SynthSpec> = vec![
            SynthSpec {
                planted: vec![PlantedCohort::SentimentOffset {
                    n_users: 1,
                    offset: 1.5,
                    posts_per_user: 2,
                }],
                ..base.clone()
            },
            SynthSpec {
                planted: vec![PlantedCohort::SentimentOffset {
                    n_users: 1,
                    offset: 0.0,
                    posts_per_user: 2,
                }],
                ..base.clone()
            },
            SynthSpec { n_docs: 0, ..base.clone() },
            SynthSpec { doc_length: 0.0, ..base.clone() },
            SynthSpec { communities: vec!["north".into()], ..base.clone() },
            SynthSpec { communities: vec!["north".into(), "north".into()], ..base.clone() },
            SynthSpec {
                planted: vec![PlantedCohort::LowDiversity {
                    n_users: 1,
                    template_len: 0,
                    tokens_per_post: 100,
                    posts_per_user: 1,
                }],
                ..base.clone()
            },
            SynthSpec {
                planted: vec![PlantedCohort::DualPoster { n_users: 0, posts_per_community: 3 }],
                ..base.clone()
            },
        ];
        for spec in cases {
            assert!(matches!(generate(&spec), Err(SynthError::InvalidSpec(_))), "{spec:?}");
        }
    }

    fn bare_profile(username: &str, flags: &[Flag]) -> BehaviorProfile {
        BehaviorProfile {
            username: username.to_string(),
            account_age_days: None,
            total_activity: 0,
            activity_rate: None,
            link_karma: None,
            comment_karma: None,
            karma_ratio: None,
            has_verified_email: None,
            mattr: None,
            detected_language: "en".to_string(),
            flags: flags.iter().copied().collect(),
            is_flagged: flags.len() >= 2,
            is_suspended: false,
            missing_fields: BTreeSet::new(),
        }
    }

    fn karma_truth(n: usize) -> TruthLedger {
        let cohort = PlantedCohort::KarmaAnomaly {
            n_users: n,
            link_karma: 1,
            comment_karma: 9_999,
            posts_per_user: 1,
        };
        TruthLedger {
            planted: (0..n).map(|i| (format!("planted_karma0_{i:02}"), cohort.clone())).collect(),
            docs: BTreeMap::new(),
            topics: Vec::new(),
        }
    }

    #[test]
    fn evaluate_scores_partial_overlap() {
        // 10 planted; detector finds 8 of them plus 2 background users.
        let truth = karma_truth(10);
        let mut profiles: Vec<BehaviorProfile> = (0..8)
            .map(|i| bare_profile(&format!("planted_karma0_{i:02}"), &[Flag::Karma]))
            .collect();
        profiles.push(bare_profile("user0001", &[Flag::Karma]));
        profiles.push(bare_profile("user0002", &[Flag::Karma]));
        profiles.push(bare_profile("user0003", &[]));
        let outliers = OutlierReport { rows: vec![] };
        let dual = BTreeSet::new();
        let scores = evaluate_detection(
            &truth,
            &DetectorOutput { outliers: &outliers, profiles: &profiles, dual_users: &dual },
        );
        let score = &scores[&CohortKind::KarmaAnomaly];
        assert_eq!((score.planted, score.detected, score.true_positives), (10, 10, 8));
        assert_eq!(score.precision, Some(0.8));
        assert_eq!(score.recall, 0.8);
    }

    #[test]
    fn evaluate_exact_match_is_perfect() {
        let truth = karma_truth(3);
        let profiles: Vec<BehaviorProfile> = (0..3)
            .map(|i| bare_profile(&format!("planted_karma0_{i:02}"), &[Flag::Karma]))
            .collect();
        let outliers = OutlierReport { rows: vec![] };
        let dual = BTreeSet::new();
        let scores = evaluate_detection(
            &truth,
            &DetectorOutput { outliers: &outliers, profiles: &profiles, dual_users: &dual },
        );
        let score = &scores[&CohortKind::KarmaAnomaly];
        assert_eq!(score.precision, Some(1.0));
        assert_eq!(score.recall, 1.0);
    }

    #[test]
    fn evaluate_empty_detector_output() {
        let truth = karma_truth(4);
        let outliers = OutlierReport { rows: vec![] };
        let dual = BTreeSet::new();
        let scores = evaluate_detection(
            &truth,
            &DetectorOutput { outliers: &outliers, profiles: &[], dual_users: &dual },
        );
        let score = &scores[&CohortKind::KarmaAnomaly];
        assert_eq!(score.recall, 0.0);
        assert_eq!(score.precision, None);
    }

    #[test]
    fn evaluate_maps_offset_sign_to_outlier_group() {
        let pos = PlantedCohort::SentimentOffset { n_users: 1, offset: 0.5, posts_per_user: 1 };
        let truth = TruthLedger {
            planted: [("planted_sent0_00".to_string(), pos)].into_iter().collect(),
            docs: BTreeMap::new(),
            topics: Vec::new(),
        };
        // The user appears in the positive group; the negative group holds a
        // bystander, which must not count against a positive-only cohort.
        let outliers = OutlierReport {
            rows: vec![
                OutlierRow {
                    group: OutlierGroup::PosOutlier,
                    topic: 0,
                    users: vec!["planted_sent0_00".to_string()],
                    avg_sentiment: 0.5,
                    global_avg: 0.0,
                    deviation: 0.5,
                },
                OutlierRow {
                    group: OutlierGroup::NegOutlier,
                    topic: 1,
                    users: vec!["user0007".to_string()],
                    avg_sentiment: -0.4,
                    global_avg: 0.0,
                    deviation: -0.4,
                },
            ],
        };
        let dual = BTreeSet::new();
        let scores = evaluate_detection(
            &truth,
            &DetectorOutput { outliers: &outliers, profiles: &[], dual_users: &dual },
        );
        let score = &scores[&CohortKind::SentimentOffset];
        assert_eq!(score.precision, Some(1.0));
        assert_eq!(score.recall, 1.0);
    }

    /// Recall of a planted sentiment cohort under fixed thresholds, with
    /// every post assigned to one topic bucket so the test isolates the
    /// polarity math from topic inference.
    fn offset_recall(offset: f64) -> f64 {
        let spec = SynthSpec {
            k: 2,
            vocab_size: 80,
            n_docs: 60,
            doc_length: 20.0,
            n_users: 10,
            seed: 77,
            planted: vec![PlantedCohort::SentimentOffset {
                n_users: 4,
                offset,
                posts_per_user: 6,
            }],
            ..SynthSpec::default()
        };
        let out = generate(&spec).unwrap();
        let mut posts = score_posts(&out.records, &test_lexicon());
        for p in &mut posts {
            p.dominant_topic = Some(0);
        }
        let matrix = build_matrix(&posts, Cohort::Global, None);
        let baselines = compute_baselines(&posts, &posts);
        let report = detect_outliers(&matrix, &baselines, &OutlierThresholds::default());
        let dual = BTreeSet::new();
        let scores = evaluate_detection(
            &out.truth,
            &DetectorOutput { outliers: &report, profiles: &[], dual_users: &dual },
        );
        scores[&CohortKind::SentimentOffset].recall
    }

    #[test]
    fn recall_weakly_increases_with_planted_offset() {
        let recalls: Vec<f64> = [0.06, 0.3, 0.8].iter().map(|o| offset_recall(*o)).collect();
        assert!(recalls[0] <= recalls[1] && recalls[1] <= recalls[2], "{recalls:?}");
        assert_eq!(recalls[2], 1.0, "a strong offset is always recovered");
    }

    #[test]
    fn test_lexicon_round_trips_through_tsv() {
        let lex = test_lexicon();
        let parsed = SentimentLexicon::parse(&lex.to_tsv()).unwrap();
        assert_eq!(
            parsed.entries().collect::<Vec<_>>(),
            vec![(SENT_POS_TOKEN, 1.0), (SENT_NEG_TOKEN, -1.0), (SENT_NEUTRAL_TOKEN, 0.0)]
        );
    }

    #[test]
    fn spec_deserializes_from_toml_shape() {
        let json = serde_json::json!({
            "k": 3,
            "n_docs": 50,
            "planted": [
                {"kind": "sentiment_offset", "n_users": 2, "offset": -0.4, "posts_per_user": 5},
                {"kind": "dual_poster", "n_users": 1, "posts_per_community": 3}
            ]
        });
        let spec: SynthSpec = serde_json::from_value(json).unwrap();
        assert_eq!(spec.k, 3);
        assert_eq!(spec.vocab_size, SynthSpec::default().vocab_size);
        assert_eq!(spec.planted.len(), 2);
        assert_eq!(spec.planted[1].kind(), CohortKind::DualPoster);
        assert!(serde_json::from_value::<SynthSpec>(serde_json::json!({"bogus": 1})).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn generated_corpora_are_well_formed(
            k in 1usize..4,
            vocab in 10usize..60,
            n_docs in 5usize..40,
            doc_length in 3.0f64..30.0,
            n_users in 2usize..8,
            seed in any::<u64>(),
            cohort_pick in 0usize..4,
        ) {
            let planted = vec![match cohort_pick {
                0 => PlantedCohort::SentimentOffset { n_users: 2, offset: 0.5, posts_per_user: 3 },
                1 => PlantedCohort::LowDiversity {
                    n_users: 2, template_len: 4, tokens_per_post: 40, posts_per_user: 2,
                },
                2 => PlantedCohort::KarmaAnomaly {
                    n_users: 2, link_karma: 1, comment_karma: 5_000, posts_per_user: 2,
                },
                _ => PlantedCohort::DualPoster { n_users: 2, posts_per_community: 2 },
            }];
            let spec = SynthSpec {
                k, vocab_size: vocab, n_docs, doc_length, n_users, seed, planted,
                ..SynthSpec::default()
            };
            let out = generate(&spec).unwrap();
            prop_assert_eq!(out.truth.docs.len(), out.records.len());
            prop_assert_eq!(out.truth.planted.len(), 2);
            for truth in out.truth.docs.values() {
                if let DocTruth::Mixture { theta } = truth {
                    prop_assert_eq!(theta.len(), k);
                    prop_assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
            for r in &out.records {
                prop_assert!(r.body.split_whitespace().count() >= 5);
            }
        }
    }
}
